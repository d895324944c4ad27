//! Snapshot-pair decomposition into steady/born/dead node sets and the six
//! changed-edge classes.
//!
//! For a pair (earlier, later): steady nodes appear in both snapshots, dead
//! nodes only in the earlier one, born nodes only in the later one. Every
//! changed edge falls in exactly one class per side:
//!
//! * outer    — both endpoints dead (resp. born)
//! * boundary — one endpoint dead (resp. born), the other steady
//! * inner    — both endpoints steady, edge present in only one snapshot

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{Edge, NodeId, Snapshot};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvolutionError {
    #[error("pair out of order: from index {from} must be less than to index {to}")]
    OrderViolation { from: u32, to: u32 },
    #[error("node {0} is absent from both snapshots")]
    UnknownNode(NodeId),
}

/// Which side of the pair a changed edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Birth,
    Death,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Birth => "birth",
            Side::Death => "death",
        }
    }
}

/// Position of a changed edge relative to the steady node set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeClass {
    Inner,
    Boundary,
    Outer,
}

impl EdgeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeClass::Inner => "inner",
            EdgeClass::Boundary => "boundary",
            EdgeClass::Outer => "outer",
        }
    }
}

/// Full decomposition of one snapshot pair: three node sets and six edge
/// classes. Steady edges (present in both snapshots) are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvolutionDelta {
    pub from_index: u32,
    pub to_index: u32,
    pub steady_nodes: BTreeSet<NodeId>,
    pub born_nodes: BTreeSet<NodeId>,
    pub dead_nodes: BTreeSet<NodeId>,
    pub dead_outer: BTreeSet<Edge>,
    pub dead_boundary: BTreeSet<Edge>,
    pub dead_inner: BTreeSet<Edge>,
    pub born_outer: BTreeSet<Edge>,
    pub born_boundary: BTreeSet<Edge>,
    pub born_inner: BTreeSet<Edge>,
}

impl EvolutionDelta {
    /// The edge set for one (side, class) cell.
    pub fn edge_class(&self, side: Side, class: EdgeClass) -> &BTreeSet<Edge> {
        match (side, class) {
            (Side::Death, EdgeClass::Outer) => &self.dead_outer,
            (Side::Death, EdgeClass::Boundary) => &self.dead_boundary,
            (Side::Death, EdgeClass::Inner) => &self.dead_inner,
            (Side::Birth, EdgeClass::Outer) => &self.born_outer,
            (Side::Birth, EdgeClass::Boundary) => &self.born_boundary,
            (Side::Birth, EdgeClass::Inner) => &self.born_inner,
        }
    }

    /// Total changed edges on one side, optionally restricted to a class.
    pub fn side_total(&self, side: Side, class: Option<EdgeClass>) -> usize {
        match class {
            Some(c) => self.edge_class(side, c).len(),
            None => {
                self.edge_class(side, EdgeClass::Inner).len()
                    + self.edge_class(side, EdgeClass::Boundary).len()
                    + self.edge_class(side, EdgeClass::Outer).len()
            }
        }
    }
}

/// Classifies the pair (earlier, later) into an [`EvolutionDelta`].
pub fn classify_pair(earlier: &Snapshot, later: &Snapshot) -> Result<EvolutionDelta, EvolutionError> {
    if earlier.index() >= later.index() {
        return Err(EvolutionError::OrderViolation {
            from: earlier.index(),
            to: later.index(),
        });
    }

    let steady_nodes: BTreeSet<NodeId> =
        earlier.nodes().filter(|u| later.contains_node(*u)).collect();
    let dead_nodes: BTreeSet<NodeId> =
        earlier.nodes().filter(|u| !later.contains_node(*u)).collect();
    let born_nodes: BTreeSet<NodeId> =
        later.nodes().filter(|u| !earlier.contains_node(*u)).collect();

    let mut delta = EvolutionDelta {
        from_index: earlier.index(),
        to_index: later.index(),
        steady_nodes,
        born_nodes,
        dead_nodes,
        dead_outer: BTreeSet::new(),
        dead_boundary: BTreeSet::new(),
        dead_inner: BTreeSet::new(),
        born_outer: BTreeSet::new(),
        born_boundary: BTreeSet::new(),
        born_inner: BTreeSet::new(),
    };

    for edge in earlier.edges() {
        let lo_dead = delta.dead_nodes.contains(&edge.lo());
        let hi_dead = delta.dead_nodes.contains(&edge.hi());
        match (lo_dead, hi_dead) {
            (true, true) => {
                delta.dead_outer.insert(edge);
            }
            (true, false) | (false, true) => {
                delta.dead_boundary.insert(edge);
            }
            (false, false) => {
                if !later.contains_edge(edge) {
                    delta.dead_inner.insert(edge);
                }
            }
        }
    }

    for edge in later.edges() {
        let lo_born = delta.born_nodes.contains(&edge.lo());
        let hi_born = delta.born_nodes.contains(&edge.hi());
        match (lo_born, hi_born) {
            (true, true) => {
                delta.born_outer.insert(edge);
            }
            (true, false) | (false, true) => {
                delta.born_boundary.insert(edge);
            }
            (false, false) => {
                if !earlier.contains_edge(edge) {
                    delta.born_inner.insert(edge);
                }
            }
        }
    }

    Ok(delta)
}

/// An [`EvolutionDelta`] restricted to a focal node's combined ego network,
/// with the steady edges of that ego kept for rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EgoDelta {
    pub focal: NodeId,
    pub delta: EvolutionDelta,
    pub steady_edges: BTreeSet<Edge>,
}

/// Fate label of one ego edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeFate {
    Steady,
    Born(EdgeClass),
    Dead(EdgeClass),
}

impl EdgeFate {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeFate::Steady => "steady",
            EdgeFate::Born(EdgeClass::Inner) => "born_inner",
            EdgeFate::Born(EdgeClass::Boundary) => "born_boundary",
            EdgeFate::Born(EdgeClass::Outer) => "born_outer",
            EdgeFate::Dead(EdgeClass::Inner) => "dead_inner",
            EdgeFate::Dead(EdgeClass::Boundary) => "dead_boundary",
            EdgeFate::Dead(EdgeClass::Outer) => "dead_outer",
        }
    }
}

impl EgoDelta {
    /// All ego edges with their fate, ascending by edge then fate precedence
    /// steady < born < dead (an edge has exactly one fate, so order within a
    /// key never matters).
    pub fn labeled_edges(&self) -> Vec<(Edge, EdgeFate)> {
        let mut rows: Vec<(Edge, EdgeFate)> = Vec::new();
        for e in &self.steady_edges {
            rows.push((*e, EdgeFate::Steady));
        }
        for class in [EdgeClass::Inner, EdgeClass::Boundary, EdgeClass::Outer] {
            for e in self.delta.edge_class(Side::Birth, class) {
                rows.push((*e, EdgeFate::Born(class)));
            }
            for e in self.delta.edge_class(Side::Death, class) {
                rows.push((*e, EdgeFate::Dead(class)));
            }
        }
        rows.sort_by_key(|(e, _)| *e);
        rows
    }
}

/// Classifies the pair restricted to the union ego network of `focal`:
/// the focal node plus its neighbors in either snapshot.
pub fn ego_delta(
    earlier: &Snapshot,
    later: &Snapshot,
    focal: NodeId,
) -> Result<EgoDelta, EvolutionError> {
    if !earlier.contains_node(focal) && !later.contains_node(focal) {
        return Err(EvolutionError::UnknownNode(focal));
    }
    let mut hull: BTreeSet<NodeId> = BTreeSet::from([focal]);
    if let Ok(neighbors) = earlier.neighbors(focal) {
        hull.extend(neighbors.iter().copied());
    }
    if let Ok(neighbors) = later.neighbors(focal) {
        hull.extend(neighbors.iter().copied());
    }

    let ego_earlier = earlier.induced(&hull);
    let ego_later = later.induced(&hull);
    let delta = classify_pair(&ego_earlier, &ego_later)?;
    let steady_edges: BTreeSet<Edge> = ego_earlier
        .edges()
        .filter(|e| ego_later.contains_edge(*e))
        .collect();

    Ok(EgoDelta { focal, delta, steady_edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Month;

    fn n(v: u32) -> NodeId {
        NodeId(v)
    }

    fn e(a: u32, b: u32) -> Edge {
        Edge::new(n(a), n(b)).unwrap()
    }

    fn snap(index: u32, pairs: &[(u32, u32)], isolates: &[u32]) -> Snapshot {
        let month: Month = format!("{}", 199800 + index).parse().unwrap();
        Snapshot::build(
            pairs.iter().map(|(a, b)| (n(*a), n(*b))),
            isolates.iter().map(|v| n(*v)),
            index,
            month,
        )
        .unwrap()
    }

    fn nodes(vals: &[u32]) -> BTreeSet<NodeId> {
        vals.iter().map(|v| n(*v)).collect()
    }

    // Schematic pair: nodes a..=i in the earlier snapshot, e..=m in the later
    // one (letters mapped a=1 .. m=13). Steady {e,h,g,f,i}, dead {a,b,c,d},
    // born {j,k,l,m}.
    #[test]
    fn node_sets_on_schematic_pair() {
        let earlier_nodes: Vec<u32> = (1..=9).collect(); // a..i
        let later_nodes: Vec<u32> = (5..=13).collect(); // e..m
        let g1 = snap(1, &[], &earlier_nodes);
        let g2 = snap(2, &[], &later_nodes);
        let delta = classify_pair(&g1, &g2).unwrap();
        assert_eq!(delta.steady_nodes, nodes(&[5, 6, 7, 8, 9]));
        assert_eq!(delta.dead_nodes, nodes(&[1, 2, 3, 4]));
        assert_eq!(delta.born_nodes, nodes(&[10, 11, 12, 13]));
    }

    #[test]
    fn identical_pair_is_all_steady() {
        let g1 = snap(1, &[(1, 2), (2, 3)], &[]);
        let g2 = snap(2, &[(1, 2), (2, 3)], &[]);
        let delta = classify_pair(&g1, &g2).unwrap();
        assert_eq!(delta.steady_nodes, nodes(&[1, 2, 3]));
        assert!(delta.born_nodes.is_empty());
        assert!(delta.dead_nodes.is_empty());
        for side in [Side::Birth, Side::Death] {
            assert_eq!(delta.side_total(side, None), 0);
        }
    }

    // Brute-force checked case: triangle {a,b,c} turns into triangle {b,c,d}.
    #[test]
    fn triangle_swap_case() {
        let g1 = snap(1, &[(1, 2), (2, 3), (1, 3)], &[]);
        let g2 = snap(2, &[(2, 3), (3, 4), (2, 4)], &[]);
        let delta = classify_pair(&g1, &g2).unwrap();
        assert_eq!(delta.dead_nodes, nodes(&[1]));
        assert_eq!(delta.born_nodes, nodes(&[4]));
        assert_eq!(delta.steady_nodes, nodes(&[2, 3]));
        assert_eq!(delta.dead_boundary, BTreeSet::from([e(1, 2), e(1, 3)]));
        assert!(delta.dead_outer.is_empty());
        assert!(delta.dead_inner.is_empty());
        assert_eq!(delta.born_boundary, BTreeSet::from([e(3, 4), e(2, 4)]));
        assert!(delta.born_outer.is_empty());
        assert!(delta.born_inner.is_empty());
    }

    #[test]
    fn order_violation() {
        let g1 = snap(2, &[], &[1]);
        let g2 = snap(1, &[], &[1]);
        // Construction above gives timestamps in index order, so swap usage.
        assert!(matches!(
            classify_pair(&g1, &g2),
            Err(EvolutionError::OrderViolation { from: 2, to: 1 })
        ));
    }

    #[test]
    fn ego_of_isolated_focal() {
        let g1 = snap(1, &[], &[7]);
        let g2 = snap(2, &[], &[7]);
        let ego = ego_delta(&g1, &g2, n(7)).unwrap();
        assert_eq!(ego.delta.steady_nodes, nodes(&[7]));
        assert!(ego.delta.born_nodes.is_empty());
        assert!(ego.delta.dead_nodes.is_empty());
        assert!(ego.steady_edges.is_empty());
    }

    #[test]
    fn ego_gains_one_spoke() {
        // f=1, x=2, y=3: y joins the later snapshot.
        let g1 = snap(1, &[(1, 2)], &[]);
        let g2 = snap(2, &[(1, 2), (1, 3)], &[]);
        let ego = ego_delta(&g1, &g2, n(1)).unwrap();
        assert_eq!(ego.delta.born_boundary, BTreeSet::from([e(1, 3)]));
        assert_eq!(ego.steady_edges, BTreeSet::from([e(1, 2)]));
        assert_eq!(ego.delta.born_nodes, nodes(&[3]));
    }

    #[test]
    fn ego_unknown_focal() {
        let g1 = snap(1, &[(1, 2)], &[]);
        let g2 = snap(2, &[(1, 2)], &[]);
        assert_eq!(ego_delta(&g1, &g2, n(9)).unwrap_err(), EvolutionError::UnknownNode(n(9)));
    }

    #[test]
    fn ego_ignores_edges_outside_hull() {
        // Focal 1 with neighbor 2; nodes 4,5 have churn that must not leak in.
        let g1 = snap(1, &[(1, 2), (4, 5), (2, 4)], &[]);
        let g2 = snap(2, &[(1, 2), (2, 4)], &[]);
        let ego = ego_delta(&g1, &g2, n(1)).unwrap();
        assert_eq!(ego.steady_edges, BTreeSet::from([e(1, 2)]));
        assert_eq!(ego.delta.side_total(Side::Birth, None), 0);
        assert_eq!(ego.delta.side_total(Side::Death, None), 0);
    }
}
