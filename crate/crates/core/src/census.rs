//! Motif counting: M1 (single edge), M2 (open 3-node path), M3 (triangle).
//!
//! Counts are induced and unlabeled: a triangle contains no M2, and each
//! triple of nodes is counted at most once. `static_census` is the fast
//! wedge/intersection counter; `brute_census` enumerates all node triples
//! and exists as an independent cross-check.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::evolution::{EdgeClass, EvolutionDelta, Side};
use crate::graph::{Edge, NodeId, Snapshot};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CensusError {
    #[error("graph has {nodes} nodes, above the cap of {cap}")]
    CapExceeded { nodes: usize, cap: usize },
    #[error("instance enumeration exceeded the cap of {cap} instances")]
    InstanceCapExceeded { cap: usize },
}

/// Motif counts of one graph: m1 edges, m2 induced 2-paths, m3 triangles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MotifCounts {
    pub m1: u64,
    pub m2: u64,
    pub m3: u64,
}

/// Motif counts per (side, class) cell of one snapshot pair, mirroring the
/// birth/death x inner/boundary/outer census layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusTable {
    pub from_index: u32,
    pub to_index: u32,
    pub birth_inner: MotifCounts,
    pub birth_boundary: MotifCounts,
    pub birth_outer: MotifCounts,
    pub death_inner: MotifCounts,
    pub death_boundary: MotifCounts,
    pub death_outer: MotifCounts,
}

impl CensusTable {
    pub fn cell(&self, side: Side, class: EdgeClass) -> MotifCounts {
        match (side, class) {
            (Side::Birth, EdgeClass::Inner) => self.birth_inner,
            (Side::Birth, EdgeClass::Boundary) => self.birth_boundary,
            (Side::Birth, EdgeClass::Outer) => self.birth_outer,
            (Side::Death, EdgeClass::Inner) => self.death_inner,
            (Side::Death, EdgeClass::Boundary) => self.death_boundary,
            (Side::Death, EdgeClass::Outer) => self.death_outer,
        }
    }

    /// Sum of m3 over the three classes of one side.
    pub fn side_m3(&self, side: Side) -> u64 {
        [EdgeClass::Inner, EdgeClass::Boundary, EdgeClass::Outer]
            .into_iter()
            .map(|c| self.cell(side, c).m3)
            .sum()
    }
}

fn binomial2(k: usize) -> u64 {
    (k as u64) * (k as u64).saturating_sub(1) / 2
}

/// Counts sorted-slice intersection members strictly greater than `floor`.
fn count_common_above(a: &[NodeId], b: &[NodeId], floor: NodeId) -> u64 {
    let mut i = a.partition_point(|x| *x <= floor);
    let mut j = b.partition_point(|x| *x <= floor);
    let mut count = 0;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

fn census_from_adjacency<'a>(
    edges: impl Iterator<Item = Edge>,
    neighbors: impl Fn(NodeId) -> &'a [NodeId],
    degrees: impl Iterator<Item = usize>,
) -> MotifCounts {
    let mut m1 = 0u64;
    let mut m3 = 0u64;
    for edge in edges {
        m1 += 1;
        // Each triangle lo < mid < hi is charged to its (lo, mid) edge.
        m3 += count_common_above(neighbors(edge.lo()), neighbors(edge.hi()), edge.hi());
    }
    let wedges: u64 = degrees.map(binomial2).sum();
    MotifCounts { m1, m2: wedges - 3 * m3, m3 }
}

/// Motif counts of one snapshot via wedge counting and sorted-neighbor
/// triangle intersection.
pub fn static_census(g: &Snapshot) -> MotifCounts {
    census_from_adjacency(
        g.edges(),
        |u| g.neighbors(u).expect("edge endpoints are snapshot nodes"),
        g.nodes().map(|u| g.degree(u).unwrap_or(0)),
    )
}

/// Motif counts of a bare edge set (nodes are the endpoints).
pub fn edge_set_census(edges: &BTreeSet<Edge>) -> MotifCounts {
    let mut adjacency: std::collections::BTreeMap<NodeId, Vec<NodeId>> =
        std::collections::BTreeMap::new();
    for e in edges {
        adjacency.entry(e.lo()).or_default().push(e.hi());
        adjacency.entry(e.hi()).or_default().push(e.lo());
    }
    for list in adjacency.values_mut() {
        list.sort_unstable();
    }
    static EMPTY: [NodeId; 0] = [];
    census_from_adjacency(
        edges.iter().copied(),
        |u| adjacency.get(&u).map(Vec::as_slice).unwrap_or(&EMPTY),
        adjacency.values().map(Vec::len),
    )
}

/// Default node cap for [`brute_census`].
pub const BRUTE_CAP: usize = 500;

/// Exhaustive triple-enumeration census. Independent of [`static_census`];
/// intended as a cross-check on small graphs.
pub fn brute_census(g: &Snapshot, cap: usize) -> Result<MotifCounts, CensusError> {
    if g.node_count() > cap {
        return Err(CensusError::CapExceeded { nodes: g.node_count(), cap });
    }
    let nodes: Vec<NodeId> = g.nodes().collect();
    let mut counts = MotifCounts { m1: g.edge_count() as u64, m2: 0, m3: 0 };
    let has = |a: NodeId, b: NodeId| Edge::new(a, b).map(|e| g.contains_edge(e)).unwrap_or(false);
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            for k in j + 1..nodes.len() {
                let present = u8::from(has(nodes[i], nodes[j]))
                    + u8::from(has(nodes[j], nodes[k]))
                    + u8::from(has(nodes[i], nodes[k]));
                match present {
                    3 => counts.m3 += 1,
                    2 => counts.m2 += 1,
                    _ => {}
                }
            }
        }
    }
    Ok(counts)
}

/// Runs a census over each of the six changed-edge classes of a delta. Each
/// class is censused as a subgraph containing only that class's edges, which
/// makes boundary m3 zero by construction (boundary subgraphs are bipartite
/// between steady and born/dead nodes).
pub fn delta_census(delta: &EvolutionDelta) -> CensusTable {
    CensusTable {
        from_index: delta.from_index,
        to_index: delta.to_index,
        birth_inner: edge_set_census(&delta.born_inner),
        birth_boundary: edge_set_census(&delta.born_boundary),
        birth_outer: edge_set_census(&delta.born_outer),
        death_inner: edge_set_census(&delta.dead_inner),
        death_boundary: edge_set_census(&delta.dead_boundary),
        death_outer: edge_set_census(&delta.dead_outer),
    }
}

/// M3 birth/death rates of one pair. Death is normalized by the earlier
/// snapshot's triangle count, birth by the later one's; a zero denominator
/// yields `None` (not defined).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M3Rates {
    pub from_index: u32,
    pub to_index: u32,
    pub birth: Option<f64>,
    pub death: Option<f64>,
}

/// Computes per-pair M3 rates from census tables and the per-snapshot static
/// triangle counts, aligned with consecutive pairs: `static_m3[i]` is the
/// earlier snapshot of `tables[i]`, `static_m3[i + 1]` the later one.
pub fn m3_rates(tables: &[CensusTable], static_m3: &[u64]) -> Vec<M3Rates> {
    assert_eq!(
        static_m3.len(),
        tables.len() + 1,
        "need one static count per snapshot"
    );
    tables
        .iter()
        .enumerate()
        .map(|(i, table)| {
            let rate = |m3_changed: u64, m3_static: u64| {
                (m3_static > 0).then(|| m3_changed as f64 / m3_static as f64)
            };
            M3Rates {
                from_index: table.from_index,
                to_index: table.to_index,
                birth: rate(table.side_m3(Side::Birth), static_m3[i + 1]),
                death: rate(table.side_m3(Side::Death), static_m3[i]),
            }
        })
        .collect()
}

/// Explicit motif instances of one graph, for ego-scale reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifInstances {
    pub m1: Vec<Edge>,
    /// Open 2-paths as (end, center, end) with ends ascending.
    pub m2: Vec<(NodeId, NodeId, NodeId)>,
    /// Triangles as ascending node triples.
    pub m3: Vec<(NodeId, NodeId, NodeId)>,
}

/// Default instance cap for [`enumerate_motifs`].
pub const INSTANCE_CAP: usize = 10_000;

/// Enumerates motif instances, failing once the total exceeds `cap`.
pub fn enumerate_motifs(g: &Snapshot, cap: usize) -> Result<MotifInstances, CensusError> {
    let mut out = MotifInstances { m1: g.edges().collect(), m2: Vec::new(), m3: Vec::new() };
    let mut total = out.m1.len();
    if total > cap {
        return Err(CensusError::InstanceCapExceeded { cap });
    }
    for center in g.nodes() {
        let neighbors = g.neighbors(center).expect("iterating snapshot nodes");
        for i in 0..neighbors.len() {
            for j in i + 1..neighbors.len() {
                let (a, b) = (neighbors[i], neighbors[j]);
                let closed = g.contains_edge(Edge::new(a, b).expect("distinct neighbors"));
                if closed {
                    // Record the triangle once, at its smallest node.
                    if center < a {
                        out.m3.push((center, a, b));
                        total += 1;
                    }
                } else {
                    out.m2.push((a, center, b));
                    total += 1;
                }
                if total > cap {
                    return Err(CensusError::InstanceCapExceeded { cap });
                }
            }
        }
    }
    out.m2.sort_unstable();
    out.m3.sort_unstable();
    Ok(out)
}
