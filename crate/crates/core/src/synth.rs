//! Seeded synthetic temporal-network generator.
//!
//! Plants known node births/deaths, edge churn and triangle closures/breaks
//! each step and records them, so end-to-end runs can be checked against
//! ground truth. The random source is ChaCha8 with explicit seeding; the
//! same seed always yields byte-identical snapshots.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, Month, NodeId, Snapshot, SnapshotSeries};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attachment {
    Uniform,
    Preferential,
}

/// How triangle closures are planted.
///
/// `Wedge` closes an existing steady 2-path with one new edge. `NewTriangle`
/// adds all three edges of a fresh triangle on steady nodes that are not
/// touched by another closure in the same step, so each planted closure
/// shows up whole in the born-inner census.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureStyle {
    Wedge,
    NewTriangle,
}

fn default_start_month() -> Month {
    "200001".parse().expect("static month label")
}

fn default_closure_style() -> ClosureStyle {
    ClosureStyle::Wedge
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Initial node count (at least 3).
    pub n0: usize,
    pub steps: usize,
    /// Fraction of current nodes born per step, in [0, 1).
    #[serde(default)]
    pub node_birth_rate: f64,
    /// Fraction of current nodes killed per step, in [0, 1).
    #[serde(default)]
    pub node_death_rate: f64,
    #[serde(default)]
    pub inner_rewire_per_step: usize,
    #[serde(default)]
    pub triangle_close_per_step: usize,
    #[serde(default)]
    pub triangle_break_per_step: usize,
    pub attachment: Attachment,
    #[serde(default = "default_closure_style")]
    pub closure_style: ClosureStyle,
    #[serde(default = "default_start_month")]
    pub start_month: Month,
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        if self.n0 < 3 {
            return Err(SynthError::InvalidConfig(format!("n0 must be >= 3, got {}", self.n0)));
        }
        for (name, rate) in [
            ("node_birth_rate", self.node_birth_rate),
            ("node_death_rate", self.node_death_rate),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return Err(SynthError::InvalidConfig(format!(
                    "{name} must be in [0, 1), got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// Edges planted in one step, split by the class they will classify into.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgesByClass {
    pub inner: Vec<Edge>,
    pub boundary: Vec<Edge>,
    pub outer: Vec<Edge>,
}

impl EdgesByClass {
    fn sort(&mut self) {
        self.inner.sort_unstable();
        self.boundary.sort_unstable();
        self.outer.sort_unstable();
    }

    pub fn total(&self) -> usize {
        self.inner.len() + self.boundary.len() + self.outer.len()
    }
}

/// Ground truth for one generated step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthStep {
    pub from_index: u32,
    pub to_index: u32,
    pub born_nodes: Vec<NodeId>,
    pub dead_nodes: Vec<NodeId>,
    pub born_edges: EdgesByClass,
    pub dead_edges: EdgesByClass,
    pub triangles_closed: Vec<(NodeId, NodeId, NodeId)>,
    pub triangles_broken: Vec<(NodeId, NodeId, NodeId)>,
    /// Planted counts that could not be satisfied this step.
    pub rewire_shortfall: usize,
    pub closure_shortfall: usize,
    pub break_shortfall: usize,
}

/// Full ground truth of a generated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub config: SynthConfig,
    pub steps: Vec<SynthStep>,
}

struct GenState {
    rng: ChaCha8Rng,
    nodes: BTreeSet<NodeId>,
    edges: BTreeSet<Edge>,
    next_id: u32,
}

impl GenState {
    fn degree_map(&self) -> BTreeMap<NodeId, usize> {
        let mut degrees: BTreeMap<NodeId, usize> = self.nodes.iter().map(|u| (*u, 0)).collect();
        for e in &self.edges {
            *degrees.get_mut(&e.lo()).expect("edge endpoint tracked") += 1;
            *degrees.get_mut(&e.hi()).expect("edge endpoint tracked") += 1;
        }
        degrees
    }

    fn snapshot(&self, index: u32, timestamp: Month) -> Snapshot {
        Snapshot::build(
            self.edges.iter().map(|e| e.endpoints()),
            self.nodes.iter().copied(),
            index,
            timestamp,
        )
        .expect("generator edges are canonical")
    }
}

/// Generates a snapshot series plus the planted truth for every step.
pub fn generate(config: &SynthConfig) -> Result<(SnapshotSeries, SynthTruth), SynthError> {
    config.validate()?;
    let mut state = GenState {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        nodes: (1..=config.n0 as u32).map(NodeId).collect(),
        edges: BTreeSet::new(),
        next_id: config.n0 as u32 + 1,
    };

    // Seed graph: a random recursive tree plus extra edges for wedges.
    for i in 2..=config.n0 as u32 {
        let target = state.rng.gen_range(1..i);
        state.edges.insert(Edge::new(NodeId(i), NodeId(target)).expect("i > target"));
    }
    for _ in 0..config.n0 / 2 {
        let a = state.rng.gen_range(1..=config.n0 as u32);
        let b = state.rng.gen_range(1..=config.n0 as u32);
        if a != b {
            state.edges.insert(Edge::new(NodeId(a), NodeId(b)).expect("a != b"));
        }
    }

    let mut month = config.start_month;
    let mut snapshots = vec![state.snapshot(1, month)];
    let mut steps = Vec::with_capacity(config.steps);
    for step in 0..config.steps {
        let from_index = step as u32 + 1;
        let truth = advance(&mut state, config, from_index);
        month = month.next();
        snapshots.push(state.snapshot(from_index + 1, month));
        steps.push(truth);
    }

    let series = SnapshotSeries::new(snapshots, Some(1))
        .expect("generated indices and months are consecutive");
    Ok((series, SynthTruth { config: config.clone(), steps }))
}

/// Applies one evolution step to the state and returns its truth record.
fn advance(state: &mut GenState, config: &SynthConfig, from_index: u32) -> SynthStep {
    let n_now = state.nodes.len();
    let death_quota = (config.node_death_rate * n_now as f64).floor() as usize;
    let birth_quota = (config.node_birth_rate * n_now as f64).floor() as usize;

    let mut truth = SynthStep {
        from_index,
        to_index: from_index + 1,
        born_nodes: Vec::new(),
        dead_nodes: Vec::new(),
        born_edges: EdgesByClass::default(),
        dead_edges: EdgesByClass::default(),
        triangles_closed: Vec::new(),
        triangles_broken: Vec::new(),
        rewire_shortfall: 0,
        closure_shortfall: 0,
        break_shortfall: 0,
    };

    // Step ledgers: an edge removed this step may not be re-added and vice
    // versa, so the truth lists stay the exact snapshot difference.
    let mut added: BTreeSet<Edge> = BTreeSet::new();
    let mut removed: BTreeSet<Edge> = BTreeSet::new();

    // Deaths hit the lowest-degree nodes, ties broken by ascending id.
    let mut by_degree: Vec<(usize, NodeId)> =
        state.degree_map().into_iter().map(|(u, d)| (d, u)).collect();
    by_degree.sort_unstable();
    let dying: BTreeSet<NodeId> = by_degree[..death_quota].iter().map(|(_, u)| *u).collect();
    for e in state.edges.iter().copied().collect::<Vec<_>>() {
        let lo_dies = dying.contains(&e.lo());
        let hi_dies = dying.contains(&e.hi());
        if lo_dies || hi_dies {
            state.edges.remove(&e);
            removed.insert(e);
            if lo_dies && hi_dies {
                truth.dead_edges.outer.push(e);
            } else {
                truth.dead_edges.boundary.push(e);
            }
        }
    }
    for u in &dying {
        state.nodes.remove(u);
    }
    truth.dead_nodes = dying.iter().copied().collect();

    // Steady nodes for this step: everything that survived the cull.
    let steady: Vec<NodeId> = state.nodes.iter().copied().collect();

    // Births: each new node attaches 1..=3 edges to steady or earlier-born
    // nodes, uniformly or by degree-proportional preference.
    let mut born_so_far: Vec<NodeId> = Vec::new();
    for _ in 0..birth_quota {
        let id = NodeId(state.next_id);
        state.next_id += 1;
        state.nodes.insert(id);
        let candidates: Vec<NodeId> =
            steady.iter().copied().chain(born_so_far.iter().copied()).collect();
        let want = state.rng.gen_range(1..=3).min(candidates.len());
        let mut chosen: BTreeSet<NodeId> = BTreeSet::new();
        let mut guard = 0;
        while chosen.len() < want && guard < 100 {
            guard += 1;
            let pick = match config.attachment {
                Attachment::Uniform => candidates[state.rng.gen_range(0..candidates.len())],
                Attachment::Preferential => {
                    let degrees = state.degree_map();
                    let weights: Vec<u64> =
                        candidates.iter().map(|u| degrees[u] as u64 + 1).collect();
                    let total: u64 = weights.iter().sum();
                    let mut roll = state.rng.gen_range(0..total);
                    let mut picked = candidates[0];
                    for (u, w) in candidates.iter().zip(&weights) {
                        if roll < *w {
                            picked = *u;
                            break;
                        }
                        roll -= w;
                    }
                    picked
                }
            };
            chosen.insert(pick);
        }
        for target in chosen {
            let e = Edge::new(id, target).expect("fresh id differs from target");
            state.edges.insert(e);
            added.insert(e);
            if born_so_far.contains(&target) {
                truth.born_edges.outer.push(e);
            } else {
                truth.born_edges.boundary.push(e);
            }
        }
        born_so_far.push(id);
        truth.born_nodes.push(id);
    }

    // Inner rewires: drop one steady-steady edge, add another.
    for _ in 0..config.inner_rewire_per_step {
        let removable: Vec<Edge> = state
            .edges
            .iter()
            .copied()
            .filter(|e| !added.contains(e) && !dying_touches(e, &dying))
            .collect();
        let new_edge = pick_absent_steady_edge(state, &steady, &added, &removed);
        match (removable.is_empty(), new_edge) {
            (false, Some(fresh)) => {
                let victim = removable[state.rng.gen_range(0..removable.len())];
                state.edges.remove(&victim);
                removed.insert(victim);
                truth.dead_edges.inner.push(victim);
                state.edges.insert(fresh);
                added.insert(fresh);
                truth.born_edges.inner.push(fresh);
            }
            _ => truth.rewire_shortfall += 1,
        }
    }

    // Triangle closures among steady nodes.
    match config.closure_style {
        ClosureStyle::Wedge => {
            for _ in 0..config.triangle_close_per_step {
                match pick_open_wedge(state, &steady, &removed) {
                    Some((u, center, w)) => {
                        let e = Edge::new(u, w).expect("wedge tips differ");
                        state.edges.insert(e);
                        added.insert(e);
                        truth.born_edges.inner.push(e);
                        truth.triangles_closed.push(sorted_triple(u, center, w));
                    }
                    None => truth.closure_shortfall += 1,
                }
            }
        }
        ClosureStyle::NewTriangle => {
            let mut used: BTreeSet<NodeId> = BTreeSet::new();
            for _ in 0..config.triangle_close_per_step {
                match pick_fresh_triangle(state, &steady, &removed, &used) {
                    Some((a, b, c)) => {
                        for (x, y) in [(a, b), (b, c), (a, c)] {
                            let e = Edge::new(x, y).expect("triple nodes are distinct");
                            state.edges.insert(e);
                            added.insert(e);
                            truth.born_edges.inner.push(e);
                        }
                        used.extend([a, b, c]);
                        truth.triangles_closed.push((a, b, c));
                    }
                    None => truth.closure_shortfall += 1,
                }
            }
        }
    }

    // Triangle breaks: remove one edge of an all-steady triangle.
    for _ in 0..config.triangle_break_per_step {
        match pick_breakable_triangle(state, &dying, &added) {
            Some((triple, victim)) => {
                state.edges.remove(&victim);
                removed.insert(victim);
                truth.dead_edges.inner.push(victim);
                truth.triangles_broken.push(triple);
            }
            None => truth.break_shortfall += 1,
        }
    }

    truth.born_edges.sort();
    truth.dead_edges.sort();
    truth
}

fn dying_touches(e: &Edge, dying: &BTreeSet<NodeId>) -> bool {
    dying.contains(&e.lo()) || dying.contains(&e.hi())
}

fn sorted_triple(a: NodeId, b: NodeId, c: NodeId) -> (NodeId, NodeId, NodeId) {
    let mut t = [a, b, c];
    t.sort_unstable();
    (t[0], t[1], t[2])
}

/// A steady-steady edge that is absent and untouched by this step's ledger.
fn pick_absent_steady_edge(
    state: &mut GenState,
    steady: &[NodeId],
    added: &BTreeSet<Edge>,
    removed: &BTreeSet<Edge>,
) -> Option<Edge> {
    if steady.len() < 2 {
        return None;
    }
    for _ in 0..200 {
        let a = steady[state.rng.gen_range(0..steady.len())];
        let b = steady[state.rng.gen_range(0..steady.len())];
        if a == b {
            continue;
        }
        let e = Edge::new(a, b).expect("a != b");
        if !state.edges.contains(&e) && !added.contains(&e) && !removed.contains(&e) {
            return Some(e);
        }
    }
    None
}

/// An open wedge u-center-w on steady nodes whose closing edge may be added.
fn pick_open_wedge(
    state: &mut GenState,
    steady: &[NodeId],
    removed: &BTreeSet<Edge>,
) -> Option<(NodeId, NodeId, NodeId)> {
    let mut adjacency: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    let steady_set: BTreeSet<NodeId> = steady.iter().copied().collect();
    for e in &state.edges {
        if steady_set.contains(&e.lo()) && steady_set.contains(&e.hi()) {
            adjacency.entry(e.lo()).or_default().push(e.hi());
            adjacency.entry(e.hi()).or_default().push(e.lo());
        }
    }
    let mut open: Vec<(NodeId, NodeId, NodeId)> = Vec::new();
    for (center, neighbors) in &adjacency {
        for i in 0..neighbors.len() {
            for j in i + 1..neighbors.len() {
                let (u, w) = (neighbors[i].min(neighbors[j]), neighbors[i].max(neighbors[j]));
                let closing = Edge::new(u, w).expect("distinct neighbors");
                if !state.edges.contains(&closing) && !removed.contains(&closing) {
                    open.push((u, *center, w));
                }
            }
        }
    }
    if open.is_empty() {
        return None;
    }
    open.sort_unstable();
    open.dedup();
    Some(open[state.rng.gen_range(0..open.len())])
}

/// Three steady nodes with no current or ledgered edges among them, disjoint
/// from nodes already used by closures this step.
fn pick_fresh_triangle(
    state: &mut GenState,
    steady: &[NodeId],
    removed: &BTreeSet<Edge>,
    used: &BTreeSet<NodeId>,
) -> Option<(NodeId, NodeId, NodeId)> {
    let pool: Vec<NodeId> = steady.iter().copied().filter(|u| !used.contains(u)).collect();
    if pool.len() < 3 {
        return None;
    }
    for _ in 0..200 {
        let mut picks = BTreeSet::new();
        while picks.len() < 3 {
            picks.insert(pool[state.rng.gen_range(0..pool.len())]);
        }
        let t: Vec<NodeId> = picks.into_iter().collect();
        let edges = [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])]
            .map(|(a, b)| Edge::new(a, b).expect("distinct picks"));
        if edges
            .iter()
            .all(|e| !state.edges.contains(e) && !removed.contains(e))
        {
            return Some((t[0], t[1], t[2]));
        }
    }
    None
}

/// A triangle with no dying endpoint and at least one edge not added this
/// step, plus the chosen removable edge.
fn pick_breakable_triangle(
    state: &mut GenState,
    dying: &BTreeSet<NodeId>,
    added: &BTreeSet<Edge>,
) -> Option<((NodeId, NodeId, NodeId), Edge)> {
    let mut adjacency: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for e in &state.edges {
        adjacency.entry(e.lo()).or_default().push(e.hi());
        adjacency.entry(e.hi()).or_default().push(e.lo());
    }
    for list in adjacency.values_mut() {
        list.sort_unstable();
    }
    let mut triangles: Vec<(NodeId, NodeId, NodeId)> = Vec::new();
    for e in &state.edges {
        // dying nodes are already edgeless here, but keep the filter tight
        if dying.contains(&e.lo()) || dying.contains(&e.hi()) {
            continue;
        }
        let (na, nb) = (&adjacency[&e.lo()], &adjacency[&e.hi()]);
        for w in na.iter().filter(|w| **w > e.hi() && nb.binary_search(w).is_ok()) {
            triangles.push((e.lo(), e.hi(), *w));
        }
    }
    let candidates: Vec<((NodeId, NodeId, NodeId), Vec<Edge>)> = triangles
        .into_iter()
        .filter_map(|(a, b, c)| {
            let removable: Vec<Edge> = [(a, b), (b, c), (a, c)]
                .map(|(x, y)| Edge::new(x, y).expect("triangle nodes differ"))
                .into_iter()
                .filter(|e| !added.contains(e))
                .collect();
            (!removable.is_empty()).then_some(((a, b, c), removable))
        })
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let (triple, removable) = &candidates[state.rng.gen_range(0..candidates.len())];
    let victim = removable[state.rng.gen_range(0..removable.len())];
    Some((*triple, victim))
}

/// Draws `n` integer degrees from a discrete power law with the given
/// exponent and minimum, via the inverse-CDF continuous approximation
/// (sample Pareto at `kmin - 0.5`, round to the nearest integer).
pub fn powerlaw_degree_sample(seed: u64, gamma: f64, kmin: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = kmin as f64 - 0.5;
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let x = shift * (1.0 - u).powf(-1.0 / (gamma - 1.0));
            (x + 0.5).floor() as usize
        })
        .collect()
}
