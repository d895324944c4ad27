//! Temporal network evolution analysis.
//!
//! Decomposes consecutive snapshots of an undirected network into
//! steady/born/dead nodes and the six changed-edge classes, runs M1/M2/M3
//! motif censuses over each class, and derives series metrics: metabolism
//! rates, exponential trends, power-law exponents, structure entropy and
//! motif-rate mutation events. Ships with BGP AS_PATH ingestion for
//! AS-level Internet topologies and a seeded synthetic generator for
//! ground-truth testing.

pub mod census;
pub mod evolution;
pub mod graph;
pub mod ingest;
pub mod manifest;
pub mod metrics;
pub mod pipeline;
pub mod synth;

pub use census::{brute_census, delta_census, m3_rates, static_census, CensusTable, MotifCounts};
pub use evolution::{classify_pair, ego_delta, EvolutionDelta};
pub use graph::{Edge, Month, NodeId, Snapshot, SnapshotSeries};
pub use metrics::{
    detect_mutations, exp_trend_fit, metabolism_rate, node_trajectory, powerlaw_fit,
    structure_entropy, Scope,
};
pub use pipeline::{analyze_series, run_pipeline, AnalysisOptions};
pub use synth::{generate, SynthConfig, SynthTruth};
