//! The full analysis pipeline and its report bundle.
//!
//! `run_pipeline` classifies every consecutive pair, runs the motif census,
//! computes series metrics and mutation events, and writes `deltas.csv`,
//! `census.csv`, `metrics.csv`, `mutations.json`, `fits.json` and
//! `run-metadata.json`. Output is byte-identical across re-runs on the same
//! inputs: floats are serialized with 17 significant digits, column order is
//! fixed, and no wall-clock data enters the bundle.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::census::{delta_census, m3_rates, static_census, CensusTable, M3Rates};
use crate::evolution::{classify_pair, EvolutionDelta, EvolutionError, Side};
use crate::graph::SnapshotSeries;
use crate::manifest::{ManifestError, SeriesManifest};
use crate::metrics::{
    compute_metrics_series, detect_mutations, exp_trend_fit, MetricsError, MetricsSeries,
    MutationEvent, Scope, TrendFit,
};

pub const TOOL_NAME: &str = "netmeta";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Paper-default mutation threshold: 3%.
pub const DEFAULT_THRESHOLD: f64 = 0.03;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("pair {from}..{to}: {source}")]
    Classify { from: u32, to: u32, source: EvolutionError },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("serializing {what}: {source}")]
    Json { what: &'static str, source: serde_json::Error },
}

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    pub scope: Scope,
    pub threshold: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { scope: Scope::All, threshold: DEFAULT_THRESHOLD }
    }
}

/// Trend fits over the per-pair born-inner and dead-inner edge counts,
/// `None` when the series is too short to fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBundle {
    pub born_inner: Option<TrendFit>,
    pub dead_inner: Option<TrendFit>,
}

/// Everything the pipeline computes for one series.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub deltas: Vec<EvolutionDelta>,
    pub tables: Vec<CensusTable>,
    pub static_m3: Vec<u64>,
    pub rates: Vec<M3Rates>,
    pub metrics: MetricsSeries,
    pub mutations: Vec<MutationEvent>,
    pub fits: FitBundle,
}

/// Classifies, censuses and measures a loaded series. Pairs and snapshots
/// are processed in parallel; results are position-ordered and independent
/// of the worker count.
pub fn analyze_series(
    series: &SnapshotSeries,
    options: &AnalysisOptions,
) -> Result<Analysis, PipelineError> {
    let pairs: Vec<_> = series.pairs().collect();
    let deltas: Vec<EvolutionDelta> = pairs
        .par_iter()
        .map(|(earlier, later)| {
            classify_pair(earlier, later).map_err(|source| PipelineError::Classify {
                from: earlier.index(),
                to: later.index(),
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    let tables: Vec<CensusTable> = deltas.par_iter().map(delta_census).collect();
    let static_m3: Vec<u64> =
        series.snapshots().par_iter().map(|g| static_census(g).m3).collect();
    let rates = m3_rates(&tables, &static_m3);
    let metrics = compute_metrics_series(series, &deltas, &rates, options.scope)?;

    let entropies: BTreeMap<u32, f64> = metrics
        .snapshots
        .iter()
        .filter_map(|s| s.entropy.map(|e| (s.index, e)))
        .collect();
    let mutations = detect_mutations(&rates, options.threshold, &entropies);

    let fit_on = |counts: Vec<usize>| {
        let points: Vec<(f64, f64)> = counts
            .iter()
            .enumerate()
            .map(|(i, y)| (i as f64 + 1.0, *y as f64))
            .collect();
        exp_trend_fit(&points).ok()
    };
    let fits = FitBundle {
        born_inner: fit_on(metrics.pairs.iter().map(|p| p.born_inner).collect()),
        dead_inner: fit_on(metrics.pairs.iter().map(|p| p.dead_inner).collect()),
    };

    Ok(Analysis { deltas, tables, static_m3, rates, metrics, mutations, fits })
}

/// Formats a float with 17 significant digits, the fixed width used in every
/// data file.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "NA".to_string())
}

fn raw_f64(x: f64) -> Box<RawValue> {
    RawValue::from_string(fmt_f64(x)).expect("fixed-width float is valid JSON")
}

fn raw_opt(x: Option<f64>) -> Option<Box<RawValue>> {
    x.map(raw_f64)
}

pub fn render_deltas_csv(deltas: &[EvolutionDelta]) -> String {
    let mut out = String::from(
        "from,to,n_steady,n_born,n_dead,e_dead_outer,e_dead_boundary,e_dead_inner,e_born_outer,e_born_boundary,e_born_inner\n",
    );
    for d in deltas {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            d.from_index,
            d.to_index,
            d.steady_nodes.len(),
            d.born_nodes.len(),
            d.dead_nodes.len(),
            d.dead_outer.len(),
            d.dead_boundary.len(),
            d.dead_inner.len(),
            d.born_outer.len(),
            d.born_boundary.len(),
            d.born_inner.len(),
        )
        .expect("writing to String");
    }
    out
}

pub fn render_census_csv(tables: &[CensusTable], static_m3: &[u64]) -> String {
    let mut out = String::from("from,to");
    for side in ["birth", "death"] {
        for class in ["inner", "boundary", "outer"] {
            for motif in ["m1", "m2", "m3"] {
                write!(out, ",{side}_{class}_{motif}").expect("writing to String");
            }
        }
    }
    out.push_str(",static_m3_from,static_m3_to\n");
    for (i, t) in tables.iter().enumerate() {
        write!(out, "{},{}", t.from_index, t.to_index).expect("writing to String");
        for cell in [
            t.birth_inner,
            t.birth_boundary,
            t.birth_outer,
            t.death_inner,
            t.death_boundary,
            t.death_outer,
        ] {
            write!(out, ",{},{},{}", cell.m1, cell.m2, cell.m3).expect("writing to String");
        }
        writeln!(out, ",{},{}", static_m3[i], static_m3[i + 1]).expect("writing to String");
    }
    out
}

/// One row per snapshot; the pair columns describe the pair starting at that
/// snapshot and are NA on the last row.
pub fn render_metrics_csv(metrics: &MetricsSeries) -> String {
    let mut out = String::from(
        "index,timestamp,n_nodes,n_edges,gamma_mle,gamma_ccdf,entropy,born_inner,born_boundary,born_outer,dead_inner,dead_boundary,dead_outer,r_term,m3_birth_rate,m3_death_rate\n",
    );
    for (i, s) in metrics.snapshots.iter().enumerate() {
        write!(
            out,
            "{},{},{},{},{},{},{}",
            s.index,
            s.timestamp,
            s.nodes,
            s.edges,
            fmt_opt(s.gamma_mle),
            fmt_opt(s.gamma_ccdf),
            fmt_opt(s.entropy),
        )
        .expect("writing to String");
        match metrics.pairs.get(i) {
            Some(p) => writeln!(
                out,
                ",{},{},{},{},{},{},{},{},{}",
                p.born_inner,
                p.born_boundary,
                p.born_outer,
                p.dead_inner,
                p.dead_boundary,
                p.dead_outer,
                fmt_f64(p.r_term),
                fmt_opt(p.m3_birth),
                fmt_opt(p.m3_death),
            ),
            None => writeln!(out, ",NA,NA,NA,NA,NA,NA,NA,NA,NA"),
        }
        .expect("writing to String");
    }
    out
}

#[derive(Serialize)]
struct MutationEventJson {
    pair_from: u32,
    pair_to: u32,
    side: &'static str,
    rate: Box<RawValue>,
    threshold: Box<RawValue>,
    entropy_before: Option<Box<RawValue>>,
    entropy_after: Option<Box<RawValue>>,
}

pub fn render_mutations_json(mutations: &[MutationEvent]) -> Result<String, PipelineError> {
    let rows: Vec<MutationEventJson> = mutations
        .iter()
        .map(|m| MutationEventJson {
            pair_from: m.from_index,
            pair_to: m.to_index,
            side: m.side.as_str(),
            rate: raw_f64(m.rate),
            threshold: raw_f64(m.threshold),
            entropy_before: raw_opt(m.entropy_before),
            entropy_after: raw_opt(m.entropy_after),
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&rows)
        .map_err(|source| PipelineError::Json { what: "mutations.json", source })?;
    text.push('\n');
    Ok(text)
}

#[derive(Serialize)]
struct TrendFitJson {
    a: Box<RawValue>,
    b: Box<RawValue>,
    c: Box<RawValue>,
    sse: Box<RawValue>,
    degenerate: bool,
    x_min: Box<RawValue>,
    x_max: Box<RawValue>,
}

#[derive(Serialize)]
struct FitsJson {
    x_unit: &'static str,
    born_inner: Option<TrendFitJson>,
    dead_inner: Option<TrendFitJson>,
}

pub fn render_fits_json(fits: &FitBundle) -> Result<String, PipelineError> {
    let convert = |fit: &TrendFit| TrendFitJson {
        a: raw_f64(fit.a),
        b: raw_f64(fit.b),
        c: raw_f64(fit.c),
        sse: raw_f64(fit.sse),
        degenerate: fit.degenerate,
        x_min: raw_f64(fit.x_min),
        x_max: raw_f64(fit.x_max),
    };
    let body = FitsJson {
        x_unit: "pair_index",
        born_inner: fits.born_inner.as_ref().map(convert),
        dead_inner: fits.dead_inner.as_ref().map(convert),
    };
    let mut text = serde_json::to_string_pretty(&body)
        .map_err(|source| PipelineError::Json { what: "fits.json", source })?;
    text.push('\n');
    Ok(text)
}

#[derive(Serialize)]
struct InputDigest {
    index: u32,
    timestamp: String,
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunMetadata {
    tool: &'static str,
    version: &'static str,
    options: RunOptions,
    inputs: Vec<InputDigest>,
    snapshots: usize,
    pairs: usize,
    mutation_events: usize,
    metabolism_r: Box<RawValue>,
}

#[derive(Serialize)]
struct RunOptions {
    scope: &'static str,
    threshold: Box<RawValue>,
    window: &'static str,
}

/// What `run_pipeline` reports back to the caller.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub snapshots: usize,
    pub pairs: usize,
    pub mutation_events: usize,
    pub metabolism_r: f64,
    pub files: Vec<PathBuf>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut acc, b| {
        write!(acc, "{b:02x}").expect("writing to String");
        acc
    })
}

/// Loads the manifest, analyzes the series and writes the report bundle to
/// `out_dir`. On any error, files already written for this bundle are
/// removed so no partial bundle remains.
pub fn run_pipeline(
    manifest_path: &Path,
    out_dir: &Path,
    options: &AnalysisOptions,
) -> Result<RunSummary, PipelineError> {
    let manifest = SeriesManifest::load(manifest_path)?;
    let series = manifest.load_series(manifest_path)?;
    let analysis = analyze_series(&series, options)?;

    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut inputs = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let resolved = base.join(&entry.path);
        let bytes = fs::read(&resolved)
            .map_err(|source| PipelineError::Io { path: resolved.clone(), source })?;
        inputs.push(InputDigest {
            index: entry.index,
            timestamp: entry.timestamp.to_string(),
            path: entry.path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
    }

    let metadata = RunMetadata {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        options: RunOptions {
            scope: options.scope.as_str(),
            threshold: raw_f64(options.threshold),
            window: "month",
        },
        inputs,
        snapshots: series.len(),
        pairs: analysis.deltas.len(),
        mutation_events: analysis.mutations.len(),
        metabolism_r: raw_f64(analysis.metrics.metabolism_r),
    };
    let mut metadata_text = serde_json::to_string_pretty(&metadata)
        .map_err(|source| PipelineError::Json { what: "run-metadata.json", source })?;
    metadata_text.push('\n');

    let files: Vec<(&str, String)> = vec![
        ("deltas.csv", render_deltas_csv(&analysis.deltas)),
        ("census.csv", render_census_csv(&analysis.tables, &analysis.static_m3)),
        ("metrics.csv", render_metrics_csv(&analysis.metrics)),
        ("mutations.json", render_mutations_json(&analysis.mutations)?),
        ("fits.json", render_fits_json(&analysis.fits)?),
        ("run-metadata.json", metadata_text),
    ];

    fs::create_dir_all(out_dir)
        .map_err(|source| PipelineError::Io { path: out_dir.to_path_buf(), source })?;
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, content) in &files {
        let path = out_dir.join(name);
        if let Err(source) = fs::write(&path, content) {
            for path in &written {
                let _ = fs::remove_file(path);
            }
            return Err(PipelineError::Io { path, source });
        }
        written.push(path);
    }

    Ok(RunSummary {
        snapshots: series.len(),
        pairs: analysis.deltas.len(),
        mutation_events: analysis.mutations.len(),
        metabolism_r: analysis.metrics.metabolism_r,
        files: written,
    })
}

/// Rows for one side of the census cross-check: per-class m1 must equal the
/// delta's class edge counts.
pub fn census_matches_delta(table: &CensusTable, delta: &EvolutionDelta) -> bool {
    use crate::evolution::EdgeClass;
    [Side::Birth, Side::Death].into_iter().all(|side| {
        [EdgeClass::Inner, EdgeClass::Boundary, EdgeClass::Outer]
            .into_iter()
            .all(|class| table.cell(side, class).m1 == delta.edge_class(side, class).len() as u64)
    })
}
