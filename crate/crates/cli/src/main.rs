//! `netmeta`: temporal network evolution analysis from the command line.
//!
//! Subcommands wire ingestion, snapshot-pair classification, motif censuses
//! and series metrics into reproducible runs. All data files are written
//! deterministically; re-running a command on the same inputs produces
//! byte-identical output.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use netmeta_core::census::{enumerate_motifs, INSTANCE_CAP};
use netmeta_core::evolution::ego_delta;
use netmeta_core::graph::{Month, NodeId, Snapshot};
use netmeta_core::ingest::{
    aggregate_window, parse_aspath_dump, parse_edgelist, paths_to_edges, AsPathProfile, Fragment,
    IngestReport, ReservedAsns,
};
use netmeta_core::manifest::{write_series, SeriesManifest};
use netmeta_core::metrics::{node_trajectory, Scope};
use netmeta_core::pipeline::{
    analyze_series, render_census_csv, render_deltas_csv, render_fits_json, render_metrics_csv,
    render_mutations_json, run_pipeline, AnalysisOptions, DEFAULT_THRESHOLD,
};
use netmeta_core::synth::{generate, SynthConfig};

#[derive(Parser)]
#[command(
    name = "netmeta",
    version,
    about = "Temporal network evolution analysis: snapshot diffs, motif censuses, metabolism metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build monthly snapshots from edge-list files or text BGP dumps
    Ingest(IngestCmd),
    /// Classify consecutive snapshot pairs into evolution deltas
    Classify(ClassifyCmd),
    /// Motif census per changed-edge class, or instance listing of one snapshot
    Census(CensusCmd),
    /// Series metrics: metabolism rate, trends, power laws, entropy
    Metrics(MetricsCmd),
    /// Detect motif-rate mutation events
    Mutations(MutationsCmd),
    /// Degree history of one node across the series
    Trajectory(TrajectoryCmd),
    /// Ego-network delta of one node between two snapshots
    Ego(EgoCmd),
    /// Generate a synthetic series with planted ground truth
    Synth(SynthCmd),
    /// Full pipeline: classify, census, metrics, mutations, trend fits
    Run(RunCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum IngestFormat {
    /// Canonical edge-list files (`<lo> <hi>` lines, `%iso` isolates)
    Edgelist,
    /// Text dumps carrying one AS_PATH per route line
    Aspath,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    All,
    Inner,
    Boundary,
    Outer,
}

impl From<ScopeArg> for Scope {
    fn from(value: ScopeArg) -> Scope {
        match value {
            ScopeArg::All => Scope::All,
            ScopeArg::Inner => Scope::Inner,
            ScopeArg::Boundary => Scope::Boundary,
            ScopeArg::Outer => Scope::Outer,
        }
    }
}

#[derive(Args)]
struct IngestCmd {
    /// Input file format
    #[arg(long, value_enum)]
    format: IngestFormat,
    /// AS_PATH extraction profile: "paths" (one path per line) or
    /// "show-ip-bgp" (classic table layout)
    #[arg(long, default_value = "paths")]
    profile: String,
    /// Aggregation window; only "month" is supported
    #[arg(long, default_value = "month")]
    window: String,
    /// Output directory for snapshot files, series.json and ingest-report.json
    #[arg(long)]
    out: PathBuf,
    /// Input files; each file's observation date is read from its name
    /// (YYYYMMDD or YYYYMM)
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct ClassifyCmd {
    /// Series manifest (series.json)
    #[arg(long)]
    series: PathBuf,
    /// Directory to write deltas.csv into
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CensusCmd {
    /// Series manifest; writes census.csv
    #[arg(long, conflicts_with = "snapshot")]
    series: Option<PathBuf>,
    /// Single snapshot file for --instances mode
    #[arg(long, requires = "instances")]
    snapshot: Option<PathBuf>,
    /// Enumerate motif instances (ego-scale graphs; capped at 10000)
    #[arg(long)]
    instances: bool,
    /// Directory to write census.csv into
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsCmd {
    /// Series manifest
    #[arg(long)]
    series: PathBuf,
    /// Edge classes entering the metabolism rate
    #[arg(long, value_enum, default_value = "all")]
    scope: ScopeArg,
    /// Mutation threshold; a rate must strictly exceed it to fire
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Directory to write metrics.csv, mutations.json and fits.json into
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct MutationsCmd {
    /// Series manifest
    #[arg(long)]
    series: PathBuf,
    /// Mutation threshold; a rate must strictly exceed it to fire
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Directory to write mutations.json into
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct TrajectoryCmd {
    /// Series manifest
    #[arg(long)]
    series: PathBuf,
    /// Node id (AS number)
    #[arg(long)]
    node: u32,
}

#[derive(Args)]
struct EgoCmd {
    /// Series manifest
    #[arg(long)]
    series: PathBuf,
    /// Focal node id
    #[arg(long)]
    node: u32,
    /// Earlier snapshot index
    #[arg(long)]
    from: u32,
    /// Later snapshot index
    #[arg(long)]
    to: u32,
}

#[derive(Args)]
struct SynthCmd {
    /// Generator config (JSON); see SynthConfig fields
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for snapshots, series.json and truth.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunCmd {
    /// Series manifest
    #[arg(long)]
    series: PathBuf,
    /// Edge classes entering the metabolism rate
    #[arg(long, value_enum, default_value = "all")]
    scope: ScopeArg,
    /// Mutation threshold; a rate must strictly exceed it to fire
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Output directory for the report bundle
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("NETMETA_THREADS") {
        match threads.parse::<usize>() {
            Ok(0) | Err(_) => {}
            Ok(n) => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("netmeta: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest(cmd) => ingest(cmd),
        Command::Classify(cmd) => classify(cmd),
        Command::Census(cmd) => census(cmd),
        Command::Metrics(cmd) => metrics(cmd),
        Command::Mutations(cmd) => mutations(cmd),
        Command::Trajectory(cmd) => trajectory(cmd),
        Command::Ego(cmd) => ego(cmd),
        Command::Synth(cmd) => synth(cmd),
        Command::Run(cmd) => run(cmd),
    }
}

fn validate_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold < 1.0) {
        bail!("--threshold must be strictly between 0 and 1, got {threshold}");
    }
    Ok(())
}

/// Writes lines to stdout; a closed pipe ends the output quietly instead of
/// panicking.
fn print_lines<I: IntoIterator<Item = String>>(lines: I) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    for line in lines {
        if let Err(e) = writeln!(out, "{line}") {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                return Ok(());
            }
            return Err(e.into());
        }
    }
    Ok(())
}

fn month_of_file(path: &Path) -> Result<Month> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| anyhow!("{}: not a readable file name", path.display()))?;
    Month::from_file_name(name).ok_or_else(|| {
        anyhow!("{}: no YYYYMMDD or YYYYMM date found in the file name", path.display())
    })
}

fn ingest(cmd: IngestCmd) -> Result<()> {
    if cmd.window != "month" {
        bail!("--window only supports \"month\", got {:?}", cmd.window);
    }
    let profile = AsPathProfile::by_name(&cmd.profile)
        .ok_or_else(|| anyhow!("unknown profile {:?}; use \"paths\" or \"show-ip-bgp\"", cmd.profile))?;
    let reserved = ReservedAsns::default();
    let mut report = IngestReport::default();
    let mut fragments = Vec::with_capacity(cmd.files.len());
    for path in &cmd.files {
        let month = month_of_file(path)?;
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let reader = BufReader::new(file);
        let fragment = match cmd.format {
            IngestFormat::Edgelist => {
                let parsed = parse_edgelist(reader)
                    .with_context(|| format!("parsing {}", path.display()))?;
                Fragment { month, pairs: parsed.pairs, isolates: parsed.isolates }
            }
            IngestFormat::Aspath => {
                let paths = parse_aspath_dump(reader, &profile, &reserved, &mut report)
                    .with_context(|| format!("parsing {}", path.display()))?;
                Fragment { month, pairs: paths_to_edges(&paths), isolates: Vec::new() }
            }
        };
        fragments.push(fragment);
    }
    let series = aggregate_window(fragments, &mut report).context("aggregating by month")?;
    if series.is_empty() {
        bail!("no snapshots produced; inputs were empty");
    }
    write_series(&series, &cmd.out).context("writing snapshot files")?;
    let mut report_json = serde_json::to_string_pretty(&report)?;
    report_json.push('\n');
    fs::write(cmd.out.join("ingest-report.json"), report_json)
        .with_context(|| format!("writing {}", cmd.out.join("ingest-report.json").display()))?;
    for month in &report.missing_months {
        eprintln!("warning: no data for month {month}");
    }
    eprintln!(
        "wrote {} snapshots to {} ({} paths read, {} edges emitted)",
        series.len(),
        cmd.out.display(),
        report.paths_read,
        report.edges_emitted
    );
    Ok(())
}

fn load_series(path: &Path) -> Result<netmeta_core::SnapshotSeries> {
    let manifest = SeriesManifest::load(path)?;
    Ok(manifest.load_series(path)?)
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn classify(cmd: ClassifyCmd) -> Result<()> {
    let series = load_series(&cmd.series)?;
    let analysis = analyze_series(&series, &AnalysisOptions::default())?;
    let path = write_out(&cmd.out, "deltas.csv", &render_deltas_csv(&analysis.deltas))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn census(cmd: CensusCmd) -> Result<()> {
    if cmd.instances {
        let snapshot_path = cmd
            .snapshot
            .ok_or_else(|| anyhow!("--instances needs --snapshot <file>"))?;
        let file = fs::File::open(&snapshot_path)
            .with_context(|| format!("opening {}", snapshot_path.display()))?;
        let fragment = parse_edgelist(BufReader::new(file))
            .with_context(|| format!("parsing {}", snapshot_path.display()))?;
        let month = Month::from_file_name(
            snapshot_path.file_name().and_then(|n| n.to_str()).unwrap_or(""),
        )
        .unwrap_or_else(|| "200001".parse().expect("static month"));
        let snapshot = Snapshot::build(fragment.pairs, fragment.isolates, 1, month)?;
        let instances = enumerate_motifs(&snapshot, INSTANCE_CAP)?;
        let lines = instances
            .m1
            .iter()
            .map(|edge| format!("m1 {edge}"))
            .chain(instances.m2.iter().map(|(a, center, b)| format!("m2 {a} {center} {b}")))
            .chain(instances.m3.iter().map(|(a, b, c)| format!("m3 {a} {b} {c}")));
        return print_lines(lines);
    }
    let series_path = cmd.series.ok_or_else(|| anyhow!("--series <manifest> is required"))?;
    let series = load_series(&series_path)?;
    let analysis = analyze_series(&series, &AnalysisOptions::default())?;
    let path = write_out(
        &cmd.out,
        "census.csv",
        &render_census_csv(&analysis.tables, &analysis.static_m3),
    )?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn metrics(cmd: MetricsCmd) -> Result<()> {
    validate_threshold(cmd.threshold)?;
    let series = load_series(&cmd.series)?;
    let options = AnalysisOptions { scope: cmd.scope.into(), threshold: cmd.threshold };
    let analysis = analyze_series(&series, &options)?;
    write_out(&cmd.out, "metrics.csv", &render_metrics_csv(&analysis.metrics))?;
    write_out(&cmd.out, "mutations.json", &render_mutations_json(&analysis.mutations)?)?;
    write_out(&cmd.out, "fits.json", &render_fits_json(&analysis.fits)?)?;
    println!(
        "metabolism r = {} (scope {}, {} pairs, {} mutation events)",
        analysis.metrics.metabolism_r,
        options.scope.as_str(),
        analysis.metrics.pairs.len(),
        analysis.mutations.len()
    );
    eprintln!("wrote metrics.csv, mutations.json, fits.json to {}", cmd.out.display());
    Ok(())
}

fn mutations(cmd: MutationsCmd) -> Result<()> {
    validate_threshold(cmd.threshold)?;
    let series = load_series(&cmd.series)?;
    let options = AnalysisOptions { scope: Scope::All, threshold: cmd.threshold };
    let analysis = analyze_series(&series, &options)?;
    let path = write_out(&cmd.out, "mutations.json", &render_mutations_json(&analysis.mutations)?)?;
    print_lines(analysis.mutations.iter().map(|event| {
        format!(
            "pair {}..{}: {} rate {:.4} > {:.4}",
            event.from_index,
            event.to_index,
            event.side.as_str(),
            event.rate,
            event.threshold
        )
    }))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn trajectory(cmd: TrajectoryCmd) -> Result<()> {
    let series = load_series(&cmd.series)?;
    let trajectory = node_trajectory(&series, NodeId(cmd.node))?;
    let header = std::iter::once("index,timestamp,degree".to_string());
    print_lines(header.chain(trajectory.points.iter().map(
        |(index, timestamp, degree)| match degree {
            Some(d) => format!("{index},{timestamp},{d}"),
            None => format!("{index},{timestamp},NA"),
        },
    )))?;
    eprintln!(
        "node {}: first seen at index {}, last at index {}",
        cmd.node, trajectory.first_seen, trajectory.last_seen
    );
    Ok(())
}

fn ego(cmd: EgoCmd) -> Result<()> {
    let series = load_series(&cmd.series)?;
    let earlier = series
        .by_index(cmd.from)
        .ok_or_else(|| anyhow!("no snapshot with index {}", cmd.from))?;
    let later = series
        .by_index(cmd.to)
        .ok_or_else(|| anyhow!("no snapshot with index {}", cmd.to))?;
    let ego = ego_delta(earlier, later, NodeId(cmd.node))?;
    print_lines(
        ego.labeled_edges()
            .into_iter()
            .map(|(edge, fate)| format!("{edge} {}", fate.as_str())),
    )?;
    eprintln!(
        "ego of node {} over pair {}..{}: {} steady, {} born, {} dead nodes",
        cmd.node,
        cmd.from,
        cmd.to,
        ego.delta.steady_nodes.len(),
        ego.delta.born_nodes.len(),
        ego.delta.dead_nodes.len()
    );
    Ok(())
}

fn synth(cmd: SynthCmd) -> Result<()> {
    let text = fs::read_to_string(&cmd.config)
        .with_context(|| format!("reading {}", cmd.config.display()))?;
    let mut config: SynthConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", cmd.config.display()))?;
    if let Some(seed) = cmd.seed {
        config.seed = seed;
    }
    let (series, truth) = generate(&config)?;
    write_series(&series, &cmd.out).context("writing snapshot files")?;
    let mut truth_json = serde_json::to_string_pretty(&truth)?;
    truth_json.push('\n');
    fs::write(cmd.out.join("truth.json"), truth_json)
        .with_context(|| format!("writing {}", cmd.out.join("truth.json").display()))?;
    eprintln!(
        "wrote {} snapshots and truth.json to {} (seed {})",
        series.len(),
        cmd.out.display(),
        config.seed
    );
    Ok(())
}

fn run(cmd: RunCmd) -> Result<()> {
    validate_threshold(cmd.threshold)?;
    let options = AnalysisOptions { scope: cmd.scope.into(), threshold: cmd.threshold };
    let summary = run_pipeline(&cmd.series, &cmd.out, &options)?;
    println!(
        "{} snapshots, {} pairs, r = {}, {} mutation events",
        summary.snapshots, summary.pairs, summary.metabolism_r, summary.mutation_events
    );
    eprintln!("bundle written to {}", cmd.out.display());
    Ok(())
}
