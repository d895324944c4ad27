//! Snapshot ingestion: generic edge-list files and text BGP table dumps.
//!
//! AS_PATH handling drops AS-SET segments, collapses prepending, rejects
//! looped or reserved-ASN paths, and turns consecutive hops into undirected
//! AS links. Fragments are aggregated into one snapshot per calendar month.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{GraphError, Month, NodeId, Snapshot, SnapshotSeries};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn parse_err(line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::Parse { line, reason: reason.into() }
}

/// Counters describing what ingestion read and filtered.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub paths_read: u64,
    pub paths_dropped_loop: u64,
    pub paths_dropped_reserved: u64,
    pub segments_dropped_asset: u64,
    pub edges_emitted: u64,
    /// Months with no data between populated ones.
    pub missing_months: Vec<Month>,
}

/// Node pairs plus explicit isolates parsed from one edge-list file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeListFragment {
    pub pairs: Vec<(NodeId, NodeId)>,
    pub isolates: Vec<NodeId>,
}

/// Parses the canonical edge-list text: one `<a> <b>` pair per line,
/// `#` comments and blank lines skipped, `%iso <id>` lines for isolates.
/// Tolerates repeated pairs and unordered endpoints.
pub fn parse_edgelist<R: BufRead>(reader: R) -> Result<EdgeListFragment, IngestError> {
    let mut fragment = EdgeListFragment::default();
    for (number, line) in reader.lines().enumerate() {
        let number = number + 1;
        let line = line.map_err(|e| parse_err(number, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens[0] == "%iso" {
            if tokens.len() != 2 {
                return Err(parse_err(number, "%iso expects exactly one node id"));
            }
            let id = tokens[1]
                .parse::<u32>()
                .map_err(|_| parse_err(number, format!("invalid node id {:?}", tokens[1])))?;
            fragment.isolates.push(NodeId(id));
            continue;
        }
        if tokens.len() != 2 {
            return Err(parse_err(number, format!("expected two tokens, got {}", tokens.len())));
        }
        let mut pair = [NodeId(0); 2];
        for (slot, token) in pair.iter_mut().zip(&tokens) {
            *slot = NodeId(
                token
                    .parse::<u32>()
                    .map_err(|_| parse_err(number, format!("invalid node id {token:?}")))?,
            );
        }
        fragment.pairs.push((pair[0], pair[1]));
    }
    Ok(fragment)
}

/// ASNs excluded from ingested paths. The default covers AS 0, AS_TRANS,
/// the documentation and private-use blocks, 65535 and its 32-bit
/// counterparts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReservedAsns {
    ranges: Vec<(u32, u32)>,
}

impl Default for ReservedAsns {
    fn default() -> Self {
        ReservedAsns {
            ranges: vec![
                (0, 0),
                (23456, 23456),
                (64496, 64511),
                (64512, 65534),
                (65535, 65535),
                (65536, 65551),
                (4200000000, 4294967295),
            ],
        }
    }
}

impl ReservedAsns {
    pub fn new(ranges: Vec<(u32, u32)>) -> Self {
        ReservedAsns { ranges }
    }

    pub fn contains(&self, asn: u32) -> bool {
        self.ranges.iter().any(|(lo, hi)| (*lo..=*hi).contains(&asn))
    }
}

/// A sanitized AS_PATH: collector-near hop first, no adjacent duplicates,
/// no repeats, no reserved ASNs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsPath {
    pub hops: Vec<NodeId>,
}

/// Why a path was rejected rather than sanitized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathRejection {
    /// An AS repeats non-adjacently.
    Loop,
    /// A hop is a reserved/private ASN.
    Reserved,
    /// Nothing left after dropping AS-SET segments.
    Empty,
}

/// One raw AS_PATH token: a plain ASN or a brace-delimited AS-SET.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathToken {
    Asn(u32),
    AsSet(Vec<u32>),
}

/// Splits an AS_PATH field into tokens. AS-SET groups may contain spaces or
/// commas, e.g. `{7018,701}` or `{ 7018 701 }`; unbalanced braces are a
/// parse error. `line` is used only for error reporting.
pub fn tokenize_aspath(field: &str, line: usize) -> Result<Vec<PathToken>, IngestError> {
    let mut tokens = Vec::new();
    let mut rest = field.trim();
    while !rest.is_empty() {
        if let Some(after) = rest.strip_prefix('{') {
            let close = after
                .find('}')
                .ok_or_else(|| parse_err(line, "unterminated AS-SET brace"))?;
            let inner = &after[..close];
            if inner.contains('{') {
                return Err(parse_err(line, "nested AS-SET brace"));
            }
            let mut members = Vec::new();
            for token in inner.split(|c: char| c == ',' || c.is_whitespace()) {
                if token.is_empty() {
                    continue;
                }
                members.push(
                    token
                        .parse::<u32>()
                        .map_err(|_| parse_err(line, format!("invalid ASN {token:?} in AS-SET")))?,
                );
            }
            tokens.push(PathToken::AsSet(members));
            rest = after[close + 1..].trim_start();
        } else {
            let end = rest.find(|c: char| c.is_whitespace() || c == '{').unwrap_or(rest.len());
            let token = &rest[..end];
            if token.contains('}') {
                return Err(parse_err(line, "unmatched closing brace"));
            }
            tokens.push(PathToken::Asn(
                token
                    .parse::<u32>()
                    .map_err(|_| parse_err(line, format!("invalid ASN {token:?}")))?,
            ));
            rest = rest[end..].trim_start();
        }
    }
    Ok(tokens)
}

/// Outcome of sanitizing one tokenized path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sanitized {
    pub outcome: Result<AsPath, PathRejection>,
    /// AS-SET segments dropped while processing this path.
    pub sets_dropped: u64,
}

/// Sanitizes one AS_PATH: drops AS-SET segments, collapses adjacent
/// duplicates (prepending), then rejects paths with a non-adjacent repeat or
/// a reserved hop. Prepending is collapsed before the loop check so
/// legitimate prepending never reads as a loop.
pub fn sanitize_aspath(tokens: &[PathToken], reserved: &ReservedAsns) -> Sanitized {
    let mut sets_dropped = 0;
    let mut hops: Vec<u32> = Vec::new();
    for token in tokens {
        match token {
            PathToken::AsSet(_) => sets_dropped += 1,
            PathToken::Asn(asn) => {
                if hops.last() != Some(asn) {
                    hops.push(*asn);
                }
            }
        }
    }
    if hops.is_empty() {
        return Sanitized { outcome: Err(PathRejection::Empty), sets_dropped };
    }
    let mut seen = BTreeSet::new();
    for hop in &hops {
        if !seen.insert(*hop) {
            return Sanitized { outcome: Err(PathRejection::Loop), sets_dropped };
        }
    }
    if hops.iter().any(|hop| reserved.contains(*hop)) {
        return Sanitized { outcome: Err(PathRejection::Reserved), sets_dropped };
    }
    Sanitized {
        outcome: Ok(AsPath { hops: hops.into_iter().map(NodeId).collect() }),
        sets_dropped,
    }
}

/// Consecutive hops of each path become undirected node pairs. Single-hop
/// paths contribute nothing.
pub fn paths_to_edges<'a>(paths: impl IntoIterator<Item = &'a AsPath>) -> Vec<(NodeId, NodeId)> {
    let mut pairs = Vec::new();
    for path in paths {
        for hop in path.hops.windows(2) {
            pairs.push((hop[0], hop[1]));
        }
    }
    pairs
}

/// How the AS_PATH field is located inside a dump line.
#[derive(Debug, Clone)]
pub struct AsPathProfile {
    pub name: &'static str,
    /// Lines not matching are skipped (table headers, summaries).
    line_filter: Option<Regex>,
    /// Character column where the path field starts; `None` takes the whole
    /// line.
    path_column: Option<usize>,
    /// Strip a trailing origin code (`i`, `e` or `?`).
    strip_origin: bool,
}

impl AsPathProfile {
    /// Whole line is one AS_PATH.
    pub fn path_per_line() -> Self {
        AsPathProfile { name: "paths", line_filter: None, path_column: None, strip_origin: false }
    }

    /// Classic `show ip bgp` table layout: route lines start with a status
    /// code, the path field begins at column 61 and ends with an origin code.
    pub fn show_ip_bgp() -> Self {
        AsPathProfile {
            name: "show-ip-bgp",
            line_filter: Some(Regex::new(r"^[*sdhri>\s]{2,3}[ie\s]?\d|^\*").expect("static regex")),
            path_column: Some(61),
            strip_origin: true,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "paths" => Some(Self::path_per_line()),
            "show-ip-bgp" => Some(Self::show_ip_bgp()),
            _ => None,
        }
    }

    /// Extracts the raw AS_PATH field from one line, or `None` when the line
    /// is not a route line.
    pub fn extract<'a>(&self, line: &'a str) -> Option<&'a str> {
        if line.trim().is_empty() {
            return None;
        }
        if let Some(filter) = &self.line_filter {
            if !filter.is_match(line) {
                return None;
            }
        }
        let mut field = match self.path_column {
            Some(column) if line.len() > column => &line[column..],
            Some(_) => return None,
            None => line,
        };
        field = field.trim();
        if self.strip_origin {
            if let Some(stripped) = field
                .strip_suffix(['i', 'e', '?'])
                .map(str::trim_end)
            {
                field = stripped;
            }
        }
        (!field.is_empty()).then_some(field)
    }
}

/// Reads one text dump, extracting and sanitizing every AS_PATH. Counter
/// fields of `report` are updated in place; returns the accepted paths.
pub fn parse_aspath_dump<R: BufRead>(
    reader: R,
    profile: &AsPathProfile,
    reserved: &ReservedAsns,
    report: &mut IngestReport,
) -> Result<Vec<AsPath>, IngestError> {
    let mut accepted = Vec::new();
    for (number, line) in reader.lines().enumerate() {
        let number = number + 1;
        let line = line.map_err(|e| parse_err(number, e.to_string()))?;
        let Some(field) = profile.extract(&line) else { continue };
        let tokens = tokenize_aspath(field, number)?;
        report.paths_read += 1;
        let sanitized = sanitize_aspath(&tokens, reserved);
        report.segments_dropped_asset += sanitized.sets_dropped;
        match sanitized.outcome {
            Ok(path) => accepted.push(path),
            Err(PathRejection::Loop) => report.paths_dropped_loop += 1,
            Err(PathRejection::Reserved) => report.paths_dropped_reserved += 1,
            Err(PathRejection::Empty) => {}
        }
    }
    Ok(accepted)
}

/// Edges observed on one date, before monthly aggregation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub month: Month,
    pub pairs: Vec<(NodeId, NodeId)>,
    pub isolates: Vec<NodeId>,
}

/// Groups fragments by calendar month and unions each month's edges into one
/// snapshot. Snapshots are emitted in month order with indices consecutive
/// from 1; empty months between populated ones are reported in
/// `report.missing_months`, not left as index gaps. Also fills
/// `report.edges_emitted` with the sum of per-snapshot edge counts.
pub fn aggregate_window(
    fragments: impl IntoIterator<Item = Fragment>,
    report: &mut IngestReport,
) -> Result<SnapshotSeries, IngestError> {
    let mut months: BTreeMap<Month, (Vec<(NodeId, NodeId)>, Vec<NodeId>)> = BTreeMap::new();
    for fragment in fragments {
        let entry = months.entry(fragment.month).or_default();
        entry.0.extend(fragment.pairs);
        entry.1.extend(fragment.isolates);
    }
    if let (Some(first), Some(last)) = (months.keys().next(), months.keys().last()) {
        let mut cursor = *first;
        while cursor < *last {
            if !months.contains_key(&cursor) {
                report.missing_months.push(cursor);
            }
            cursor = cursor.next();
        }
    }
    let mut snapshots = Vec::with_capacity(months.len());
    for (position, (month, (pairs, isolates))) in months.into_iter().enumerate() {
        let snapshot = Snapshot::build(pairs, isolates, position as u32 + 1, month)?;
        report.edges_emitted += snapshot.edge_count() as u64;
        snapshots.push(snapshot);
    }
    SnapshotSeries::new(snapshots, None).map_err(IngestError::from)
}
