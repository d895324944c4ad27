//! Undirected simple-graph snapshots and ordered snapshot series.
//!
//! A [`Snapshot`] is the network observed over one time window: a set of
//! nodes, a set of canonical (lo < hi) edges, and a month timestamp. All
//! iteration orders are ascending, so downstream output is reproducible
//! byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use thiserror::Error;

/// Errors raised by snapshot construction and queries.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(NodeId),
    #[error("invalid timestamp {0:?}: expected YYYYMM")]
    InvalidTimestamp(String),
    #[error("node {0} is not in the snapshot")]
    UnknownNode(NodeId),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
}

/// A node label. For Internet data this is an AS number; otherwise it is an
/// opaque unsigned id. Ordering and equality are those of the integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for NodeId {
    fn from(value: u32) -> Self {
        NodeId(value)
    }
}

/// An undirected edge in canonical form: `lo < hi`, never a self-loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    lo: NodeId,
    hi: NodeId,
}

impl Edge {
    /// Builds a canonical edge from two endpoints in either order.
    pub fn new(a: NodeId, b: NodeId) -> Result<Edge, GraphError> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Edge { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Ok(Edge { lo: b, hi: a }),
            std::cmp::Ordering::Equal => Err(GraphError::SelfLoop(a)),
        }
    }

    pub fn lo(&self) -> NodeId {
        self.lo
    }

    pub fn hi(&self) -> NodeId {
        self.hi
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.lo, self.hi)
    }

    /// True if `u` is one of the endpoints.
    pub fn touches(&self, u: NodeId) -> bool {
        self.lo == u || self.hi == u
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.lo, self.hi)
    }
}

impl serde::Serialize for Edge {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (self.lo, self.hi).serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for Edge {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (a, b) = <(NodeId, NodeId)>::deserialize(deserializer)?;
        Edge::new(a, b).map_err(serde::de::Error::custom)
    }
}

/// A calendar month label, written `YYYYMM` (e.g. `199801`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    year: u16,
    month: u8,
}

impl Month {
    pub fn new(year: u16, month: u8) -> Result<Month, GraphError> {
        if year == 0 || year > 9999 || month == 0 || month > 12 {
            return Err(GraphError::InvalidTimestamp(format!("{year:04}{month:02}")));
        }
        Ok(Month { year, month })
    }

    pub fn year(&self) -> u16 {
        self.year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    /// The following calendar month.
    pub fn next(&self) -> Month {
        if self.month == 12 {
            Month { year: self.year + 1, month: 1 }
        } else {
            Month { year: self.year, month: self.month + 1 }
        }
    }

    /// Signed distance in months from `earlier` to `self`.
    pub fn months_since(&self, earlier: Month) -> i32 {
        (i32::from(self.year) - i32::from(earlier.year)) * 12
            + (i32::from(self.month) - i32::from(earlier.month))
    }

    /// Parses a date string and keeps its calendar month. Accepts `YYYYMM`,
    /// `YYYYMMDD`, `YYYY-MM` and `YYYY-MM-DD`.
    pub fn from_date_str(s: &str) -> Result<Month, GraphError> {
        let bad = || GraphError::InvalidTimestamp(s.to_string());
        let digits: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
        let dashes = s.chars().filter(|c| *c == '-').count();
        let plain = s.chars().all(|c| c.is_ascii_digit());
        let dashed_ok = dashes > 0
            && s.chars().all(|c| c.is_ascii_digit() || c == '-')
            && (s.len() == 7 || s.len() == 10);
        if !plain && !dashed_ok {
            return Err(bad());
        }
        match digits.len() {
            6 => digits.parse(),
            8 => {
                let day: u8 = digits[6..8].parse().map_err(|_| bad())?;
                if day == 0 || day > 31 {
                    return Err(bad());
                }
                digits[..6].parse()
            }
            _ => Err(bad()),
        }
        .map_err(|_| bad())
    }

    /// Finds the first date embedded in a file name, e.g. `rib.19980115.txt`
    /// or `snapshot-199801.txt`. Eight-digit runs are tried as `YYYYMMDD`,
    /// six-digit runs as `YYYYMM`.
    pub fn from_file_name(name: &str) -> Option<Month> {
        let bytes = name.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if !bytes[i].is_ascii_digit() {
                i += 1;
                continue;
            }
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let run = &name[start..i];
            if run.len() == 8 {
                if let Ok(m) = Month::from_date_str(run) {
                    return Some(m);
                }
            }
            if run.len() == 6 {
                if let Ok(m) = run.parse() {
                    return Some(m);
                }
            }
        }
        None
    }
}

impl FromStr for Month {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Month, GraphError> {
        if s.len() != 6 || !s.chars().all(|c| c.is_ascii_digit()) {
            return Err(GraphError::InvalidTimestamp(s.to_string()));
        }
        let year: u16 = s[..4].parse().map_err(|_| GraphError::InvalidTimestamp(s.to_string()))?;
        let month: u8 = s[4..].parse().map_err(|_| GraphError::InvalidTimestamp(s.to_string()))?;
        Month::new(year, month).map_err(|_| GraphError::InvalidTimestamp(s.to_string()))
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}{:02}", self.year, self.month)
    }
}

impl serde::Serialize for Month {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Month {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One undirected simple graph observed at a point of the series.
///
/// Immutable after construction; adjacency lists are stored sorted so wedge
/// and triangle enumeration is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    index: u32,
    timestamp: Month,
    edges: BTreeSet<Edge>,
    adjacency: BTreeMap<NodeId, Vec<NodeId>>,
}

impl Snapshot {
    /// Builds a snapshot from node pairs and explicit isolates. Pairs are
    /// canonicalized and deduplicated; nodes are the pair endpoints plus the
    /// isolates.
    pub fn build(
        pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
        isolates: impl IntoIterator<Item = NodeId>,
        index: u32,
        timestamp: Month,
    ) -> Result<Snapshot, GraphError> {
        let mut edges = BTreeSet::new();
        let mut adjacency: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (a, b) in pairs {
            let edge = Edge::new(a, b)?;
            if edges.insert(edge) {
                adjacency.entry(edge.lo()).or_default().push(edge.hi());
                adjacency.entry(edge.hi()).or_default().push(edge.lo());
            }
        }
        for u in isolates {
            adjacency.entry(u).or_default();
        }
        for list in adjacency.values_mut() {
            list.sort_unstable();
        }
        Ok(Snapshot { index, timestamp, edges, adjacency })
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn timestamp(&self) -> Month {
        self.timestamp
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Nodes in ascending order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.keys().copied()
    }

    /// Edges in ascending (lo, hi) order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains_node(&self, u: NodeId) -> bool {
        self.adjacency.contains_key(&u)
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }

    /// Sorted neighbors of `u`.
    pub fn neighbors(&self, u: NodeId) -> Result<&[NodeId], GraphError> {
        self.adjacency
            .get(&u)
            .map(Vec::as_slice)
            .ok_or(GraphError::UnknownNode(u))
    }

    /// Degree of `u`, or `None` if the node is absent.
    pub fn degree(&self, u: NodeId) -> Option<usize> {
        self.adjacency.get(&u).map(Vec::len)
    }

    /// Degree of every node, including 0 for isolates.
    pub fn degree_sequence(&self) -> BTreeMap<NodeId, usize> {
        self.adjacency.iter().map(|(u, n)| (*u, n.len())).collect()
    }

    /// Subgraph induced on `keep`: nodes in the intersection, edges with both
    /// endpoints kept. Index and timestamp are preserved.
    pub fn induced(&self, keep: &BTreeSet<NodeId>) -> Snapshot {
        let pairs = self
            .edges
            .iter()
            .filter(|e| keep.contains(&e.lo()) && keep.contains(&e.hi()))
            .map(|e| e.endpoints());
        let isolates = self.adjacency.keys().copied().filter(|u| keep.contains(u));
        Snapshot::build(pairs, isolates, self.index, self.timestamp)
            .expect("induced edges are already canonical")
    }

    /// Writes the canonical text form: `%iso <id>` lines for isolates, then
    /// one `<lo> <hi>` line per edge, both ascending.
    pub fn write_canonical<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (u, neighbors) in &self.adjacency {
            if neighbors.is_empty() {
                writeln!(out, "%iso {u}")?;
            }
        }
        for edge in &self.edges {
            writeln!(out, "{edge}")?;
        }
        Ok(())
    }

    /// The canonical text form as a string.
    pub fn to_canonical_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_canonical(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("canonical form is ASCII")
    }
}

/// An ordered sequence of snapshots on a fixed window.
#[derive(Debug, Clone)]
pub struct SnapshotSeries {
    snapshots: Vec<Snapshot>,
    window_months: Option<u32>,
}

impl SnapshotSeries {
    /// Validates ordering: indices and timestamps strictly increasing, and
    /// consecutive timestamps exactly `window_months` apart when declared.
    pub fn new(snapshots: Vec<Snapshot>, window_months: Option<u32>) -> Result<SnapshotSeries, GraphError> {
        for pair in snapshots.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.index() <= a.index() {
                return Err(GraphError::InvalidSeries(format!(
                    "indices not strictly increasing: {} then {}",
                    a.index(),
                    b.index()
                )));
            }
            if b.timestamp() <= a.timestamp() {
                return Err(GraphError::InvalidSeries(format!(
                    "timestamps not strictly increasing: {} then {}",
                    a.timestamp(),
                    b.timestamp()
                )));
            }
            if let Some(w) = window_months {
                let gap = b.timestamp().months_since(a.timestamp());
                if gap != w as i32 {
                    return Err(GraphError::InvalidSeries(format!(
                        "window is {w} months but {} to {} spans {gap}",
                        a.timestamp(),
                        b.timestamp()
                    )));
                }
            }
        }
        Ok(SnapshotSeries { snapshots, window_months })
    }

    pub fn window_months(&self) -> Option<u32> {
        self.window_months
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn get(&self, position: usize) -> Option<&Snapshot> {
        self.snapshots.get(position)
    }

    /// Looks a snapshot up by its series index (not its position).
    pub fn by_index(&self, index: u32) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.index() == index)
    }

    /// Consecutive snapshot pairs in order.
    pub fn pairs(&self) -> impl Iterator<Item = (&Snapshot, &Snapshot)> {
        self.snapshots.windows(2).map(|w| (&w[0], &w[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u32) -> NodeId {
        NodeId(v)
    }

    fn month(s: &str) -> Month {
        s.parse().unwrap()
    }

    #[test]
    fn build_canonicalizes_and_dedups() {
        let g = Snapshot::build([(n(2), n(1)), (n(1), n(2)), (n(1), n(3))], [], 1, month("199801")).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![Edge::new(n(1), n(2)).unwrap(), Edge::new(n(1), n(3)).unwrap()]);
        let nodes: Vec<_> = g.nodes().collect();
        assert_eq!(nodes, vec![n(1), n(2), n(3)]);
    }

    #[test]
    fn build_keeps_isolates() {
        let g = Snapshot::build([], [n(7)], 1, month("199801")).unwrap();
        assert_eq!(g.nodes().collect::<Vec<_>>(), vec![n(7)]);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.degree(n(7)), Some(0));
    }

    #[test]
    fn build_rejects_self_loop() {
        let err = Snapshot::build([(n(1), n(1))], [], 1, month("199801")).unwrap_err();
        assert_eq!(err, GraphError::SelfLoop(n(1)));
    }

    #[test]
    fn degree_sequence_cases() {
        let triangle =
            Snapshot::build([(n(1), n(2)), (n(2), n(3)), (n(1), n(3))], [], 1, month("199801")).unwrap();
        assert_eq!(
            triangle.degree_sequence(),
            BTreeMap::from([(n(1), 2), (n(2), 2), (n(3), 2)])
        );

        let star =
            Snapshot::build([(n(0), n(1)), (n(0), n(2)), (n(0), n(3))], [], 1, month("199801")).unwrap();
        assert_eq!(
            star.degree_sequence(),
            BTreeMap::from([(n(0), 3), (n(1), 1), (n(2), 1), (n(3), 1)])
        );

        let isolate = Snapshot::build([], [n(5)], 1, month("199801")).unwrap();
        assert_eq!(isolate.degree_sequence(), BTreeMap::from([(n(5), 0)]));
    }

    #[test]
    fn neighbors_cases() {
        let triangle =
            Snapshot::build([(n(1), n(2)), (n(2), n(3)), (n(1), n(3))], [], 1, month("199801")).unwrap();
        assert_eq!(triangle.neighbors(n(1)).unwrap(), &[n(2), n(3)]);

        let star =
            Snapshot::build([(n(0), n(1)), (n(0), n(2)), (n(0), n(3))], [], 1, month("199801")).unwrap();
        assert_eq!(star.neighbors(n(0)).unwrap(), &[n(1), n(2), n(3)]);

        let isolate = Snapshot::build([], [n(5)], 1, month("199801")).unwrap();
        assert!(isolate.neighbors(n(5)).unwrap().is_empty());

        assert_eq!(star.neighbors(n(9)).unwrap_err(), GraphError::UnknownNode(n(9)));
    }

    #[test]
    fn canonical_text_form() {
        let g = Snapshot::build([(n(3), n(1)), (n(1), n(2))], [n(9)], 1, month("199801")).unwrap();
        assert_eq!(g.to_canonical_string(), "%iso 9\n1 2\n1 3\n");
    }

    #[test]
    fn month_parsing() {
        assert_eq!(month("199801").to_string(), "199801");
        assert!("199813".parse::<Month>().is_err());
        assert!("19981".parse::<Month>().is_err());
        assert!("1998x1".parse::<Month>().is_err());
        assert_eq!(Month::from_date_str("1998-01-20").unwrap(), month("199801"));
        assert_eq!(Month::from_date_str("19980120").unwrap(), month("199801"));
        assert_eq!(Month::from_date_str("1998-01").unwrap(), month("199801"));
        assert!(Month::from_date_str("1998-01-40").is_err());
        assert_eq!(month("199812").next(), month("199901"));
        assert_eq!(month("199903").months_since(month("199801")), 14);
    }

    #[test]
    fn month_from_file_name() {
        assert_eq!(Month::from_file_name("rib.19980115.0000.txt"), Some(month("199801")));
        assert_eq!(Month::from_file_name("snapshot-199801.txt"), Some(month("199801")));
        assert_eq!(Month::from_file_name("no-date-here.txt"), None);
    }

    #[test]
    fn series_validation() {
        let a = Snapshot::build([], [n(1)], 1, month("199801")).unwrap();
        let b = Snapshot::build([], [n(1)], 2, month("199802")).unwrap();
        assert!(SnapshotSeries::new(vec![a.clone(), b.clone()], Some(1)).is_ok());

        let skipped = Snapshot::build([], [n(1)], 2, month("199804")).unwrap();
        assert!(SnapshotSeries::new(vec![a.clone(), skipped.clone()], Some(1)).is_err());
        assert!(SnapshotSeries::new(vec![a.clone(), skipped], None).is_ok());

        let stale = Snapshot::build([], [n(1)], 2, month("199801")).unwrap();
        assert!(SnapshotSeries::new(vec![a, stale], None).is_err());
    }

    #[test]
    fn rebuild_from_emitted_edges_is_identity() {
        let g = Snapshot::build(
            [(n(4), n(2)), (n(2), n(1)), (n(9), n(4))],
            [n(20)],
            3,
            month("200105"),
        )
        .unwrap();
        let isolates: Vec<NodeId> =
            g.nodes().filter(|u| g.degree(*u) == Some(0)).collect();
        let rebuilt =
            Snapshot::build(g.edges().map(|e| e.endpoints()), isolates, 3, month("200105")).unwrap();
        assert_eq!(g, rebuilt);
    }
}
