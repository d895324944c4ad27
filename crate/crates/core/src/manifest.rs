//! Series manifests: an ordered list of snapshot files with timestamps.
//!
//! The manifest (`series.json`) is how the analysis commands find a series
//! on disk. Entry paths are resolved relative to the manifest's directory.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, Month, Snapshot, SnapshotSeries};
use crate::ingest::{parse_edgelist, IngestError};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse manifest {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("manifest entry {index}: file {path} does not exist")]
    MissingFile { index: u32, path: PathBuf },
    #[error("manifest indices must be consecutive from 1: entry {position} has index {index}")]
    BadIndex { position: usize, index: u32 },
    #[error("manifest timestamps must be strictly increasing: {previous} then {current}")]
    BadOrder { previous: Month, current: Month },
    #[error("snapshot {path}: {source}")]
    SnapshotParse { path: PathBuf, source: IngestError },
    #[error("snapshot {path}: {source}")]
    SnapshotBuild { path: PathBuf, source: GraphError },
    #[error("series: {0}")]
    Series(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: u32,
    pub timestamp: Month,
    pub path: PathBuf,
}

fn default_window() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesManifest {
    #[serde(default = "default_window")]
    pub window_months: u32,
    pub entries: Vec<ManifestEntry>,
}

impl SeriesManifest {
    /// Builds a manifest for snapshot files named `snapshot-<YYYYMM>.txt`.
    pub fn for_series(series: &SnapshotSeries) -> SeriesManifest {
        SeriesManifest {
            window_months: series.window_months().unwrap_or(1),
            entries: series
                .snapshots()
                .iter()
                .map(|s| ManifestEntry {
                    index: s.index(),
                    timestamp: s.timestamp(),
                    path: PathBuf::from(format!("snapshot-{}.txt", s.timestamp())),
                })
                .collect(),
        }
    }

    /// Loads and validates a manifest file. Referenced snapshot files must
    /// exist (relative to the manifest directory), indices must run 1, 2, …
    /// and timestamps must strictly increase.
    pub fn load(path: &Path) -> Result<SeriesManifest, ManifestError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ManifestError::Io { path: path.to_path_buf(), source })?;
        let manifest: SeriesManifest = serde_json::from_str(&text)
            .map_err(|source| ManifestError::Json { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut previous: Option<Month> = None;
        for (position, entry) in manifest.entries.iter().enumerate() {
            if entry.index != position as u32 + 1 {
                return Err(ManifestError::BadIndex { position, index: entry.index });
            }
            if let Some(previous) = previous {
                if entry.timestamp <= previous {
                    return Err(ManifestError::BadOrder { previous, current: entry.timestamp });
                }
            }
            previous = Some(entry.timestamp);
            let resolved = base.join(&entry.path);
            if !resolved.is_file() {
                return Err(ManifestError::MissingFile { index: entry.index, path: resolved });
            }
        }
        Ok(manifest)
    }

    /// Reads every referenced snapshot file and assembles the series.
    pub fn load_series(&self, manifest_path: &Path) -> Result<SnapshotSeries, ManifestError> {
        let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let mut snapshots = Vec::with_capacity(self.entries.len());
        for entry in &self.entries {
            let resolved = base.join(&entry.path);
            let file = fs::File::open(&resolved)
                .map_err(|source| ManifestError::Io { path: resolved.clone(), source })?;
            let fragment = parse_edgelist(BufReader::new(file))
                .map_err(|source| ManifestError::SnapshotParse { path: resolved.clone(), source })?;
            let snapshot =
                Snapshot::build(fragment.pairs, fragment.isolates, entry.index, entry.timestamp)
                    .map_err(|source| ManifestError::SnapshotBuild { path: resolved, source })?;
            snapshots.push(snapshot);
        }
        // Manifest timestamps may skip months (missing data), so the fixed
        // window is not revalidated here.
        Ok(SnapshotSeries::new(snapshots, None)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|source| ManifestError::Json { path: path.to_path_buf(), source })?;
        text.push('\n');
        fs::write(path, text).map_err(|source| ManifestError::Io { path: path.to_path_buf(), source })
    }
}

/// Writes each snapshot of a series as a canonical file plus a `series.json`
/// manifest into `dir`, returning the manifest.
pub fn write_series(series: &SnapshotSeries, dir: &Path) -> Result<SeriesManifest, ManifestError> {
    fs::create_dir_all(dir)
        .map_err(|source| ManifestError::Io { path: dir.to_path_buf(), source })?;
    let manifest = SeriesManifest::for_series(series);
    for (snapshot, entry) in series.snapshots().iter().zip(&manifest.entries) {
        let path = dir.join(&entry.path);
        fs::write(&path, snapshot.to_canonical_string())
            .map_err(|source| ManifestError::Io { path, source })?;
    }
    manifest.save(&dir.join("series.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;

    fn sample_series() -> SnapshotSeries {
        let g1 = Snapshot::build(
            [(NodeId(1), NodeId(2))],
            [NodeId(9)],
            1,
            "199801".parse().unwrap(),
        )
        .unwrap();
        let g2 = Snapshot::build(
            [(NodeId(1), NodeId(2)), (NodeId(2), NodeId(3))],
            [],
            2,
            "199802".parse().unwrap(),
        )
        .unwrap();
        SnapshotSeries::new(vec![g1, g2], Some(1)).unwrap()
    }

    #[test]
    fn write_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let series = sample_series();
        write_series(&series, dir.path()).unwrap();

        let manifest_path = dir.path().join("series.json");
        let manifest = SeriesManifest::load(&manifest_path).unwrap();
        assert_eq!(manifest.entries.len(), 2);
        let loaded = manifest.load_series(&manifest_path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded.snapshots()[0], series.snapshots()[0]);
        assert_eq!(loaded.snapshots()[1], series.snapshots()[1]);
    }

    #[test]
    fn load_rejects_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        write_series(&sample_series(), dir.path()).unwrap();
        fs::remove_file(dir.path().join("snapshot-199802.txt")).unwrap();
        let err = SeriesManifest::load(&dir.path().join("series.json")).unwrap_err();
        assert!(matches!(err, ManifestError::MissingFile { index: 2, .. }));
    }

    #[test]
    fn load_rejects_bad_indices_and_order() {
        let dir = tempfile::tempdir().unwrap();
        write_series(&sample_series(), dir.path()).unwrap();
        let path = dir.path().join("series.json");

        let mut manifest = SeriesManifest::load(&path).unwrap();
        manifest.entries[1].index = 3;
        manifest.save(&path).unwrap();
        assert!(matches!(SeriesManifest::load(&path).unwrap_err(), ManifestError::BadIndex { .. }));

        let mut manifest = SeriesManifest::load(&path);
        assert!(manifest.is_err());
        // Restore a valid index but break the timestamp order.
        let fixed = SeriesManifest {
            window_months: 1,
            entries: vec![
                ManifestEntry {
                    index: 1,
                    timestamp: "199802".parse().unwrap(),
                    path: PathBuf::from("snapshot-199801.txt"),
                },
                ManifestEntry {
                    index: 2,
                    timestamp: "199801".parse().unwrap(),
                    path: PathBuf::from("snapshot-199802.txt"),
                },
            ],
        };
        fixed.save(&path).unwrap();
        manifest = SeriesManifest::load(&path);
        assert!(matches!(manifest.unwrap_err(), ManifestError::BadOrder { .. }));
    }
}
