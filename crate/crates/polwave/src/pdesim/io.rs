//! Snapshot and manifest export.
//!
//! Snapshots go to CSV with the header `x,u,w,ur,ul`, one file per snapshot.
//! A JSON manifest ties a run together: resolved configuration echo, time
//! stamps, the snapshot file list, and the mass ledger. All files are
//! written atomically (temp file, then rename) so partially written outputs
//! never appear under their final names.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pdesim::{Grid, RunOutput, Snapshot};

/// Write `bytes` to `path` via a temporary sibling file and an atomic rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp-{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Render one snapshot as CSV.
pub fn snapshot_csv(snap: &Snapshot, grid: &Grid) -> String {
    let n = snap.fields.len();
    let mut out = String::with_capacity(48 * n + 16);
    out.push_str("x,u,w,ur,ul\n");
    for i in 0..n {
        let (r, l) = (snap.fields.ur[i], snap.fields.ul[i]);
        writeln!(out, "{},{},{},{},{}", grid.cell_center(i), r + l, r - l, r, l).unwrap();
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub file: String,
    pub time: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassSample {
    pub time: f64,
    pub total: f64,
}

/// Manifest of an exported run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Fully resolved configuration the run was produced from.
    pub config: serde_json::Value,
    pub created_unix: u64,
    pub steps: u64,
    pub min_density: f64,
    pub snapshots: Vec<SnapshotFile>,
    pub mass_ledger: Vec<MassSample>,
}

/// Export all snapshots of a run into `dir/snapshots/` plus `dir/manifest.json`.
/// `config_echo` is embedded verbatim into the manifest.
pub fn export_run(
    dir: &Path,
    config_echo: serde_json::Value,
    run: &RunOutput,
    grid: &Grid,
) -> Result<RunManifest> {
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;

    let mut files = Vec::with_capacity(run.snapshots.len());
    for (k, snap) in run.snapshots.iter().enumerate() {
        let name = format!("snap_{k:05}.csv");
        atomic_write(&snap_dir.join(&name), snapshot_csv(snap, grid).as_bytes())?;
        files.push(SnapshotFile { file: format!("snapshots/{name}"), time: snap.time });
    }

    let manifest = RunManifest {
        config: config_echo,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        steps: run.steps,
        min_density: run.min_density,
        snapshots: files,
        mass_ledger: run
            .mass_ledger
            .iter()
            .map(|&(time, total)| MassSample { time, total })
            .collect(),
    };
    atomic_write(
        &dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    Ok(manifest)
}

/// Path of the manifest inside an output directory.
pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::pdesim::{self, Boundary, InitialKind, SolverConfig};

    #[test]
    fn csv_round_trip_and_manifest() {
        let grid = Grid::new(5.0, 64).unwrap();
        let cfg = SolverConfig {
            params: ModelParams { alpha: 1.0, epsilon: 0.05, beta: 0.0 },
            grid,
            dt: pdesim::cfl_dt(grid.dx(), 0.05, 0.5),
            t_final: 0.5,
            snapshot_every: 0.25,
            boundary: Boundary::Periodic,
            reaction: true,
        };
        let init = pdesim::make_initial(InitialKind::Bump, 1.0, 0.2, 1.0, &grid).unwrap();
        let out = pdesim::run(&cfg, init).unwrap();

        let dir = std::env::temp_dir().join(format!("polwave-io-test-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let manifest =
            export_run(&dir, serde_json::to_value(&cfg).unwrap(), &out, &grid).unwrap();
        assert_eq!(manifest.snapshots.len(), out.snapshots.len());

        // manifest parses back and points at existing files
        let text = fs::read_to_string(manifest_path(&dir)).unwrap();
        let parsed: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.steps, out.steps);
        for entry in &parsed.snapshots {
            let body = fs::read_to_string(dir.join(&entry.file)).unwrap();
            let mut lines = body.lines();
            assert_eq!(lines.next(), Some("x,u,w,ur,ul"));
            let first = lines.next().unwrap();
            let fields: Vec<f64> = first.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(fields.len(), 5);
            // u = ur + ul and w = ur - ul survive the text round trip
            assert_eq!(fields[1], fields[3] + fields[4]);
            assert_eq!(fields[2], fields[3] - fields[4]);
        }
        // config echo reproduces the solver configuration
        let echo: SolverConfig = serde_json::from_value(parsed.config).unwrap();
        assert_eq!(echo, cfg);

        fs::remove_dir_all(&dir).unwrap();
    }
}
