//! Parameter grids. Every (cell, replicate) pair is an independent pipeline
//! run with root seed `seed + replicate`, so cells share masks and noise
//! streams where their parameters allow and results do not depend on the
//! job count.

use std::path::{Path, PathBuf};

use greenmask::maskgen::MaskKind;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{write_csv, MetricRow};
use crate::config::{ExperimentConfig, SweepGrid};
use crate::error::{io_at, CliError};

/// Configs of each grid cell, row-major over the grid axes.
pub fn cells(cfg: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let s = &cfg.sweep;
    let mut out = Vec::new();
    match s.grid {
        SweepGrid::SigmaR1 => {
            for &sigma in &s.sigmas {
                for &r1 in &s.r1s {
                    let mut c = cfg.clone();
                    c.masks.sigma = sigma;
                    c.masks.r1 = r1;
                    out.push(c);
                }
            }
        }
        SweepGrid::KindSnr => {
            for &kind in &s.kinds {
                for &snr in &s.snr_db {
                    let mut c = cfg.clone();
                    c.masks.kind = kind;
                    c.acquisition.snr_db = Some(snr);
                    out.push(c);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRow {
    pub cell: usize,
    pub replicate: usize,
    pub seed: u64,
    pub mask_kind: MaskKind,
    pub sigma: f64,
    pub r1: Option<f64>,
    pub snr_db: Option<f64>,
    pub m: usize,
    pub sse_amp_db: Option<f64>,
    pub sse_phase_db: Option<f64>,
    pub iterations: Option<usize>,
    pub status: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRow {
    pub cell: usize,
    pub mask_kind: MaskKind,
    pub sigma: f64,
    pub r1: Option<f64>,
    pub snr_db: Option<f64>,
    pub m: usize,
    /// Means over the replicates that succeeded.
    pub sse_amp_db: Option<f64>,
    pub sse_phase_db: Option<f64>,
    pub replicates_ok: usize,
    pub status: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub row: CellRow,
    pub replicates: Vec<ReplicateRow>,
    pub traces: Vec<Option<String>>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<CellResult>,
}

fn run_one(cell: usize, replicate: usize, base: &ExperimentConfig) -> (ReplicateRow, Option<String>) {
    let mut cfg = base.clone();
    cfg.seed = base.seed.wrapping_add(replicate as u64);
    let template = MetricRow::describe(&cfg, f64::NAN, f64::NAN);
    let mut row = ReplicateRow {
        cell,
        replicate,
        seed: cfg.seed,
        mask_kind: template.mask_kind,
        sigma: template.sigma,
        r1: template.r1,
        snr_db: template.snr_db,
        m: template.m,
        sse_amp_db: None,
        sse_phase_db: None,
        iterations: None,
        status: "ok".into(),
        error: String::new(),
    };
    match crate::pipeline::run(&cfg) {
        Ok(r) => {
            row.sse_amp_db = Some(r.report.sse_amplitude_db);
            row.sse_phase_db = Some(r.report.sse_phase_db);
            row.iterations = Some(r.trace.rows.len());
            (row, Some(r.trace.to_csv()))
        }
        Err(e) => {
            row.status = "failed".into();
            row.error = e.to_string();
            (row, None)
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn summarize(cell: usize, reps: &[ReplicateRow]) -> CellRow {
    let ok: Vec<&ReplicateRow> = reps.iter().filter(|r| r.status == "ok").collect();
    let first = &reps[0];
    CellRow {
        cell,
        mask_kind: first.mask_kind,
        sigma: first.sigma,
        r1: first.r1,
        snr_db: first.snr_db,
        m: first.m,
        sse_amp_db: mean(ok.iter().filter_map(|r| r.sse_amp_db)),
        sse_phase_db: mean(ok.iter().filter_map(|r| r.sse_phase_db)),
        replicates_ok: ok.len(),
        status: if ok.is_empty() { "failed" } else { "ok" }.into(),
        error: reps
            .iter()
            .find(|r| !r.error.is_empty())
            .map(|r| r.error.clone())
            .unwrap_or_default(),
    }
}

/// Runs every cell, at most `jobs` at a time (all cores when `None`). A
/// failing cell becomes a failed row; the sweep itself only fails on a bad
/// config.
pub fn run(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<SweepResult, CliError> {
    cfg.validate()?;
    let grid = cells(cfg);
    let repeats = cfg.sweep.repeats;
    let tasks: Vec<(usize, usize)> = (0..grid.len()).flat_map(|c| (0..repeats).map(move |r| (c, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start {jobs:?} workers: {e}")))?;
    let outcomes: Vec<(ReplicateRow, Option<String>)> =
        pool.install(|| tasks.par_iter().map(|&(c, r)| run_one(c, r, &grid[c])).collect());
    let cells = outcomes
        .chunks(repeats)
        .enumerate()
        .map(|(c, chunk)| {
            let replicates: Vec<ReplicateRow> = chunk.iter().map(|o| o.0.clone()).collect();
            CellResult {
                row: summarize(c, &replicates),
                replicates,
                traces: chunk.iter().map(|o| o.1.clone()).collect(),
            }
        })
        .collect();
    Ok(SweepResult { cells })
}

/// `sweep.csv` (one row per cell), `replicates.csv`, and a trace per run
/// under `cells/NNN/rep_R/`.
pub fn write(out: &Path, result: &SweepResult) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for cell in &result.cells {
        for (rep, trace) in cell.replicates.iter().zip(&cell.traces) {
            let Some(trace) = trace else { continue };
            let dir = out.join("cells").join(format!("{:03}", rep.cell)).join(format!("rep_{}", rep.replicate));
            std::fs::create_dir_all(&dir).map_err(io_at(&dir))?;
            let path = dir.join("trace.csv");
            std::fs::write(&path, trace).map_err(io_at(&path))?;
            files.push(path);
        }
    }
    let rows: Vec<&CellRow> = result.cells.iter().map(|c| &c.row).collect();
    files.push(write_csv(&out.join("sweep.csv"), &rows)?);
    let reps: Vec<&ReplicateRow> = result.cells.iter().flat_map(|c| &c.replicates).collect();
    files.push(write_csv(&out.join("replicates.csv"), &reps)?);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shapes() {
        let mut cfg = ExperimentConfig::default();
        assert_eq!(cells(&cfg).len(), 20);
        cfg.sweep.grid = SweepGrid::KindSnr;
        assert_eq!(cells(&cfg).len(), 9);
        cfg.sweep.kinds = vec![MaskKind::Blue];
        cfg.sweep.snr_db = vec![24.5];
        let one = cells(&cfg);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].masks.kind, MaskKind::Blue);
        assert_eq!(one[0].acquisition.snr_db, Some(24.5));
    }

    #[test]
    fn summary_skips_failed_replicates() {
        let ok = |v: f64| ReplicateRow {
            cell: 0,
            replicate: 0,
            seed: 0,
            mask_kind: MaskKind::Green,
            sigma: 0.5,
            r1: Some(1.5),
            snr_db: None,
            m: 3,
            sse_amp_db: Some(v),
            sse_phase_db: Some(2.0 * v),
            iterations: Some(10),
            status: "ok".into(),
            error: String::new(),
        };
        let mut bad = ok(0.0);
        bad.status = "failed".into();
        bad.sse_amp_db = None;
        bad.sse_phase_db = None;
        bad.error = "boom".into();
        let row = summarize(0, &[ok(-10.0), bad.clone(), ok(-20.0)]);
        assert_eq!(row.sse_amp_db, Some(-15.0));
        assert_eq!(row.sse_phase_db, Some(-30.0));
        assert_eq!(row.replicates_ok, 2);
        assert_eq!(row.error, "boom");
        let row = summarize(0, &[bad]);
        assert_eq!(row.status, "failed");
        assert_eq!(row.sse_amp_db, None);
    }
}
