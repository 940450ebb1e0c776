//! Subcommands. Each writes its artifacts under `out` and finishes with a
//! manifest listing them.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use greenmask::io::{self, Graymap};
use greenmask::maskgen::{self, BinaryMask, MaskKind};
use greenmask::metrics::EvalReport;
use greenmask::solver::SolverTrace;
use greenmask::ComplexImage;
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{io_at, CliError};
use crate::manifest;
use crate::pipeline;
use crate::sweep;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_at(dir))
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    fs::write(path, text).map_err(io_at(path))?;
    Ok(path.to_path_buf())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Serializes `rows` as CSV with a header.
pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<PathBuf, CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_at(path))?;
    Ok(path.to_path_buf())
}

/// 16-bit previews: amplitude clipped to [0, 1], phase mapped from [−π, π].
fn write_previews(dir: &Path, stem: &str, img: &ComplexImage) -> Result<Vec<PathBuf>, CliError> {
    let (w, h) = img.dims();
    let quantize = |v: f64| (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
    let amp = Graymap {
        width: w,
        height: h,
        maxval: 65535,
        samples: img.amplitude().data().iter().map(|&a| quantize(a)).collect(),
    };
    let phase = Graymap {
        samples: img.phase().iter().map(|&p| quantize((p + PI) / (2.0 * PI))).collect(),
        ..amp.clone()
    };
    let paths = [dir.join(format!("{stem}_amplitude.pgm")), dir.join(format!("{stem}_phase.pgm"))];
    io::write_pgm(&paths[0], &amp)?;
    io::write_pgm(&paths[1], &phase)?;
    Ok(paths.to_vec())
}

fn save_image(dir: &Path, stem: &str, img: &ComplexImage) -> Result<Vec<PathBuf>, CliError> {
    let mut files = io::save_complex(dir, stem, img)?;
    files.extend(write_previews(dir, stem, img)?);
    Ok(files)
}

/// One row of evaluation output; shared by `evaluate` and `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub mask_kind: MaskKind,
    pub sigma: f64,
    /// Only meaningful for green masks.
    pub r1: Option<f64>,
    pub snr_db: Option<f64>,
    pub m: usize,
    pub sse_amp_db: f64,
    pub sse_phase_db: f64,
}

impl MetricRow {
    pub fn new(cfg: &ExperimentConfig, report: &EvalReport) -> Self {
        Self::describe(cfg, report.sse_amplitude_db, report.sse_phase_db)
    }

    pub fn describe(cfg: &ExperimentConfig, sse_amp_db: f64, sse_phase_db: f64) -> Self {
        Self {
            mask_kind: cfg.masks.kind,
            sigma: cfg.masks.sigma,
            r1: (cfg.masks.kind == MaskKind::Green).then_some(cfg.masks.r1),
            snr_db: cfg.acquisition.snr_db.filter(|_| cfg.sensor.enabled),
            m: cfg.masks.count,
            sse_amp_db,
            sse_phase_db,
        }
    }
}

#[derive(Serialize)]
struct MaskRow {
    index: usize,
    kind: MaskKind,
    sigma: f64,
    r1: Option<f64>,
    seed: u64,
    ones: usize,
    eta: f64,
    peak_frequency: f64,
}

pub fn generate_masks(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let dir = out.join("masks");
    create_dir(&dir)?;
    let masks = pipeline::build_masks(cfg, cfg.masks.kind, cfg.masks.count)?;
    let bins = (cfg.size / 2).max(1);
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for (i, mask) in masks.iter().enumerate() {
        let path = dir.join(pipeline::mask_file_name(i));
        files.extend(io::save_mask(&path, mask)?);
        let profile = maskgen::radial_power_spectrum(mask, bins)?;
        files.push(write_text(&dir.join(format!("mask_{i:03}_spectrum.csv")), &profile.to_csv())?);
        rows.push(mask_row(i, mask, profile.eta, profile.bin_centers[profile.peak_bin()]));
    }
    files.push(write_csv(&out.join("masks.csv"), &rows)?);
    let etas: Vec<f64> = rows.iter().map(|r| r.eta).collect();
    manifest::write(out, "generate-masks", cfg, None, &files, json!({ "eta": etas }))
}

fn mask_row(index: usize, mask: &BinaryMask, eta: f64, peak_frequency: f64) -> MaskRow {
    let meta = mask.meta();
    MaskRow {
        index,
        kind: meta.kind,
        sigma: meta.sigma,
        r1: meta.r1,
        seed: meta.seed,
        ones: mask.ones(),
        eta,
        peak_frequency,
    }
}

#[derive(Serialize)]
struct ReadoutRow {
    index: usize,
    photon_scale: Option<f64>,
    full_well: Option<f64>,
    measured_snr_db: Option<f64>,
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    let sim = pipeline::simulate(cfg)?;
    create_dir(out)?;
    let mut files = save_image(out, "truth", &sim.truth)?;
    let mdir = out.join("measurements");
    create_dir(&mdir)?;
    files.extend(io::save_measurements(&mdir, &sim.measurements)?);
    let rows: Vec<ReadoutRow> = sim
        .measurements
        .measurements
        .iter()
        .enumerate()
        .map(|(index, m)| ReadoutRow {
            index,
            photon_scale: m.readout.as_ref().map(|r| r.photon_scale),
            full_well: m.readout.as_ref().map(|r| r.full_well),
            measured_snr_db: m.readout.as_ref().map(|r| r.measured_snr_db),
        })
        .collect();
    let snrs: Vec<Option<f64>> = rows.iter().map(|r| r.measured_snr_db).collect();
    files.push(write_csv(&out.join("readout.csv"), &rows)?);
    manifest::write(out, "simulate", cfg, None, &files, json!({ "measured_snr_db": snrs }))
}

fn trace_summary(trace: &SolverTrace) -> serde_json::Value {
    let last = trace.last();
    json!({
        "iterations": trace.rows.len(),
        "converged": trace.converged,
        "final_objective": last.map(|r| r.objective),
        "final_rel_change": last.map(|r| r.rel_change),
    })
}

pub fn reconstruct(cfg: &ExperimentConfig, input: &Path, out: &Path) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let ms = pipeline::load_measurements(input)?;
    let (estimate, trace) = pipeline::reconstruct(&ms, &cfg.solver)?;
    create_dir(out)?;
    let mut files = save_image(out, "estimate", &estimate)?;
    files.push(write_text(&out.join("trace.csv"), &trace.to_csv())?);
    manifest::write(out, "reconstruct", cfg, Some(input), &files, trace_summary(&trace))
}

/// Ground truth next to the measurements a reconstruction was made from.
pub fn default_truth(recon_dir: &Path) -> Result<PathBuf, CliError> {
    let m = manifest::read(&recon_dir.join(manifest::MANIFEST_NAME))?;
    let input = m.input.ok_or_else(|| {
        CliError::Validation(format!(
            "{} records no input; pass --truth explicitly",
            recon_dir.display()
        ))
    })?;
    Ok(input.join("truth.json"))
}

pub fn evaluate(cfg: &ExperimentConfig, input: &Path, truth: &Path, out: &Path) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let estimate = io::load_complex(&input.join("estimate.json"))?;
    let reference = io::load_complex(truth)?;
    let report = pipeline::evaluate(&reference, &estimate, cfg)?;
    create_dir(out)?;
    let files = vec![
        write_json(&out.join("report.json"), &report)?,
        write_csv(&out.join("report.csv"), &[MetricRow::new(cfg, &report)])?,
    ];
    manifest::write(out, "evaluate", cfg, Some(input), &files, serde_json::to_value(&report)?)
}

pub fn sweep(cfg: &ExperimentConfig, out: &Path, jobs: Option<usize>) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    create_dir(out)?;
    let result = sweep::run(cfg, jobs)?;
    let files = sweep::write(out, &result)?;
    let failed = result.cells.iter().filter(|c| c.row.status != "ok").count();
    manifest::write(
        out,
        "sweep",
        cfg,
        None,
        &files,
        json!({ "cells": result.cells.len(), "failed_cells": failed }),
    )
}

#[derive(Serialize)]
struct KernelRow {
    mask_kind: MaskKind,
    phase_profile_mse: f64,
    sse_phase_db: f64,
    iterations: usize,
}

pub fn kernel_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    create_dir(out)?;
    let mut files = Vec::new();
    let mut rows = Vec::new();
    let mut profiles: Vec<Vec<f64>> = Vec::new();
    let mut kernel_img = None;
    for &kind in &cfg.kernel.kinds {
        let (kernel, outcome) = pipeline::kernel_experiment(cfg, kind)?;
        files.extend(save_image(out, &format!("estimate_{kind}"), &outcome.estimate)?);
        let aligned = outcome.report.aligned_estimate.as_ref().unwrap_or(&outcome.estimate);
        let row = cfg.size / 2;
        profiles.push((0..cfg.size).map(|c| aligned.get(row, c).arg()).collect());
        rows.push(KernelRow {
            mask_kind: kind,
            phase_profile_mse: outcome.phase_profile_mse,
            sse_phase_db: outcome.report.sse_phase_db,
            iterations: outcome.trace.rows.len(),
        });
        kernel_img.get_or_insert(kernel);
    }
    if let Some(kernel) = &kernel_img {
        files.extend(save_image(out, "kernel", kernel)?);
        let row = cfg.size / 2;
        let mut text = String::from("col,truth");
        for k in &cfg.kernel.kinds {
            text.push_str(&format!(",{k}"));
        }
        text.push('\n');
        for c in 0..cfg.size {
            text.push_str(&format!("{c},{}", kernel.get(row, c).arg()));
            for p in &profiles {
                text.push_str(&format!(",{}", p[c]));
            }
            text.push('\n');
        }
        files.push(write_text(&out.join("profiles.csv"), &text)?);
    }
    files.push(write_csv(&out.join("kernel.csv"), &rows)?);
    let mse: serde_json::Map<_, _> = rows
        .iter()
        .map(|r| (r.mask_kind.to_string(), json!(r.phase_profile_mse)))
        .collect();
    manifest::write(out, "kernel-experiment", cfg, None, &files, json!({ "phase_profile_mse": mse }))
}
