//! In-memory experiment steps shared by the subcommands and the sweep.

use std::path::Path;

use greenmask::io;
use greenmask::maskgen::{self, BinaryMask, MaskKind};
use greenmask::metrics::{self, EvalOptions, EvalReport};
use greenmask::optics::{self, Acquisition, MeasurementSet};
use greenmask::solver::{self, SolverConfig, SolverTrace};
use greenmask::{Complex64, ComplexImage};

use crate::config::{ExperimentConfig, TargetKind};
use crate::error::CliError;
use crate::targets;

/// Seed of mask `index` under root seed `seed`.
pub fn mask_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(100).wrapping_add(index as u64)
}

pub fn mask_file_name(index: usize) -> String {
    format!("mask_{index:03}.pbm")
}

/// Generates `cfg.masks.count` masks of `kind`, or loads them from
/// `cfg.masks.source`.
pub fn build_masks(cfg: &ExperimentConfig, kind: MaskKind, count: usize) -> Result<Vec<BinaryMask>, CliError> {
    let n = cfg.size;
    (0..count)
        .map(|i| {
            let mask = match &cfg.masks.source {
                Some(dir) => io::load_mask(&dir.join(mask_file_name(i)))?,
                None => maskgen::generate(kind, n, n, cfg.masks.sigma, cfg.masks.r1, mask_seed(cfg.seed, i))?,
            };
            if mask.dims() != (n, n) {
                return Err(CliError::Validation(format!(
                    "mask {i} is {}×{}, config size is {n}",
                    mask.width(),
                    mask.height()
                )));
            }
            Ok(mask)
        })
        .collect()
}

pub fn acquisition(cfg: &ExperimentConfig) -> Acquisition {
    Acquisition {
        defocus: cfg.defocus.enabled.then(|| cfg.defocus.params()),
        sensor: cfg.sensor.enabled.then(|| cfg.sensor_params(cfg.seed)),
        snr_target_db: cfg.acquisition.snr_db,
        truncation: cfg.acquisition.truncation,
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub truth: ComplexImage,
    pub measurements: MeasurementSet,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation, CliError> {
    cfg.validate()?;
    let truth = targets::build_target(cfg, cfg.seed)?;
    let masks = build_masks(cfg, cfg.masks.kind, cfg.masks.count)?;
    let measurements = optics::acquire(&truth, &masks, &acquisition(cfg))?;
    Ok(Simulation { truth, measurements })
}

pub fn reconstruct(ms: &MeasurementSet, solver: &SolverConfig) -> Result<(ComplexImage, SolverTrace), CliError> {
    solver::solve_tv_map(ms, solver).map_err(CliError::from)
}

pub fn eval_options(cfg: &ExperimentConfig) -> EvalOptions {
    EvalOptions {
        align_phase: cfg.evaluation.align_phase,
        profile_row: cfg.evaluation.profile_row,
    }
}

pub fn evaluate(truth: &ComplexImage, est: &ComplexImage, cfg: &ExperimentConfig) -> Result<EvalReport, CliError> {
    Ok(metrics::evaluate(truth, est, eval_options(cfg))?)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub simulation: Simulation,
    pub estimate: ComplexImage,
    pub trace: SolverTrace,
    pub report: EvalReport,
}

/// Simulate, reconstruct and evaluate in one pass.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let simulation = simulate(cfg)?;
    let (estimate, trace) = reconstruct(&simulation.measurements, &cfg.solver)?;
    let report = evaluate(&simulation.truth, &estimate, cfg)?;
    Ok(RunOutcome {
        simulation,
        estimate,
        trace,
        report,
    })
}

/// Fixed sensor exposure taken from the readouts of a reference run: the
/// mean calibrated photon scale and the largest full well. Returns
/// `(photon_scale, full_well_photons)`.
pub fn reference_exposure(cfg: &ExperimentConfig) -> Result<(f64, f64), CliError> {
    if cfg.acquisition.snr_db.is_none() {
        return Err(CliError::Validation("reference exposure needs acquisition.snr_db".into()));
    }
    let sim = simulate(cfg)?;
    let readouts: Vec<_> = sim
        .measurements
        .measurements
        .iter()
        .filter_map(|m| m.readout.as_ref())
        .collect();
    let scale = readouts.iter().map(|r| r.photon_scale).sum::<f64>() / readouts.len() as f64;
    let well = readouts.iter().map(|r| r.full_well).fold(0.0, f64::max);
    Ok((scale, well))
}

#[derive(Debug, Clone)]
pub struct KernelOutcome {
    pub kind: MaskKind,
    pub estimate: ComplexImage,
    pub trace: SolverTrace,
    pub report: EvalReport,
    pub phase_profile_mse: f64,
}

/// Phase-only kernel recovery: the object is all ones, the measurements carry
/// the defocus kernel, and the solver is not told about it, so the estimate
/// is the kernel itself. Compared along the center row.
pub fn kernel_experiment(cfg: &ExperimentConfig, kind: MaskKind) -> Result<(ComplexImage, KernelOutcome), CliError> {
    let mut cfg = cfg.clone();
    cfg.target.kind = TargetKind::Uniform;
    cfg.defocus.enabled = true;
    cfg.masks.kind = kind;
    cfg.masks.count = cfg.kernel.count;
    cfg.solver.alpha = cfg.kernel.alpha;
    cfg.validate()?;
    let n = cfg.size;
    let kernel = optics::defocus_kernel(n, n, &cfg.defocus.params())?;
    let object = ComplexImage::constant(n, n, Complex64::new(1.0, 0.0));
    let masks = build_masks(&cfg, kind, cfg.kernel.count)?;
    let acq = acquisition(&cfg);
    let taken = optics::acquire(&object, &masks, &acq)?;
    let blind = MeasurementSet::new(
        taken.measurements,
        Acquisition {
            defocus: None,
            ..acq
        },
    )?;
    let (estimate, trace) = reconstruct(&blind, &cfg.solver)?;
    let report = evaluate(&kernel, &estimate, &cfg)?;
    let aligned = report.aligned_estimate.as_ref().unwrap_or(&estimate);
    let phase_profile_mse = metrics::phase_profile_mse(&kernel, aligned, n / 2)?;
    Ok((
        kernel,
        KernelOutcome {
            kind,
            estimate,
            trace,
            report,
            phase_profile_mse,
        },
    ))
}

/// Loads a measurement set from `dir/measurements`, or from `dir` itself.
pub fn load_measurements(dir: &Path) -> Result<MeasurementSet, CliError> {
    let nested = dir.join("measurements");
    let root = if nested.join("manifest.json").is_file() { nested } else { dir.to_path_buf() };
    Ok(io::load_measurements(&root)?)
}
