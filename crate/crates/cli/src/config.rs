//! Experiment configuration. Files are TOML with dotted keys
//! (`masks.kind = "green"`); a run manifest (JSON) is accepted too, in which
//! case its `config` object is used verbatim. Every field has a default and
//! unknown keys are rejected.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use greenmask::maskgen::MaskKind;
use greenmask::optics::{DefocusParams, FullWell, SensorParams};
use greenmask::solver::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Root seed. Masks, sensor noise and solver initialization derive from it.
    pub seed: u64,
    /// Side length of the square grid.
    pub size: usize,
    pub target: TargetConfig,
    pub masks: MaskConfig,
    pub acquisition: AcquisitionConfig,
    pub sensor: SensorConfig,
    pub defocus: DefocusConfig,
    pub solver: SolverConfig,
    pub evaluation: EvaluationConfig,
    pub sweep: SweepConfig,
    pub kernel: KernelConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            size: 64,
            target: TargetConfig::default(),
            masks: MaskConfig::default(),
            acquisition: AcquisitionConfig::default(),
            sensor: SensorConfig::default(),
            defocus: DefocusConfig::default(),
            solver: SolverConfig::default(),
            evaluation: EvaluationConfig::default(),
            sweep: SweepConfig::default(),
            kernel: KernelConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    /// Checked-in assets named by `amplitude` / `phase`.
    Builtin,
    /// PGM files at the paths `amplitude` / `phase`.
    Files,
    /// Unit amplitude, zero phase.
    Uniform,
    /// Amplitude uniform in [0.5, 1], phase uniform in [−π, π).
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetConfig {
    pub kind: TargetKind,
    pub amplitude: String,
    pub phase: String,
    /// Gray level g ∈ [0, 1] maps to phase (2g − 1)·phase_range.
    pub phase_range: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            kind: TargetKind::Builtin,
            amplitude: "cameraman".into(),
            phase: "astronaut".into(),
            phase_range: FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskConfig {
    pub kind: MaskKind,
    pub sigma: f64,
    pub r1: f64,
    /// Number of masks, M.
    pub count: usize,
    /// Load `mask_NNN.pbm` from this directory instead of generating.
    pub source: Option<PathBuf>,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            kind: MaskKind::Green,
            sigma: 0.5,
            r1: 1.5,
            count: 3,
            source: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionConfig {
    /// Fraction of the band discarded at the edge.
    pub truncation: f64,
    /// Calibrate each measurement's photon scale to this SNR. When unset the
    /// sensor's photon scale and full well are used as given.
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FullWellMode {
    Relative,
    Photons,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    /// `false` is an ideal detector: no noise, no quantization.
    pub enabled: bool,
    pub photon_scale: f64,
    pub gaussian_sigma: f64,
    pub bit_depth: u32,
    pub full_well_mode: FullWellMode,
    /// A multiple of the clean peak or a photon count, per `full_well_mode`.
    pub full_well: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            photon_scale: 1.0,
            gaussian_sigma: 2.0,
            bit_depth: 12,
            full_well_mode: FullWellMode::Relative,
            full_well: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefocusConfig {
    pub enabled: bool,
    pub wavelength: f64,
    pub focal_length: f64,
    pub distance: f64,
    pub pitch: f64,
}

impl Default for DefocusConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            wavelength: 632.8e-9,
            focal_length: 0.1,
            distance: 0.13,
            pitch: 13.68e-6,
        }
    }
}

impl DefocusConfig {
    pub fn params(&self) -> DefocusParams {
        DefocusParams {
            wavelength: self.wavelength,
            focal_length: self.focal_length,
            distance: self.distance,
            pitch: self.pitch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub align_phase: bool,
    pub profile_row: Option<usize>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            align_phase: true,
            profile_row: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepGrid {
    /// σ × R₁ with the configured mask kind.
    SigmaR1,
    /// Mask kind × SNR target.
    KindSnr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub grid: SweepGrid,
    pub sigmas: Vec<f64>,
    pub r1s: Vec<f64>,
    pub kinds: Vec<MaskKind>,
    pub snr_db: Vec<f64>,
    /// Replicate r of every cell runs with root seed `seed + r`.
    pub repeats: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid: SweepGrid::SigmaR1,
            sigmas: vec![0.3, 0.4, 0.5, 0.6, 0.7],
            r1s: vec![1.0, 1.5, 2.0, 2.5],
            kinds: vec![MaskKind::Green, MaskKind::White, MaskKind::Blue],
            snr_db: vec![22.5, 24.5, 26.5],
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub alpha: f64,
    pub count: usize,
    pub kinds: Vec<MaskKind>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            count: 2,
            kinds: vec![MaskKind::Green, MaskKind::White, MaskKind::Blue],
        }
    }
}

/// A config plus the input recorded alongside it when read from a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub input: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {}", e.message())))
    }

    /// Reads TOML, or a run manifest when the file holds a JSON object.
    pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let loaded = if text.trim_start().starts_with('{') {
            #[derive(Deserialize)]
            struct Partial {
                config: ExperimentConfig,
                input: Option<PathBuf>,
            }
            let p: Partial = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("manifest {}: {e}", path.display())))?;
            LoadedConfig {
                config: p.config,
                input: p.input,
            }
        } else {
            LoadedConfig {
                config: Self::from_toml(&text)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
                input: None,
            }
        };
        loaded.config.validate()?;
        Ok(loaded)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Validation(msg));
        if self.size < 2 {
            return fail(format!("size must be at least 2, got {}", self.size));
        }
        if !(0.0..=1.0).contains(&self.masks.sigma) {
            return fail(format!("masks.sigma must lie in [0, 1], got {}", self.masks.sigma));
        }
        if self.masks.count == 0 {
            return fail("masks.count must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.acquisition.truncation) {
            return fail(format!(
                "acquisition.truncation must lie in [0, 1), got {}",
                self.acquisition.truncation
            ));
        }
        if self.acquisition.snr_db.is_some() && !self.sensor.enabled {
            return fail("acquisition.snr_db needs sensor.enabled = true".into());
        }
        if !(self.target.phase_range.is_finite() && self.target.phase_range >= 0.0) {
            return fail("target.phase_range must be nonnegative".into());
        }
        if self.target.kind == TargetKind::Builtin && !crate::targets::BUILTIN_SIZES.contains(&self.size) {
            return fail(format!(
                "built-in targets exist at sizes {:?}, not {}",
                crate::targets::BUILTIN_SIZES,
                self.size
            ));
        }
        if let Some(row) = self.evaluation.profile_row {
            if row >= self.size {
                return fail(format!("evaluation.profile_row {row} is outside a {} grid", self.size));
            }
        }
        if self.sweep.repeats == 0 {
            return fail("sweep.repeats must be at least 1".into());
        }
        if self.kernel.count == 0 {
            return fail("kernel.count must be at least 1".into());
        }
        if self.sensor.enabled {
            self.sensor_params(self.seed).validate()?;
        }
        if self.defocus.enabled {
            self.defocus.params().validate()?;
        }
        self.solver.validate()?;
        Ok(())
    }

    pub fn sensor_params(&self, seed: u64) -> SensorParams {
        SensorParams {
            photon_scale: self.sensor.photon_scale,
            gaussian_sigma: self.sensor.gaussian_sigma,
            bit_depth: self.sensor.bit_depth,
            full_well: match self.sensor.full_well_mode {
                FullWellMode::Relative => FullWell::Relative(self.sensor.full_well),
                FullWellMode::Photons => FullWell::Photons(self.sensor.full_well),
            },
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn dotted_keys_reach_nested_fields() {
        let cfg = ExperimentConfig::from_toml(
            "seed = 7\nmasks.kind = \"white\"\nmasks.count = 6\nsolver.alpha = 0.0\nacquisition.snr_db = 26.5\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.masks.kind, MaskKind::White);
        assert_eq!(cfg.masks.count, 6);
        assert_eq!(cfg.solver.alpha, 0.0);
        assert_eq!(cfg.acquisition.snr_db, Some(26.5));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml("masks.sigmaa = 0.4\n").unwrap_err();
        assert!(err.to_string().contains("sigmaa"), "{err}");
        assert!(ExperimentConfig::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut cfg = ExperimentConfig::default();
        cfg.size = 100;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.acquisition.truncation = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.sensor.bit_depth = 20;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut cfg = ExperimentConfig::default();
        cfg.acquisition.snr_db = Some(26.5);
        cfg.sensor.photon_scale = 0.1 + 0.2;
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }
}
