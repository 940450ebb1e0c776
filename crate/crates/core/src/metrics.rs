//! Reconstruction quality: global-phase alignment, amplitude/phase SSE in dB
//! and line-profile MSE.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::image::{ComplexImage, RealImage};

/// SSE values are clamped to ±120 dB.
pub const SSE_FLOOR_DB: f64 = -120.0;
pub const SSE_CAP_DB: f64 = 120.0;

fn to_db(ratio: f64) -> (f64, bool) {
    if ratio <= 0.0 {
        return (SSE_FLOOR_DB, true);
    }
    let db = 10.0 * ratio.log10();
    if db < SSE_FLOOR_DB {
        (SSE_FLOOR_DB, true)
    } else {
        (db.min(SSE_CAP_DB), false)
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = x - tau * (x / tau).round();
    if w <= -std::f64::consts::PI {
        w + tau
    } else if w > std::f64::consts::PI {
        w - tau
    } else {
        w
    }
}

/// Optimal global phase θ maximizing Re(e^{iθ}·Σ est·conj(ref)); rotating
/// `est` by it minimizes ‖est·e^{iθ} − ref‖.
pub fn optimal_global_phase(est: &ComplexImage, reference: &ComplexImage) -> Result<f64> {
    let s = est.inner(reference)?;
    if s.norm() == 0.0 {
        return Err(Error::AlignmentUndefined);
    }
    Ok(s.arg())
}

/// `est` rotated by the global phase that best matches `reference`.
pub fn align_global_phase(est: &ComplexImage, reference: &ComplexImage) -> Result<ComplexImage> {
    let theta = optimal_global_phase(est, reference)?;
    Ok(est.scale(Complex64::from_polar(1.0, theta)))
}

/// ‖aligned(est) − ref‖ / ‖ref‖.
pub fn relative_error(est: &ComplexImage, reference: &ComplexImage) -> Result<f64> {
    let ref_norm = reference.norm();
    if ref_norm == 0.0 {
        return Err(invalid("relative error against a zero reference"));
    }
    Ok(align_global_phase(est, reference)?.distance(reference)? / ref_norm)
}

/// 10·log10(Σ(|ref| − |est|)² / Σ|ref|²).
pub fn sse_amplitude(reference: &ComplexImage, est: &ComplexImage) -> Result<f64> {
    Ok(sse_amplitude_flagged(reference, est)?.0)
}

fn sse_amplitude_flagged(reference: &ComplexImage, est: &ComplexImage) -> Result<(f64, bool)> {
    check_dims(reference.dims(), est.dims())?;
    let den = reference.energy();
    if den == 0.0 {
        return Err(invalid("amplitude SSE needs a nonzero reference"));
    }
    let num: f64 = reference
        .data()
        .iter()
        .zip(est.data())
        .map(|(a, b)| (a.norm() - b.norm()).powi(2))
        .sum();
    Ok(to_db(num / den))
}

fn phase_error_sum(reference: &ComplexImage, est: &ComplexImage) -> f64 {
    reference
        .data()
        .iter()
        .zip(est.data())
        .map(|(a, b)| wrap_phase(a.arg() - b.arg()).powi(2))
        .sum()
}

/// 10·log10(Σ wrap(∠ref − ∠est)² / Σ(∠ref)²) for a pre-aligned estimate.
pub fn sse_phase(reference: &ComplexImage, est: &ComplexImage) -> Result<f64> {
    Ok(sse_phase_flagged(reference, est)?.0)
}

fn sse_phase_flagged(reference: &ComplexImage, est: &ComplexImage) -> Result<(f64, bool)> {
    check_dims(reference.dims(), est.dims())?;
    let den: f64 = reference.data().iter().map(|z| z.arg().powi(2)).sum();
    if den == 0.0 {
        return Err(Error::DegenerateDenominator(
            "reference phase is identically zero".into(),
        ));
    }
    Ok(to_db(phase_error_sum(reference, est) / den))
}

/// Mean squared difference along one row.
pub fn profile_mse(reference: &RealImage, est: &RealImage, row: usize) -> Result<f64> {
    check_dims(reference.dims(), est.dims())?;
    if row >= reference.height() {
        return Err(invalid(format!(
            "profile row {row} outside image of height {}",
            reference.height()
        )));
    }
    let (a, b) = (reference.row(row), est.row(row));
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64)
}

/// Mean squared wrapped phase difference along one row.
pub fn phase_profile_mse(reference: &ComplexImage, est: &ComplexImage, row: usize) -> Result<f64> {
    check_dims(reference.dims(), est.dims())?;
    if row >= reference.height() {
        return Err(invalid(format!("profile row {row} out of range")));
    }
    let w = reference.width();
    let sum: f64 = (0..w)
        .map(|c| wrap_phase(reference.get(row, c).arg() - est.get(row, c).arg()).powi(2))
        .sum();
    Ok(sum / w as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sse_amplitude_db: f64,
    pub sse_phase_db: f64,
    pub profile_mse: Option<f64>,
    /// True when either SSE hit the −120 dB floor.
    pub floor_applied: bool,
    /// Whether the estimate was rotated to the reference's global phase.
    pub phase_aligned: bool,
    /// Set when the reference phase is identically zero; `sse_phase_db` is
    /// then 10·log10 of the unnormalized squared phase error.
    pub phase_unnormalized: bool,
    #[serde(skip)]
    pub aligned_estimate: Option<ComplexImage>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub align_phase: bool,
    pub profile_row: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            align_phase: true,
            profile_row: None,
        }
    }
}

/// Both SSE metrics plus the optional amplitude profile MSE.
pub fn evaluate(reference: &ComplexImage, est: &ComplexImage, opts: EvalOptions) -> Result<EvalReport> {
    check_dims(reference.dims(), est.dims())?;
    let (aligned, phase_aligned) = if opts.align_phase {
        match align_global_phase(est, reference) {
            Ok(a) => (a, true),
            Err(Error::AlignmentUndefined) => (est.clone(), false),
            Err(e) => return Err(e),
        }
    } else {
        (est.clone(), false)
    };
    let (amp_db, amp_floor) = sse_amplitude_flagged(reference, &aligned)?;
    let (phase_db, phase_floor, unnormalized) = match sse_phase_flagged(reference, &aligned) {
        Ok((db, floor)) => (db, floor, false),
        Err(Error::DegenerateDenominator(_)) => {
            let (db, floor) = to_db(phase_error_sum(reference, &aligned));
            (db, floor, true)
        }
        Err(e) => return Err(e),
    };
    let profile_mse = opts
        .profile_row
        .map(|row| profile_mse(&reference.amplitude(), &aligned.amplitude(), row))
        .transpose()?;
    Ok(EvalReport {
        sse_amplitude_db: amp_db,
        sse_phase_db: phase_db,
        profile_mse,
        floor_applied: amp_floor || phase_floor,
        phase_aligned,
        phase_unnormalized: unnormalized,
        aligned_estimate: Some(aligned),
    })
}
