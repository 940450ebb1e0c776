//! Spectral analysis of binary masks: high-frequency ratio and radially
//! averaged power spectra.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::error::{invalid, Result};
use crate::fourier::{centered_index, dft2, within_square_band};
use crate::image::ComplexImage;

/// Fraction of the band edge beyond which energy counts as high frequency.
pub const HIGH_FREQ_EDGE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    /// Radial frequency of each bin center, cycles/pixel in [0, √2/2].
    pub bin_centers: Vec<f64>,
    pub mean_power: Vec<f64>,
    pub eta: f64,
}

impl SpectralProfile {
    /// Index of the bin with the largest mean power.
    pub fn peak_bin(&self) -> usize {
        self.mean_power
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center,mean_power\n");
        for (c, p) in self.bin_centers.iter().zip(&self.mean_power) {
            out.push_str(&format!("{c},{p}\n"));
        }
        out
    }
}

/// |DFT(bits)|² in unshifted layout.
pub fn power_spectrum(mask: &BinaryMask) -> Vec<f64> {
    let img = ComplexImage::from_raw(
        mask.width(),
        mask.height(),
        mask.bits().iter().map(|&b| Complex64::new(b as f64, 0.0)).collect(),
    );
    dft2(&img)
        .expect("mask dimensions are positive")
        .data()
        .iter()
        .map(|z| z.norm_sqr())
        .collect()
}

/// η: share of spectral power outside the centered square band
/// `max(|m_c|, |n_c|) ≤ 0.8·⌊N/2⌋`. Zero for an all-zero mask.
pub fn high_freq_ratio(mask: &BinaryMask) -> f64 {
    eta_of(&power_spectrum(mask), mask.width(), mask.height())
}

fn eta_of(power: &[f64], width: usize, height: usize) -> f64 {
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut high = 0.0;
    for row in 0..height {
        for col in 0..width {
            if !within_square_band(row, col, width, height, HIGH_FREQ_EDGE) {
                high += power[row * width + col];
            }
        }
    }
    (high / total).clamp(0.0, 1.0)
}

fn radial_frequency(row: usize, col: usize, width: usize, height: usize) -> (f64, f64) {
    let fx = centered_index(col, width) as f64 / width as f64;
    let fy = centered_index(row, height) as f64 / height as f64;
    (fx, fy)
}

fn bin_of(radius: f64, bins: usize) -> usize {
    let edge = std::f64::consts::FRAC_1_SQRT_2;
    ((radius / edge * bins as f64) as usize).min(bins - 1)
}

/// Mean power per radial bin over [0, √2/2] cycles/pixel, DC excluded.
/// Empty bins report zero.
pub fn radial_power_spectrum(mask: &BinaryMask, bins: usize) -> Result<SpectralProfile> {
    if bins < 4 {
        return Err(invalid(format!("need at least 4 radial bins, got {bins}")));
    }
    let (w, h) = (mask.width(), mask.height());
    let power = power_spectrum(mask);
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for row in 0..h {
        for col in 0..w {
            if row == 0 && col == 0 {
                continue;
            }
            let (fx, fy) = radial_frequency(row, col, w, h);
            let b = bin_of(fx.hypot(fy), bins);
            sums[b] += power[row * w + col];
            counts[b] += 1;
        }
    }
    let width = std::f64::consts::FRAC_1_SQRT_2 / bins as f64;
    Ok(SpectralProfile {
        bin_centers: (0..bins).map(|i| (i as f64 + 0.5) * width).collect(),
        mean_power: sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
            .collect(),
        eta: eta_of(&power, w, h),
    })
}

/// Mean power of radial bin `bin` split into `sectors` equal angular sectors
/// over the full circle.
pub fn angular_sector_power(mask: &BinaryMask, bins: usize, bin: usize, sectors: usize) -> Vec<f64> {
    let (w, h) = (mask.width(), mask.height());
    let power = power_spectrum(mask);
    let mut sums = vec![0.0; sectors];
    let mut counts = vec![0usize; sectors];
    for row in 0..h {
        for col in 0..w {
            if row == 0 && col == 0 {
                continue;
            }
            let (fx, fy) = radial_frequency(row, col, w, h);
            if bin_of(fx.hypot(fy), bins) != bin {
                continue;
            }
            let angle = fy.atan2(fx).rem_euclid(std::f64::consts::TAU);
            let s = ((angle / std::f64::consts::TAU * sectors as f64) as usize).min(sectors - 1);
            sums[s] += power[row * w + col];
            counts[s] += 1;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect()
}
