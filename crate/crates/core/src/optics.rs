//! Coded-diffraction forward model, 0th-order band truncation and the
//! Poisson + Gaussian + quantizing sensor.

use num_complex::Complex64;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Result};
use crate::fourier::{within_square_band, Fft2};
use crate::image::{ComplexImage, RealImage};
use crate::maskgen::BinaryMask;
use crate::random::RandomStream;

/// SNR reported when the noisy image equals the clean one.
pub const SNR_CAP_DB: f64 = 120.0;
/// Allowed deviation of a calibrated measurement from its SNR target.
pub const SNR_TOLERANCE_DB: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefocusParams {
    /// Meters.
    pub wavelength: f64,
    pub focal_length: f64,
    /// Lens-to-sensor distance.
    pub distance: f64,
    pub pitch: f64,
}

impl DefocusParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("focal_length", self.focal_length),
            ("distance", self.distance),
            ("pitch", self.pitch),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("defocus {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Quadratic phase coefficient k/(2L)·(1 − L/f), radians per m².
    pub fn curvature(&self) -> f64 {
        let k = std::f64::consts::TAU / self.wavelength;
        k / (2.0 * self.distance) * (1.0 - self.distance / self.focal_length)
    }
}

/// Phase-only kernel `exp(i·c·(x² + y²))` with physical coordinates
/// `(index − ⌊N/2⌋)·pitch`; unity at the grid center.
pub fn defocus_kernel(width: usize, height: usize, params: &DefocusParams) -> Result<ComplexImage> {
    params.validate()?;
    if width == 0 || height == 0 {
        return Err(invalid("defocus kernel needs a non-empty grid"));
    }
    let c = params.curvature();
    let (cx, cy) = ((width / 2) as f64, (height / 2) as f64);
    Ok(ComplexImage::from_fn(width, height, |row, col| {
        let x = (col as f64 - cx) * params.pitch;
        let y = (row as f64 - cy) * params.pitch;
        Complex64::from_polar(1.0, c * (x * x + y * y))
    }))
}

/// Effective per-pixel modulation `mask ∘ kernel`.
pub fn coding(mask: &BinaryMask, kernel: Option<&ComplexImage>) -> Result<ComplexImage> {
    let (w, h) = mask.dims();
    let mut c = ComplexImage::from_fn(w, h, |r, col| Complex64::new(mask.get(r, col) as f64, 0.0));
    if let Some(k) = kernel {
        c = c.hadamard(k)?;
    }
    Ok(c)
}

/// |dft2(mask ∘ kernel ∘ u)|².
pub fn forward_intensity(
    u: &ComplexImage,
    mask: &BinaryMask,
    kernel: Option<&ComplexImage>,
) -> Result<RealImage> {
    check_dims(u.dims(), mask.dims())?;
    let plan = Fft2::new(u.width(), u.height())?;
    let field = plan.forward(&coding(mask, kernel)?.hadamard(u)?)?;
    Ok(RealImage::from_raw(
        u.width(),
        u.height(),
        field.data().iter().map(|z| z.norm_sqr()).collect(),
    ))
}

/// Membership of each unshifted bin in the kept centered square band
/// `max(|m_c|, |n_c|) ≤ (1 − fraction)·⌊N/2⌋`.
pub fn kept_band(width: usize, height: usize, fraction: f64) -> Result<Vec<bool>> {
    check_fraction(fraction)?;
    let keep = 1.0 - fraction;
    let mut out = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            out.push(within_square_band(row, col, width, height, keep));
        }
    }
    Ok(out)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if (0.0..1.0).contains(&fraction) {
        Ok(())
    } else {
        Err(invalid(format!("truncation fraction must lie in [0, 1), got {fraction}")))
    }
}

/// Zeroes every bin outside the kept band.
pub fn truncate_high_freq(y: &RealImage, fraction: f64) -> Result<RealImage> {
    let band = kept_band(y.width(), y.height(), fraction)?;
    Ok(RealImage::from_raw(
        y.width(),
        y.height(),
        y.data()
            .iter()
            .zip(&band)
            .map(|(&v, &keep)| if keep { v } else { 0.0 })
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum FullWell {
    /// Multiple of the clean image's peak photon count.
    Relative(f64),
    Photons(f64),
}

impl FullWell {
    pub fn resolve(&self, clean_peak_photons: f64) -> f64 {
        match *self {
            FullWell::Relative(m) => m * clean_peak_photons,
            FullWell::Photons(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorParams {
    /// Expected photons at unit intensity.
    pub photon_scale: f64,
    /// Read-noise standard deviation in photons.
    pub gaussian_sigma: f64,
    pub bit_depth: u32,
    pub full_well: FullWell,
    pub seed: u64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            photon_scale: 1.0,
            gaussian_sigma: 2.0,
            bit_depth: 12,
            full_well: FullWell::Relative(1.2),
            seed: 0,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.photon_scale.is_finite() && self.photon_scale > 0.0) {
            return Err(invalid(format!("photon scale must be positive, got {}", self.photon_scale)));
        }
        if !(self.gaussian_sigma.is_finite() && self.gaussian_sigma >= 0.0) {
            return Err(invalid(format!(
                "read-noise sigma must be nonnegative, got {}",
                self.gaussian_sigma
            )));
        }
        if !(1..=16).contains(&self.bit_depth) {
            return Err(invalid(format!("bit depth must lie in 1..=16, got {}", self.bit_depth)));
        }
        let fw = match self.full_well {
            FullWell::Relative(v) | FullWell::Photons(v) => v,
        };
        if !(fw.is_finite() && fw > 0.0) {
            return Err(invalid(format!("full well must be positive, got {fw}")));
        }
        Ok(())
    }

    pub fn max_code(&self) -> u32 {
        (1u32 << self.bit_depth) - 1
    }

    /// Full well in photons for a clean image `y`.
    pub fn full_well_for(&self, y: &RealImage) -> f64 {
        let fw = self.full_well.resolve(self.photon_scale * y.max());
        // An all-dark scene still needs a positive well.
        if fw > 0.0 {
            fw
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorReadout {
    /// Photon-unit intensity reconstructed from the codes.
    pub intensity: RealImage,
    pub codes: Vec<u16>,
    pub full_well: f64,
}

/// Converts integer codes back to intensity units.
pub fn decode(codes: &[u16], width: usize, height: usize, sensor: &SensorParams, full_well: f64) -> Result<RealImage> {
    let step = full_well / sensor.max_code() as f64 / sensor.photon_scale;
    RealImage::new(width, height, codes.iter().map(|&c| c as f64 * step).collect())
}

/// Poisson shot noise on `photon_scale·y`, Gaussian read noise, clipping to
/// `[0, full_well]` and rounding to `bit_depth`-bit codes.
pub fn read_sensor(
    y: &RealImage,
    sensor: &SensorParams,
    full_well: f64,
    rng: &mut RandomStream,
) -> Result<SensorReadout> {
    sensor.validate()?;
    if !(full_well.is_finite() && full_well > 0.0) {
        return Err(invalid(format!("full well must be positive, got {full_well}")));
    }
    let read = Normal::new(0.0, sensor.gaussian_sigma).map_err(|e| invalid(e.to_string()))?;
    let max_code = sensor.max_code() as f64;
    let mut codes = Vec::with_capacity(y.data().len());
    for &v in y.data() {
        let lambda = sensor.photon_scale * v;
        let mut photons = if lambda > 0.0 {
            Poisson::new(lambda)
                .map_err(|e| invalid(format!("poisson rate {lambda}: {e}")))?
                .sample(rng)
        } else {
            0.0
        };
        if sensor.gaussian_sigma > 0.0 {
            photons += read.sample(rng);
        }
        let clipped = photons.clamp(0.0, full_well);
        codes.push((clipped / full_well * max_code).round() as u16);
    }
    let intensity = decode(&codes, y.width(), y.height(), sensor, full_well)?;
    Ok(SensorReadout {
        intensity,
        codes,
        full_well,
    })
}

/// [`read_sensor`] with the full well resolved from `y` and the stream
/// `(sensor.seed, "sensor")`.
pub fn apply_sensor(y: &RealImage, sensor: &SensorParams) -> Result<RealImage> {
    let mut rng = RandomStream::new(sensor.seed, "sensor");
    Ok(read_sensor(y, sensor, sensor.full_well_for(y), &mut rng)?.intensity)
}

/// 10·log10(Σ clean² / Σ (clean − noisy)²), capped at ±120 dB.
pub fn snr_of(clean: &RealImage, noisy: &RealImage) -> Result<f64> {
    check_dims(clean.dims(), noisy.dims())?;
    let signal: f64 = clean.data().iter().map(|v| v * v).sum();
    let noise: f64 = clean
        .data()
        .iter()
        .zip(noisy.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if noise == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    if signal == 0.0 {
        return Ok(-SNR_CAP_DB);
    }
    Ok((10.0 * (signal / noise).log10()).clamp(-SNR_CAP_DB, SNR_CAP_DB))
}

fn zero_outside(img: RealImage, band: Option<&[bool]>) -> RealImage {
    match band {
        None => img,
        Some(band) => RealImage::from_raw(
            img.width(),
            img.height(),
            img.into_data()
                .into_iter()
                .zip(band)
                .map(|(v, &k)| if k { v } else { 0.0 })
                .collect(),
        ),
    }
}

fn zero_codes_outside(codes: &mut [u16], band: Option<&[bool]>) {
    if let Some(band) = band {
        for (c, &k) in codes.iter_mut().zip(band) {
            if !k {
                *c = 0;
            }
        }
    }
}

/// Finds the photon scale at which a sensor readout of `clean` reaches
/// `target_db`, by bisection on log(photon scale) with the noise stream held
/// fixed. Readout bins outside `band` are discarded before measuring.
pub fn calibrate_photon_scale(
    clean: &RealImage,
    target_db: f64,
    sensor: &SensorParams,
    stream: &RandomStream,
    band: Option<&[bool]>,
) -> Result<f64> {
    sensor.validate()?;
    if clean.max() <= 0.0 {
        return Err(invalid("cannot calibrate SNR on an all-zero image"));
    }
    let measure = |log_scale: f64| -> Result<f64> {
        let s = SensorParams {
            photon_scale: log_scale.exp(),
            ..*sensor
        };
        let mut rng = stream.clone();
        let out = read_sensor(clean, &s, s.full_well_for(clean), &mut rng)?;
        snr_of(clean, &zero_outside(out.intensity, band))
    };

    let mean = clean.sum() / clean.data().len() as f64;
    let mut lo = (1.0 / mean).ln();
    let mut hi = lo;
    let mut best = (f64::INFINITY, lo);
    let track = |ls: f64, snr: f64, best: &mut (f64, f64)| {
        let d = (snr - target_db).abs();
        if d < best.0 {
            *best = (d, ls);
        }
    };
    let mut snr_lo = measure(lo)?;
    track(lo, snr_lo, &mut best);
    let mut snr_hi = snr_lo;
    for _ in 0..80 {
        if snr_lo <= target_db {
            break;
        }
        lo -= std::f64::consts::LN_10;
        snr_lo = measure(lo)?;
        track(lo, snr_lo, &mut best);
    }
    // Past ~1e15 peak photons quantization dominates and Poisson sampling
    // stops being meaningful.
    let hi_cap = (1e15 / clean.max()).ln();
    for _ in 0..80 {
        if snr_hi >= target_db || hi + std::f64::consts::LN_10 > hi_cap {
            break;
        }
        hi += std::f64::consts::LN_10;
        snr_hi = measure(hi)?;
        track(hi, snr_hi, &mut best);
    }
    if snr_lo > target_db || snr_hi < target_db {
        return Err(invalid(format!(
            "SNR target {target_db} dB is outside the reachable range [{snr_lo:.2}, {snr_hi:.2}] dB"
        )));
    }
    for _ in 0..100 {
        if best.0 < 0.01 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let snr = measure(mid)?;
        track(mid, snr, &mut best);
        if snr < target_db {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > SNR_TOLERANCE_DB {
        return Err(invalid(format!(
            "SNR calibration missed {target_db} dB by {:.3} dB",
            best.0
        )));
    }
    Ok(best.1.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutRecord {
    pub photon_scale: f64,
    pub full_well: f64,
    pub stream_id: String,
    pub measured_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub mask: BinaryMask,
    pub intensity: RealImage,
    /// Sensor codes, absent for an ideal detector.
    pub codes: Option<Vec<u16>>,
    pub readout: Option<ReadoutRecord>,
}

/// Acquisition settings shared by all measurements of a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Acquisition {
    pub defocus: Option<DefocusParams>,
    /// `None` is an ideal noiseless, unquantized detector.
    pub sensor: Option<SensorParams>,
    /// When set, each measurement's photon scale is calibrated to this SNR.
    pub snr_target_db: Option<f64>,
    pub truncation: f64,
}

impl Default for Acquisition {
    fn default() -> Self {
        Self {
            defocus: None,
            sensor: None,
            snr_target_db: None,
            truncation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub measurements: Vec<Measurement>,
    pub acquisition: Acquisition,
}

impl MeasurementSet {
    pub fn new(measurements: Vec<Measurement>, acquisition: Acquisition) -> Result<Self> {
        let first = measurements
            .first()
            .ok_or_else(|| invalid("a measurement set needs at least one measurement"))?;
        let dims = first.mask.dims();
        for m in &measurements {
            check_dims(dims, m.mask.dims())?;
            check_dims(dims, m.intensity.dims())?;
        }
        check_fraction(acquisition.truncation)?;
        if let Some(d) = &acquisition.defocus {
            d.validate()?;
        }
        Ok(Self {
            measurements,
            acquisition,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.measurements[0].mask.dims()
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn truncation(&self) -> f64 {
        self.acquisition.truncation
    }

    pub fn kernel(&self) -> Result<Option<ComplexImage>> {
        let (w, h) = self.dims();
        self.acquisition
            .defocus
            .as_ref()
            .map(|d| defocus_kernel(w, h, d))
            .transpose()
    }

    pub fn kept_band(&self) -> Vec<bool> {
        let (w, h) = self.dims();
        kept_band(w, h, self.acquisition.truncation).expect("truncation validated on construction")
    }
}

/// Noise stream for measurement `index`.
pub fn sensor_stream(seed: u64, index: usize) -> RandomStream {
    RandomStream::new(seed, format!("sensor/{index}"))
}

/// Per mask: forward intensity, band truncation, then the sensor. Sensor
/// output outside the kept band is discarded, since those bins are never
/// part of the 0th order.
pub fn acquire(u: &ComplexImage, masks: &[BinaryMask], acq: &Acquisition) -> Result<MeasurementSet> {
    if masks.is_empty() {
        return Err(invalid("acquisition needs at least one mask"));
    }
    if acq.snr_target_db.is_some() && acq.sensor.is_none() {
        return Err(invalid("an SNR target requires a sensor model"));
    }
    let kernel = acq
        .defocus
        .as_ref()
        .map(|d| defocus_kernel(u.width(), u.height(), d))
        .transpose()?;
    let band = kept_band(u.width(), u.height(), acq.truncation)?;
    let band_ref = (acq.truncation > 0.0).then_some(band.as_slice());

    let mut out = Vec::with_capacity(masks.len());
    for (i, mask) in masks.iter().enumerate() {
        let clean = truncate_high_freq(&forward_intensity(u, mask, kernel.as_ref())?, acq.truncation)?;
        let Some(sensor) = acq.sensor else {
            out.push(Measurement {
                mask: mask.clone(),
                intensity: clean,
                codes: None,
                readout: None,
            });
            continue;
        };
        let stream = sensor_stream(sensor.seed, i);
        let mut params = sensor;
        if let Some(target) = acq.snr_target_db {
            params.photon_scale = calibrate_photon_scale(&clean, target, &sensor, &stream, band_ref)?;
        }
        let full_well = params.full_well_for(&clean);
        let mut rng = stream.clone();
        let mut readout = read_sensor(&clean, &params, full_well, &mut rng)?;
        zero_codes_outside(&mut readout.codes, band_ref);
        let intensity = decode(&readout.codes, u.width(), u.height(), &params, full_well)?;
        let measured = snr_of(&clean, &intensity)?;
        out.push(Measurement {
            mask: mask.clone(),
            intensity,
            codes: Some(readout.codes),
            readout: Some(ReadoutRecord {
                photon_scale: params.photon_scale,
                full_well,
                stream_id: stream.id().to_string(),
                measured_snr_db: measured,
            }),
        });
    }
    MeasurementSet::new(out, acq.clone())
}
