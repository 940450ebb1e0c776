//! White, blue and green binary noise masks.
//!
//! Green masks come from maximum-guided multiscale error diffusion with a
//! ring-shaped filter (`r2 = √2·r1`); blue masks use the same engine with a
//! small disk filter; white masks are an exact-count seeded shuffle.

mod kernel;
mod med;
mod spectrum;

use serde::{Deserialize, Serialize};

pub use kernel::{disk_filter, ring_filter, DiffusionKernel};
pub use spectrum::{
    angular_sector_power, high_freq_ratio, power_spectrum, radial_power_spectrum, SpectralProfile,
    HIGH_FREQ_EDGE,
};

use crate::error::{invalid, Result};
use crate::random::RandomStream;

/// Disk radius of the diffusion filter used for blue-noise masks.
pub const BLUE_DISK_RADIUS: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    White,
    Blue,
    Green,
}

impl MaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskKind::White => "white",
            MaskKind::Blue => "blue",
            MaskKind::Green => "green",
        }
    }
}

impl std::fmt::Display for MaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MaskKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(MaskKind::White),
            "blue" => Ok(MaskKind::Blue),
            "green" => Ok(MaskKind::Green),
            other => Err(invalid(format!(
                "unknown mask kind '{other}' (expected white, blue or green)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskMeta {
    pub kind: MaskKind,
    pub sigma: f64,
    pub r1: Option<f64>,
    pub seed: u64,
}

/// Row-major {0,1} grid plus the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<u8>,
    meta: MaskMeta,
}

impl BinaryMask {
    pub fn from_bits(
        width: usize,
        height: usize,
        bits: Vec<u8>,
        kind: MaskKind,
        sigma: f64,
        r1: Option<f64>,
        seed: u64,
    ) -> Result<Self> {
        check_dims(width, height)?;
        if bits.len() != width * height {
            return Err(invalid(format!(
                "mask has {} bits, expected {}",
                bits.len(),
                width * height
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(invalid("mask bits must be 0 or 1"));
        }
        check_sigma(sigma, true)?;
        Ok(Self {
            width,
            height,
            bits,
            meta: MaskMeta { kind, sigma, r1, seed },
        })
    }

    /// All-zero (`sigma = 0`) or all-one (`sigma = 1`) mask; other values
    /// round to the nearer of the two.
    pub fn filled(width: usize, height: usize, kind: MaskKind, sigma: f64, seed: u64) -> Self {
        let bit = u8::from(sigma >= 0.5);
        Self {
            width,
            height,
            bits: vec![bit; width * height],
            meta: MaskMeta {
                kind,
                sigma: bit as f64,
                r1: None,
                seed,
            },
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn meta(&self) -> &MaskMeta {
        &self.meta
    }

    pub fn kind(&self) -> MaskKind {
        self.meta.kind
    }

    pub fn sigma(&self) -> f64 {
        self.meta.sigma
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn mean(&self) -> f64 {
        self.ones() as f64 / self.bits.len() as f64
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.width + col]
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(invalid(format!("mask dimensions must be positive, got {width}x{height}")));
    }
    Ok(())
}

fn check_sigma(sigma: f64, closed: bool) -> Result<()> {
    let ok = if closed {
        (0.0..=1.0).contains(&sigma)
    } else {
        sigma > 0.0 && sigma < 1.0
    };
    if ok {
        Ok(())
    } else if closed {
        Err(invalid(format!("on-off ratio must lie in [0, 1], got {sigma}")))
    } else {
        Err(invalid(format!("on-off ratio must lie in (0, 1), got {sigma}")))
    }
}

fn check_med_dims(width: usize, height: usize) -> Result<()> {
    check_dims(width, height)?;
    if width * height < 4 {
        return Err(invalid(format!(
            "error diffusion needs at least 4 pixels, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Green-noise mask with cluster radius `r1` (outer ring radius `√2·r1`).
pub fn fmedg_generate(width: usize, height: usize, sigma: f64, r1: f64, seed: u64) -> Result<BinaryMask> {
    check_med_dims(width, height)?;
    check_sigma(sigma, false)?;
    if !(r1 >= 0.5) {
        return Err(invalid(format!("green-noise r1 must be at least 0.5, got {r1}")));
    }
    let kernel = ring_filter(r1)?;
    let mut rng = RandomStream::new(seed, "mask/green");
    let bits = med::diffuse(width, height, sigma, &kernel, &mut rng);
    Ok(BinaryMask {
        width,
        height,
        bits,
        meta: MaskMeta {
            kind: MaskKind::Green,
            sigma,
            r1: Some(r1),
            seed,
        },
    })
}

/// Blue-noise mask: the same diffusion engine with a disk filter of radius
/// [`BLUE_DISK_RADIUS`], which disperses isolated dots.
pub fn blue_noise_mask(width: usize, height: usize, sigma: f64, seed: u64) -> Result<BinaryMask> {
    check_med_dims(width, height)?;
    check_sigma(sigma, false)?;
    let kernel = disk_filter(BLUE_DISK_RADIUS)?;
    let mut rng = RandomStream::new(seed, "mask/blue");
    let bits = med::diffuse(width, height, sigma, &kernel, &mut rng);
    Ok(BinaryMask {
        width,
        height,
        bits,
        meta: MaskMeta {
            kind: MaskKind::Blue,
            sigma,
            r1: None,
            seed,
        },
    })
}

/// Exactly `⌊sigma·N + 0.5⌋` ones at positions chosen by a seeded shuffle.
pub fn white_noise_mask(width: usize, height: usize, sigma: f64, seed: u64) -> Result<BinaryMask> {
    check_dims(width, height)?;
    check_sigma(sigma, true)?;
    let n = width * height;
    let count = ((sigma * n as f64 + 0.5).floor() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    RandomStream::new(seed, "mask/white").shuffle(&mut order);
    let mut bits = vec![0u8; n];
    for &i in &order[..count] {
        bits[i] = 1;
    }
    Ok(BinaryMask {
        width,
        height,
        bits,
        meta: MaskMeta {
            kind: MaskKind::White,
            sigma,
            r1: None,
            seed,
        },
    })
}

/// Dispatches on `kind`, routing `sigma ∈ {0, 1}` to [`BinaryMask::filled`].
/// `r1` is only consulted for green masks.
pub fn generate(
    kind: MaskKind,
    width: usize,
    height: usize,
    sigma: f64,
    r1: f64,
    seed: u64,
) -> Result<BinaryMask> {
    check_sigma(sigma, true)?;
    if sigma == 0.0 || sigma == 1.0 {
        check_dims(width, height)?;
        let mut m = BinaryMask::filled(width, height, kind, sigma, seed);
        if kind == MaskKind::Green {
            m.meta.r1 = Some(r1);
        }
        return Ok(m);
    }
    match kind {
        MaskKind::White => white_noise_mask(width, height, sigma, seed),
        MaskKind::Blue => blue_noise_mask(width, height, sigma, seed),
        MaskKind::Green => fmedg_generate(width, height, sigma, r1, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_extremes() {
        let zeros = white_noise_mask(9, 7, 0.0, 1).unwrap();
        assert_eq!(zeros.ones(), 0);
        let ones = white_noise_mask(9, 7, 1.0, 1).unwrap();
        assert_eq!(ones.ones(), 63);
    }

    #[test]
    fn white_is_deterministic_with_exact_count() {
        let a = white_noise_mask(50, 40, 0.37, 11).unwrap();
        let b = white_noise_mask(50, 40, 0.37, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ones(), 740);
        assert_ne!(a.bits(), white_noise_mask(50, 40, 0.37, 12).unwrap().bits());
    }

    #[test]
    fn generator_preconditions() {
        assert!(fmedg_generate(1, 3, 0.5, 1.5, 0).is_err());
        assert!(fmedg_generate(8, 8, 0.0, 1.5, 0).is_err());
        assert!(fmedg_generate(8, 8, 1.0, 1.5, 0).is_err());
        assert!(fmedg_generate(8, 8, 0.5, 0.4, 0).is_err());
        assert!(blue_noise_mask(8, 8, 1.2, 0).is_err());
        assert!(white_noise_mask(8, 8, -0.1, 0).is_err());
        assert!(white_noise_mask(0, 8, 0.5, 0).is_err());
    }

    #[test]
    fn generate_routes_trivial_ratios() {
        let m = generate(MaskKind::Green, 6, 6, 1.0, 1.5, 3).unwrap();
        assert_eq!(m.ones(), 36);
        assert_eq!(m.kind(), MaskKind::Green);
        assert_eq!(high_freq_ratio(&m), 0.0);
        let m = generate(MaskKind::Blue, 6, 6, 0.0, 0.0, 3).unwrap();
        assert_eq!(m.ones(), 0);
    }

    #[test]
    fn green_and_blue_are_deterministic() {
        assert_eq!(
            fmedg_generate(32, 32, 0.5, 1.5, 5).unwrap(),
            fmedg_generate(32, 32, 0.5, 1.5, 5).unwrap()
        );
        assert_eq!(blue_noise_mask(32, 32, 0.4, 5).unwrap(), blue_noise_mask(32, 32, 0.4, 5).unwrap());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("green".parse::<MaskKind>().unwrap(), MaskKind::Green);
        assert!("red".parse::<MaskKind>().is_err());
    }
}
