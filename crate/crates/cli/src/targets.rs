//! Test targets. The built-in images ship as 8-bit graymaps at 64×64 and
//! 200×200: amplitude is the gray level in [0, 1], phase is the gray level
//! mapped linearly onto [−range, range].

use std::f64::consts::PI;
use std::path::Path;

use greenmask::io::{self, netpbm};
use greenmask::random::RandomStream;
use greenmask::{Complex64, ComplexImage, RealImage};

use crate::config::{ExperimentConfig, TargetKind};
use crate::error::CliError;

pub const BUILTIN_SIZES: [usize; 2] = [64, 200];

const ASSETS: [(&str, usize, &[u8]); 4] = [
    ("cameraman", 64, include_bytes!("../assets/cameraman_64.pgm")),
    ("cameraman", 200, include_bytes!("../assets/cameraman_200.pgm")),
    ("astronaut", 64, include_bytes!("../assets/astronaut_64.pgm")),
    ("astronaut", 200, include_bytes!("../assets/astronaut_200.pgm")),
];

pub fn builtin_names() -> Vec<&'static str> {
    let mut names: Vec<_> = ASSETS.iter().map(|a| a.0).collect();
    names.dedup();
    names
}

/// A built-in image scaled to [0, 1].
pub fn builtin(name: &str, size: usize) -> Result<RealImage, CliError> {
    let (_, _, bytes) = ASSETS.iter().find(|a| a.0 == name && a.1 == size).ok_or_else(|| {
        CliError::Validation(format!(
            "no built-in image '{name}' at size {size} (images: {:?}, sizes: {BUILTIN_SIZES:?})",
            builtin_names()
        ))
    })?;
    let map = netpbm::decode_pgm(bytes, Path::new(name))?;
    let scale = map.maxval as f64;
    Ok(RealImage::new(
        map.width,
        map.height,
        map.samples.iter().map(|&s| s as f64 / scale).collect(),
    )?)
}

fn to_phase(gray: &RealImage, range: f64) -> Vec<f64> {
    gray.data().iter().map(|&g| (2.0 * g - 1.0) * range).collect()
}

fn check_size(img: &RealImage, size: usize, what: &str) -> Result<(), CliError> {
    if img.dims() == (size, size) {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{what} image is {}×{}, config size is {size}",
            img.width(),
            img.height()
        )))
    }
}

/// Ground-truth object for `cfg.target` on a `cfg.size` grid.
pub fn build_target(cfg: &ExperimentConfig, seed: u64) -> Result<ComplexImage, CliError> {
    let n = cfg.size;
    let t = &cfg.target;
    let (amp, phase) = match t.kind {
        TargetKind::Builtin => (builtin(&t.amplitude, n)?, builtin(&t.phase, n)?),
        TargetKind::Files => (
            io::read_pgm_unit(Path::new(&t.amplitude))?,
            io::read_pgm_unit(Path::new(&t.phase))?,
        ),
        TargetKind::Uniform => return Ok(ComplexImage::constant(n, n, Complex64::new(1.0, 0.0))),
        TargetKind::Random => {
            let mut rng = RandomStream::new(seed, "target");
            return Ok(ComplexImage::from_fn(n, n, |_, _| {
                let a = 0.5 + 0.5 * rng.uniform();
                Complex64::from_polar(a, PI * (2.0 * rng.uniform() - 1.0))
            }));
        }
    };
    check_size(&amp, n, "amplitude")?;
    check_size(&phase, n, "phase")?;
    Ok(ComplexImage::from_polar(n, n, amp.data(), &to_phase(&phase, t.phase_range))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load_at_every_size() {
        for name in builtin_names() {
            for size in BUILTIN_SIZES {
                let img = builtin(name, size).unwrap();
                assert_eq!(img.dims(), (size, size));
                assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)));
                assert!(img.max() > 0.5);
            }
        }
        assert!(builtin("barbara", 64).is_err());
        assert!(builtin("cameraman", 100).is_err());
    }

    #[test]
    fn default_target_phase_stays_in_range() {
        let cfg = ExperimentConfig::default();
        let u = build_target(&cfg, 0).unwrap();
        let range = cfg.target.phase_range + 1e-12;
        assert!(u.phase().iter().all(|p| p.abs() <= range));
        assert!(u.amplitude().data().iter().all(|&a| a <= 1.0 + 1e-12));
    }

    #[test]
    fn random_target_depends_on_seed_only() {
        let mut cfg = ExperimentConfig::default();
        cfg.target.kind = TargetKind::Random;
        assert_eq!(build_target(&cfg, 3).unwrap(), build_target(&cfg, 3).unwrap());
        assert_ne!(build_target(&cfg, 3).unwrap(), build_target(&cfg, 4).unwrap());
    }
}
