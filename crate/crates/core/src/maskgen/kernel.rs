use crate::error::{invalid, Result};

/// Non-causal error-diffusion filter over integer offsets `(dy, dx)`.
///
/// Radii are compared in squared form so that `r2 = √2·r1` is evaluated as
/// `r2² = 2·r1²` without rounding at the ring boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionKernel {
    r1: f64,
    r2: f64,
    taps: Vec<(isize, isize, f64)>,
}

impl DiffusionKernel {
    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    /// `(dy, dx, weight)` triples; weights sum to one.
    pub fn taps(&self) -> &[(isize, isize, f64)] {
        &self.taps
    }

    pub fn weight(&self, dy: isize, dx: isize) -> f64 {
        self.taps
            .iter()
            .find(|&&(y, x, _)| (y, x) == (dy, dx))
            .map_or(0.0, |t| t.2)
    }

    pub fn support_len(&self) -> usize {
        self.taps.len()
    }

    fn build(r1_sq: f64, r2_sq: f64) -> Result<Vec<(isize, isize, f64)>> {
        let reach = r2_sq.sqrt().ceil() as isize;
        // Unnormalized ring value 1/((R2² − R1²)π); uniform on the support.
        let raw = 1.0 / ((r2_sq - r1_sq) * std::f64::consts::PI);
        let mut taps = Vec::new();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let d2 = (dy * dy + dx * dx) as f64;
                if d2 > 0.0 && d2 > r1_sq && d2 <= r2_sq {
                    taps.push((dy, dx, raw));
                }
            }
        }
        if taps.is_empty() {
            return Err(invalid(format!(
                "diffusion ring r1²={r1_sq}, r2²={r2_sq} contains no integer offsets"
            )));
        }
        let total: f64 = taps.iter().map(|t| t.2).sum();
        for t in &mut taps {
            t.2 /= total;
        }
        Ok(taps)
    }
}

/// Ring filter with outer radius `√2·r1`; cells with `r1 < d ≤ r2` share the
/// error equally. `r1 = 0` degenerates to the disk of radius √2.
pub fn ring_filter(r1: f64) -> Result<DiffusionKernel> {
    if !r1.is_finite() || r1 < 0.0 {
        return Err(invalid(format!("ring radius must be nonnegative, got {r1}")));
    }
    if r1 == 0.0 {
        let radius = std::f64::consts::SQRT_2;
        return disk_filter(radius);
    }
    let r1_sq = r1 * r1;
    let r2_sq = 2.0 * r1_sq;
    Ok(DiffusionKernel {
        r1,
        r2: r2_sq.sqrt(),
        taps: DiffusionKernel::build(r1_sq, r2_sq)?,
    })
}

/// Disk filter covering `0 < d ≤ radius`.
pub fn disk_filter(radius: f64) -> Result<DiffusionKernel> {
    if !radius.is_finite() || radius < 1.0 {
        return Err(invalid(format!("disk radius must be at least 1, got {radius}")));
    }
    let r2_sq = radius * radius;
    Ok(DiffusionKernel {
        r1: 0.0,
        r2: radius,
        taps: DiffusionKernel::build(0.0, r2_sq)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn support(k: &DiffusionKernel) -> Vec<(isize, isize)> {
        let mut s: Vec<_> = k.taps().iter().map(|t| (t.0, t.1)).collect();
        s.sort();
        s
    }

    /// Independent enumeration of offsets with lo < √(m²+n²) ≤ hi.
    fn enumerate(lo: f64, hi: f64) -> Vec<(isize, isize)> {
        let mut s = Vec::new();
        for m in -10isize..=10 {
            for n in -10isize..=10 {
                let d = ((m * m + n * n) as f64).sqrt();
                if d > lo && d <= hi + 1e-12 && d > 0.0 {
                    s.push((m, n));
                }
            }
        }
        s.sort();
        s
    }

    #[test]
    fn ring_at_radius_two() {
        let k = ring_filter(1.5).unwrap();
        assert!((k.r2() - 2.121_320_343_559_643).abs() < 1e-12);
        assert_eq!(support(&k), vec![(-2, 0), (0, -2), (0, 2), (2, 0)]);
        assert_eq!(support(&k), enumerate(1.5, 1.5 * std::f64::consts::SQRT_2));
        for t in k.taps() {
            assert_eq!(t.2, 0.25);
        }
    }

    #[test]
    fn ring_supports_match_enumeration() {
        for r1 in [0.75, 1.0, 1.5, 2.0, 2.5, 3.3] {
            let k = ring_filter(r1).unwrap();
            assert_eq!(support(&k), enumerate(r1, r1 * std::f64::consts::SQRT_2), "r1={r1}");
        }
    }

    #[test]
    fn supports_are_symmetric_and_normalized() {
        for r1 in [0.0, 1.0, 1.5, 2.0, 2.5] {
            let k = ring_filter(r1).unwrap();
            let s = support(&k);
            for &(m, n) in &s {
                assert!(s.contains(&(-m, -n)));
                assert!(s.contains(&(n, m)));
            }
            assert!(!s.contains(&(0, 0)));
            let total: f64 = k.taps().iter().map(|t| t.2).sum();
            assert!((total - 1.0).abs() <= 1e-15, "r1={r1} total={total}");
        }
    }

    #[test]
    fn zero_radius_degenerates_to_disk() {
        let k = ring_filter(0.0).unwrap();
        assert_eq!(k.support_len(), 8);
        assert_eq!(disk_filter(1.5).unwrap().support_len(), 8);
        assert_eq!(disk_filter(2.0).unwrap().support_len(), 12);
    }

    #[test]
    fn invalid_radii() {
        assert!(ring_filter(-0.1).is_err());
        assert!(ring_filter(f64::NAN).is_err());
        // no integer offsets fall strictly inside (0.5, 0.707]
        assert!(ring_filter(0.5).is_err());
        assert!(disk_filter(0.5).is_err());
    }
}
