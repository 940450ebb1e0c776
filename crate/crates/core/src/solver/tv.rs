//! Forward differences with reflective (Neumann) boundary and their exact
//! adjoint. The difference across the last column/row is zero.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub dx: Vec<Complex64>,
    pub dy: Vec<Complex64>,
}

impl GradientField {
    pub fn zeros(n: usize) -> Self {
        Self {
            dx: vec![Complex64::new(0.0, 0.0); n],
            dy: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn energy(&self) -> f64 {
        self.dx.iter().chain(&self.dy).map(|z| z.norm_sqr()).sum()
    }

    /// Anisotropic ℓ1 norm, real and imaginary parts counted separately.
    pub fn l1(&self) -> f64 {
        self.dx
            .iter()
            .chain(&self.dy)
            .map(|z| z.re.abs() + z.im.abs())
            .sum()
    }
}

pub fn gradient(u: &[Complex64], width: usize, height: usize) -> GradientField {
    let mut g = GradientField::zeros(u.len());
    gradient_into(u, width, height, &mut g);
    g
}

pub(crate) fn gradient_into(u: &[Complex64], width: usize, height: usize, g: &mut GradientField) {
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            g.dx[i] = if c + 1 < width { u[i + 1] - u[i] } else { Complex64::new(0.0, 0.0) };
            g.dy[i] = if r + 1 < height { u[i + width] - u[i] } else { Complex64::new(0.0, 0.0) };
        }
    }
}

/// Adjoint of [`gradient`] (the negative divergence), written into `out`.
pub fn gradient_adjoint(g: &GradientField, width: usize, height: usize, out: &mut [Complex64]) {
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            let mut acc = Complex64::new(0.0, 0.0);
            if c + 1 < width {
                acc -= g.dx[i];
            }
            if c > 0 {
                acc += g.dx[i - 1];
            }
            if r + 1 < height {
                acc -= g.dy[i];
            }
            if r > 0 {
                acc += g.dy[i - width];
            }
            out[i] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::RandomStream;

    fn random(n: usize, rng: &mut RandomStream) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.uniform() - 0.5, rng.uniform() - 0.5)).collect()
    }

    #[test]
    fn adjoint_identity() {
        let (w, h) = (5, 4);
        let mut rng = RandomStream::new(1, "tv");
        let u = random(w * h, &mut rng);
        let p = GradientField {
            dx: random(w * h, &mut rng),
            dy: random(w * h, &mut rng),
        };
        let gu = gradient(&u, w, h);
        let lhs: Complex64 = gu
            .dx
            .iter()
            .zip(&p.dx)
            .chain(gu.dy.iter().zip(&p.dy))
            .map(|(a, b)| a.conj() * b)
            .sum();
        let mut adj = vec![Complex64::new(0.0, 0.0); w * h];
        gradient_adjoint(&p, w, h, &mut adj);
        let rhs: Complex64 = u.iter().zip(&adj).map(|(a, b)| a.conj() * b).sum();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn constant_has_zero_variation() {
        let u = vec![Complex64::new(0.3, -1.0); 12];
        assert_eq!(gradient(&u, 4, 3).l1(), 0.0);
    }
}
