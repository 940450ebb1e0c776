//! The quadratic u-subproblem
//!
//! ```text
//! Σᵢ (ρ_F/2)‖dft2(cᵢ∘u) − zᵢ + λᵢ‖² + (ρ_TV/2)‖∇u − w + μ‖² + (ε/2)‖u‖²
//! ```
//!
//! whose normal operator `(ρ_F·Σ|cᵢ|² + ε) + ρ_TV·∇ᵀ∇` is Hermitian positive
//! definite for ε > 0. It is solved with conjugate residuals (the Krylov
//! variant whose residual norm never increases), warm-started at the
//! current iterate.

use num_complex::Complex64;

use super::tv::{gradient_adjoint, gradient_into, GradientField};
use super::{AdmmState, Problem, SolverConfig};
use crate::error::{invalid, Error, Result};
use crate::image::ComplexImage;

#[derive(Debug, Clone)]
pub struct UStep {
    pub u: ComplexImage,
    /// ‖b − A·x‖ before the first and after every Krylov step.
    pub residuals: Vec<f64>,
}

/// Consecutive residual increases tolerated before giving up.
const MAX_GROWTH_STREAK: usize = 3;

struct NormalOperator<'a> {
    problem: &'a Problem,
    diag: Vec<f64>,
    rho_tv: f64,
    grad: GradientField,
}

impl NormalOperator<'_> {
    fn apply(&mut self, x: &[Complex64], out: &mut [Complex64]) {
        let (w, h) = (self.problem.width, self.problem.height);
        if self.rho_tv > 0.0 {
            gradient_into(x, w, h, &mut self.grad);
            gradient_adjoint(&self.grad, w, h, out);
            for o in out.iter_mut() {
                *o *= self.rho_tv;
            }
        } else {
            out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        }
        for ((o, xi), d) in out.iter_mut().zip(x).zip(&self.diag) {
            *o += xi * d;
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Right-hand side `ρ_F Σ conj(cᵢ)∘idft2(zᵢ − λᵢ) + ρ_TV ∇ᵀ(w − μ)`.
fn rhs(problem: &Problem, state: &AdmmState, rho_f: f64, rho_tv: f64) -> Vec<Complex64> {
    let n = problem.width * problem.height;
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..problem.len() {
        for ((o, z), l) in buf.iter_mut().zip(state.z[i].data()).zip(state.lambda[i].data()) {
            *o = z - l;
        }
        problem.adjoint_in_place(i, &mut buf);
        for (acc, v) in b.iter_mut().zip(&buf) {
            *acc += v * rho_f;
        }
    }
    if rho_tv > 0.0 {
        let diff = GradientField {
            dx: state.w.dx.iter().zip(&state.mu.dx).map(|(a, b)| a - b).collect(),
            dy: state.w.dy.iter().zip(&state.mu.dy).map(|(a, b)| a - b).collect(),
        };
        gradient_adjoint(&diff, problem.width, problem.height, &mut buf);
        for (acc, v) in b.iter_mut().zip(&buf) {
            *acc += v * rho_tv;
        }
    }
    b
}

/// Minimizes the u-subproblem for the current splitting variables and duals.
///
/// With `rho_tv = 0` the operator is diagonal and the solve is exact.
pub fn u_update(problem: &Problem, state: &AdmmState, config: &SolverConfig) -> Result<UStep> {
    let (rho_f, rho_tv, eps) = (config.rho_fourier, config.rho_tv, config.epsilon);
    if !(rho_f > 0.0) || !(rho_tv >= 0.0) || !(eps >= 0.0) {
        return Err(invalid("u-step needs rho_fourier > 0, rho_tv ≥ 0 and epsilon ≥ 0"));
    }
    let n = problem.width * problem.height;
    let b = rhs(problem, state, rho_f, rho_tv);
    let diag: Vec<f64> = problem.coverage.iter().map(|c| rho_f * c + eps).collect();

    if rho_tv == 0.0 {
        let x: Vec<Complex64> = b
            .iter()
            .zip(&diag)
            .map(|(bi, &d)| if d > 0.0 { bi / d } else { Complex64::new(0.0, 0.0) })
            .collect();
        return Ok(UStep {
            u: ComplexImage::from_raw(problem.width, problem.height, x),
            residuals: vec![0.0],
        });
    }

    let mut op = NormalOperator {
        problem,
        diag,
        rho_tv,
        grad: GradientField::zeros(n),
    };
    let mut x = state.u.data().to_vec();
    let mut r = vec![Complex64::new(0.0, 0.0); n];
    op.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(&b) {
        *ri = bi - *ri;
    }
    let b_norm = norm(&b);
    let stop = config.cg_tol * if b_norm > 0.0 { b_norm } else { 1.0 };

    let mut residuals = vec![norm(&r)];
    let mut ar = vec![Complex64::new(0.0, 0.0); n];
    op.apply(&r, &mut ar);
    let mut p = r.clone();
    let mut ap = ar.clone();
    let mut r_ar = dot(&r, &ar).re;
    let mut growth = 0;

    for step in 1..=config.cg_iters {
        if residuals[residuals.len() - 1] <= stop {
            break;
        }
        let ap_ap = dot(&ap, &ap).re;
        if !(ap_ap > 0.0) || !(r_ar > 0.0) {
            break;
        }
        let alpha = r_ar / ap_ap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let res = norm(&r);
        if !res.is_finite() {
            return Err(Error::NumericalFailure {
                iteration: step,
                reason: "non-finite residual in the u-step".into(),
            });
        }
        growth = if res > residuals[residuals.len() - 1] { growth + 1 } else { 0 };
        residuals.push(res);
        if growth >= MAX_GROWTH_STREAK {
            return Err(Error::NumericalFailure {
                iteration: step,
                reason: format!("u-step residual grew for {MAX_GROWTH_STREAK} consecutive steps"),
            });
        }
        op.apply(&r, &mut ar);
        let r_ar_new = dot(&r, &ar).re;
        let beta = r_ar_new / r_ar;
        r_ar = r_ar_new;
        for i in 0..n {
            p[i] = r[i] + p[i] * beta;
            ap[i] = ar[i] + ap[i] * beta;
        }
    }
    Ok(UStep {
        u: ComplexImage::from_raw(problem.width, problem.height, x),
        residuals,
    })
}
