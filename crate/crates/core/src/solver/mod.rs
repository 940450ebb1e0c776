//! TV-regularized Poisson MAP phase retrieval by ADMM.
//!
//! Minimizes
//!
//! ```text
//! α·TV(u) + ½ Σᵢ Σ_kept (gᵢ − yᵢ·log gᵢ),   gᵢ = |dft2(cᵢ∘u)|²,  cᵢ = maskᵢ∘h
//! ```
//!
//! with two splittings, `zᵢ = dft2(cᵢ∘u)` (penalty ρ_F) and `w = ∇u`
//! (penalty ρ_TV). Each iteration runs the closed-form z-step on kept bins
//! (truncated bins carry no data, so there `z = v`), the soft-threshold
//! w-step, the Krylov u-step and scaled dual ascent on both blocks.

mod prox;
mod tv;
mod ustep;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use prox::{fidelity_prox, tv_shrink};
pub use tv::{gradient, gradient_adjoint, GradientField};
pub use ustep::{u_update, UStep};

use crate::error::{check_dims, invalid, Error, Result};
use crate::fourier::Fft2;
use crate::image::ComplexImage;
use crate::optics::{coding, MeasurementSet};
use crate::random::RandomStream;

/// Floor applied to g inside the logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    Flat,
    SeededRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub alpha: f64,
    pub rho_fourier: f64,
    pub rho_tv: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub cg_iters: usize,
    /// Relative to ‖b‖ of the u-step normal equations.
    pub cg_tol: f64,
    pub init: InitMode,
    pub seed: u64,
    pub epsilon: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            rho_fourier: 1.0,
            rho_tv: 1.0,
            max_iters: 300,
            rel_tol: 1e-6,
            cg_iters: 10,
            cg_tol: 1e-8,
            init: InitMode::Flat,
            seed: 0,
            epsilon: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.alpha.is_finite() && self.alpha >= 0.0, "alpha must be nonnegative"),
            (self.rho_fourier.is_finite() && self.rho_fourier > 0.0, "rho_fourier must be positive"),
            (self.rho_tv.is_finite() && self.rho_tv >= 0.0, "rho_tv must be nonnegative"),
            (self.alpha == 0.0 || self.rho_tv > 0.0, "alpha > 0 needs rho_tv > 0"),
            (self.max_iters >= 1, "max_iters must be at least 1"),
            (self.rel_tol.is_finite() && self.rel_tol >= 0.0, "rel_tol must be nonnegative"),
            (self.cg_iters >= 1, "cg_iters must be at least 1"),
            (self.cg_tol.is_finite() && self.cg_tol >= 0.0, "cg_tol must be nonnegative"),
            (self.epsilon.is_finite() && self.epsilon > 0.0, "epsilon must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(invalid(*msg)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub res_f: f64,
    pub res_tv: f64,
    pub rel_change: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
}

impl SolverTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,objective,res_F,res_TV,rel_change\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                r.iter, r.objective, r.res_f, r.res_tv, r.rel_change
            ));
        }
        out
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}

/// Measurement data prepared for repeated forward/adjoint evaluation.
pub struct Problem {
    width: usize,
    height: usize,
    plan: Fft2,
    codings: Vec<Vec<Complex64>>,
    observations: Vec<Vec<f64>>,
    band: Vec<bool>,
    /// Σᵢ |cᵢ|² per pixel.
    coverage: Vec<f64>,
}

impl Problem {
    pub fn new(ms: &MeasurementSet) -> Result<Self> {
        let (width, height) = ms.dims();
        let kernel = ms.kernel()?;
        let mut codings = Vec::with_capacity(ms.len());
        let mut coverage = vec![0.0; width * height];
        for m in &ms.measurements {
            let c = coding(&m.mask, kernel.as_ref())?.into_data();
            for (acc, ci) in coverage.iter_mut().zip(&c) {
                *acc += ci.norm_sqr();
            }
            codings.push(c);
        }
        Ok(Self {
            width,
            height,
            plan: Fft2::new(width, height)?,
            codings,
            observations: ms.measurements.iter().map(|m| m.intensity.data().to_vec()).collect(),
            band: ms.kept_band(),
            coverage,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.codings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codings.is_empty()
    }

    /// Σᵢ |cᵢ|² per pixel; zero marks pixels no measurement observes.
    pub fn coverage(&self) -> &[f64] {
        &self.coverage
    }

    /// dft2(cᵢ ∘ u).
    pub fn forward(&self, i: usize, u: &[Complex64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.codings[i].iter().zip(u).map(|(c, x)| c * x).collect();
        self.plan.forward_in_place(&mut buf);
        buf
    }

    /// conj(cᵢ) ∘ idft2(x), in place.
    pub fn adjoint_in_place(&self, i: usize, x: &mut [Complex64]) {
        self.plan.inverse_in_place(x);
        for (v, c) in x.iter_mut().zip(&self.codings[i]) {
            *v *= c.conj();
        }
    }

    fn fidelity(&self, fields: &[Vec<Complex64>]) -> f64 {
        let mut total = 0.0;
        for (field, y) in fields.iter().zip(&self.observations) {
            for ((z, &yv), &keep) in field.iter().zip(y).zip(&self.band) {
                if keep {
                    let g = z.norm_sqr();
                    total += g - yv * g.max(LOG_FLOOR).ln();
                }
            }
        }
        0.5 * total
    }

    fn tv(&self, u: &[Complex64]) -> f64 {
        gradient(u, self.width, self.height).l1()
    }

    fn check(&self, u: &ComplexImage) -> Result<()> {
        check_dims((self.width, self.height), u.dims())
    }

    /// Objective value at `u`.
    pub fn objective(&self, u: &ComplexImage, alpha: f64) -> Result<f64> {
        self.check(u)?;
        let fields: Vec<_> = (0..self.len()).map(|i| self.forward(i, u.data())).collect();
        Ok(alpha * self.tv(u.data()) + self.fidelity(&fields))
    }

    /// Gradient of the smooth data term with respect to (Re u, Im u),
    /// packed as a complex image: Σᵢ conj(cᵢ)∘idft2((1 − y/g)∘dft2(cᵢ∘u)).
    pub fn gradient_fidelity(&self, u: &ComplexImage) -> Result<ComplexImage> {
        self.check(u)?;
        let mut total = vec![Complex64::new(0.0, 0.0); self.width * self.height];
        for i in 0..self.len() {
            let mut field = self.forward(i, u.data());
            for ((z, &yv), &keep) in field.iter_mut().zip(&self.observations[i]).zip(&self.band) {
                if !keep {
                    *z = Complex64::new(0.0, 0.0);
                    continue;
                }
                let g = z.norm_sqr();
                let factor = if g > LOG_FLOOR { 1.0 - yv / g } else { 1.0 };
                *z *= factor;
            }
            self.adjoint_in_place(i, &mut field);
            for (acc, v) in total.iter_mut().zip(&field) {
                *acc += v;
            }
        }
        Ok(ComplexImage::from_raw(self.width, self.height, total))
    }

    /// Starting iterate.
    ///
    /// The flat start has zero phase and the constant modulus whose
    /// predicted total intensity matches the recorded one.
    pub fn initial_estimate(&self, mode: InitMode, seed: u64) -> ComplexImage {
        let recorded: f64 = self.observations.iter().flatten().sum();
        let coverage: f64 = self.coverage.iter().sum();
        let level = if coverage > 0.0 { (recorded / coverage).sqrt() } else { 0.0 };
        match mode {
            InitMode::Flat => ComplexImage::constant(self.width, self.height, Complex64::new(level, 0.0)),
            InitMode::SeededRandom => {
                let mut rng = RandomStream::new(seed, "solver/init");
                ComplexImage::from_fn(self.width, self.height, |_, _| {
                    let amp = level * (0.5 + rng.uniform());
                    let phase = std::f64::consts::TAU * rng.uniform() - std::f64::consts::PI;
                    Complex64::from_polar(amp, phase)
                })
            }
        }
    }
}

/// Full ADMM state; duals are in scaled form.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub u: ComplexImage,
    pub z: Vec<ComplexImage>,
    pub lambda: Vec<ComplexImage>,
    pub w: GradientField,
    pub mu: GradientField,
}

impl AdmmState {
    /// Splitting variables consistent with `u` and zero duals.
    pub fn start(problem: &Problem, u: ComplexImage) -> Self {
        let (w, h) = problem.dims();
        let z = (0..problem.len())
            .map(|i| ComplexImage::from_raw(w, h, problem.forward(i, u.data())))
            .collect();
        let grad = gradient(u.data(), w, h);
        Self {
            lambda: vec![ComplexImage::zeros(w, h); problem.len()],
            mu: GradientField::zeros(w * h),
            w: grad,
            z,
            u,
        }
    }
}

pub fn objective(u: &ComplexImage, ms: &MeasurementSet, alpha: f64) -> Result<f64> {
    Problem::new(ms)?.objective(u, alpha)
}

pub fn gradient_fidelity(u: &ComplexImage, ms: &MeasurementSet) -> Result<ComplexImage> {
    Problem::new(ms)?.gradient_fidelity(u)
}

pub fn solve_tv_map(ms: &MeasurementSet, config: &SolverConfig) -> Result<(ComplexImage, SolverTrace)> {
    let problem = Problem::new(ms)?;
    let start = problem.initial_estimate(config.init, config.seed);
    solve_from(&problem, start, config)
}

/// Runs ADMM from an explicit starting iterate.
pub fn solve_from(
    problem: &Problem,
    start: ComplexImage,
    config: &SolverConfig,
) -> Result<(ComplexImage, SolverTrace)> {
    config.validate()?;
    problem.check(&start)?;
    let (w, h) = problem.dims();
    let n = w * h;
    let mut state = AdmmState::start(problem, start);
    let mut fields: Vec<Vec<Complex64>> = state.z.iter().map(|z| z.data().to_vec()).collect();
    let mut grad = gradient(state.u.data(), w, h);
    // With α = 0 the w-block constrains nothing, so it is dropped.
    let tv_active = config.alpha > 0.0 && config.rho_tv > 0.0;
    let threshold = if tv_active { config.alpha / config.rho_tv } else { 0.0 };
    let ustep_config = SolverConfig {
        rho_tv: if tv_active { config.rho_tv } else { 0.0 },
        ..config.clone()
    };
    let mut trace = SolverTrace::default();

    for iter in 1..=config.max_iters {
        // z-step
        for i in 0..problem.len() {
            let z = state.z[i].data_mut();
            let lam = state.lambda[i].data();
            let y = &problem.observations[i];
            for k in 0..n {
                let v = fields[i][k] + lam[k];
                z[k] = if problem.band[k] {
                    fidelity_prox(v, y[k], config.rho_fourier)
                } else {
                    v
                };
            }
        }
        // w-step
        for k in (0..n).filter(|_| tv_active) {
            state.w.dx[k] = prox::shrink_complex(grad.dx[k] + state.mu.dx[k], threshold);
            state.w.dy[k] = prox::shrink_complex(grad.dy[k] + state.mu.dy[k], threshold);
        }
        // u-step
        let step = u_update(problem, &state, &ustep_config).map_err(|e| match e {
            Error::NumericalFailure { reason, .. } => Error::NumericalFailure {
                iteration: iter,
                reason,
            },
            other => other,
        })?;
        let previous = std::mem::replace(&mut state.u, step.u);
        if state.u.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericalFailure {
                iteration: iter,
                reason: "iterate became non-finite".into(),
            });
        }

        // dual ascent
        let mut res_f = 0.0;
        for i in 0..problem.len() {
            fields[i] = problem.forward(i, state.u.data());
            let z = state.z[i].data();
            let lam = state.lambda[i].data_mut();
            for k in 0..n {
                let d = fields[i][k] - z[k];
                lam[k] += d;
                res_f += d.norm_sqr();
            }
        }
        grad = gradient(state.u.data(), w, h);
        let mut res_tv = 0.0;
        for k in (0..n).filter(|_| tv_active) {
            let dx = grad.dx[k] - state.w.dx[k];
            let dy = grad.dy[k] - state.w.dy[k];
            state.mu.dx[k] += dx;
            state.mu.dy[k] += dy;
            res_tv += dx.norm_sqr() + dy.norm_sqr();
        }

        let u_norm = state.u.norm();
        let rel_change = if u_norm > 0.0 {
            state.u.distance(&previous)? / u_norm
        } else {
            0.0
        };
        let objective = config.alpha * grad.l1() + problem.fidelity(&fields);
        if !objective.is_finite() {
            return Err(Error::NumericalFailure {
                iteration: iter,
                reason: "objective became non-finite".into(),
            });
        }
        trace.rows.push(TraceRow {
            iter,
            objective,
            res_f: res_f.sqrt(),
            res_tv: res_tv.sqrt(),
            rel_change,
        });
        if rel_change < config.rel_tol {
            trace.converged = true;
            break;
        }
    }
    Ok((state.u, trace))
}
