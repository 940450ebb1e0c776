use num_complex::Complex64;

/// Proximal map of the per-bin Poisson term `½(|z|² − y·log|z|²)` with
/// penalty `rho`: keeps the phase of `v` and sets the modulus to the
/// nonnegative root of `(1 + ρ)a² − ρ|v|a − y = 0`.
pub fn fidelity_prox(v: Complex64, y: f64, rho: f64) -> Complex64 {
    let m = v.norm();
    let a = (rho * m + (rho * rho * m * m + 4.0 * (1.0 + rho) * y).sqrt()) / (2.0 * (1.0 + rho));
    if m > 0.0 {
        v * (a / m)
    } else {
        Complex64::new(a, 0.0)
    }
}

/// Soft threshold `sign(w)·max(|w| − t, 0)`.
pub fn tv_shrink(w: f64, threshold: f64) -> f64 {
    let mag = w.abs() - threshold;
    if mag > 0.0 {
        mag.copysign(w)
    } else {
        0.0
    }
}

pub(crate) fn shrink_complex(z: Complex64, threshold: f64) -> Complex64 {
    Complex64::new(tv_shrink(z.re, threshold), tv_shrink(z.im, threshold))
}
