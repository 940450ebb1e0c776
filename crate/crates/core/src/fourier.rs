//! Unitary 2-D DFT and centered-spectrum index helpers.
//!
//! Both directions are scaled by 1/√(width·height), so `idft2` is the exact
//! inverse and the adjoint of `dft2`. Frequency (0,0) is DC before shifting.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_dims, invalid, Result};
use crate::image::ComplexImage;

/// Reusable forward/inverse plans for one grid size.
#[derive(Clone)]
pub struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid(format!("cannot transform a {width}x{height} grid")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
            scale: 1.0 / ((width * height) as f64).sqrt(),
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn forward(&self, img: &ComplexImage) -> Result<ComplexImage> {
        check_dims(self.dims(), img.dims())?;
        let mut out = img.clone();
        self.forward_in_place(out.data_mut());
        Ok(out)
    }

    pub fn inverse(&self, img: &ComplexImage) -> Result<ComplexImage> {
        check_dims(self.dims(), img.dims())?;
        let mut out = img.clone();
        self.inverse_in_place(out.data_mut());
        Ok(out)
    }

    /// Forward transform of a row-major buffer of this plan's size.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_inv, &self.col_inv);
    }

    fn run(&self, buf: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        assert_eq!(buf.len(), self.width * self.height, "buffer does not match plan size");
        rows.process(buf);

        let (w, h) = (self.width, self.height);
        if h > 1 {
            let mut column = vec![Complex64::new(0.0, 0.0); h];
            let mut scratch = vec![Complex64::new(0.0, 0.0); cols.get_inplace_scratch_len()];
            for c in 0..w {
                for r in 0..h {
                    column[r] = buf[r * w + c];
                }
                cols.process_with_scratch(&mut column, &mut scratch);
                for r in 0..h {
                    buf[r * w + c] = column[r];
                }
            }
        }
        for z in buf.iter_mut() {
            *z *= self.scale;
        }
    }
}

/// Orthonormal forward 2-D DFT.
pub fn dft2(img: &ComplexImage) -> Result<ComplexImage> {
    Fft2::new(img.width(), img.height())?.forward(img)
}

/// Orthonormal inverse 2-D DFT; exact inverse and adjoint of [`dft2`].
pub fn idft2(img: &ComplexImage) -> Result<ComplexImage> {
    Fft2::new(img.width(), img.height())?.inverse(img)
}

/// Moves DC from (0,0) to (⌊H/2⌋, ⌊W/2⌋).
pub fn fftshift_center<T: Clone>(data: &[T], width: usize, height: usize) -> Vec<T> {
    roll(data, width, height, width / 2, height / 2)
}

/// Inverse of [`fftshift_center`].
pub fn unshift<T: Clone>(data: &[T], width: usize, height: usize) -> Vec<T> {
    roll(data, width, height, width - width / 2, height - height / 2)
}

pub fn shift_image(img: &ComplexImage) -> ComplexImage {
    ComplexImage::from_raw(
        img.width(),
        img.height(),
        fftshift_center(img.data(), img.width(), img.height()),
    )
}

pub fn unshift_image(img: &ComplexImage) -> ComplexImage {
    ComplexImage::from_raw(img.width(), img.height(), unshift(img.data(), img.width(), img.height()))
}

fn roll<T: Clone>(data: &[T], width: usize, height: usize, dx: usize, dy: usize) -> Vec<T> {
    assert_eq!(data.len(), width * height);
    let mut out = data.to_vec();
    for r in 0..height {
        let rr = (r + dy) % height;
        for c in 0..width {
            let cc = (c + dx) % width;
            out[rr * width + cc] = data[r * width + c].clone();
        }
    }
    out
}

/// Signed frequency of unshifted DFT index `k` on an axis of length `n`,
/// in `[−⌊n/2⌋, ⌈n/2⌉ − 1]`.
pub fn centered_index(k: usize, n: usize) -> isize {
    ((k + n / 2) % n) as isize - (n / 2) as isize
}

/// True when unshifted bin `(row, col)` lies in the centered square band
/// `|m_c| ≤ keep·⌊W/2⌋` and `|n_c| ≤ keep·⌊H/2⌋`.
pub fn within_square_band(row: usize, col: usize, width: usize, height: usize, keep: f64) -> bool {
    const SLACK: f64 = 1e-9;
    let mc = centered_index(col, width).unsigned_abs() as f64;
    let nc = centered_index(row, height).unsigned_abs() as f64;
    mc <= keep * (width / 2) as f64 + SLACK && nc <= keep * (height / 2) as f64 + SLACK
}
