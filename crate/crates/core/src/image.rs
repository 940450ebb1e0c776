//! Row-major 2-D grids of complex amplitudes and nonnegative intensities.
//!
//! Origin is the top-left pixel; index `(row, col)` lives at `row * width + col`.

use num_complex::Complex64;

use crate::error::{check_dims, invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
        check_grid(width, height, data.len())?;
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("complex image contains non-finite values"));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, Complex64::new(0.0, 0.0))
    }

    pub fn constant(width: usize, height: usize, value: Complex64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self { width, height, data }
    }

    /// Combines amplitude and phase (radians) grids of equal size.
    pub fn from_polar(width: usize, height: usize, amplitude: &[f64], phase: &[f64]) -> Result<Self> {
        check_grid(width, height, amplitude.len())?;
        check_grid(width, height, phase.len())?;
        let data = amplitude
            .iter()
            .zip(phase)
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect();
        Self::new(width, height, data)
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self { width, height, data }
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_raw(self.width, self.height, self.data.iter().map(|&z| f(z)).collect())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map(|z| z * factor)
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &ComplexImage) -> Result<Self> {
        check_dims(self.dims(), other.dims())?;
        Ok(Self::from_raw(
            self.width,
            self.height,
            self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        ))
    }

    /// Σ conj(self)·other.
    pub fn inner(&self, other: &ComplexImage) -> Result<Complex64> {
        check_dims(self.dims(), other.dims())?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    /// Σ |x|².
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Euclidean distance ‖self − other‖.
    pub fn distance(&self, other: &ComplexImage) -> Result<f64> {
        check_dims(self.dims(), other.dims())?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn amplitude(&self) -> RealImage {
        RealImage::from_raw(self.width, self.height, self.data.iter().map(|z| z.norm()).collect())
    }

    /// Principal-value phase in (−π, π].
    pub fn phase(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.arg()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RealImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_grid(width, height, data.len())?;
        if let Some(bad) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid(format!(
                "real image values must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::from_raw(width, height, vec![0.0; width * height])
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self { width, height, data }
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_complex(&self) -> ComplexImage {
        ComplexImage::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }
}

fn check_grid(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(invalid(format!("grid dimensions must be positive, got {width}x{height}")));
    }
    if len != width * height {
        return Err(invalid(format!(
            "data length {len} does not match {width}x{height} grid"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lengths_and_values() {
        assert!(ComplexImage::new(2, 2, vec![Complex64::new(0.0, 0.0); 3]).is_err());
        assert!(ComplexImage::new(0, 2, vec![]).is_err());
        assert!(ComplexImage::new(1, 1, vec![Complex64::new(f64::NAN, 0.0)]).is_err());
        assert!(RealImage::new(1, 2, vec![1.0, -0.5]).is_err());
        assert!(RealImage::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(RealImage::new(1, 2, vec![1.0, 0.0]).is_ok());
    }

    #[test]
    fn polar_round_trip() {
        let img = ComplexImage::from_polar(2, 1, &[1.0, 2.0], &[0.5, -1.0]).unwrap();
        let amp = img.amplitude();
        let ph = img.phase();
        assert!((amp.data()[1] - 2.0).abs() < 1e-15);
        assert!((ph[0] - 0.5).abs() < 1e-15);
        assert!((ph[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_argument() {
        let a = ComplexImage::constant(2, 2, Complex64::new(0.0, 1.0));
        let b = ComplexImage::constant(2, 2, Complex64::new(1.0, 0.0));
        assert_eq!(a.inner(&b).unwrap(), Complex64::new(0.0, -4.0));
    }
}
