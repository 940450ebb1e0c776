//! Spectrally shaped binary masks, a coded-diffraction-pattern forward model
//! with sensor degradation, and TV-regularized Poisson MAP phase retrieval.

pub mod error;
pub mod fourier;
pub mod image;
pub mod io;
pub mod maskgen;
pub mod metrics;
pub mod optics;
pub mod random;
pub mod solver;

pub use error::{Error, Result};
pub use image::{ComplexImage, RealImage};
pub use num_complex::Complex64;
