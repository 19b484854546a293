//! Periodic-box spectral discretization.

mod fft;
mod field;
mod grid;
mod ops;
pub mod snapshot;

pub use fft::FftPlan;
pub use field::{ComplexField, Space};
pub use grid::Grid;
pub use ops::Spectral;
