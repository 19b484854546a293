//! Pseudospectral simulation and diagnostics for the defocusing nonlinear
//! Schrödinger equation with nonlinear damping and a nonlinear potential,
//!
//! ```text
//! i ∂t u + Δu + i a(x)|u|^{2σ₂} u = |u|^{2σ₁} u + V(x)|u|^{2σ₃} u
//! ```
//!
//! on a periodic box standing in for ℝ^d. The crate integrates the equation
//! with Strang splitting (exact linear flow, exact pointwise nonlinear flow),
//! evaluates the mass, energy, Morawetz and interaction functionals, checks
//! the mass/energy/virial evolution laws along a trajectory, and produces
//! scattering diagnostics from free-propagator pull-backs.

pub mod error;
pub mod evolution;
pub mod functionals;
pub mod hypotheses;
pub mod identities;
pub mod profiles;
pub mod runner;
pub mod scattering;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
pub use spectral::{ComplexField, Grid, Space, Spectral};
