//! Numerical laboratory for hyperbolic ("relativistic") diffusion models of
//! log-prices.
//!
//! * [`grid`]: uniform 1-D grids, fields and the three-point Laplacian.
//! * [`telegraph`]: explicit solver for `lambda u_tt + u_t = K u_xx - mu^2 u`.
//! * [`particles`]: Kac persistent random walk, an independent Monte-Carlo
//!   oracle for the telegraph density.
//! * [`spectral_kg`]: two-component Klein-Gordon Hamiltonian, its
//!   pseudo-Hermitian metric and exact propagator in Fourier space.
//! * [`closed_forms`]: heat kernel, Cauchy/Poisson kernel, Black-Scholes.
//! * [`measures`]: densities from states, robust statistics, Martingale defect.
//! * [`residuals`]: residual checks of the small- and large-lambda limits.

pub mod closed_forms;
pub mod error;
pub mod grid;
pub mod measures;
pub mod params;
pub mod particles;
pub mod quadrature;
pub mod residuals;
pub mod spectral_kg;
pub mod telegraph;

pub use error::{Error, Result};
pub use grid::{Boundary, ComplexField, Field, Grid1D};
pub use params::ModelParams;
