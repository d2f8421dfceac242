//! Two-stage tomographic absorption spectroscopy (TAS) reconstruction.
//!
//! Stage 1 recovers per-wavelength absorption coefficients from line-of-sight
//! absorbance with (optionally superiorized) ART. Stage 2 recovers the
//! temperature field `x` and the concentration field `y` from those
//! coefficients, where each coefficient factors as `beta_tilde_k(x) * y`.
//!
//! Stage 2 solvers:
//! - [`solver::dpa_run`]: the derivative-free descent pairs algorithm (DPA),
//!   alternating constant-step sweeps over the wavelengths for `x` (through
//!   line-strength ratios) and then for `y` (through residuals).
//! - [`superiorization::sup_dpa_run`]: DPA with target-function-reducing
//!   perturbations (total variation or Tikhonov smoothness) interlaced before
//!   every inner update.
//! - [`nf::nf_fit_field`]: the per-pixel trust-region nonlinear fitting
//!   baseline.
//!
//! The [`harness`] module wires geometry, phantoms, noise, both stages and
//! the metrics into reproducible experiments.

pub mod error;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod nf;
pub mod phantoms;
pub mod solver;
pub mod spectroscopy;
pub mod stage1;
pub mod superiorization;

pub use error::{Error, Result};
pub use field::Field;
