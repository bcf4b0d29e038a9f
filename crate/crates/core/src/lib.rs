//! Rényi entropy power along the nonlinear heat equation `u_t = Δ(u^p)`.
//!
//! * [`profiles`]: Gaussian and Barenblatt source solutions and the sharp
//!   constants `gamma_{n,p}` and `S_n`;
//! * [`functionals`]: `H_p`, `N_p`, `F_p`, `I_p`, `D_p`, `Υ_p` on sampled densities;
//! * [`solver`]: conservative explicit finite-volume solver;
//! * [`verification`]: verdicts for concavity, the entropy identities and the
//!   isoperimetric bound.

pub mod error;
pub mod functionals;
pub mod grid;
pub mod initial;
pub mod io;
pub mod profiles;
pub mod solver;
pub mod verification;

pub use error::{Error, Result};
pub use grid::{DensityField, Geometry, Grid};
