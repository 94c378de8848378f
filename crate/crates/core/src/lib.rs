// SPDX-License-Identifier: Apache-2.0

//! Periodic traveling wave profiles of nonlinear dispersive equations.
//!
//! The pipeline has three stages:
//!
//! 1. find a real constant solution `C` of the integrated profile equation
//!    ([`shift::find_constants`]);
//! 2. subtract it, leaving a problem `L~ psi = N(psi)` with no integration
//!    constant and a polynomial nonlinearity split into homogeneous terms
//!    ([`shift::build_shifted`]);
//! 3. solve that problem with a stabilized fixed-point iteration in Fourier
//!    space ([`petviashvili::solve`]), optionally accelerated by minimal
//!    polynomial extrapolation ([`mpe`]).
//!
//! The two-component e-Boussinesq system follows the same path in
//! [`boussinesq`]. [`config`] and [`runner`] wrap everything behind a TOML
//! file.

pub mod boussinesq;
pub mod config;
pub mod error;
pub mod models;
pub mod mpe;
pub mod petviashvili;
pub mod postproc;
pub mod roots;
pub mod runner;
pub mod shift;
pub mod spectral;

pub use boussinesq::{BoussinesqParams, BoussinesqShifted, FieldPair};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use models::{PolynomialNonlinearity, ScalarModel};
pub use mpe::MpeConfig;
pub use petviashvili::{IterationSettings, IterationTrace, Outcome, SeedProfile};
pub use runner::{RunOutput, RunReport};
pub use shift::{ConstantBranch, ShiftedProblem};
pub use spectral::{FourierMultiplier, PeriodicGrid, SpectralField};
