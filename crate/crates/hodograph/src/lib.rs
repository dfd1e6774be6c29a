//! Solvers for the hyperbolic Monge-Ampere equation `w_xx w_yy - w_xy^2 = -lambda(y)^2`
//! on strip-like domains.
//!
//! The hodograph transformation exchanges the periodic coordinate `x` with the
//! slope `p = w_x` and turns the nonlinear equation into the linear damped wave
//! equation `2 lambda(s+t) x_st + lambda'(s+t)(x_s + x_t) = 0` in characteristic
//! coordinates `s = (u+p)/2`, `t = (u-p)/2`. This crate solves the resulting
//! Cauchy-Goursat problem as a two-dimensional Volterra integral equation of the
//! second kind, resolves the corner singularity of the semi-infinite problem with
//! a parametrix-corrector split, verifies energy and stability estimates, and
//! inverts the hodograph map back to physical surfaces with fold detection.
//!
//! Module map:
//! - [`curvature`]: the coefficient `lambda(u)`, the `y <-> u` change of variables,
//!   and the contraction bounds `m0`, `M` of `g(u) = lambda(u)/u`.
//! - [`boundary`]: Cauchy-Goursat data `{g, h, f, n}`, weak-compatibility checks,
//!   the boundary forcing `G`, and the Volterra kernels.
//! - [`grid`]: truncated-cone and rectangle grids, grid fields, stencils.
//! - [`volterra`]: the fixed-point solver on the truncated cone, attainment
//!   checks, and contour-identity cross checks.
//! - [`parametrix`]: the semi-infinite Goursat problem via the arcsine-type
//!   parametrix, its residual, and the contractive corrector solve.
//! - [`energy`]: line energies, the energy identity, the Gronwall bound, and the
//!   linearized stability experiment.
//! - [`reconstruct`]: slope/height recovery, fold masks, Monge-Ampere residuals,
//!   and periodic extension of physical patches.
//! - [`exact`]: closed-form solutions (arcsine, product, polynomial) used as
//!   oracles throughout the test suites.
//! - [`config`], [`report`], [`commands`]: the CLI layer (flat key-value configs,
//!   TSV outputs, run manifests).

pub mod boundary;
pub mod commands;
pub mod config;
pub mod curvature;
pub mod energy;
pub mod error;
pub mod exact;
pub mod grid;
pub mod parametrix;
pub mod quadrature;
pub mod reconstruct;
pub mod report;
pub mod volterra;

pub use boundary::CauchyGoursatData;
pub use curvature::{ContractionBounds, CurvatureProfile};
pub use error::Error;
pub use grid::{Field, Grid};
pub use volterra::SolveReport;
