//! Stabilized linear second-order time stepping for the Cahn-Hilliard
//! equation on `[-1, 1]^2` with natural (Neumann) boundary conditions.
//!
//! The crate is organised bottom-up:
//!
//! * [`potential`]: the truncated double-well potential and its derivatives.
//! * [`spectral1d`]: Legendre polynomials, Gauss quadrature and the 1-D
//!   Galerkin basis with its mass/stiffness matrices.
//! * [`field2d`]: tensor-product fields, transforms, norms and the
//!   dealiased nonlinear projection.
//! * [`timestepping`]: SL-BDF2, SL-CN and the first-order bootstrap scheme.
//! * [`diagnostics`]: energies, modified energies, traces and error norms.
//! * [`harness`]: seeded initial data, runs, stabilizer sweeps and
//!   convergence studies.

// `!(x <= tol)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod field2d;
pub mod harness;
pub mod potential;
pub mod spectral1d;
pub mod timestepping;

pub use diagnostics::{
    energy_eps, error_norms, modified_energy, stability_verdict, EnergyTrace, ErrorNorms, TraceRow,
    Verdict,
};
pub use error::{Error, Result};
pub use field2d::{Field, NodalGrid};
pub use potential::{BlendMode, PotentialSpec};
pub use spectral1d::{Basis1D, BasisKind, NodeSet};
pub use timestepping::{bootstrap_first_step, SchemeKind, SchemeParams, State, StepOperator};
