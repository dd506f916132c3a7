//! Ground states of the focusing nonlinear Schrödinger energy on cubic grid
//! graphs, together with numerical checks of the Sobolev and
//! Gagliardo–Nirenberg inequalities that govern their existence.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: truncated grid graphs and their line decomposition,
//! * [`function`]: exact piecewise-linear norms, energies and gradients,
//! * [`inequalities`]: inequality checks and empirical constant estimation,
//! * [`ground_state`]: mass-constrained minimization, probes and phase sweeps,
//! * [`io`]: versioned JSON and CSV documents.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod function;
pub mod grid;
pub mod ground_state;
pub mod inequalities;
pub mod io;
pub mod parallel;
pub mod random;

pub use error::{Error, Result};
pub use function::{EnergyBreakdown, GraphFunction, Mesh};
pub use grid::{Boundary, GridSpec, MetricGrid};
pub use parallel::Execution;
