//! Raw Bloch-equation models for quantum boxes.
//!
//! The crate couples two independent computations of the same dynamics and
//! checks them against each other:
//!
//! - [`algebra`] re-derives every right-hand side mechanically from the
//!   second-quantized Hamiltonians, by normal ordering commutators of
//!   creation/annihilation operators and reducing the result to
//!   density-matrix entries;
//! - [`models`] transcribes the equations by hand: the one-species and
//!   two-species Liouville forms, the degenerate (full and condensed)
//!   variants, the electron-hole change of variables, and the reduced
//!   population/polarization system.
//!
//! [`integrators`] marches the models with a structure-preserving unitary
//! midpoint propagator (Liouville forms) or classical Runge-Kutta (the
//! transformed systems), [`diagnostics`] measures the structural invariants
//! along a trajectory, [`verification`] packages the cross-checks, and
//! [`config`]/[`output`]/[`compare`] back the `qbloch` command-line tool.

pub mod algebra;
pub mod compare;
pub mod config;
pub mod diagnostics;
pub mod fields;
pub mod integrators;
pub mod linalg;
pub mod models;
pub mod output;
pub mod verification;

pub use num_complex::Complex64;
