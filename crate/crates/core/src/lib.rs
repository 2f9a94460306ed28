//! Numerical toolkit for first-order linear differential constraints with
//! variable coefficients on the periodic unit cell.
//!
//! The crate is organised around a few interchangeable families, each exposed
//! through a [`registry::Registry`] so that callers (the `aqc` binary, tests)
//! pick variants by label at runtime:
//!
//! * coefficient fields `A^i(x)` ([`symbols::catalog`]),
//! * energy densities `f(x, u, ξ)` ([`densities`]),
//! * spatial cutoffs `η` ([`pseudodiff::cutoff`]).
//!
//! On top of them sit the pointwise symbol algebra ([`symbols`]), periodic
//! fields with spectral transforms ([`torus`]), the frozen-coefficient
//! constraint-free subspace ([`afree`]), the cell-problem envelope solver
//! ([`envelope`]), torus pseudo-differential operators ([`pseudodiff`]) and
//! the relaxation bracket ([`relaxation`]).

pub mod afree;
pub mod densities;
pub mod envelope;
pub mod error;
pub mod linalg;
pub mod pseudodiff;
pub mod registry;
pub mod relaxation;
pub mod symbols;
pub mod torus;

pub use error::{Error, Result};
