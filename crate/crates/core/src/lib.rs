//! Piecewise-analytic optimisation toolkit.
//!
//! Functions built from analytic primitives and `max`/`min`/`abs` ([`expr`]),
//! exact one-sided directional derivatives and δ-stationarity tests ([`dini`]),
//! grid scans of approximate stationary sets ([`scan`]), convergence-stability
//! certificates ([`stability`]), reference optimisers with contract checks
//! ([`algos`]) and a catalogue of worked examples ([`zoo`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algos;
pub mod dini;
pub mod error;
pub mod expr;
pub mod grid;
pub mod quadrature;
pub mod scan;
pub mod stability;
pub mod zoo;

pub use error::{Error, Result};
pub use expr::{BoxDomain, CanonicalProgram, Expr, ExprBuilder, SignVector};
pub use grid::GridSpec;
