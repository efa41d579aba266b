//! Variable-metric forward-backward splitting for composite monotone inclusions.
//!
//! The crate works in `ℝⁿ` with dense matrices and needs only `alloc`. It provides
//!
//! * metrics `U ∈ P_α` and the Loewner order ([`linalg`]),
//! * maximally monotone operators exposed through resolvents, a closed-form
//!   prox/projection catalog and cocoercive operators ([`operators`]),
//! * metric, step and error sequences with hypothesis validators ([`schedules`]),
//! * the forward-backward iteration with quasi-Fejér diagnostics ([`fb`]),
//! * a dual forward-backward method for strongly monotone composite inclusions
//!   ([`strong`]) and a primal-dual method for cocoercive ones ([`cocoercive`]),
//! * independent reference solvers used to verify all of the above ([`oracles`]).
#![cfg_attr(not(test), no_std)]
// NaN must fail every bound check, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cocoercive;
pub mod error;
pub mod fb;
pub mod linalg;
pub mod operators;
pub mod oracles;
pub mod schedules;
pub mod strong;

pub use error::{Error, Result};
pub use linalg::{LinearMap, Matrix, Metric, Vector};
