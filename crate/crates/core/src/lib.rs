//! Exact-arithmetic solvers for dual bin packing: maximize the number of
//! items packed into `m` unit-capacity bins.
//!
//! The crate provides the greedy baselines (First Fit, First Fit
//! Increasing, RSFF), an exact configuration DP and a backtracking oracle,
//! a PTAS based on grouping and rounding large items, a tape-advice online
//! protocol built on that PTAS, and the reduction from binary separation
//! used for advice lower bounds.

pub mod advice;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod greedy;
pub mod instance;
pub mod online;
pub mod ptas;
pub mod reduction;
pub mod weight;

pub use error::{Error, Result};
pub use instance::{verify_packing, Instance, Packing, VerificationReport};
pub use weight::{weight_sum, Weight};
