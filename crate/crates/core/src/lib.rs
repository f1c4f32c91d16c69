//! Deterministic synthetic multivariate time-series benchmark.
//!
//! Generates dataset instances with controlled signal components, noise
//! types and signal-to-noise ratios, and evaluates forecasters against the
//! noise-free signal in the time and frequency domains.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod baseline;
pub mod bench;
pub mod components;
pub mod config;
pub mod dataset;
pub mod error;
pub mod exchange;
pub mod metrics;
pub mod prng;
pub mod report;
pub mod stats;
pub mod synthesis;

pub use error::{Error, Result};
