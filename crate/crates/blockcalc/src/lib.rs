//! Block-creation design calculator and transaction-conflict simulator for
//! permissioned blockchains.
//!
//! The library answers two questions an operator faces when tuning an
//! ordering service:
//!
//! 1. **Latency** — how long does an average transaction take to get into a
//!    block and through validation, as a function of batch size, batch
//!    timeout, and environmental parameters? See [`latency_model`].
//! 2. **Success rate** — under optimistic (MVCC-style) validation, what
//!    fraction of a block's transactions survive intra-block read/write
//!    conflicts? See [`conflict_model`] for the closed-form answer and
//!    [`simulator`] for the Monte Carlo counterpart used to validate it.
//!
//! Workloads are described by ranged Zipfian key distributions
//! ([`distributions`]), which skew traffic toward low (forward) or high
//! (reversed) key indices.
//!
//! All randomized components take explicit 64-bit seeds and are fully
//! deterministic: identical inputs produce bit-identical outputs,
//! including across parallel trial execution.

pub mod conflict_model;
pub mod distributions;
mod error;
pub mod latency_model;
pub mod simulator;

pub use error::{Error, Result};
