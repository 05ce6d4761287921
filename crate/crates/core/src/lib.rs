//! Profit-driven classification trees for customer churn.
//!
//! Trees are induced by an evolutionary search that maximizes the expected
//! maximum profit for customer churn (EMPC) minus a per-leaf complexity
//! penalty. The crate also carries the full profit/accuracy evaluation
//! engine, a greedy Gini baseline, and a cross-validated tuner for the
//! penalty weight.
//!
//! Module map:
//!
//! - [`data`]: CSV ingestion, schema handling, stratified folds, synthetic data.
//! - [`tree`]: tree representation, fitting, scoring, constraints, export.
//! - [`evaluate`]: EMPC/MPC, η̄-based measures, AUC, MER, threshold metrics.
//! - [`evolve`]: the evolutionary search.
//! - [`baseline`]: greedy CART-style tree and fitness-based pruning.
//! - [`tune`]: 5×2 cross-validated λ grid search and the benchmark harness.

// Lets unit tests share the integration-test oracles, which name the crate.
#[cfg(test)]
extern crate self as proftree;

pub mod baseline;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod evolve;
pub mod tree;
pub mod tune;

pub use error::{Error, Result};
