//! Empirical-Bayes online learning-to-rank laboratory.
//!
//! The crate simulates an online ranking service under position and
//! selection bias, with new items arriving over time, and compares ranking
//! policies on that simulation:
//!
//! - [`letor`] parses LETOR/SVMLight datasets, splits and normalizes them.
//! - [`click`] is the biased-click user model and the item-arrival process.
//! - [`bayes`] holds per-(query, item) behavior statistics and the Beta
//!   posterior quantities built from them.
//! - [`special`] provides `ln Γ`, `ln B` and the digamma function.
//! - [`prior`] is the linear prior model that maps static features to the
//!   Beta prior parameter `alpha`, trained by marginal likelihood.
//! - [`policy`] implements EBRank and the baselines (BM25, counterfactual
//!   top-k / random-k / epsilon, UCB).
//! - [`metrics`] has DCG/NDCG, discounted cumulative NDCG, offline cold and
//!   warm evaluation, and feature exploitation ratios.
//! - [`harness`] runs whole experiments and writes step CSVs and reports.
//! - [`synth`] generates the synthetic LETOR corpus used by the examples and
//!   the acceptance tests.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod bayes;
pub mod click;
mod error;
pub mod harness;
pub mod letor;
pub mod metrics;
mod numeric;
pub mod policy;
pub mod prior;
pub mod special;
pub mod synth;

pub use error::{Error, Result};
