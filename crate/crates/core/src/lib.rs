//! Primal-dual online bipartite matching.
//!
//! Water-filling algorithms for free disposal, additive budgets (and stochastic
//! rewards), sub-additive rewards and separable concave rewards, together with
//! exact offline oracles, Monte-Carlo experiment plumbing and dual audits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algo;
pub mod audit;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod model;
pub mod multilinear;
pub mod oracle;
pub mod par;
pub mod stats;

pub use error::{Error, Result};
