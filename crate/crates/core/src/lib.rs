//! Conditional parity: testing, repair and counterfactual checks.
//!
//! A random variable `x` satisfies conditional parity with respect to a
//! protected attribute `a` given discriminatory attributes `z` when the law of
//! `x` given `(a, z)` does not depend on `a`. This crate provides
//!
//! - [`kernels`]: Gram matrices, centering and the dense spectral helpers,
//! - [`kci`]: the kernel conditional-independence test and the empirical
//!   epsilon-parity checker,
//! - [`lp`]: a dense two-phase simplex solver,
//! - [`randomization`]: Markov-kernel and Gaussian randomized decision rules,
//! - [`sem`]: finite structural equation models, d-separation and
//!   counterfactual fairness checks,
//! - [`debias`]: bias-subspace estimation and projection.

pub mod data;
pub mod debias;
pub mod error;
pub mod kci;
pub mod kernels;
pub mod lp;
pub mod randomization;
pub mod sem;
pub mod stats;

pub use data::DataColumn;
pub use error::{Error, Result};
