//! Randomized decision rules that equalize conditional laws across groups.
//!
//! - [`pmfs`]: score binning and the per-`(y, a)` score histograms,
//! - [`kernels`]: the Markov-kernel pair obtained from a linear program,
//! - [`brier`]: Brier scores,
//! - [`sat`]: the latent-ability test-score model and its evaluation,
//! - [`gaussian`]: the minimal-noise randomizer for Gaussian scores.

pub mod brier;
pub mod gaussian;
pub mod kernels;
pub mod pmfs;
pub mod sat;

pub use brier::brier_score;
pub use gaussian::{gaussian_randomizer, GaussianRandomizer, GaussianScoreModel};
pub use kernels::{
    apply_kernel, build_eo_lp, build_eo_lp_frozen, randomize, row_means, solve_eo_kernels, CostSpec,
    MarkovKernelPair,
};
pub use pmfs::{assign_bin, estimate_conditional_pmfs, quantile_edges, ConditionalPmfSet};
pub use sat::{evaluate_sat, simulate_sat_model, BayesPredictor, GroupBrier, SatEvaluation, SatModelParams, SatSample};
