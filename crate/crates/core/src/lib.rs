//! Minimally complex models (MCMs) for binary data.
//!
//! An MCM is a spin model made of independent complete components: blocks of
//! basis operators that carry every interaction among themselves and none
//! with other blocks. Their evidence under Jeffreys' prior has a closed form,
//! so the best model can be found by exact Bayesian comparison.
//!
//! The usual pipeline is
//! [`Dataset::load`] → [`best_im_exhaustive`] (or [`best_im_heuristic`]) →
//! [`best_mcm_exhaustive`] (or [`best_mcm_greedy`]) → [`FittedMcm::fit`].
//!
//! Spins are stored as bits: bit `i` of a [`State`] is `1` when `s_i = -1`.

pub mod basis;
pub mod cli;
pub mod dataset;
pub mod enumeration;
pub mod error;
pub mod evidence;
pub mod gf2;
pub mod partition;
pub mod report;
pub mod sampling;
pub mod search;

pub use basis::{best_im_exhaustive, best_im_heuristic, Basis, HeuristicOptions, HeuristicOutcome};
pub use dataset::{BlockCounts, Dataset, Relabel};
pub use error::{Error, Result};
pub use evidence::{
    icc_log_evidence, mcm_log_evidence, mcm_max_log_likelihood, Block, EvidenceReport, McmStructure,
};
pub use gf2::{complete_basis, invert_mod2, GaugeTransform, Operator, State};
pub use partition::enumerate_partitions;
pub use sampling::{generate_synthetic, FittedMcm};
pub use search::{best_mcm_exhaustive, best_mcm_greedy, MergeTrace, SearchOptions};
