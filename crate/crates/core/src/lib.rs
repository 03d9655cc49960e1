//! Optimal submission orders for sequential search without recall, where
//! rejections carry information and feedback can improve the paper.
//!
//! Modules, bottom up:
//! - [`numeric`]: exact and floating numeric modes.
//! - [`model`]: journals, instances, belief dynamics, exact evaluation.
//! - [`solver`]: brute force, subset DP, index rules, local search, exact
//!   two-journal prior thresholds, prior sweeps.
//! - [`conditions`]: structural hypotheses with witnesses.
//! - [`lab`]: randomized and exhaustive verification of the structural results.
//! - [`sim`]: Monte Carlo oracle for the submission process.
//! - [`format`]: instance JSON files.
//! - [`cli`]: the `jss` command line.

pub mod cli;
pub mod conditions;
pub mod fixtures;
pub mod format;
pub mod lab;
pub mod model;
pub mod numeric;
pub mod sim;
pub mod solver;

pub use model::{Belief, EvaluationTrace, Instance, Journal, JournalParams, Model, SearchOrder};
pub use numeric::Scalar;
