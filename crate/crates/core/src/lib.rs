//! Bayesian model of next-token generation.
//!
//! Conjugate Beta/Dirichlet updating, finite Dirichlet-mixture priors,
//! closed-form sequence probabilities, greedy in-context-learning
//! decomposition, entropy and majorization tools, and rendering of
//! next-token probability traces.

pub mod cli;
pub mod compositions;
pub mod conjugate;
pub mod density;
pub mod embedding;
pub mod entropy;
pub mod error;
pub mod icl;
pub mod mixture;
pub mod sequence;
pub mod trace;

pub use error::{Error, Result};
