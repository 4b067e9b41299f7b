//! Nonparametric multi-group membership model for dynamic networks.
//!
//! Groups are born and die over time, nodes join and leave active groups
//! through per-group two-state Markov chains, and links are Bernoulli draws
//! whose logit sums per-group 2x2 affinities selected by the two endpoints'
//! memberships plus a per-step density offset.
//!
//! * [`network`]: dynamic networks, pair masks and the edge-list format.
//! * [`model`]: parameters, the generative process and the likelihood.
//! * [`inference`]: the MCMC engine.
//! * [`eval`]: missing-link and forecasting protocols and their metrics.
//! * [`validation`]: brute-force oracles and the joint-distribution test.

pub mod error;
pub mod eval;
pub mod inference;
pub mod model;
pub mod network;
pub mod validation;

pub use error::{Error, Result};
