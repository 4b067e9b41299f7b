//! MCMC over group memberships, lifetimes, transitions, affinities and the
//! density series.

mod affinity;
mod cache;
mod chain;
mod config;
mod density;
mod forward_backward;
mod groups;
mod hyper;
mod posterior;
mod probe;
mod sampler;
mod transitions;

pub use affinity::{affinity_gradient, HmcStep};
pub use cache::LinkCache;
pub use chain::{chain_rng, chain_seed, initial_state, run_chain, run_chain_from, run_chains};
pub use config::{KernelSet, SamplerConfig};
pub use forward_backward::{chain_log_prob, forward_filter, sample_backward, ForwardCache};
pub use groups::{num_intervals, sample_interval, GroupMove, GroupOutcome, GroupProposal};
pub use hyper::{beta_log_grad, update_hyperparameters};
pub use posterior::{
    link_probability_csv, pooled_link_probabilities, read_manifest, write_posterior, ChainRecord,
    PosteriorManifest, PosteriorSamples,
};
pub use probe::{log_log_slope, sweep_cost_probe, ProbeAxis, ProbeGrid, ProbeReport, ProbeRow};
pub use sampler::{ChainRng, KernelStats, Sampler};
pub use transitions::{
    conjugate_transition_update, count_transitions, sample_transition_params, TransitionCounts,
    TransitionUpdate,
};
