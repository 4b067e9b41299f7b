use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Hyperparams;

/// Which kernels a sweep runs. All on by default; hyperparameter updates also
/// need [`SamplerConfig::sample_hyperparams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSet {
    pub memberships: bool,
    pub groups: bool,
    pub transitions: bool,
    pub affinities: bool,
    pub density: bool,
}

impl Default for KernelSet {
    fn default() -> Self {
        Self {
            memberships: true,
            groups: true,
            transitions: true,
            affinities: true,
            density: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub burn_in: usize,
    pub samples: usize,
    pub chains: usize,
    pub thin: usize,
    /// Restricted Gibbs sweeps per group proposal (`L`).
    pub gibbs_sweeps: usize,
    pub hmc_step: f64,
    pub hmc_leaps: usize,
    pub eps_rate: f64,
    pub hyper_rate: f64,
    pub seed: u64,
    pub sample_hyperparams: bool,
    /// Starting hyperparameters (fixed unless `sample_hyperparams`).
    pub hyper: Hyperparams,
    pub kernels: KernelSet,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            burn_in: 800,
            samples: 400,
            chains: 10,
            thin: 1,
            gibbs_sweeps: 5,
            hmc_step: 0.01,
            hmc_leaps: 10,
            eps_rate: 0.01,
            hyper_rate: 0.001,
            seed: 0,
            sample_hyperparams: false,
            hyper: Hyperparams::default(),
            kernels: KernelSet::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("sampler config: {what}")));
        if self.chains == 0 {
            return bad("chains must be positive");
        }
        if self.thin == 0 {
            return bad("thin must be at least 1");
        }
        if self.gibbs_sweeps == 0 {
            return bad("gibbs_sweeps must be at least 1");
        }
        if !(self.hmc_step.is_finite() && self.hmc_step > 0.0) {
            return bad("hmc_step must be positive");
        }
        if !(self.eps_rate.is_finite() && self.eps_rate > 0.0) {
            return bad("eps_rate must be positive");
        }
        if !(self.hyper_rate.is_finite() && self.hyper_rate > 0.0) {
            return bad("hyper_rate must be positive");
        }
        self.hyper.validate()
    }

    /// Group proposals per sweep: one per expected group plus one.
    ///
    /// Depends only on `lambda` and `gamma`, which the group kernel never
    /// changes, so repeating the kernel keeps the posterior invariant.
    pub fn group_moves(hyper: &Hyperparams, num_steps: usize) -> usize {
        hyper.expected_total_groups(num_steps).ceil() as usize + 1
    }
}
