//! Joint-distribution test: marginal-conditional (forward) simulation against
//! successive-conditional simulation that alternates sweeps and fresh data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{batch_means_se, mean_se};
use crate::error::Result;
use crate::inference::{
    conjugate_transition_update, KernelSet, Sampler, SamplerConfig, TransitionUpdate,
};
use crate::model::{sample_network, sample_state, Hyperparams, ModelState};
use crate::network::{DynamicNetwork, PairMask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeConfig {
    pub nodes: usize,
    pub steps: usize,
    pub directed: bool,
    pub hyper: Hyperparams,
    /// Fixed `epsilon_t` at every step.
    pub density: f64,
    pub forward_draws: usize,
    pub rounds: usize,
    /// Sweeps per round between data refreshes; 0 makes both sides forward draws.
    pub sweeps_per_round: usize,
    pub batches: usize,
    pub seed: u64,
    pub sampler: SamplerConfig,
}

impl Default for GewekeConfig {
    fn default() -> Self {
        let hyper = Hyperparams {
            lambda: 1.5,
            gamma: 0.3,
            alpha: 1.0,
            beta: 3.0,
            nu: 1.0,
        };
        Self {
            nodes: 8,
            steps: 5,
            directed: false,
            hyper,
            density: -1.0,
            forward_draws: 50_000,
            rounds: 50_000,
            sweeps_per_round: 1,
            batches: 50,
            seed: 17,
            sampler: SamplerConfig {
                hyper,
                kernels: KernelSet {
                    density: false,
                    ..KernelSet::default()
                },
                sample_hyperparams: false,
                ..SamplerConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeStat {
    pub name: String,
    pub forward_mean: f64,
    pub forward_se: f64,
    pub chain_mean: f64,
    pub chain_se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeReport {
    pub stats: Vec<GewekeStat>,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.stats.iter().map(|s| s.z.abs()).fold(0.0, f64::max)
    }
}

/// Names of the tracked statistics; `K_t` for each of five steps come first.
pub const GEWEKE_STATISTICS: [&str; 12] = [
    "K_1", "K_2", "K_3", "K_4", "K_5", "groups", "memberships", "sum_a", "sum_b", "sum_theta01",
    "sum_theta11", "links",
];

fn statistics(state: &ModelState, net: &DynamicNetwork) -> Vec<f64> {
    let timeline = state.timeline();
    let mut out: Vec<f64> = (0..5)
        .map(|t| if t < state.num_steps() { timeline.active_count(t) as f64 } else { 0.0 })
        .collect();
    let g = &state.groups;
    out.push(g.len() as f64);
    out.push(g.iter().map(|g| g.members.count_ones() as f64).sum());
    out.push(g.iter().map(|g| g.transition.join).sum());
    out.push(g.iter().map(|g| g.transition.leave).sum());
    out.push(g.iter().map(|g| g.affinity.0[0][1]).sum());
    out.push(g.iter().map(|g| g.affinity.0[1][1]).sum());
    out.push((0..net.num_steps()).map(|t| net.edge_count(t) as f64).sum());
    out
}

fn forward_draw(cfg: &GewekeConfig, rng: &mut ChaCha8Rng) -> Result<(ModelState, DynamicNetwork)> {
    let state = sample_state(&cfg.hyper, cfg.nodes, cfg.steps, cfg.directed, vec![cfg.density; cfg.steps], rng)?;
    let net = sample_network(&state, rng);
    Ok((state, net))
}

/// Runs both simulations and reports a z-score per statistic.
///
/// The density kernel and hyperparameter updates are off: both are optimizers
/// rather than samplers. `transition_update` replaces the transition kernel,
/// which is how a deliberately broken kernel is tested.
pub fn geweke_joint_test(cfg: &GewekeConfig, transition_update: Option<TransitionUpdate>) -> Result<GewekeReport> {
    let update = transition_update.unwrap_or(conjugate_transition_update);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let columns = GEWEKE_STATISTICS.len();

    let mut forward = vec![Vec::with_capacity(cfg.forward_draws); columns];
    for _ in 0..cfg.forward_draws {
        let (state, net) = forward_draw(cfg, &mut rng)?;
        for (col, v) in forward.iter_mut().zip(statistics(&state, &net)) {
            col.push(v);
        }
    }

    let sampler_config = SamplerConfig {
        hyper: cfg.hyper,
        sample_hyperparams: false,
        kernels: KernelSet {
            density: false,
            ..cfg.sampler.kernels
        },
        ..cfg.sampler.clone()
    };
    let mask = PairMask::none(cfg.nodes, cfg.directed);
    let (mut state, mut net) = forward_draw(cfg, &mut rng)?;
    let mut chain_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_0F_C4A1);
    let mut chain = vec![Vec::with_capacity(cfg.rounds); columns];
    for _ in 0..cfg.rounds {
        if cfg.sweeps_per_round > 0 {
            let mut sampler = Sampler::new(&net, &mask, state, sampler_config.clone(), chain_rng)?
                .with_transition_update(update);
            for _ in 0..cfg.sweeps_per_round {
                sampler.sweep()?;
            }
            let (s, r, _) = sampler.into_parts();
            state = s;
            chain_rng = r;
            net = sample_network(&state, &mut chain_rng);
        } else {
            (state, net) = forward_draw(cfg, &mut chain_rng)?;
        }
        for (col, v) in chain.iter_mut().zip(statistics(&state, &net)) {
            col.push(v);
        }
    }

    let stats = GEWEKE_STATISTICS
        .iter()
        .zip(forward.iter().zip(&chain))
        .map(|(name, (f, c))| {
            let (fm, fse) = mean_se(f);
            let cm = c.iter().sum::<f64>() / c.len() as f64;
            let cse = batch_means_se(c, cfg.batches);
            let denom = (fse * fse + cse * cse).sqrt();
            let z = if denom > 0.0 { (cm - fm) / denom } else { 0.0 };
            GewekeStat {
                name: name.to_string(),
                forward_mean: fm,
                forward_se: fse,
                chain_mean: cm,
                chain_se: cse,
                z,
            }
        })
        .collect();
    Ok(GewekeReport { stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sweeps_compare_forward_with_forward() {
        let cfg = GewekeConfig {
            forward_draws: 4_000,
            rounds: 4_000,
            sweeps_per_round: 0,
            ..GewekeConfig::default()
        };
        let report = geweke_joint_test(&cfg, None).unwrap();
        assert_eq!(report.stats.len(), 12);
        assert!(report.max_abs_z() < 4.0, "{report:?}");
    }
}
