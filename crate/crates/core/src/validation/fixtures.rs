use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{sample_network, Affinity, Hyperparams, Lifetime, Membership, ModelState, Transition};
use crate::network::DynamicNetwork;

/// Planted-group synthetic network: `groups` groups alive at every step, each
/// starting on its own block of nodes and drifting by `(join, leave)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub nodes: usize,
    pub steps: usize,
    pub groups: usize,
    /// Fraction of nodes in each group's starting block.
    pub block_fraction: f64,
    pub join: f64,
    pub leave: f64,
    pub density: f64,
    /// `[Theta_01, Theta_11]`.
    pub affinity: [f64; 2],
    pub hyper: Hyperparams,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            nodes: 50,
            steps: 10,
            groups: 2,
            block_fraction: 0.4,
            join: 0.02,
            leave: 0.05,
            density: -3.5,
            affinity: [-0.5, 4.0],
            hyper: Hyperparams {
                lambda: 2.0,
                gamma: 0.1,
                ..Hyperparams::default()
            },
            seed: 2024,
        }
    }
}

pub fn planted_network(cfg: &PlantedConfig) -> Result<(DynamicNetwork, ModelState)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = ModelState::new(cfg.nodes, cfg.steps, false, vec![cfg.density; cfg.steps], cfg.hyper)?;
    let block = (cfg.nodes as f64 * cfg.block_fraction).round() as usize;
    let tr = Transition {
        join: cfg.join,
        leave: cfg.leave,
    };
    for g in 0..cfg.groups {
        let mut members = Membership::zeros(cfg.nodes, cfg.steps);
        for i in 0..cfg.nodes {
            let mut z = i >= g * block && i < (g + 1) * block;
            for off in 0..cfg.steps {
                if off > 0 {
                    z = rng.random::<f64>() < tr.prob(z, true);
                }
                members.set(i, off, z);
            }
        }
        state.push_group(
            Lifetime {
                birth: 0,
                death: cfg.steps - 1,
            },
            tr,
            Affinity::from_free(false, &cfg.affinity),
            members,
        )?;
    }
    let net = sample_network(&state, &mut rng);
    Ok((net, state))
}
