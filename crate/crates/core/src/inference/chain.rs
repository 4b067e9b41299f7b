use rand::SeedableRng;
use rayon::prelude::*;

use super::config::SamplerConfig;
use super::posterior::PosteriorSamples;
use super::sampler::{ChainRng, Sampler};
use crate::error::{Error, Result};
use crate::model::logistic::clamped_logit;
use crate::model::ModelState;
use crate::network::{density, DynamicNetwork, PairMask};

/// Seed of chain `chain_id`, a SplitMix64 mix of the run seed and the id.
pub fn chain_seed(seed: u64, chain_id: usize) -> u64 {
    let mut z = seed ^ (chain_id as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn chain_rng(seed: u64, chain_id: usize) -> ChainRng {
    ChainRng::seed_from_u64(chain_seed(seed, chain_id))
}

/// Starting state: no groups and `epsilon_t` at the logit of the observed density.
pub fn initial_state(net: &DynamicNetwork, mask: &PairMask, config: &SamplerConfig) -> Result<ModelState> {
    let eps = (0..net.num_steps())
        .map(|t| density(net, Some(mask), t).map(|d| clamped_logit(d, 10.0)))
        .collect::<Result<Vec<_>>>()?;
    ModelState::new(net.num_nodes(), net.num_steps(), net.is_directed(), eps, config.hyper)
}

/// Runs one chain from the default initial state.
pub fn run_chain(
    net: &DynamicNetwork,
    mask: &PairMask,
    config: &SamplerConfig,
    chain_id: usize,
) -> Result<PosteriorSamples> {
    let state = initial_state(net, mask, config)?;
    run_chain_from(net, mask, config, chain_id, state)
}

/// Runs one chain from `state`. A numerical failure stops the chain and is
/// recorded in [`PosteriorSamples::aborted`]; draws retained before it are kept.
pub fn run_chain_from(
    net: &DynamicNetwork,
    mask: &PairMask,
    config: &SamplerConfig,
    chain_id: usize,
    state: ModelState,
) -> Result<PosteriorSamples> {
    let seed = chain_seed(config.seed, chain_id);
    let mut sampler = Sampler::new(net, mask, state, config.clone(), ChainRng::seed_from_u64(seed))?;
    let mut out = PosteriorSamples::new(chain_id, seed, net);
    let total = config.burn_in + config.samples * config.thin;
    for sweep in 0..total {
        if let Err(e) = sampler.sweep() {
            out.aborted = Some(format!("sweep {sweep}: {e}"));
            break;
        }
        let ll = sampler.train_log_likelihood();
        if !ll.is_finite() {
            out.aborted = Some(format!("sweep {sweep}: non-finite log-likelihood"));
            break;
        }
        out.loglik_trace.push(ll);
        if sweep >= config.burn_in && (sweep - config.burn_in + 1) % config.thin == 0 {
            out.record(&sampler);
        }
    }
    out.stats = sampler.stats();
    Ok(out)
}

/// Runs `config.chains` chains on a pool of `workers` threads (0 = all
/// cores). Output is in chain order and independent of the worker count.
pub fn run_chains(
    net: &DynamicNetwork,
    mask: &PairMask,
    config: &SamplerConfig,
    workers: usize,
) -> Result<Vec<PosteriorSamples>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..config.chains)
            .into_par_iter()
            .map(|c| run_chain(net, mask, config, c))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::sampler::tests::fixture;

    #[test]
    fn seeds_differ_per_chain() {
        let seeds: Vec<u64> = (0..50).map(|c| chain_seed(7, c)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
        assert_ne!(chain_seed(7, 0), chain_seed(8, 0));
    }

    #[test]
    fn zero_samples_give_empty_output() {
        let (net, _) = fixture(false, 1);
        let config = SamplerConfig {
            burn_in: 2,
            samples: 0,
            chains: 1,
            ..SamplerConfig::default()
        };
        let out = run_chain(&net, &PairMask::none(6, false), &config, 0).unwrap();
        assert_eq!(out.retained, 0);
        assert!(out.snapshots.is_empty());
        assert!(out.aborted.is_none());
    }

    #[test]
    fn thinning_keeps_every_thin_th_sweep() {
        let (net, _) = fixture(true, 1);
        let config = SamplerConfig {
            burn_in: 3,
            samples: 4,
            thin: 3,
            chains: 1,
            ..SamplerConfig::default()
        };
        let out = run_chain(&net, &PairMask::none(6, true), &config, 0).unwrap();
        assert_eq!(out.retained, 4);
        assert_eq!(out.loglik_trace.len(), 15);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let (net, _) = fixture(false, 4);
        let config = SamplerConfig {
            burn_in: 5,
            samples: 5,
            chains: 3,
            seed: 99,
            ..SamplerConfig::default()
        };
        let mask = PairMask::none(6, false);
        let a = run_chains(&net, &mask, &config, 1).unwrap();
        let b = run_chains(&net, &mask, &config, 3).unwrap();
        assert_eq!(a, b);
    }
}
