use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate, naive_baseline, BaselineTarget, BaselineVariant, Metrics, ScoredPair, ScoredPairs};
use crate::error::{Error, Result};
use crate::inference::{chain_rng, run_chains, PosteriorSamples, SamplerConfig};
use crate::model::logistic::logistic;
use crate::model::{sample_affinity, sample_transition, ModelState};
use crate::network::{DynamicNetwork, PairMask};

const FORECAST_STREAM: u64 = 0xF0CA_57ED_0000_0001;

/// Link probabilities one step past the end of `state`, for every canonical
/// pair, from one random extension of the fitted state.
///
/// Groups alive at the last step survive with probability `1 - gamma` and
/// their members move by the group's transition matrix; `Poisson(gamma *
/// lambda)` new groups draw parameters and memberships from the prior. The
/// density is carried forward.
pub fn extend_one_step<R: Rng + ?Sized>(state: &ModelState, rng: &mut R) -> Vec<f64> {
    let n = state.num_nodes();
    let directed = state.is_directed();
    let last = state.num_steps() - 1;
    let hyper = state.hyper;
    let mut groups: Vec<(crate::model::Affinity, Vec<bool>)> = Vec::new();
    for g in state.groups.iter().filter(|g| g.lifetime.death == last) {
        if rng.random::<f64>() < hyper.gamma {
            continue;
        }
        let off = last - g.lifetime.birth;
        let z = (0..n)
            .map(|i| rng.random::<f64>() < g.transition.prob(g.members.get(i, off), true))
            .collect();
        groups.push((g.affinity, z));
    }
    let born = crate::model::poisson(hyper.gamma * hyper.lambda, rng);
    for _ in 0..born {
        let tr = sample_transition(&hyper, rng);
        let affinity = sample_affinity(hyper.nu, directed, rng);
        let z = (0..n).map(|_| rng.random::<f64>() < tr.join).collect();
        groups.push((affinity, z));
    }
    let eps = state.density[last];
    crate::network::pairs(n, directed)
        .map(|(i, j)| {
            let s: f64 = groups.iter().map(|(a, z)| a.get(z[i], z[j])).sum();
            logistic(eps + s)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastOutcome {
    /// Number of observed snapshots; the forecast step is `t_obs` (zero-based).
    pub t_obs: usize,
    pub scored: ScoredPairs,
    pub chains: Vec<PosteriorSamples>,
}

/// Fits on the first `t_obs` snapshots and scores every pair at the next one.
pub fn forecast(
    net: &DynamicNetwork,
    t_obs: usize,
    config: &SamplerConfig,
    workers: usize,
) -> Result<ForecastOutcome> {
    if t_obs < 3 || t_obs + 1 > net.num_steps() {
        return Err(Error::invalid(format!(
            "forecast needs 3 <= T_obs <= {} (got {t_obs})",
            net.num_steps().saturating_sub(1)
        )));
    }
    let train = net.truncated(t_obs)?;
    let mask = PairMask::none(net.num_nodes(), net.is_directed());
    let chains = run_chains(&train, &mask, config, workers)?;
    let p = net.num_pairs();
    let mut sums = vec![0.0; p];
    let mut draws = 0usize;
    for c in &chains {
        let mut rng = chain_rng(config.seed ^ FORECAST_STREAM, c.chain_id);
        for s in &c.snapshots {
            for (acc, v) in sums.iter_mut().zip(extend_one_step(s, &mut rng)) {
                *acc += v;
            }
            draws += 1;
        }
    }
    if draws == 0 {
        return Err(Error::invalid("no retained posterior draws"));
    }
    let records = net
        .pairs()
        .zip(&sums)
        .map(|((i, j), s)| ScoredPair {
            t: t_obs,
            i,
            j,
            label: net.has_link(t_obs, i, j),
            score: s / draws as f64,
        })
        .collect();
    Ok(ForecastOutcome {
        t_obs,
        scored: ScoredPairs::new(records)?,
        chains,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub t_obs: usize,
    pub model: Metrics,
    pub baseline: Metrics,
}

/// Forecast metrics for every `T_obs` in `3..=T-1`, model and per-pair baseline.
pub fn forecast_series(
    net: &DynamicNetwork,
    config: &SamplerConfig,
    workers: usize,
) -> Result<Vec<ForecastPoint>> {
    (3..net.num_steps())
        .map(|t_obs| {
            let out = forecast(net, t_obs, config, workers)?;
            let mask = PairMask::none(net.num_nodes(), net.is_directed());
            let base = naive_baseline(net, &mask, BaselineTarget::Forecast { t_obs }, BaselineVariant::PerPair)?;
            Ok(ForecastPoint {
                t_obs,
                model: evaluate(&out.scored)?,
                baseline: evaluate(&base)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Affinity, Hyperparams, Lifetime, Membership, Transition};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frozen_dynamics_carry_the_last_step_forward() {
        let hyper = Hyperparams {
            gamma: 0.0,
            ..Hyperparams::default()
        };
        let mut state = ModelState::new(4, 3, false, vec![-1.0, -2.0, -0.5], hyper).unwrap();
        let mut m = Membership::zeros(4, 3);
        m.set_chain(0, &[true, true, true]);
        m.set_chain(2, &[false, true, true]);
        state
            .push_group(
                Lifetime { birth: 0, death: 2 },
                Transition {
                    join: 0.0,
                    leave: 0.0,
                },
                Affinity::from_free(false, &[0.7, 2.0]),
                m,
            )
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let probs = extend_one_step(&state, &mut rng);
        for ((i, j), p) in crate::network::pairs(4, false).zip(&probs) {
            let want = crate::model::link_probability(&state, i, j, 2).unwrap();
            assert!((p - want).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_out_of_range_windows() {
        let net = DynamicNetwork::empty(4, 5, false).unwrap();
        let config = SamplerConfig::default();
        assert!(forecast(&net, 2, &config, 1).is_err());
        assert!(forecast(&net, 5, &config, 1).is_err());
    }
}
