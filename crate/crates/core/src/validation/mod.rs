//! Brute-force oracles, the joint-distribution test and synthetic fixtures.

mod fixtures;
mod geweke;

pub use fixtures::{planted_network, PlantedConfig};
pub use geweke::{geweke_joint_test, GewekeConfig, GewekeReport, GewekeStat, GEWEKE_STATISTICS};

use crate::error::{Error, Result};
use crate::model::ModelState;
use crate::network::{DynamicNetwork, PairMask};

/// Longest chain [`enumerate_chain_conditional`] accepts.
pub const MAX_ENUMERATED_LEN: usize = 12;

/// Exact conditional of node `i`'s chain in group `k`, by enumeration.
///
/// Entry `c` is the probability of the chain whose offset `t` equals bit `t`
/// of `c`. Computed from the prior transition product and a direct
/// likelihood sum, with no shared code path with the sampler.
pub fn enumerate_chain_conditional(
    state: &ModelState,
    net: &DynamicNetwork,
    mask: &PairMask,
    i: usize,
    k: usize,
) -> Result<Vec<f64>> {
    let g = state
        .groups
        .get(k)
        .ok_or_else(|| Error::invalid(format!("no group {k}")))?;
    let len = g.lifetime.len();
    if len > MAX_ENUMERATED_LEN {
        return Err(Error::invalid(format!(
            "interval of length {len} exceeds the enumeration cap {MAX_ENUMERATED_LEN}"
        )));
    }
    let n = state.num_nodes();
    let (a, b) = (g.transition.join, g.transition.leave);
    let mut work = state.clone();
    let mut logs = Vec::with_capacity(1 << len);
    for code in 0..1usize << len {
        let mut lp = 0.0;
        let mut prev = false;
        for off in 0..len {
            let z = code >> off & 1 == 1;
            let p = match (prev, z) {
                (false, false) => 1.0 - a,
                (false, true) => a,
                (true, false) => b,
                (true, true) => 1.0 - b,
            };
            lp += p.ln();
            prev = z;
            work.groups[k].members.set(i, off, z);
        }
        for t in g.lifetime.steps() {
            for j in (0..n).filter(|&j| j != i) {
                let mut ordered = vec![(i, j)];
                if state.is_directed() {
                    ordered.push((j, i));
                }
                for (u, v) in ordered {
                    if mask.is_held_out(u, v) {
                        continue;
                    }
                    let s = work.logit(u, v, t);
                    let p = 1.0 / (1.0 + (-s).exp());
                    lp += if net.has_link(t, u, v) { p.ln() } else { (1.0 - p).ln() };
                }
            }
        }
        logs.push(lp);
    }
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// Central-difference gradient of `f` at `point`.
pub fn finite_difference<F: Fn(&[f64]) -> f64>(f: F, point: &[f64], step: f64) -> Result<Vec<f64>> {
    let mut x = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for d in 0..point.len() {
        x[d] = point[d] + step;
        let up = f(&x);
        x[d] = point[d] - step;
        let down = f(&x);
        x[d] = point[d];
        if !(up.is_finite() && down.is_finite()) {
            return Err(Error::Numerical(format!("non-finite evaluation along coordinate {d}")));
        }
        grad.push((up - down) / (2.0 * step));
    }
    Ok(grad)
}

/// Standard error of the mean of a correlated series by batch means.
pub fn batch_means_se(values: &[f64], batches: usize) -> f64 {
    let size = values.len() / batches.max(1);
    if size == 0 || batches < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    (var / means.len() as f64).sqrt()
}

/// Mean and standard error of independent draws.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0);
    (mu, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Affinity, Hyperparams, Lifetime, Membership, Transition};

    #[test]
    fn finite_difference_examples() {
        let g = finite_difference(|x| x[0] * x[0], &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
        let g = finite_difference(|_| 4.2, &[1.0, -2.0], 1e-5).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        assert!(finite_difference(|x| x[0].ln(), &[0.0], 1e-5).is_err());
    }

    #[test]
    fn single_step_without_likelihood_is_the_prior() {
        let mut state = ModelState::new(3, 2, false, vec![0.0; 2], Hyperparams::default()).unwrap();
        state
            .push_group(
                Lifetime { birth: 1, death: 1 },
                Transition {
                    join: 0.3,
                    leave: 0.6,
                },
                Affinity::from_free(false, &[0.0, 0.0]),
                Membership::zeros(3, 1),
            )
            .unwrap();
        let net = DynamicNetwork::empty(3, 2, false).unwrap();
        let table = enumerate_chain_conditional(&state, &net, &PairMask::none(3, false), 0, 0).unwrap();
        assert!((table[0] - 0.7).abs() < 1e-12 && (table[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn batch_means_of_iid_match_plain_se() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let (_, se) = mean_se(&v);
        let bm = batch_means_se(&v, 50);
        assert!(bm > 0.0 && (bm / se).ln().abs() < 1.0);
    }
}
