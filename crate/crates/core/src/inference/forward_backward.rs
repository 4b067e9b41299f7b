//! Forward filtering, backward sampling for one binary membership chain.

use rand::Rng;

use crate::model::Transition;

/// Filtered joint and marginal posteriors of a chain.
///
/// `joint[t][r][s] = P(z_{t-1} = r, z_t = s | Y up to t)` and
/// `marginal[t][s] = P(z_t = s | Y up to t)`. The step before birth is the
/// non-member state, so row 1 of `joint[0]` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub joint: Vec<[[f64; 2]; 2]>,
    pub marginal: Vec<[f64; 2]>,
}

impl ForwardCache {
    pub fn len(&self) -> usize {
        self.marginal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marginal.is_empty()
    }
}

/// Runs the forward pass given per-step log emissions `[log P(Y_t | z=0), log P(Y_t | z=1)]`.
///
/// Each step is rescaled by its larger emission and renormalized, so long
/// chains and large emission magnitudes never underflow.
pub fn forward_filter(transition: Transition, log_emissions: &[[f64; 2]]) -> ForwardCache {
    let q = transition.matrix();
    let mut joint = Vec::with_capacity(log_emissions.len());
    let mut marginal: Vec<[f64; 2]> = Vec::with_capacity(log_emissions.len());
    for (t, le) in log_emissions.iter().enumerate() {
        let m = le[0].max(le[1]);
        let w = [(le[0] - m).exp(), (le[1] - m).exp()];
        let prev = if t == 0 { [1.0, 0.0] } else { marginal[t - 1] };
        let mut raw = [[0.0; 2]; 2];
        let mut total = 0.0;
        for r in 0..2 {
            for s in 0..2 {
                raw[r][s] = prev[r] * q[r][s] * w[s];
                total += raw[r][s];
            }
        }
        for row in raw.iter_mut() {
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        marginal.push([raw[0][0] + raw[1][0], raw[0][1] + raw[1][1]]);
        joint.push(raw);
    }
    ForwardCache { joint, marginal }
}

#[inline]
fn prob_one(w0: f64, w1: f64) -> f64 {
    w1 / (w0 + w1)
}

/// Samples a chain backwards from the filtered posteriors.
pub fn sample_backward<R: Rng + ?Sized>(cache: &ForwardCache, rng: &mut R) -> Vec<bool> {
    let len = cache.len();
    let mut chain = vec![false; len];
    if len == 0 {
        return chain;
    }
    let last = cache.marginal[len - 1];
    chain[len - 1] = rng.random::<f64>() < prob_one(last[0], last[1]);
    for t in (0..len - 1).rev() {
        let s = chain[t + 1] as usize;
        let j = cache.joint[t + 1];
        chain[t] = rng.random::<f64>() < prob_one(j[0][s], j[1][s]);
    }
    chain
}

/// Log-probability that [`sample_backward`] returns `chain`.
pub fn chain_log_prob(cache: &ForwardCache, chain: &[bool]) -> f64 {
    let len = cache.len();
    debug_assert_eq!(len, chain.len());
    if len == 0 {
        return 0.0;
    }
    let pick = |w0: f64, w1: f64, z: bool| {
        let p1 = prob_one(w0, w1);
        if z {
            p1.ln()
        } else {
            (1.0 - p1).ln()
        }
    };
    let last = cache.marginal[len - 1];
    let mut lp = pick(last[0], last[1], chain[len - 1]);
    for t in (0..len - 1).rev() {
        let s = chain[t + 1] as usize;
        let j = cache.joint[t + 1];
        lp += pick(j[0][s], j[1][s], chain[t]);
    }
    lp
}
