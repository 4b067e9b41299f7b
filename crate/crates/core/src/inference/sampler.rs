use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cache::{LinkCache, Observed};
use super::config::SamplerConfig;
use super::forward_backward::{chain_log_prob, forward_filter, sample_backward};
use super::transitions::{conjugate_transition_update, TransitionUpdate};
use crate::error::{Error, Result};
use crate::model::check_dims;
use crate::model::logistic::{log_bernoulli, logistic};
use crate::model::ModelState;
use crate::network::{DynamicNetwork, PairMask};

pub type ChainRng = ChaCha8Rng;

/// Proposal and acceptance counts per kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelStats {
    pub hmc_proposed: u64,
    pub hmc_accepted: u64,
    pub add_proposed: u64,
    pub add_accepted: u64,
    pub remove_proposed: u64,
    pub remove_accepted: u64,
    pub relocate_proposed: u64,
    pub relocate_accepted: u64,
}

impl KernelStats {
    pub fn hmc_acceptance(&self) -> Option<f64> {
        (self.hmc_proposed > 0).then(|| self.hmc_accepted as f64 / self.hmc_proposed as f64)
    }

    pub fn merge(&mut self, other: &KernelStats) {
        self.hmc_proposed += other.hmc_proposed;
        self.hmc_accepted += other.hmc_accepted;
        self.add_proposed += other.add_proposed;
        self.add_accepted += other.add_accepted;
        self.remove_proposed += other.remove_proposed;
        self.remove_accepted += other.remove_accepted;
        self.relocate_proposed += other.relocate_proposed;
        self.relocate_accepted += other.relocate_accepted;
    }
}

/// One MCMC chain: the state, its link cache and the kernels that update it.
pub struct Sampler<'a> {
    pub(super) net: &'a DynamicNetwork,
    pub(super) observed: Observed,
    pub(super) state: ModelState,
    pub(super) cache: LinkCache,
    pub(super) config: SamplerConfig,
    pub(super) rng: ChainRng,
    pub(super) transition_update: TransitionUpdate,
    pub(super) stats: KernelStats,
}

impl<'a> Sampler<'a> {
    pub fn new(
        net: &'a DynamicNetwork,
        mask: &PairMask,
        state: ModelState,
        config: SamplerConfig,
        rng: ChainRng,
    ) -> Result<Self> {
        check_dims(&state, net)?;
        if mask.num_nodes() != net.num_nodes() || mask.is_directed() != net.is_directed() {
            return Err(Error::DimensionMismatch("mask does not match the network".into()));
        }
        config.validate()?;
        state.validate()?;
        let cache = LinkCache::build(&state);
        Ok(Self {
            net,
            observed: Observed::from_mask(mask),
            state,
            cache,
            config,
            rng,
            transition_update: conjugate_transition_update,
            stats: KernelStats::default(),
        })
    }

    /// Sampler with default settings and a fixed seed, for one-off kernel calls.
    pub fn with_defaults(net: &'a DynamicNetwork, mask: &PairMask, state: ModelState) -> Result<Self> {
        let config = SamplerConfig {
            hyper: state.hyper,
            ..SamplerConfig::default()
        };
        Self::new(net, mask, state, config, ChainRng::seed_from_u64(0))
    }

    /// Replaces the transition-probability update, e.g. to test a broken kernel.
    pub fn with_transition_update(mut self, update: TransitionUpdate) -> Self {
        self.transition_update = update;
        self
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn into_state(self) -> ModelState {
        self.state
    }

    pub fn into_parts(self) -> (ModelState, ChainRng, KernelStats) {
        (self.state, self.rng, self.stats)
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn stats(&self) -> KernelStats {
        self.stats
    }

    pub fn rng_mut(&mut self) -> &mut ChainRng {
        &mut self.rng
    }

    pub fn network(&self) -> &DynamicNetwork {
        self.net
    }

    /// Replaces the state and rebuilds the cache.
    pub fn set_state(&mut self, state: ModelState) -> Result<()> {
        check_dims(&state, self.net)?;
        state.validate()?;
        self.cache = LinkCache::build(&state);
        self.state = state;
        Ok(())
    }

    /// Replaces the observed network (same shape), as in successive-conditional
    /// simulation.
    pub fn set_network(&mut self, net: &'a DynamicNetwork) -> Result<()> {
        check_dims(&self.state, net)?;
        self.net = net;
        Ok(())
    }

    pub fn refresh_cache(&mut self) {
        self.cache = LinkCache::build(&self.state);
    }

    /// Largest absolute disagreement between the incremental cache and a rebuild.
    pub fn cache_drift(&self) -> f64 {
        self.cache.max_abs_diff(&LinkCache::build(&self.state))
    }

    #[inline]
    pub(super) fn link(&self, t: usize, i: usize, j: usize) -> bool {
        self.net.has_link(t, i, j)
    }

    /// Training log-likelihood restricted to steps `from..=to`.
    pub(super) fn loglik_steps(&self, from: usize, to: usize) -> f64 {
        let n = self.state.num_nodes();
        let directed = self.state.is_directed();
        let mut total = 0.0;
        for t in from..=to {
            for i in 0..n {
                let start = if directed { 0 } else { i + 1 };
                for j in start..n {
                    if j != i && self.observed.get(i, j) {
                        total += log_bernoulli(self.link(t, i, j), self.cache.get(t, i, j));
                    }
                }
            }
        }
        total
    }

    /// Training-pair log-likelihood under the cached logits.
    pub fn train_log_likelihood(&self) -> f64 {
        self.loglik_steps(0, self.state.num_steps() - 1)
    }

    /// `p_ij^(t)` for every step and canonical pair, laid out `[t][pair]`.
    pub fn link_probabilities(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.state.num_steps() * self.net.num_pairs());
        self.accumulate_probabilities_into(&mut out);
        out
    }

    pub(super) fn accumulate_probabilities(&self, sums: &mut [f64]) {
        let n = self.state.num_nodes();
        let directed = self.state.is_directed();
        let mut k = 0;
        for t in 0..self.state.num_steps() {
            for i in 0..n {
                let start = if directed { 0 } else { i + 1 };
                for j in start..n {
                    if j != i {
                        sums[k] += logistic(self.cache.get(t, i, j));
                        k += 1;
                    }
                }
            }
        }
    }

    fn accumulate_probabilities_into(&self, out: &mut Vec<f64>) {
        out.resize(self.state.num_steps() * self.net.num_pairs(), 0.0);
        self.accumulate_probabilities(out);
    }

    /// Sets `z_ik` at lifetime offset `off`, keeping the cache in step.
    pub(super) fn set_member(&mut self, k: usize, i: usize, off: usize, value: bool) {
        let g = &self.state.groups[k];
        let cur = g.members.get(i, off);
        if cur == value {
            return;
        }
        let t = g.lifetime.birth + off;
        let a = g.affinity.0;
        let (cur, new) = (cur as usize, value as usize);
        let n = self.state.num_nodes();
        if self.state.is_directed() {
            for j in (0..n).filter(|&j| j != i) {
                let zj = g.members.get(j, off) as usize;
                self.cache.add_entry(t, i, j, a[new][zj] - a[cur][zj]);
                self.cache.add_entry(t, j, i, a[zj][new] - a[zj][cur]);
            }
        } else {
            for j in (0..n).filter(|&j| j != i) {
                let zj = g.members.get(j, off) as usize;
                self.cache.add_pair(t, i, j, a[new][zj] - a[cur][zj]);
            }
        }
        self.state.groups[k].members.set(i, off, value);
    }

    pub(super) fn set_member_chain(&mut self, k: usize, i: usize, chain: &[bool]) {
        for (off, &z) in chain.iter().enumerate() {
            self.set_member(k, i, off, z);
        }
    }

    pub(super) fn clear_members(&mut self, k: usize) {
        let n = self.state.num_nodes();
        let len = self.state.groups[k].lifetime.len();
        for i in 0..n {
            for off in 0..len {
                self.set_member(k, i, off, false);
            }
        }
    }

    /// `[log P(Y | z_ik = 0), log P(Y | z_ik = 1)]` over the group's lifetime,
    /// up to terms that do not involve node `i` in group `k`.
    pub fn membership_log_emissions(&self, i: usize, k: usize) -> Vec<[f64; 2]> {
        let g = &self.state.groups[k];
        let a = g.affinity.0;
        let n = self.state.num_nodes();
        let directed = self.state.is_directed();
        (0..g.lifetime.len())
            .map(|off| {
                let t = g.lifetime.birth + off;
                let cur = g.members.get(i, off) as usize;
                let mut e = [0.0; 2];
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let zj = g.members.get(j, off) as usize;
                    if self.observed.get(i, j) && a[0][zj] != a[1][zj] {
                        let base = self.cache.get(t, i, j) - a[cur][zj];
                        let y = self.link(t, i, j);
                        e[0] += log_bernoulli(y, base + a[0][zj]);
                        e[1] += log_bernoulli(y, base + a[1][zj]);
                    }
                    if directed && self.observed.get(j, i) && a[zj][0] != a[zj][1] {
                        let base = self.cache.get(t, j, i) - a[zj][cur];
                        let y = self.link(t, j, i);
                        e[0] += log_bernoulli(y, base + a[zj][0]);
                        e[1] += log_bernoulli(y, base + a[zj][1]);
                    }
                }
                e
            })
            .collect()
    }

    /// Redraws node `i`'s chain in group `k` from its full conditional and
    /// returns the log-probability of the drawn chain.
    pub fn sample_membership_chain(&mut self, i: usize, k: usize) -> f64 {
        let em = self.membership_log_emissions(i, k);
        let fc = forward_filter(self.state.groups[k].transition, &em);
        let chain = sample_backward(&fc, &mut self.rng);
        let lp = chain_log_prob(&fc, &chain);
        self.set_member_chain(k, i, &chain);
        lp
    }

    /// Log full-conditional probability of `chain` for node `i` in group `k`,
    /// then sets the chain.
    pub(super) fn force_membership_chain(&mut self, i: usize, k: usize, chain: &[bool]) -> f64 {
        let em = self.membership_log_emissions(i, k);
        let fc = forward_filter(self.state.groups[k].transition, &em);
        let lp = chain_log_prob(&fc, chain);
        self.set_member_chain(k, i, chain);
        lp
    }

    /// One systematic pass over every node chain in every group.
    pub fn update_memberships(&mut self) {
        for k in 0..self.state.num_groups() {
            for i in 0..self.state.num_nodes() {
                self.sample_membership_chain(i, k);
            }
        }
    }

    /// One full sweep of every enabled kernel.
    pub fn sweep(&mut self) -> Result<()> {
        self.refresh_cache();
        let kernels = self.config.kernels;
        if kernels.memberships {
            self.update_memberships();
        }
        if kernels.groups {
            let moves = SamplerConfig::group_moves(&self.state.hyper, self.state.num_steps());
            for _ in 0..moves {
                let proposal = self.propose_group_update();
                self.accept_group_proposal(proposal)?;
            }
        }
        if kernels.transitions {
            self.update_transitions();
        }
        if kernels.affinities {
            self.hmc_update_affinities()?;
        }
        if kernels.density {
            self.update_density();
        }
        if self.config.sample_hyperparams {
            let rate = self.config.hyper_rate;
            self.state.hyper =
                super::hyper::update_hyperparameters(&self.state, rate, &mut self.rng)?;
        }
        if self.state.density.iter().any(|e| !e.is_finite()) {
            return Err(Error::Numerical("density series became non-finite".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{sample_network, sample_state, Hyperparams};

    pub(crate) fn fixture(directed: bool, seed: u64) -> (DynamicNetwork, ModelState) {
        let mut rng = ChainRng::seed_from_u64(seed);
        let hyper = Hyperparams {
            lambda: 2.5,
            gamma: 0.3,
            ..Hyperparams::default()
        };
        let state = sample_state(&hyper, 6, 4, directed, vec![-1.0, -0.5, -1.5, -1.0], &mut rng).unwrap();
        let net = sample_network(&state, &mut rng);
        (net, state)
    }

    #[test]
    fn cache_stays_consistent_under_membership_updates() {
        for directed in [false, true] {
            let (net, state) = fixture(directed, 3);
            let mask = PairMask::from_pairs(6, directed, [(0, 1), (2, 4)]).unwrap();
            let mut s = Sampler::with_defaults(&net, &mask, state).unwrap();
            for _ in 0..5 {
                s.update_memberships();
            }
            assert!(s.cache_drift() < 1e-9);
            let ll = crate::model::log_likelihood(s.state(), &net, Some(&mask)).unwrap();
            assert!((ll - s.train_log_likelihood()).abs() < 1e-8);
        }
    }

    #[test]
    fn emissions_match_likelihood_differences() {
        for directed in [false, true] {
            let (net, state) = fixture(directed, 11);
            if state.num_groups() == 0 {
                continue;
            }
            let mask = PairMask::none(6, directed);
            let s = Sampler::with_defaults(&net, &mask, state.clone()).unwrap();
            let (i, k) = (2, 0);
            let em = s.membership_log_emissions(i, k);
            let g = &state.groups[k];
            for (off, e) in em.iter().enumerate() {
                let mut lls = [0.0; 2];
                for (z, ll) in lls.iter_mut().enumerate() {
                    let mut alt = state.clone();
                    alt.groups[k].members.set(i, off, z == 1);
                    *ll = crate::model::log_likelihood(&alt, &net, None).unwrap();
                }
                let want = lls[1] - lls[0];
                assert!((e[1] - e[0] - want).abs() < 1e-9, "{directed} {off} {g:?}");
            }
        }
    }

    #[test]
    fn link_probabilities_are_canonical() {
        let (net, state) = fixture(true, 5);
        let s = Sampler::with_defaults(&net, &PairMask::none(6, true), state.clone()).unwrap();
        let probs = s.link_probabilities();
        let p = net.num_pairs();
        for t in 0..4 {
            for (k, (i, j)) in net.pairs().enumerate() {
                let want = crate::model::link_probability(&state, i, j, t).unwrap();
                assert!((probs[t * p + k] - want).abs() < 1e-12);
            }
        }
    }
}
