//! Hamiltonian Monte Carlo on each group's free affinity parameters.

use rand::Rng;
use rand_distr::StandardNormal;

use super::sampler::Sampler;
use crate::error::{Error, Result};
use crate::model::logistic::{log_bernoulli, logistic};
use crate::model::{Affinity, ModelState};
use crate::network::{DynamicNetwork, PairMask};

/// One pair-step whose category in the group is not `(0, 0)`.
struct Term {
    t: usize,
    i: usize,
    j: usize,
    cat: usize,
    /// Logit with this group's contribution removed.
    base: f64,
    y: bool,
    observed: bool,
}

struct Target {
    terms: Vec<Term>,
    inv_var: f64,
    dim: usize,
}

impl Target {
    fn potential(&self, q: &[f64]) -> f64 {
        let ll: f64 = self
            .terms
            .iter()
            .filter(|x| x.observed)
            .map(|x| log_bernoulli(x.y, x.base + q[x.cat]))
            .sum();
        let prior: f64 = q.iter().map(|v| v * v).sum::<f64>() * 0.5 * self.inv_var;
        prior - ll
    }

    /// Gradient of the log target (minus the potential's gradient).
    fn log_target_grad(&self, q: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = q.iter().map(|v| -v * self.inv_var).collect();
        for x in self.terms.iter().filter(|x| x.observed) {
            g[x.cat] += x.y as u8 as f64 - logistic(x.base + q[x.cat]);
        }
        g
    }
}

/// Result of one HMC proposal for one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmcStep {
    pub accepted: bool,
    /// Hamiltonian at the end minus at the start of the trajectory.
    pub delta_h: f64,
}

impl Sampler<'_> {
    fn affinity_target(&self, k: usize) -> Target {
        let g = &self.state.groups[k];
        let directed = self.state.is_directed();
        let n = self.state.num_nodes();
        let a = g.affinity.0;
        let mut terms = Vec::new();
        for off in 0..g.lifetime.len() {
            let t = g.lifetime.birth + off;
            for i in 0..n {
                let zi = g.members.get(i, off);
                let start = if directed { 0 } else { i + 1 };
                for j in start..n {
                    if j == i {
                        continue;
                    }
                    let zj = g.members.get(j, off);
                    if let Some(cat) = Affinity::free_index(directed, zi, zj) {
                        terms.push(Term {
                            t,
                            i,
                            j,
                            cat,
                            base: self.cache.get(t, i, j) - a[zi as usize][zj as usize],
                            y: self.link(t, i, j),
                            observed: self.observed.get(i, j),
                        });
                    }
                }
            }
        }
        Target {
            terms,
            inv_var: 1.0 / (self.state.hyper.nu * self.state.hyper.nu),
            dim: Affinity::num_free(directed),
        }
    }

    /// Gradient of the log posterior with respect to group `k`'s affinities,
    /// reported per matrix entry; the `(0, 0)` entry is fixed at zero and a
    /// tied undirected parameter appears at both off-diagonal entries.
    pub fn affinity_gradient(&self, k: usize) -> [[f64; 2]; 2] {
        let directed = self.state.is_directed();
        let target = self.affinity_target(k);
        let q = self.state.groups[k].affinity.free_params(directed);
        let g = target.log_target_grad(&q);
        let mut out = [[0.0; 2]; 2];
        for (x, y) in [(false, true), (true, false), (true, true)] {
            out[x as usize][y as usize] = g[Affinity::free_index(directed, x, y).unwrap()];
        }
        out
    }

    /// Log posterior of group `k`'s affinities up to a constant.
    pub fn affinity_log_target(&self, k: usize, affinity: &Affinity) -> f64 {
        let target = self.affinity_target(k);
        -target.potential(&affinity.free_params(self.state.is_directed()))
    }

    /// One HMC proposal for group `k`'s free affinities.
    pub fn hmc_step(&mut self, k: usize) -> Result<HmcStep> {
        let directed = self.state.is_directed();
        let target = self.affinity_target(k);
        let q0 = self.state.groups[k].affinity.free_params(directed);
        let h = self.config.hmc_step;
        let leaps = self.config.hmc_leaps;
        let p0: Vec<f64> = (0..target.dim).map(|_| self.rng.sample(StandardNormal)).collect();
        let kinetic = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>() * 0.5;
        let h0 = target.potential(&q0) + kinetic(&p0);

        let mut q = q0.clone();
        let mut p = p0;
        if leaps > 0 {
            let mut grad = target.log_target_grad(&q);
            for (pi, gi) in p.iter_mut().zip(&grad) {
                *pi += 0.5 * h * gi;
            }
            for step in 0..leaps {
                for (qi, pi) in q.iter_mut().zip(&p) {
                    *qi += h * pi;
                }
                grad = target.log_target_grad(&q);
                let scale = if step + 1 == leaps { 0.5 * h } else { h };
                for (pi, gi) in p.iter_mut().zip(&grad) {
                    *pi += scale * gi;
                }
            }
        }
        let h1 = target.potential(&q) + kinetic(&p);
        let delta_h = h1 - h0;
        self.stats.hmc_proposed += 1;
        let accepted = if delta_h.is_finite() && q.iter().all(|v| v.is_finite()) {
            let u: f64 = self.rng.random();
            u.ln() < -delta_h
        } else {
            false
        };
        if accepted {
            self.stats.hmc_accepted += 1;
            let new = Affinity::from_free(directed, &q);
            for x in &target.terms {
                let delta = q[x.cat] - q0[x.cat];
                self.cache.add_pair(x.t, x.i, x.j, delta);
            }
            self.state.groups[k].affinity = new;
        }
        if !h0.is_finite() {
            return Err(Error::Numerical(format!("non-finite Hamiltonian for group {k}")));
        }
        Ok(HmcStep { accepted, delta_h })
    }

    pub fn hmc_update_affinities(&mut self) -> Result<()> {
        for k in 0..self.state.num_groups() {
            self.hmc_step(k)?;
        }
        Ok(())
    }
}

/// [`Sampler::affinity_gradient`] for a standalone state.
pub fn affinity_gradient(
    state: &ModelState,
    net: &DynamicNetwork,
    mask: &PairMask,
    k: usize,
) -> Result<[[f64; 2]; 2]> {
    if k >= state.num_groups() {
        return Err(Error::invalid(format!("no group {k}")));
    }
    Ok(Sampler::with_defaults(net, mask, state.clone())?.affinity_gradient(k))
}
