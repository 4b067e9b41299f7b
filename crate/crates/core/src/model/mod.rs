//! Model parameters and state: group lifetimes, membership chains, link
//! affinities, the per-step density offset and the hyperparameters.

mod document;
mod generate;
mod likelihood;
pub mod logistic;
mod prior;

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use document::StateDocument;
pub use generate::{
    sample_affinity, sample_chain, sample_group_timeline, sample_memberships, sample_network,
    sample_state, sample_transition,
};
pub use likelihood::{link_probability, log_likelihood, normalize_affinity};
pub(crate) use generate::poisson;
pub(crate) use likelihood::check_dims;
pub use prior::{log_chain_prior, log_lifetime_prob, log_timeline_prior};

/// Hyperparameters of the generative process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Expected number of active groups.
    pub lambda: f64,
    /// Per-step death probability of an active group; also scales the birth rate.
    pub gamma: f64,
    /// Beta prior shape on join/leave probabilities.
    pub alpha: f64,
    pub beta: f64,
    /// Prior standard deviation of the free affinity entries.
    pub nu: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            gamma: 0.1,
            alpha: 1.0,
            beta: 4.0,
            nu: 1.0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda.is_finite()
            && self.lambda >= 0.0
            && (0.0..=1.0).contains(&self.gamma)
            && self.alpha.is_finite()
            && self.alpha > 0.0
            && self.beta.is_finite()
            && self.beta > 0.0
            && self.nu.is_finite()
            && self.nu > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid hyperparameters {self:?}")))
        }
    }

    /// Poisson rate of newborn groups at step `t`.
    pub fn birth_rate(&self, t: usize) -> f64 {
        if t == 0 {
            self.lambda
        } else {
            self.gamma * self.lambda
        }
    }

    /// Expected number of groups born over `num_steps` steps.
    pub fn expected_total_groups(&self, num_steps: usize) -> f64 {
        self.lambda * (1.0 + self.gamma * (num_steps as f64 - 1.0))
    }
}

/// Inclusive active interval `[birth, death]` of a group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lifetime {
    pub birth: usize,
    pub death: usize,
}

impl Lifetime {
    pub fn new(birth: usize, death: usize, num_steps: usize) -> Result<Self> {
        if birth > death || death >= num_steps {
            return Err(Error::invalid(format!(
                "lifetime [{birth}, {death}] invalid for {num_steps} steps"
            )));
        }
        Ok(Self { birth, death })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.death - self.birth + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains(&self, t: usize) -> bool {
        self.birth <= t && t <= self.death
    }

    pub fn steps(&self) -> RangeInclusive<usize> {
        self.birth..=self.death
    }
}

/// Birth/death pattern of a set of groups (`W`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupTimeline {
    pub num_steps: usize,
    pub lifetimes: Vec<Lifetime>,
}

impl GroupTimeline {
    pub fn num_groups(&self) -> usize {
        self.lifetimes.len()
    }

    pub fn is_active(&self, k: usize, t: usize) -> bool {
        self.lifetimes[k].contains(t)
    }

    /// `K_t`.
    pub fn active_count(&self, t: usize) -> usize {
        self.lifetimes.iter().filter(|l| l.contains(t)).count()
    }

    /// `K_t^+`.
    pub fn births_at(&self, t: usize) -> usize {
        self.lifetimes.iter().filter(|l| l.birth == t).count()
    }
}

/// Join (`a`) and leave (`b`) probabilities of a group's membership chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub join: f64,
    pub leave: f64,
}

impl Transition {
    /// `[[1-a, a], [b, 1-b]]`, rows indexed by the previous state.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.join, self.join], [self.leave, 1.0 - self.leave]]
    }

    #[inline]
    pub fn prob(&self, from: bool, to: bool) -> f64 {
        match (from, to) {
            (false, false) => 1.0 - self.join,
            (false, true) => self.join,
            (true, false) => self.leave,
            (true, true) => 1.0 - self.leave,
        }
    }
}

/// 2x2 link affinities of one group, indexed `[z_i][z_j]`.
///
/// Entry `[0][0]` is zero in normal form. For undirected networks the two
/// off-diagonal entries are a single tied parameter.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Affinity(pub [[f64; 2]; 2]);

impl Affinity {
    #[inline]
    pub fn get(&self, x: bool, y: bool) -> f64 {
        self.0[x as usize][y as usize]
    }

    /// Number of free entries: 3 directed, 2 undirected.
    pub fn num_free(directed: bool) -> usize {
        if directed {
            3
        } else {
            2
        }
    }

    /// Position of entry `(x, y)` in the free-parameter vector, `None` for `(0, 0)`.
    #[inline]
    pub fn free_index(directed: bool, x: bool, y: bool) -> Option<usize> {
        match (x, y, directed) {
            (false, false, _) => None,
            (false, true, _) => Some(0),
            (true, false, true) => Some(1),
            (true, false, false) => Some(0),
            (true, true, true) => Some(2),
            (true, true, false) => Some(1),
        }
    }

    pub fn free_params(&self, directed: bool) -> Vec<f64> {
        if directed {
            vec![self.0[0][1], self.0[1][0], self.0[1][1]]
        } else {
            vec![self.0[0][1], self.0[1][1]]
        }
    }

    /// Normal-form affinity from free parameters.
    pub fn from_free(directed: bool, params: &[f64]) -> Self {
        if directed {
            Affinity([[0.0, params[0]], [params[1], params[2]]])
        } else {
            Affinity([[0.0, params[0]], [params[0], params[1]]])
        }
    }
}

/// Binary membership chains of every node over one group's active interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    num_nodes: usize,
    len: usize,
    bits: Vec<bool>,
}

impl Membership {
    pub fn zeros(num_nodes: usize, len: usize) -> Self {
        Self {
            num_nodes,
            len,
            bits: vec![false; num_nodes * len],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Interval length covered by each chain.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, node: usize, offset: usize) -> bool {
        self.bits[node * self.len + offset]
    }

    #[inline]
    pub fn set(&mut self, node: usize, offset: usize, value: bool) {
        self.bits[node * self.len + offset] = value;
    }

    pub fn chain(&self, node: usize) -> &[bool] {
        &self.bits[node * self.len..(node + 1) * self.len]
    }

    pub fn set_chain(&mut self, node: usize, chain: &[bool]) {
        self.bits[node * self.len..(node + 1) * self.len].copy_from_slice(chain);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// One latent group: lifetime, membership dynamics, affinities and chains.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    /// Stable identifier for reporting; positions in `ModelState::groups` are compacted.
    pub label: u64,
    pub lifetime: Lifetime,
    pub transition: Transition,
    pub affinity: Affinity,
    pub members: Membership,
}

impl Group {
    #[inline]
    pub fn is_member(&self, node: usize, t: usize) -> bool {
        self.lifetime.contains(t) && self.members.get(node, t - self.lifetime.birth)
    }
}

/// The full latent state of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    num_nodes: usize,
    num_steps: usize,
    directed: bool,
    pub groups: Vec<Group>,
    /// `epsilon_t` for each step.
    pub density: Vec<f64>,
    pub hyper: Hyperparams,
    next_label: u64,
}

impl ModelState {
    pub fn new(
        num_nodes: usize,
        num_steps: usize,
        directed: bool,
        density: Vec<f64>,
        hyper: Hyperparams,
    ) -> Result<Self> {
        if num_nodes == 0 || num_steps == 0 {
            return Err(Error::invalid("state needs at least one node and one step"));
        }
        if density.len() != num_steps {
            return Err(Error::DimensionMismatch(format!(
                "{} density values for {num_steps} steps",
                density.len()
            )));
        }
        hyper.validate()?;
        Ok(Self {
            num_nodes,
            num_steps,
            directed,
            groups: Vec::new(),
            density,
            hyper,
            next_label: 0,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn next_label(&self) -> u64 {
        self.next_label
    }

    /// Appends a group and returns its position.
    pub fn push_group(
        &mut self,
        lifetime: Lifetime,
        transition: Transition,
        affinity: Affinity,
        members: Membership,
    ) -> Result<usize> {
        if lifetime.death >= self.num_steps
            || members.len() != lifetime.len()
            || members.num_nodes() != self.num_nodes
        {
            return Err(Error::DimensionMismatch(format!(
                "group with lifetime {lifetime:?} and {}x{} memberships does not fit the state",
                members.num_nodes(),
                members.len()
            )));
        }
        self.groups.push(Group {
            label: self.next_label,
            lifetime,
            transition,
            affinity,
            members,
        });
        self.next_label += 1;
        Ok(self.groups.len() - 1)
    }

    pub(crate) fn set_next_label(&mut self, label: u64) {
        self.next_label = label;
    }

    pub(crate) fn push_labeled(&mut self, group: Group) {
        self.next_label = self.next_label.max(group.label + 1);
        self.groups.push(group);
    }

    pub fn remove_group(&mut self, k: usize) -> Group {
        self.groups.remove(k)
    }

    pub fn timeline(&self) -> GroupTimeline {
        GroupTimeline {
            num_steps: self.num_steps,
            lifetimes: self.groups.iter().map(|g| g.lifetime).collect(),
        }
    }

    #[inline]
    pub fn is_member(&self, node: usize, k: usize, t: usize) -> bool {
        self.groups[k].is_member(node, t)
    }

    /// `epsilon_t + sum_k Theta_k[z_ik, z_jk]` over groups active at `t`.
    pub fn logit(&self, i: usize, j: usize, t: usize) -> f64 {
        let mut s = self.density[t];
        for g in &self.groups {
            if g.lifetime.contains(t) {
                let off = t - g.lifetime.birth;
                s += g.affinity.get(g.members.get(i, off), g.members.get(j, off));
            }
        }
        s
    }

    /// Checks every structural invariant of the state.
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.density.len() != self.num_steps || self.density.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("density series must be finite with one value per step"));
        }
        for (k, g) in self.groups.iter().enumerate() {
            if g.lifetime.birth > g.lifetime.death || g.lifetime.death >= self.num_steps {
                return Err(Error::invalid(format!("group {k} lifetime out of range")));
            }
            if g.members.len() != g.lifetime.len() || g.members.num_nodes() != self.num_nodes {
                return Err(Error::invalid(format!("group {k} membership shape mismatch")));
            }
            let a = g.affinity.0;
            if a.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("group {k} has non-finite affinities")));
            }
            if !self.directed && a[0][1] != a[1][0] {
                return Err(Error::invalid(format!(
                    "group {k} off-diagonal affinities must be tied for undirected networks"
                )));
            }
            let t = g.transition;
            if !((0.0..=1.0).contains(&t.join) && (0.0..=1.0).contains(&t.leave)) {
                return Err(Error::invalid(format!("group {k} transition outside [0, 1]")));
            }
        }
        Ok(())
    }
}
