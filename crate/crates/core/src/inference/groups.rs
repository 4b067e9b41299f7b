//! Birth, death and lifetime moves for whole groups.
//!
//! A new group's memberships come from a restricted Gibbs launch: chains start
//! at zero, get `L - 1` forward-filter backward-sample sweeps, and a final
//! sweep whose probability is recorded. The reverse move evaluates the same
//! final-sweep probability for the existing memberships after a fresh launch.
//! Transition and affinity parameters of a new group are drawn from their
//! priors, so their densities cancel.

use rand::Rng;

use super::sampler::Sampler;
use crate::error::{Error, Result};
use crate::model::{log_chain_prior, log_timeline_prior, sample_affinity, sample_transition};
use crate::model::{Affinity, Lifetime, Membership, Transition};

/// Number of `(birth, death)` intervals in `T` steps.
pub fn num_intervals(num_steps: usize) -> usize {
    num_steps * (num_steps + 1) / 2
}

pub fn sample_interval<R: Rng + ?Sized>(num_steps: usize, rng: &mut R) -> Lifetime {
    let mut idx = rng.random_range(0..num_intervals(num_steps));
    for birth in 0..num_steps {
        let span = num_steps - birth;
        if idx < span {
            return Lifetime {
                birth,
                death: birth + idx,
            };
        }
        idx -= span;
    }
    unreachable!("interval index in range")
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupMove {
    Add {
        lifetime: Lifetime,
        transition: Transition,
        affinity: Affinity,
    },
    Remove {
        group: usize,
    },
    Relocate {
        group: usize,
        lifetime: Lifetime,
    },
    /// A remove (or relocate) drawn with no groups; always rejected.
    Empty { relocate: bool },
}

/// A drawn move with the log-probabilities of its discrete choices. The
/// membership launch densities are computed when the move is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupProposal {
    pub kind: GroupMove,
    pub log_q_forward: f64,
    pub log_q_reverse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupOutcome {
    pub accepted: bool,
    pub log_ratio: f64,
}

impl Sampler<'_> {
    /// Draws an add, remove or relocate move with probability 1/3 each.
    pub fn propose_group_update(&mut self) -> GroupProposal {
        let steps = self.state.num_steps();
        let k = self.state.num_groups();
        let ln_m = (num_intervals(steps) as f64).ln();
        let ln3 = 3f64.ln();
        match self.rng.random_range(0..3u8) {
            0 => {
                let lifetime = sample_interval(steps, &mut self.rng);
                let transition = sample_transition(&self.state.hyper, &mut self.rng);
                let affinity =
                    sample_affinity(self.state.hyper.nu, self.state.is_directed(), &mut self.rng);
                GroupProposal {
                    kind: GroupMove::Add {
                        lifetime,
                        transition,
                        affinity,
                    },
                    log_q_forward: -ln3 - ln_m,
                    log_q_reverse: -ln3 - ((k + 1) as f64).ln(),
                }
            }
            which if k == 0 => GroupProposal {
                kind: GroupMove::Empty {
                    relocate: which == 2,
                },
                log_q_forward: 0.0,
                log_q_reverse: f64::NEG_INFINITY,
            },
            1 => {
                let group = self.rng.random_range(0..k);
                GroupProposal {
                    kind: GroupMove::Remove { group },
                    log_q_forward: -ln3 - (k as f64).ln(),
                    log_q_reverse: -ln3 - ln_m,
                }
            }
            _ => {
                let group = self.rng.random_range(0..k);
                let lifetime = sample_interval(steps, &mut self.rng);
                let lq = -ln3 - (k as f64).ln() - ln_m;
                GroupProposal {
                    kind: GroupMove::Relocate { group, lifetime },
                    log_q_forward: lq,
                    log_q_reverse: lq,
                }
            }
        }
    }

    fn timeline_prior_with(&self, replace: Option<(usize, Option<Lifetime>)>, extra: Option<Lifetime>) -> f64 {
        let mut lts: Vec<Lifetime> = Vec::with_capacity(self.state.num_groups() + 1);
        for (k, g) in self.state.groups.iter().enumerate() {
            match replace {
                Some((r, None)) if r == k => {}
                Some((r, Some(lt))) if r == k => lts.push(lt),
                _ => lts.push(g.lifetime),
            }
        }
        lts.extend(extra);
        log_timeline_prior(&lts, &self.state.hyper, self.state.num_steps())
    }

    fn members_log_prior(&self, k: usize) -> f64 {
        let g = &self.state.groups[k];
        (0..self.state.num_nodes())
            .map(|i| log_chain_prior(g.transition, g.members.chain(i)))
            .sum()
    }

    /// Zeroes group `k` and runs the `L - 1` launch sweeps.
    fn launch(&mut self, k: usize) {
        self.clear_members(k);
        for _ in 1..self.config.gibbs_sweeps {
            for i in 0..self.state.num_nodes() {
                self.sample_membership_chain(i, k);
            }
        }
    }

    fn final_draw(&mut self, k: usize) -> f64 {
        (0..self.state.num_nodes())
            .map(|i| self.sample_membership_chain(i, k))
            .sum()
    }

    fn final_eval(&mut self, k: usize, target: &Membership) -> f64 {
        (0..self.state.num_nodes())
            .map(|i| self.force_membership_chain(i, k, target.chain(i)))
            .sum()
    }

    fn restore(&mut self, k: usize, lifetime: Lifetime, members: &Membership) {
        self.clear_members(k);
        let g = &mut self.state.groups[k];
        g.lifetime = lifetime;
        g.members = Membership::zeros(members.num_nodes(), lifetime.len());
        for i in 0..members.num_nodes() {
            self.set_member_chain(k, i, members.chain(i));
        }
    }

    fn metropolis(&mut self, log_ratio: f64) -> bool {
        let u: f64 = self.rng.random();
        u.ln() < log_ratio
    }

    /// Evaluates a proposal and applies it if accepted.
    pub fn accept_group_proposal(&mut self, proposal: GroupProposal) -> Result<GroupOutcome> {
        let discrete = proposal.log_q_reverse - proposal.log_q_forward;
        let outcome = match proposal.kind {
            GroupMove::Empty { relocate } => {
                if relocate {
                    self.stats.relocate_proposed += 1;
                } else {
                    self.stats.remove_proposed += 1;
                }
                GroupOutcome {
                    accepted: false,
                    log_ratio: f64::NEG_INFINITY,
                }
            }
            GroupMove::Add {
                lifetime,
                transition,
                affinity,
            } => {
                self.stats.add_proposed += 1;
                let (b, d) = (lifetime.birth, lifetime.death);
                let prior_old = self.timeline_prior_with(None, None);
                let prior_new = self.timeline_prior_with(None, Some(lifetime));
                let ll_old = self.loglik_steps(b, d);
                let saved_label = self.state.next_label();
                let members = Membership::zeros(self.state.num_nodes(), lifetime.len());
                let k = self.state.push_group(lifetime, transition, affinity, members)?;
                self.launch(k);
                let lq = self.final_draw(k);
                let ll_new = self.loglik_steps(b, d);
                let log_ratio =
                    ll_new - ll_old + prior_new - prior_old + self.members_log_prior(k) - lq + discrete;
                let accepted = self.metropolis(log_ratio);
                if accepted {
                    self.stats.add_accepted += 1;
                } else {
                    self.clear_members(k);
                    self.state.remove_group(k);
                    self.state.set_next_label(saved_label);
                }
                GroupOutcome { accepted, log_ratio }
            }
            GroupMove::Remove { group: k } => {
                self.stats.remove_proposed += 1;
                let lifetime = self.state.groups[k].lifetime;
                let (b, d) = (lifetime.birth, lifetime.death);
                let prior_old = self.timeline_prior_with(None, None);
                let prior_new = self.timeline_prior_with(Some((k, None)), None);
                let ll_old = self.loglik_steps(b, d);
                let saved = self.state.groups[k].members.clone();
                let z_prior = self.members_log_prior(k);
                self.launch(k);
                let lq = self.final_eval(k, &saved);
                self.clear_members(k);
                let ll_new = self.loglik_steps(b, d);
                let log_ratio = ll_new - ll_old + prior_new - prior_old - z_prior + lq + discrete;
                let accepted = self.metropolis(log_ratio);
                if accepted {
                    self.stats.remove_accepted += 1;
                    self.state.remove_group(k);
                } else {
                    self.restore(k, lifetime, &saved);
                }
                GroupOutcome { accepted, log_ratio }
            }
            GroupMove::Relocate {
                group: k,
                lifetime: new,
            } => {
                self.stats.relocate_proposed += 1;
                let old = self.state.groups[k].lifetime;
                if old == new {
                    self.stats.relocate_accepted += 1;
                    return Ok(GroupOutcome {
                        accepted: true,
                        log_ratio: 0.0,
                    });
                }
                let (b, d) = (old.birth.min(new.birth), old.death.max(new.death));
                let prior_old = self.timeline_prior_with(None, None);
                let prior_new = self.timeline_prior_with(Some((k, Some(new))), None);
                let ll_old = self.loglik_steps(b, d);
                let saved = self.state.groups[k].members.clone();
                let z_prior_old = self.members_log_prior(k);
                self.launch(k);
                let lq_reverse = self.final_eval(k, &saved);
                self.clear_members(k);
                {
                    let g = &mut self.state.groups[k];
                    g.lifetime = new;
                    g.members = Membership::zeros(saved.num_nodes(), new.len());
                }
                self.launch(k);
                let lq_forward = self.final_draw(k);
                let z_prior_new = self.members_log_prior(k);
                let ll_new = self.loglik_steps(b, d);
                let log_ratio = ll_new - ll_old + prior_new - prior_old + z_prior_new - z_prior_old
                    + lq_reverse
                    - lq_forward
                    + discrete;
                let accepted = self.metropolis(log_ratio);
                if accepted {
                    self.stats.relocate_accepted += 1;
                } else {
                    self.restore(k, old, &saved);
                }
                GroupOutcome { accepted, log_ratio }
            }
        };
        if outcome.log_ratio.is_nan() {
            return Err(Error::Numerical("group move produced a NaN acceptance ratio".into()));
        }
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn intervals_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let steps = 4;
        let mut counts = vec![vec![0usize; steps]; steps];
        let draws = 100_000;
        for _ in 0..draws {
            let lt = sample_interval(steps, &mut rng);
            assert!(lt.birth <= lt.death && lt.death < steps);
            counts[lt.birth][lt.death] += 1;
        }
        for b in 0..steps {
            for d in b..steps {
                let f = counts[b][d] as f64 / draws as f64;
                assert!((f - 0.1).abs() < 0.006, "{b} {d} {f}");
            }
        }
    }

    #[test]
    fn interval_count() {
        assert_eq!(num_intervals(1), 1);
        assert_eq!(num_intervals(10), 55);
    }
}
