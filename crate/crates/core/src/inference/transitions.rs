use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::sampler::{ChainRng, Sampler};
use crate::model::{Group, Hyperparams, Transition};

/// Membership transition counts of one group, including the implicit
/// non-member state before birth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub n00: usize,
    pub n01: usize,
    pub n10: usize,
    pub n11: usize,
}

pub fn count_transitions(group: &Group) -> TransitionCounts {
    let mut c = TransitionCounts::default();
    for i in 0..group.members.num_nodes() {
        let mut prev = false;
        for &z in group.members.chain(i) {
            match (prev, z) {
                (false, false) => c.n00 += 1,
                (false, true) => c.n01 += 1,
                (true, false) => c.n10 += 1,
                (true, true) => c.n11 += 1,
            }
            prev = z;
        }
    }
    c
}

/// Replaceable transition update; the default is [`conjugate_transition_update`].
pub type TransitionUpdate = fn(TransitionCounts, &Hyperparams, &mut ChainRng) -> Transition;

const PROB_FLOOR: f64 = 1e-300;

fn beta_draw(a: f64, b: f64, rng: &mut ChainRng) -> f64 {
    let x = Beta::new(a, b).expect("positive beta parameters").sample(rng);
    x.clamp(PROB_FLOOR, 1.0 - f64::EPSILON / 2.0)
}

/// `a ~ Beta(alpha + n01, beta + n00)`, `b ~ Beta(alpha + n10, beta + n11)`.
pub fn sample_transition_params(
    counts: TransitionCounts,
    hyper: &Hyperparams,
    rng: &mut ChainRng,
) -> Transition {
    let join = beta_draw(hyper.alpha + counts.n01 as f64, hyper.beta + counts.n00 as f64, rng);
    let leave = beta_draw(hyper.alpha + counts.n10 as f64, hyper.beta + counts.n11 as f64, rng);
    Transition { join, leave }
}

pub fn conjugate_transition_update(
    counts: TransitionCounts,
    hyper: &Hyperparams,
    rng: &mut ChainRng,
) -> Transition {
    sample_transition_params(counts, hyper, rng)
}

impl Sampler<'_> {
    pub fn update_transitions(&mut self) {
        let update = self.transition_update;
        for k in 0..self.state.num_groups() {
            let counts = count_transitions(&self.state.groups[k]);
            self.state.groups[k].transition = update(counts, &self.state.hyper, &mut self.rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Affinity, Lifetime, Membership};
    use rand::SeedableRng;

    #[test]
    fn counts_include_the_birth_step() {
        let mut m = Membership::zeros(2, 3);
        m.set_chain(0, &[true, true, false]);
        m.set_chain(1, &[false, true, true]);
        let g = Group {
            label: 0,
            lifetime: Lifetime { birth: 1, death: 3 },
            transition: Transition {
                join: 0.5,
                leave: 0.5,
            },
            affinity: Affinity::default(),
            members: m,
        };
        let c = count_transitions(&g);
        assert_eq!(
            c,
            TransitionCounts {
                n00: 1,
                n01: 2,
                n10: 1,
                n11: 2
            }
        );
    }

    #[test]
    fn posterior_means_match_beta() {
        let hyper = Hyperparams {
            alpha: 1.0,
            beta: 4.0,
            ..Hyperparams::default()
        };
        let counts = TransitionCounts {
            n00: 10,
            n01: 5,
            n10: 2,
            n11: 8,
        };
        let mut rng = ChainRng::seed_from_u64(4);
        let draws = 40_000;
        let (mut sa, mut sb) = (0.0, 0.0);
        for _ in 0..draws {
            let tr = sample_transition_params(counts, &hyper, &mut rng);
            sa += tr.join;
            sb += tr.leave;
        }
        assert!((sa / draws as f64 - 6.0 / 20.0).abs() < 0.005);
        assert!((sb / draws as f64 - 3.0 / 15.0).abs() < 0.005);
    }
}
