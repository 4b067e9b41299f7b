use super::{Hyperparams, Lifetime, Transition};

fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Log-probability that a group born at `birth` stays alive exactly through
/// `death`: survival `1 - gamma` per step, death `gamma` unless truncated at
/// the last step.
pub fn log_lifetime_prob(lifetime: Lifetime, gamma: f64, num_steps: usize) -> f64 {
    let survived = (lifetime.death - lifetime.birth) as f64;
    let mut lp = xlny(survived, 1.0 - gamma);
    if lifetime.death + 1 < num_steps {
        lp += gamma.ln();
    }
    lp
}

/// Log prior of an unordered set of group lifetimes.
///
/// Equals `sum_t log Poisson(K_t^+; rate_t) + log K_t^+!` plus the lifetime
/// terms; the factorial counts the label assignments that give the same set.
pub fn log_timeline_prior(lifetimes: &[Lifetime], hyper: &Hyperparams, num_steps: usize) -> f64 {
    let mut births = vec![0usize; num_steps];
    let mut lp = 0.0;
    for &lt in lifetimes {
        births[lt.birth] += 1;
        lp += log_lifetime_prob(lt, hyper.gamma, num_steps);
    }
    for (t, &n) in births.iter().enumerate() {
        let rate = hyper.birth_rate(t);
        lp += -rate + xlny(n as f64, rate);
    }
    lp
}

/// Log-probability of a membership chain started from the pre-birth state 0.
pub fn log_chain_prior(transition: Transition, chain: &[bool]) -> f64 {
    let mut prev = false;
    let mut lp = 0.0;
    for &z in chain {
        lp += transition.prob(prev, z).ln();
        prev = z;
    }
    lp
}
