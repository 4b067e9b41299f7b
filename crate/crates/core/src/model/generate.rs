use rand::Rng;
use rand_distr::{Beta, Distribution, Normal, Poisson};

use super::logistic::logistic;
use super::{
    Affinity, GroupTimeline, Hyperparams, Lifetime, Membership, ModelState, Transition,
};
use crate::error::{Error, Result};
use crate::network::DynamicNetwork;

pub(crate) fn poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> usize {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("positive finite rate").sample(rng) as usize
}

/// Draws group births and deaths.
///
/// `Poisson(lambda)` groups are born at the first step and `Poisson(gamma *
/// lambda)` at every later step. An active group dies before each following
/// step with probability `gamma`; survivors are truncated at the last step.
pub fn sample_group_timeline<R: Rng + ?Sized>(
    hyper: &Hyperparams,
    num_steps: usize,
    rng: &mut R,
) -> Result<GroupTimeline> {
    hyper.validate()?;
    if num_steps == 0 {
        return Err(Error::invalid("timeline needs at least one step"));
    }
    let mut lifetimes = Vec::new();
    for t in 0..num_steps {
        let born = poisson(hyper.birth_rate(t), rng);
        for _ in 0..born {
            let mut death = t;
            while death + 1 < num_steps && rng.random::<f64>() >= hyper.gamma {
                death += 1;
            }
            lifetimes.push(Lifetime { birth: t, death });
        }
    }
    Ok(GroupTimeline {
        num_steps,
        lifetimes,
    })
}

/// One membership chain of length `len`, started from the implicit non-member
/// state before birth.
pub fn sample_chain<R: Rng + ?Sized>(transition: Transition, len: usize, rng: &mut R) -> Vec<bool> {
    let mut prev = false;
    (0..len)
        .map(|_| {
            prev = rng.random::<f64>() < transition.prob(prev, true);
            prev
        })
        .collect()
}

pub fn sample_memberships<R: Rng + ?Sized>(
    timeline: &GroupTimeline,
    transitions: &[Transition],
    num_nodes: usize,
    rng: &mut R,
) -> Result<Vec<Membership>> {
    if transitions.len() != timeline.num_groups() {
        return Err(Error::DimensionMismatch(format!(
            "{} transitions for {} groups",
            transitions.len(),
            timeline.num_groups()
        )));
    }
    Ok(timeline
        .lifetimes
        .iter()
        .zip(transitions)
        .map(|(lt, &tr)| {
            let mut m = Membership::zeros(num_nodes, lt.len());
            for i in 0..num_nodes {
                let chain = sample_chain(tr, lt.len(), rng);
                m.set_chain(i, &chain);
            }
            m
        })
        .collect())
}

pub fn sample_transition<R: Rng + ?Sized>(hyper: &Hyperparams, rng: &mut R) -> Transition {
    let beta = Beta::new(hyper.alpha, hyper.beta).expect("validated beta shape");
    Transition {
        join: beta.sample(rng),
        leave: beta.sample(rng),
    }
}

/// Free affinity entries drawn iid from `N(0, nu^2)`.
pub fn sample_affinity<R: Rng + ?Sized>(nu: f64, directed: bool, rng: &mut R) -> Affinity {
    let normal = Normal::new(0.0, nu).expect("positive prior sd");
    let params: Vec<f64> = (0..Affinity::num_free(directed))
        .map(|_| normal.sample(rng))
        .collect();
    Affinity::from_free(directed, &params)
}

/// A complete draw from the prior with the given density series.
pub fn sample_state<R: Rng + ?Sized>(
    hyper: &Hyperparams,
    num_nodes: usize,
    num_steps: usize,
    directed: bool,
    density: Vec<f64>,
    rng: &mut R,
) -> Result<ModelState> {
    let mut state = ModelState::new(num_nodes, num_steps, directed, density, *hyper)?;
    let timeline = sample_group_timeline(hyper, num_steps, rng)?;
    for lifetime in timeline.lifetimes {
        let transition = sample_transition(hyper, rng);
        let affinity = sample_affinity(hyper.nu, directed, rng);
        let mut members = Membership::zeros(num_nodes, lifetime.len());
        for i in 0..num_nodes {
            members.set_chain(i, &sample_chain(transition, lifetime.len(), rng));
        }
        state.push_group(lifetime, transition, affinity, members)?;
    }
    Ok(state)
}

/// Independent Bernoulli link draws for every pair and step.
pub fn sample_network<R: Rng + ?Sized>(state: &ModelState, rng: &mut R) -> DynamicNetwork {
    let mut net = DynamicNetwork::empty(state.num_nodes(), state.num_steps(), state.is_directed())
        .expect("state dimensions are positive");
    for t in 0..state.num_steps() {
        let pairs: Vec<(usize, usize)> = net.pairs().collect();
        for (i, j) in pairs {
            let p = logistic(state.logit(i, j, t));
            if rng.random::<f64>() < p {
                net.set_link(t, i, j, true).expect("valid pair");
            }
        }
    }
    net
}
