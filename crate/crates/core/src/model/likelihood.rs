use super::logistic::{log_bernoulli, logistic};
use super::ModelState;
use crate::error::{Error, Result};
use crate::network::{DynamicNetwork, PairMask};

/// `p_ij^(t)` under the current state.
pub fn link_probability(state: &ModelState, i: usize, j: usize, t: usize) -> Result<f64> {
    let n = state.num_nodes();
    if i >= n || j >= n || i == j {
        return Err(Error::invalid(format!("invalid pair ({i}, {j})")));
    }
    if t >= state.num_steps() {
        return Err(Error::TimeOutOfRange {
            t,
            steps: state.num_steps(),
        });
    }
    Ok(logistic(state.logit(i, j, t)))
}

pub(crate) fn check_dims(state: &ModelState, net: &DynamicNetwork) -> Result<()> {
    if state.num_nodes() != net.num_nodes()
        || state.num_steps() != net.num_steps()
        || state.is_directed() != net.is_directed()
    {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{} ({}), network is {}x{} ({})",
            state.num_nodes(),
            state.num_steps(),
            if state.is_directed() { "directed" } else { "undirected" },
            net.num_nodes(),
            net.num_steps(),
            if net.is_directed() { "directed" } else { "undirected" },
        )));
    }
    Ok(())
}

/// Bernoulli log-likelihood of every non-masked pair and step.
pub fn log_likelihood(
    state: &ModelState,
    net: &DynamicNetwork,
    mask: Option<&PairMask>,
) -> Result<f64> {
    check_dims(state, net)?;
    let mut total = 0.0;
    for t in 0..net.num_steps() {
        for (i, j) in net.pairs() {
            if mask.is_some_and(|m| m.is_held_out(i, j)) {
                continue;
            }
            total += log_bernoulli(net.has_link(t, i, j), state.logit(i, j, t));
        }
    }
    Ok(total)
}

/// Moves `Theta_k[0, 0]` into the density series over the group's lifetime.
///
/// Every link probability is unchanged because each pair active at `t`
/// selects exactly one entry of `Theta_k`.
pub fn normalize_affinity(state: &ModelState, k: usize) -> Result<ModelState> {
    let mut out = state.clone();
    out.normalize_affinity_in_place(k)?;
    Ok(out)
}

impl ModelState {
    pub fn normalize_affinity_in_place(&mut self, k: usize) -> Result<()> {
        let group = self
            .groups
            .get_mut(k)
            .ok_or_else(|| Error::invalid(format!("no group {k}")))?;
        let c = group.affinity.0[0][0];
        if c == 0.0 {
            return Ok(());
        }
        for row in group.affinity.0.iter_mut() {
            for v in row.iter_mut() {
                *v -= c;
            }
        }
        for t in group.lifetime.steps() {
            self.density[t] += c;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Affinity, Hyperparams, Lifetime, Membership, Transition};

    fn one_group_state(directed: bool) -> ModelState {
        let mut s = ModelState::new(2, 1, directed, vec![0.0], Hyperparams::default()).unwrap();
        let mut m = Membership::zeros(2, 1);
        m.set(0, 0, true);
        m.set(1, 0, true);
        s.push_group(
            Lifetime::new(0, 0, 1).unwrap(),
            Transition {
                join: 0.5,
                leave: 0.5,
            },
            Affinity([[0.0, 0.4], [0.4, 2.0]]),
            m,
        )
        .unwrap();
        s
    }

    #[test]
    fn probability_examples() {
        let empty = ModelState::new(3, 2, false, vec![0.0; 2], Hyperparams::default()).unwrap();
        assert_eq!(link_probability(&empty, 0, 2, 1).unwrap(), 0.5);
        let s = one_group_state(false);
        let p = link_probability(&s, 0, 1, 0).unwrap();
        assert!((p - 0.880_797_077_977_882_3).abs() < 1e-15);
        assert!(link_probability(&s, 0, 0, 0).is_err());
        assert!(link_probability(&s, 0, 1, 1).is_err());
    }

    #[test]
    fn orientation_does_not_matter_when_undirected() {
        let mut s = one_group_state(false);
        s.groups[0].members.set(1, 0, false);
        let a = link_probability(&s, 0, 1, 0).unwrap();
        let b = link_probability(&s, 1, 0, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn half_probability_likelihood() {
        let s = ModelState::new(2, 1, false, vec![0.0], Hyperparams::default()).unwrap();
        let mut net = DynamicNetwork::empty(2, 1, false).unwrap();
        assert!((log_likelihood(&s, &net, None).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        net.set_link(0, 0, 1, true).unwrap();
        assert!((log_likelihood(&s, &net, None).unwrap() - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn shift_then_normalize_recovers_probabilities() {
        let s = one_group_state(true);
        let mut shifted = s.clone();
        for row in shifted.groups[0].affinity.0.iter_mut() {
            for v in row.iter_mut() {
                *v += 3.0;
            }
        }
        let back = normalize_affinity(&shifted, 0).unwrap();
        assert_eq!(back.groups[0].affinity.0[0][0], 0.0);
        for (i, j) in [(0, 1), (1, 0)] {
            let p0 = link_probability(&shifted, i, j, 0).unwrap();
            let p1 = link_probability(&back, i, j, 0).unwrap();
            assert!((p0 - p1).abs() < 1e-12);
        }
        for (x, y) in back.groups[0].affinity.0.iter().flatten().zip(s.groups[0].affinity.0.iter().flatten()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(back.density, vec![3.0]);
        assert_eq!(normalize_affinity(&s, 0).unwrap(), s);
        assert!(normalize_affinity(&s, 3).is_err());
    }
}
