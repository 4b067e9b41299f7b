use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::model::{Hyperparams, ModelState};

const GAMMA_BOUNDS: (f64, f64) = (1e-6, 1.0 - 1e-6);

/// Updates the hyperparameters given the current groups.
///
/// `lambda` and `gamma` are drawn from their conditionals under `Gamma(1, 1)`
/// and `Beta(1, 1)` priors. `alpha` and `beta` take one gradient-ascent step
/// in log space on the Beta likelihood of the transition probabilities.
pub fn update_hyperparameters<R: Rng + ?Sized>(
    state: &ModelState,
    rate: f64,
    rng: &mut R,
) -> Result<Hyperparams> {
    let mut h = state.hyper;
    let steps = state.num_steps();
    let groups = state.num_groups() as f64;

    let exposure = 1.0 + h.gamma * (steps - 1) as f64;
    h.lambda = Gamma::new(1.0 + groups, 1.0 / (1.0 + exposure))
        .map_err(|e| Error::Numerical(format!("lambda update: {e}")))?
        .sample(rng);

    let (mut deaths, mut survivals) = (0.0, 0.0);
    for g in &state.groups {
        survivals += (g.lifetime.death - g.lifetime.birth) as f64;
        if g.lifetime.death + 1 < steps {
            deaths += 1.0;
        }
    }
    h.gamma = Beta::new(1.0 + deaths, 1.0 + survivals)
        .map_err(|e| Error::Numerical(format!("gamma update: {e}")))?
        .sample(rng)
        .clamp(GAMMA_BOUNDS.0, GAMMA_BOUNDS.1);

    if !state.groups.is_empty() {
        let (da, db) = beta_log_grad(state, h.alpha, h.beta);
        h.alpha = (h.alpha.ln() + rate * da).exp();
        h.beta = (h.beta.ln() + rate * db).exp();
    }
    h.validate()?;
    Ok(h)
}

/// Gradient of `sum_x log Beta(x; alpha, beta)` over every join and leave
/// probability, with respect to `ln alpha` and `ln beta`.
pub fn beta_log_grad(state: &ModelState, alpha: f64, beta: f64) -> (f64, f64) {
    let common = digamma(alpha + beta);
    let (mut da, mut db) = (0.0, 0.0);
    for g in &state.groups {
        for x in [g.transition.join, g.transition.leave] {
            da += x.ln() - digamma(alpha) + common;
            db += (1.0 - x).ln() - digamma(beta) + common;
        }
    }
    (alpha * da, beta * db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::function::beta::ln_beta;

    #[test]
    fn log_space_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let hyper = Hyperparams {
            lambda: 4.0,
            ..Hyperparams::default()
        };
        let state = sample_state(&hyper, 4, 3, false, vec![0.0; 3], &mut rng).unwrap();
        assert!(state.num_groups() > 0);
        let f = |la: f64, lb: f64| {
            let (a, b) = (la.exp(), lb.exp());
            state
                .groups
                .iter()
                .flat_map(|g| [g.transition.join, g.transition.leave])
                .map(|x| (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b))
                .sum::<f64>()
        };
        let (la, lb) = (0.3f64, 1.1f64);
        let (da, db) = beta_log_grad(&state, la.exp(), lb.exp());
        let h = 1e-6;
        let fa = (f(la + h, lb) - f(la - h, lb)) / (2.0 * h);
        let fb = (f(la, lb + h) - f(la, lb - h)) / (2.0 * h);
        assert!((fa - da).abs() < 1e-5 * (1.0 + fa.abs()));
        assert!((fb - db).abs() < 1e-5 * (1.0 + fb.abs()));
    }

    #[test]
    fn gamma_stays_inside_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hyper = Hyperparams {
            lambda: 3.0,
            gamma: 0.4,
            ..Hyperparams::default()
        };
        let state = sample_state(&hyper, 3, 4, true, vec![0.0; 4], &mut rng).unwrap();
        for _ in 0..200 {
            let h = update_hyperparameters(&state, 0.001, &mut rng).unwrap();
            assert!(h.gamma >= 1e-6 && h.gamma <= 1.0 - 1e-6);
            assert!(h.lambda > 0.0 && h.alpha > 0.0 && h.beta > 0.0);
        }
    }
}
