use super::sampler::Sampler;
use crate::model::logistic::logistic;

impl Sampler<'_> {
    /// One gradient step on each `epsilon_t`.
    ///
    /// The step is `eps_rate * sum(y - p)` over training pairs, capped at the
    /// Newton step when the rate exceeds the inverse curvature; large networks
    /// would otherwise overshoot.
    pub fn update_density(&mut self) {
        let n = self.state.num_nodes();
        let directed = self.state.is_directed();
        let rate = self.config.eps_rate;
        for t in 0..self.state.num_steps() {
            let (mut grad, mut curv) = (0.0, 0.0);
            for i in 0..n {
                let start = if directed { 0 } else { i + 1 };
                for j in start..n {
                    if j != i && self.observed.get(i, j) {
                        let p = logistic(self.cache.get(t, i, j));
                        grad += self.link(t, i, j) as u8 as f64 - p;
                        curv += p * (1.0 - p);
                    }
                }
            }
            let step = if rate * curv > 1.0 { grad / curv } else { rate * grad };
            if step != 0.0 {
                self.state.density[t] += step;
                self.cache.add_step(t, step);
            }
        }
    }
}
