use crate::model::ModelState;
use crate::network::PairMask;

/// Cached link logits `s_ij^(t) = epsilon_t + sum_k Theta_k[z_ik, z_jk]`.
///
/// Stored as a full `T x N x N` array; undirected networks keep it symmetric.
#[derive(Debug, Clone)]
pub struct LinkCache {
    n: usize,
    directed: bool,
    logits: Vec<f64>,
}

impl LinkCache {
    pub fn build(state: &ModelState) -> Self {
        let n = state.num_nodes();
        let steps = state.num_steps();
        let mut logits = vec![0.0; steps * n * n];
        for t in 0..steps {
            let block = &mut logits[t * n * n..(t + 1) * n * n];
            block.fill(state.density[t]);
            for g in state.groups.iter().filter(|g| g.lifetime.contains(t)) {
                let off = t - g.lifetime.birth;
                let a = g.affinity.0;
                for i in 0..n {
                    let zi = g.members.get(i, off) as usize;
                    let row = &mut block[i * n..(i + 1) * n];
                    for (j, v) in row.iter_mut().enumerate() {
                        *v += a[zi][g.members.get(j, off) as usize];
                    }
                }
            }
        }
        Self {
            n,
            directed: state.is_directed(),
            logits,
        }
    }

    #[inline]
    pub fn index(&self, t: usize, i: usize, j: usize) -> usize {
        (t * self.n + i) * self.n + j
    }

    #[inline]
    pub fn get(&self, t: usize, i: usize, j: usize) -> f64 {
        self.logits[self.index(t, i, j)]
    }

    #[inline]
    pub fn at(&self, index: usize) -> f64 {
        self.logits[index]
    }

    /// Adds `delta` to `s_ij^(t)`, mirrored to `s_ji^(t)` when undirected.
    #[inline]
    pub fn add_pair(&mut self, t: usize, i: usize, j: usize, delta: f64) {
        let a = self.index(t, i, j);
        self.logits[a] += delta;
        if !self.directed {
            let b = self.index(t, j, i);
            self.logits[b] += delta;
        }
    }

    /// Adds `delta` to a single directed entry.
    #[inline]
    pub fn add_entry(&mut self, t: usize, i: usize, j: usize, delta: f64) {
        let a = self.index(t, i, j);
        self.logits[a] += delta;
    }

    pub fn add_step(&mut self, t: usize, delta: f64) {
        let n = self.n;
        for v in &mut self.logits[t * n * n..(t + 1) * n * n] {
            *v += delta;
        }
    }

    pub fn max_abs_diff(&self, other: &LinkCache) -> f64 {
        let n = self.n;
        self.logits
            .iter()
            .zip(&other.logits)
            .enumerate()
            .filter(|(idx, _)| (idx % (n * n)) / n != idx % n)
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Training-pair indicator, `N x N`, false on the diagonal.
#[derive(Debug, Clone)]
pub struct Observed {
    n: usize,
    flags: Vec<bool>,
}

impl Observed {
    pub fn from_mask(mask: &PairMask) -> Self {
        let n = mask.num_nodes();
        let mut flags = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                flags[i * n + j] = mask.is_observed(i, j);
            }
        }
        Self { n, flags }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.flags[i * self.n + j]
    }
}
