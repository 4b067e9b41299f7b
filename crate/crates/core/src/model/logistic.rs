//! Numerically stable logistic helpers.

/// `g(x) = exp(x) / (1 + exp(x))`, evaluated without overflow.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(x))`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `log Bernoulli(y; g(x))`.
#[inline]
pub fn log_bernoulli(y: bool, x: f64) -> f64 {
    if y {
        -softplus(-x)
    } else {
        -softplus(x)
    }
}

/// `ln(p / (1 - p))` with `p` clamped to `[lo, hi]` logits.
pub fn clamped_logit(p: f64, bound: f64) -> f64 {
    let eps = 1e-300;
    let x = (p.max(eps) / (1.0 - p).max(eps)).ln();
    x.clamp(-bound, bound)
}
