//! Missing-link and forecasting protocols, the naive baseline and metrics.

mod forecast;
mod metrics;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use forecast::{extend_one_step, forecast, forecast_series, ForecastOutcome, ForecastPoint};
pub use metrics::{auc_roc, evaluate, heldout_loglik, max_f1, metrics_csv, summarize, MetricRow, Metrics};

use crate::error::{Error, Result};
use crate::inference::{pooled_link_probabilities, PosteriorSamples};
use crate::network::{pair_index, DynamicNetwork, PairMask};

/// One scored pair-step. `t` is zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub t: usize,
    pub i: usize,
    pub j: usize,
    pub label: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoredPairs {
    records: Vec<ScoredPair>,
}

impl ScoredPairs {
    /// Checks that scores lie in `[0, 1]` and no `(t, i, j)` repeats.
    pub fn new(records: Vec<ScoredPair>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &records {
            if !(r.score.is_finite() && (0.0..=1.0).contains(&r.score)) {
                return Err(Error::invalid(format!(
                    "score {} for ({}, {}, {}) outside [0, 1]",
                    r.score, r.t, r.i, r.j
                )));
            }
            if !seen.insert((r.t, r.i, r.j)) {
                return Err(Error::invalid(format!("duplicate pair ({}, {}, {})", r.t, r.i, r.j)));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[ScoredPair] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV `t,i,j,label,score` with one-based `t`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,i,j,label,score\n");
        for r in &self.records {
            writeln!(out, "{},{},{},{},{}", r.t + 1, r.i, r.j, r.label as u8, r.score).unwrap();
        }
        out
    }
}

fn score_heldout(probs: &[f64], mask: &PairMask, net: &DynamicNetwork) -> Result<ScoredPairs> {
    let n = net.num_nodes();
    let directed = net.is_directed();
    let p = net.num_pairs();
    if probs.len() != p * net.num_steps() {
        return Err(Error::DimensionMismatch("probabilities do not match the network".into()));
    }
    let held = mask.held_out_pairs();
    let mut records = Vec::with_capacity(held.len() * net.num_steps());
    for t in 0..net.num_steps() {
        for &(i, j) in &held {
            records.push(ScoredPair {
                t,
                i,
                j,
                label: net.has_link(t, i, j),
                score: probs[t * p + pair_index(n, directed, i, j)],
            });
        }
    }
    ScoredPairs::new(records)
}

/// Scores every held-out pair at every step with its posterior mean link
/// probability pooled over all retained draws of all chains.
pub fn predict_missing(
    samples: &[PosteriorSamples],
    mask: &PairMask,
    net: &DynamicNetwork,
) -> Result<ScoredPairs> {
    if samples.iter().all(|c| c.retained == 0) {
        return Err(Error::invalid("no retained posterior draws"));
    }
    score_heldout(&pooled_link_probabilities(samples)?, mask, net)
}

/// [`predict_missing`] restricted to one chain.
pub fn predict_missing_chain(
    chain: &PosteriorSamples,
    mask: &PairMask,
    net: &DynamicNetwork,
) -> Result<ScoredPairs> {
    predict_missing(std::slice::from_ref(chain), mask, net)
}

/// What the baseline predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineTarget {
    /// Held-out pairs at every step.
    Missing,
    /// Every pair at step `t_obs` (zero-based), from snapshots `0..t_obs`.
    Forecast { t_obs: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BaselineVariant {
    /// Beta(1, 1) posterior mean of each pair's own observations.
    #[default]
    PerPair,
    /// Beta(1, 1) posterior mean of all observed pairs at the same step
    /// (missing) or over the training window (forecast).
    GlobalDensity,
}

/// Independent-Bernoulli baseline with a Beta(1, 1) prior.
pub fn naive_baseline(
    net: &DynamicNetwork,
    mask: &PairMask,
    target: BaselineTarget,
    variant: BaselineVariant,
) -> Result<ScoredPairs> {
    let mut records = Vec::new();
    match target {
        BaselineTarget::Missing => {
            let observed = mask.training_pairs();
            for t in 0..net.num_steps() {
                let global = {
                    let links = observed.iter().filter(|&&(i, j)| net.has_link(t, i, j)).count();
                    (1.0 + links as f64) / (2.0 + observed.len() as f64)
                };
                for (i, j) in mask.held_out_pairs() {
                    let score = match variant {
                        // a held-out pair has no observed snapshot
                        BaselineVariant::PerPair => 0.5,
                        BaselineVariant::GlobalDensity => global,
                    };
                    records.push(ScoredPair {
                        t,
                        i,
                        j,
                        label: net.has_link(t, i, j),
                        score,
                    });
                }
            }
        }
        BaselineTarget::Forecast { t_obs } => {
            if t_obs == 0 || t_obs >= net.num_steps() {
                return Err(Error::TimeOutOfRange {
                    t: t_obs,
                    steps: net.num_steps(),
                });
            }
            let total_links: usize = (0..t_obs).map(|t| net.edge_count(t)).sum();
            let global = (1.0 + total_links as f64) / (2.0 + (net.num_pairs() * t_obs) as f64);
            for (i, j) in net.pairs() {
                let score = match variant {
                    BaselineVariant::PerPair => {
                        let links = (0..t_obs).filter(|&t| net.has_link(t, i, j)).count();
                        (1.0 + links as f64) / (2.0 + t_obs as f64)
                    }
                    BaselineVariant::GlobalDensity => global,
                };
                records.push(ScoredPair {
                    t: t_obs,
                    i,
                    j,
                    label: net.has_link(t_obs, i, j),
                    score,
                });
            }
        }
    }
    ScoredPairs::new(records)
}
