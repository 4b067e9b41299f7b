use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ScoredPairs;
use crate::error::{Error, Result};

const LL_CLAMP: f64 = 1e-12;

fn label_counts(scored: &ScoredPairs) -> (usize, usize) {
    let pos = scored.records().iter().filter(|r| r.label).count();
    (pos, scored.len() - pos)
}

/// Mann-Whitney AUC with average ranks; tied scores count one half.
pub fn auc_roc(scored: &ScoredPairs) -> Result<f64> {
    let (pos, neg) = label_counts(scored);
    if pos == 0 || neg == 0 {
        return Err(Error::invalid(format!(
            "AUC needs both labels ({pos} positive, {neg} negative)"
        )));
    }
    let mut order: Vec<(f64, bool)> = scored.records().iter().map(|r| (r.score, r.label)).collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && order[end + 1].0 == order[start].0 {
            end += 1;
        }
        // ranks start..=end (one-based start+1..=end+1) share their mean
        let mean_rank = (start + end) as f64 / 2.0 + 1.0;
        rank_sum += mean_rank * order[start..=end].iter().filter(|x| x.1).count() as f64;
        start = end + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Largest F1 over thresholds at every distinct score (predict `score >= t`).
pub fn max_f1(scored: &ScoredPairs) -> Result<f64> {
    let (pos, _) = label_counts(scored);
    if pos == 0 {
        return Err(Error::invalid("F1 needs at least one positive label"));
    }
    let mut order: Vec<(f64, bool)> = scored.records().iter().map(|r| (r.score, r.label)).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let mut best: f64 = 0.0;
    let (mut tp, mut predicted) = (0usize, 0usize);
    let mut idx = 0;
    while idx < order.len() {
        let score = order[idx].0;
        while idx < order.len() && order[idx].0 == score {
            predicted += 1;
            tp += order[idx].1 as usize;
            idx += 1;
        }
        best = best.max(2.0 * tp as f64 / (predicted + pos) as f64);
    }
    Ok(best)
}

/// Bernoulli log-likelihood of the labels with scores clamped to `[1e-12, 1 - 1e-12]`.
pub fn heldout_loglik(scored: &ScoredPairs) -> f64 {
    scored
        .records()
        .iter()
        .map(|r| {
            let p = r.score.clamp(LL_CLAMP, 1.0 - LL_CLAMP);
            if r.label {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub f1: f64,
    pub loglik: f64,
}

pub fn evaluate(scored: &ScoredPairs) -> Result<Metrics> {
    Ok(Metrics {
        auc: auc_roc(scored)?,
        f1: max_f1(scored)?,
        loglik: heldout_loglik(scored),
    })
}

/// One line of the metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub dataset: String,
    pub model: String,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

impl MetricRow {
    pub fn rows(dataset: &str, model: &str, m: &Metrics, stderr: Option<&Metrics>) -> Vec<MetricRow> {
        let mk = |metric: &str, value: f64, se: Option<f64>| MetricRow {
            dataset: dataset.to_string(),
            model: model.to_string(),
            metric: metric.to_string(),
            value,
            stderr: se,
        };
        vec![
            mk("TestLL", m.loglik, stderr.map(|s| s.loglik)),
            mk("AUC", m.auc, stderr.map(|s| s.auc)),
            mk("F1", m.f1, stderr.map(|s| s.f1)),
        ]
    }
}

/// `dataset,model,metric,value,stderr`; a missing standard error is left empty.
pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("dataset,model,metric,value,stderr\n");
    for r in rows {
        let se = r.stderr.map(|s| s.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{se}", r.dataset, r.model, r.metric, r.value).unwrap();
    }
    out
}

/// Mean and standard error of the mean of each metric.
pub fn summarize(values: &[Metrics]) -> Option<(Metrics, Option<Metrics>)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = |f: fn(&Metrics) -> f64| values.iter().map(f).sum::<f64>() / n;
    let m = Metrics {
        auc: mean(|x| x.auc),
        f1: mean(|x| x.f1),
        loglik: mean(|x| x.loglik),
    };
    if values.len() < 2 {
        return Some((m, None));
    }
    let se = |f: fn(&Metrics) -> f64, mu: f64| {
        (values.iter().map(|x| (f(x) - mu).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    };
    let s = Metrics {
        auc: se(|x| x.auc, m.auc),
        f1: se(|x| x.f1, m.f1),
        loglik: se(|x| x.loglik, m.loglik),
    };
    Some((m, Some(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ScoredPair;
    use proptest::prelude::*;

    fn scored(labels: &[bool], scores: &[f64]) -> ScoredPairs {
        ScoredPairs::new(
            labels
                .iter()
                .zip(scores)
                .enumerate()
                .map(|(k, (&label, &score))| ScoredPair {
                    t: 0,
                    i: k,
                    j: k + 1,
                    label,
                    score,
                })
                .collect(),
        )
        .unwrap()
    }

    /// Counts positive-negative wins directly.
    fn pairwise_auc(labels: &[bool], scores: &[f64]) -> f64 {
        let (mut wins, mut total) = (0.0, 0.0);
        for (a, &la) in labels.iter().enumerate() {
            for (b, &lb) in labels.iter().enumerate() {
                if la && !lb {
                    total += 1.0;
                    if scores[a] > scores[b] {
                        wins += 1.0;
                    } else if scores[a] == scores[b] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / total
    }

    #[test]
    fn four_entry_fixture() {
        let s = scored(&[true, false, true, false], &[0.9, 0.8, 0.4, 0.1]);
        assert!((auc_roc(&s).unwrap() - 0.75).abs() < 1e-15);
        assert!((max_f1(&s).unwrap() - 0.8).abs() < 1e-15);
        let want = 0.9f64.ln() + 0.2f64.ln() + 0.4f64.ln() + 0.9f64.ln();
        assert!((heldout_loglik(&s) - want).abs() < 1e-12);
    }

    #[test]
    fn edge_cases() {
        let s = scored(&[true, false, true], &[0.5, 0.5, 0.5]);
        assert_eq!(auc_roc(&s).unwrap(), 0.5);
        let s = scored(&[true, true], &[0.3, 0.9]);
        assert!(auc_roc(&s).is_err());
        assert_eq!(max_f1(&s).unwrap(), 1.0);
        assert!(max_f1(&scored(&[false], &[0.2])).is_err());
        let s = scored(&[true, false], &[1.0, 0.0]);
        assert!(heldout_loglik(&s).abs() < 1e-10);
        assert!((heldout_loglik(&scored(&[true], &[0.5])) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let m = Metrics {
            auc: 0.75,
            f1: 0.8,
            loglik: -1.5,
        };
        let csv = metrics_csv(&MetricRow::rows("toy", "groups", &m, None));
        assert_eq!(
            csv,
            "dataset,model,metric,value,stderr\ntoy,groups,TestLL,-1.5,\ntoy,groups,AUC,0.75,\ntoy,groups,F1,0.8,\n"
        );
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise_count(v in prop::collection::vec((any::<bool>(), 0u8..6), 2..40)) {
            let labels: Vec<bool> = v.iter().map(|x| x.0).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let scores: Vec<f64> = v.iter().map(|x| x.1 as f64 / 5.0).collect();
            let s = scored(&labels, &scores);
            prop_assert!((auc_roc(&s).unwrap() - pairwise_auc(&labels, &scores)).abs() < 1e-12);
        }

        #[test]
        fn monotone_transform_invariance(v in prop::collection::vec((any::<bool>(), 0.0f64..1.0), 2..60)) {
            let labels: Vec<bool> = v.iter().map(|x| x.0).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let scores: Vec<f64> = v.iter().map(|x| x.1).collect();
            let warped: Vec<f64> = scores.iter().map(|s| s.powi(3)).collect();
            let (a, b) = (scored(&labels, &scores), scored(&labels, &warped));
            prop_assert_eq!(auc_roc(&a).unwrap(), auc_roc(&b).unwrap());
            prop_assert_eq!(max_f1(&a).unwrap(), max_f1(&b).unwrap());
        }

        #[test]
        fn label_swap_complements_auc(v in prop::collection::vec(any::<bool>(), 2..40)) {
            prop_assume!(v.iter().any(|&l| l) && v.iter().any(|&l| !l));
            let scores: Vec<f64> = (0..v.len()).map(|k| k as f64 / v.len() as f64).collect();
            let swapped: Vec<bool> = v.iter().map(|l| !l).collect();
            let a = auc_roc(&scored(&v, &scores)).unwrap();
            let b = auc_roc(&scored(&swapped, &scores)).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }
    }
}
