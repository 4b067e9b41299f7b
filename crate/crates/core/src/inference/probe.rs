use std::time::Instant;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::config::SamplerConfig;
use super::sampler::{ChainRng, Sampler};
use crate::error::Result;
use crate::model::{sample_chain, sample_network, Affinity, Hyperparams, Lifetime, Membership, ModelState, Transition};
use crate::network::PairMask;

/// Grid for [`sweep_cost_probe`]. Each axis is varied with the other two held
/// at their base values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub nodes: Vec<usize>,
    pub steps: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub base_nodes: usize,
    pub base_steps: usize,
    pub base_lambda: f64,
    pub gamma: f64,
    pub warmup_sweeps: usize,
    pub timed_sweeps: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        Self {
            nodes: vec![20, 40, 80],
            steps: vec![5, 10, 20],
            lambdas: vec![4.0, 8.0, 16.0],
            base_nodes: 40,
            base_steps: 10,
            base_lambda: 8.0,
            gamma: 0.02,
            warmup_sweeps: 2,
            timed_sweeps: 4,
            repeats: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeAxis {
    Nodes,
    Steps,
    Lambda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub axis: ProbeAxis,
    pub nodes: usize,
    pub steps: usize,
    pub lambda: f64,
    pub seconds_per_sweep: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub node_exponent: f64,
    pub step_exponent: f64,
    pub lambda_exponent: f64,
}

/// Planted state with `round(lambda)` groups alive throughout.
fn planted_state(nodes: usize, steps: usize, lambda: f64, gamma: f64, rng: &mut ChainRng) -> Result<ModelState> {
    let hyper = Hyperparams {
        lambda,
        gamma,
        ..Hyperparams::default()
    };
    let mut state = ModelState::new(nodes, steps, false, vec![-2.5; steps], hyper)?;
    let tr = Transition {
        join: 0.2,
        leave: 0.1,
    };
    for _ in 0..lambda.round() as usize {
        let mut members = Membership::zeros(nodes, steps);
        for i in 0..nodes {
            members.set_chain(i, &sample_chain(tr, steps, rng));
        }
        state.push_group(
            Lifetime {
                birth: 0,
                death: steps - 1,
            },
            tr,
            Affinity::from_free(false, &[-0.5, 2.0]),
            members,
        )?;
    }
    Ok(state)
}

fn time_point(
    nodes: usize,
    steps: usize,
    lambda: f64,
    grid: &ProbeGrid,
    config: &SamplerConfig,
) -> Result<f64> {
    let mut rng = ChainRng::seed_from_u64(grid.seed ^ (nodes as u64) << 32 ^ (steps as u64) << 16 ^ lambda.to_bits());
    let state = planted_state(nodes, steps, lambda, grid.gamma, &mut rng)?;
    let net = sample_network(&state, &mut rng);
    let mask = PairMask::none(nodes, false);
    let config = SamplerConfig {
        hyper: state.hyper,
        sample_hyperparams: false,
        ..config.clone()
    };
    let mut best = f64::INFINITY;
    for rep in 0..grid.repeats.max(1) {
        let mut sampler = Sampler::new(&net, &mask, state.clone(), config.clone(), ChainRng::seed_from_u64(rep as u64))?;
        for _ in 0..grid.warmup_sweeps {
            sampler.sweep()?;
        }
        let start = Instant::now();
        for _ in 0..grid.timed_sweeps.max(1) {
            sampler.sweep()?;
        }
        best = best.min(start.elapsed().as_secs_f64() / grid.timed_sweeps.max(1) as f64);
    }
    Ok(best)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Times sweeps on planted synthetic networks across the grid and fits the
/// scaling exponent of each axis. Uses the fastest of `repeats` runs per point.
pub fn sweep_cost_probe(grid: &ProbeGrid, config: &SamplerConfig) -> Result<ProbeReport> {
    let mut rows = Vec::new();
    let mut axis = |kind: ProbeAxis, points: Vec<(usize, usize, f64)>| -> Result<f64> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (n, t, l) in points {
            let secs = time_point(n, t, l, grid, config)?;
            xs.push(match kind {
                ProbeAxis::Nodes => n as f64,
                ProbeAxis::Steps => t as f64,
                ProbeAxis::Lambda => l,
            });
            ys.push(secs);
            rows.push(ProbeRow {
                axis: kind,
                nodes: n,
                steps: t,
                lambda: l,
                seconds_per_sweep: secs,
            });
        }
        Ok(log_log_slope(&xs, &ys))
    };
    let node_exponent = axis(
        ProbeAxis::Nodes,
        grid.nodes.iter().map(|&n| (n, grid.base_steps, grid.base_lambda)).collect(),
    )?;
    let step_exponent = axis(
        ProbeAxis::Steps,
        grid.steps.iter().map(|&t| (grid.base_nodes, t, grid.base_lambda)).collect(),
    )?;
    let lambda_exponent = axis(
        ProbeAxis::Lambda,
        grid.lambdas.iter().map(|&l| (grid.base_nodes, grid.base_steps, l)).collect(),
    )?;
    Ok(ProbeReport {
        rows,
        node_exponent,
        step_exponent,
        lambda_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
        assert!((log_log_slope(&xs, &ys) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn tiny_probe_runs() {
        let grid = ProbeGrid {
            nodes: vec![4, 6],
            steps: vec![2, 3],
            lambdas: vec![1.0, 2.0],
            base_nodes: 4,
            base_steps: 2,
            base_lambda: 1.0,
            warmup_sweeps: 0,
            timed_sweeps: 1,
            repeats: 1,
            ..ProbeGrid::default()
        };
        let report = sweep_cost_probe(&grid, &SamplerConfig::default()).unwrap();
        assert_eq!(report.rows.len(), 6);
        assert!(report.node_exponent.is_finite());
    }
}
