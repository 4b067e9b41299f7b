use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::SamplerConfig;
use super::sampler::{KernelStats, Sampler};
use crate::error::{Error, Result};
use crate::model::{ModelState, StateDocument};
use crate::network::{num_pairs, pairs, DynamicNetwork};

/// Draws retained by one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub chain_id: usize,
    pub seed: u64,
    pub num_nodes: usize,
    pub num_steps: usize,
    pub directed: bool,
    pub snapshots: Vec<ModelState>,
    /// Sum over retained draws of `p_ij^(t)`, laid out `[t][canonical pair]`.
    pub prob_sum: Vec<f64>,
    pub retained: usize,
    /// Training log-likelihood after every sweep, burn-in included.
    pub loglik_trace: Vec<f64>,
    pub stats: KernelStats,
    pub aborted: Option<String>,
}

impl PosteriorSamples {
    pub fn new(chain_id: usize, seed: u64, net: &DynamicNetwork) -> Self {
        Self {
            chain_id,
            seed,
            num_nodes: net.num_nodes(),
            num_steps: net.num_steps(),
            directed: net.is_directed(),
            snapshots: Vec::new(),
            prob_sum: vec![0.0; net.num_steps() * net.num_pairs()],
            retained: 0,
            loglik_trace: Vec::new(),
            stats: KernelStats::default(),
            aborted: None,
        }
    }

    pub(super) fn record(&mut self, sampler: &Sampler<'_>) {
        sampler.accumulate_probabilities(&mut self.prob_sum);
        self.snapshots.push(sampler.state().clone());
        self.retained += 1;
    }

    /// Posterior mean link probabilities, `None` without retained draws.
    pub fn mean_probabilities(&self) -> Option<Vec<f64>> {
        (self.retained > 0).then(|| {
            let r = self.retained as f64;
            self.prob_sum.iter().map(|s| s / r).collect()
        })
    }
}

/// Posterior mean link probabilities pooled over chains, weighted by draws.
pub fn pooled_link_probabilities(chains: &[PosteriorSamples]) -> Result<Vec<f64>> {
    let first = chains
        .first()
        .ok_or_else(|| Error::invalid("no chains to pool"))?;
    let retained: usize = chains.iter().map(|c| c.retained).sum();
    if retained == 0 {
        return Err(Error::invalid("no retained draws to pool"));
    }
    let mut out = vec![0.0; first.prob_sum.len()];
    for c in chains {
        if c.prob_sum.len() != out.len() {
            return Err(Error::DimensionMismatch("chains disagree in shape".into()));
        }
        for (o, s) in out.iter_mut().zip(&c.prob_sum) {
            *o += s;
        }
    }
    for o in &mut out {
        *o /= retained as f64;
    }
    Ok(out)
}

/// CSV `t,i,j,prob` with one-based `t`, in canonical pair order.
pub fn link_probability_csv(
    num_nodes: usize,
    num_steps: usize,
    directed: bool,
    probs: &[f64],
) -> Result<String> {
    let p = num_pairs(num_nodes, directed);
    if probs.len() != num_steps * p {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities for {num_steps} steps of {p} pairs",
            probs.len()
        )));
    }
    let mut out = String::from("t,i,j,prob\n");
    for t in 0..num_steps {
        for (k, (i, j)) in pairs(num_nodes, directed).enumerate() {
            writeln!(out, "{},{i},{j},{}", t + 1, probs[t * p + k]).unwrap();
        }
    }
    Ok(out)
}

/// Run-level record written next to the chain files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorManifest {
    pub seed: u64,
    pub chains: usize,
    pub num_nodes: usize,
    pub num_steps: usize,
    pub directed: bool,
    pub config: SamplerConfig,
    pub chain_files: Vec<String>,
    pub retained: Vec<usize>,
    pub aborted: Vec<Option<String>>,
    /// Caller-supplied settings, e.g. the resolved configuration.
    pub settings: BTreeMap<String, String>,
}

/// Per-chain file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub chain_id: usize,
    pub seed: u64,
    pub retained: usize,
    pub aborted: Option<String>,
    pub stats: KernelStats,
    pub loglik_trace: Vec<f64>,
    pub snapshots: Vec<StateDocument>,
}

impl From<&PosteriorSamples> for ChainRecord {
    fn from(c: &PosteriorSamples) -> Self {
        Self {
            chain_id: c.chain_id,
            seed: c.seed,
            retained: c.retained,
            aborted: c.aborted.clone(),
            stats: c.stats,
            loglik_trace: c.loglik_trace.clone(),
            snapshots: c.snapshots.iter().map(StateDocument::from).collect(),
        }
    }
}

impl ChainRecord {
    pub fn states(&self) -> Result<Vec<ModelState>> {
        self.snapshots.iter().cloned().map(ModelState::try_from).collect()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `manifest.json`, one `chain_NN.json` per chain and `link_probs.csv`.
pub fn write_posterior(
    dir: impl AsRef<Path>,
    config: &SamplerConfig,
    chains: &[PosteriorSamples],
    settings: BTreeMap<String, String>,
) -> Result<PosteriorManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let first = chains.first().ok_or_else(|| Error::invalid("no chains to write"))?;
    let mut chain_files = Vec::with_capacity(chains.len());
    for c in chains {
        let name = format!("chain_{:02}.json", c.chain_id);
        let text = serde_json::to_string(&ChainRecord::from(c))?;
        write_file(&dir.join(&name), &text)?;
        chain_files.push(name);
    }
    if chains.iter().any(|c| c.retained > 0) {
        let probs = pooled_link_probabilities(chains)?;
        let csv = link_probability_csv(first.num_nodes, first.num_steps, first.directed, &probs)?;
        write_file(&dir.join("link_probs.csv"), &csv)?;
    }
    let manifest = PosteriorManifest {
        seed: config.seed,
        chains: chains.len(),
        num_nodes: first.num_nodes,
        num_steps: first.num_steps,
        directed: first.directed,
        config: config.clone(),
        chain_files,
        retained: chains.iter().map(|c| c.retained).collect(),
        aborted: chains.iter().map(|c| c.aborted.clone()).collect(),
        settings,
    };
    write_file(&dir.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<PosteriorManifest> {
    let path = dir.as_ref().join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
