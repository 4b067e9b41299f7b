//! Flat `key = value` run configuration.
//!
//! Values resolve in order: built-in defaults, the config file, environment
//! variables (`GROUPDYN_` plus the key upper-cased with dots as underscores),
//! then command-line flags. Unknown keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use groupdyn::inference::{KernelSet, SamplerConfig};
use groupdyn::model::Hyperparams;

use crate::error::CliError;

pub const ENV_PREFIX: &str = "GROUPDYN_";

/// Every recognised key with its default value.
pub const KEYS: &[(&str, &str)] = &[
    ("data.directed", "false"),
    ("data.nodes", "50"),
    ("data.steps", "10"),
    ("eval.baseline", "per_pair"),
    ("model.alpha", "1"),
    ("model.beta", "4"),
    ("model.density", "-3"),
    ("model.gamma", "0.1"),
    ("model.lambda", "2"),
    ("model.nu", "1"),
    ("run.dataset", "data"),
    ("run.format", "csv"),
    ("run.mask_fraction", "0.2"),
    ("run.seed", "0"),
    ("run.tobs", "0"),
    ("run.workers", "0"),
    ("sampler.burn_in", "800"),
    ("sampler.chains", "10"),
    ("sampler.eps_rate", "0.01"),
    ("sampler.gibbs_sweeps", "5"),
    ("sampler.hmc_leaps", "10"),
    ("sampler.hmc_step", "0.01"),
    ("sampler.hyper_rate", "0.001"),
    ("sampler.sample_hyperparams", "false"),
    ("sampler.samples", "400"),
    ("sampler.thin", "1"),
];

pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "_").to_ascii_uppercase())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl RunConfig {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key = value, got {raw:?}", n + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| CliError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(CliError::Config(format!("unknown config key `{key}`"))),
        }
    }

    /// Applies `GROUPDYN_*` overrides from `vars`.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<(), CliError> {
        let names: BTreeMap<String, String> = KEYS.iter().map(|(k, _)| (env_name(k), k.to_string())).collect();
        for (name, value) in vars {
            if !name.starts_with(ENV_PREFIX) {
                continue;
            }
            let key = names
                .get(&name)
                .ok_or_else(|| CliError::Config(format!("unknown config variable `{name}`")))?;
            self.set(key, &value)?;
        }
        Ok(())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self
            .values
            .get(key)
            .ok_or_else(|| CliError::Config(format!("unknown config key `{key}`")))?;
        raw.parse()
            .map_err(|_| CliError::Config(format!("invalid value {raw:?} for `{key}`")))
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Fully resolved configuration, one `key = value` per line in key order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    pub fn hyper(&self) -> Result<Hyperparams, CliError> {
        let h = Hyperparams {
            lambda: self.get("model.lambda")?,
            gamma: self.get("model.gamma")?,
            alpha: self.get("model.alpha")?,
            beta: self.get("model.beta")?,
            nu: self.get("model.nu")?,
        };
        h.validate().map_err(|e| CliError::Config(format!("model: {e}")))?;
        Ok(h)
    }

    pub fn sampler(&self) -> Result<SamplerConfig, CliError> {
        let cfg = SamplerConfig {
            burn_in: self.get("sampler.burn_in")?,
            samples: self.get("sampler.samples")?,
            chains: self.get("sampler.chains")?,
            thin: self.get("sampler.thin")?,
            gibbs_sweeps: self.get("sampler.gibbs_sweeps")?,
            hmc_step: self.get("sampler.hmc_step")?,
            hmc_leaps: self.get("sampler.hmc_leaps")?,
            eps_rate: self.get("sampler.eps_rate")?,
            hyper_rate: self.get("sampler.hyper_rate")?,
            seed: self.get("run.seed")?,
            sample_hyperparams: self.get("sampler.sample_hyperparams")?,
            hyper: self.hyper()?,
            kernels: KernelSet::default(),
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}
