//! Run configuration: a flat `key = value` text file merged with command
//! line overrides. Unknown keys are rejected; every key has a default, so
//! an empty file (or no file) runs the standard protocol.

use std::collections::BTreeMap;
use std::path::Path;

use esnlab_core::dynsys::{LorenzParams, LorenzState};
use esnlab_core::experiment::StudyConfig;
use esnlab_core::reservoir::EsnParams;
use esnlab_core::ridge::LambdaConvention;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file `{path}`: {reason}")]
    Unreadable { path: String, reason: String },

    #[error("line {line}: expected `key = value`, got `{text}`")]
    BadLine { line: usize, text: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: invalid value for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Command-line overrides applied on top of the file values.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub ell: Option<usize>,
}

/// Fully merged and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub xi0: f64,
    pub upsilon0: f64,
    pub zeta0: f64,
    pub tau: f64,
    pub generate_steps: usize,
    pub reservoir_size: usize,
    pub input_dim: usize,
    pub spectral_radius: f64,
    pub input_scale: f64,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub lambda: f64,
    pub lambda_convention: LambdaConvention,
    pub washout: usize,
    pub ell: usize,
    pub ell_grid: Vec<usize>,
    pub eval_length: usize,
    pub ref_length: usize,
    pub clt_trials: usize,
    pub clt_ell_grid: Vec<usize>,
    pub pca_components: usize,
    pub dump_esn: bool,
    pub guide_curves: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            xi0: 0.0,
            upsilon0: 1.0,
            zeta0: 1.05,
            tau: 0.01,
            generate_steps: 4000,
            reservoir_size: 300,
            input_dim: 1,
            spectral_radius: 1.0,
            input_scale: 0.05,
            seed: 1,
            seeds: (1..=10).collect(),
            lambda: 1e-9,
            lambda_convention: LambdaConvention::Raw,
            washout: 100,
            ell: 4000,
            ell_grid: (300..=4000).step_by(100).collect(),
            eval_length: 1000,
            ref_length: 20_000,
            clt_trials: 200,
            clt_ell_grid: vec![100, 1000, 10_000],
            pca_components: 3,
            dump_esn: false,
            guide_curves: false,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "sigma",
    "rho",
    "beta",
    "xi0",
    "upsilon0",
    "zeta0",
    "tau",
    "generate_steps",
    "reservoir_size",
    "input_dim",
    "spectral_radius",
    "input_scale",
    "seed",
    "seeds",
    "lambda",
    "lambda_convention",
    "washout",
    "ell",
    "ell_grid",
    "eval_length",
    "ref_length",
    "clt_trials",
    "clt_ell_grid",
    "pca_components",
    "dump_esn",
    "guide_curves",
];

/// Reads `path` (when given), applies `overrides`, validates, and returns
/// the merged configuration. A missing path means pure defaults.
pub fn parse_config(path: Option<&Path>, overrides: Overrides) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError::BadLine {
                    line,
                    text: trimmed.to_string(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { line, key });
            }
            if value.is_empty() {
                return Err(ConfigError::BadValue {
                    line,
                    key,
                    reason: "empty value".into(),
                });
            }
            // later lines win
            entries.insert(key, (line, value));
        }
    }

    let mut cfg = RunConfig::default();
    for (key, (line, value)) in &entries {
        apply_entry(&mut cfg, key, *line, value)?;
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(ell) = overrides.ell {
        cfg.ell = ell;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_entry(
    cfg: &mut RunConfig,
    key: &str,
    line: usize,
    value: &str,
) -> Result<(), ConfigError> {
    let bad = |reason: String| ConfigError::BadValue {
        line,
        key: key.to_string(),
        reason,
    };
    match key {
        "sigma" => cfg.sigma = parse_f64(value).map_err(bad)?,
        "rho" => cfg.rho = parse_f64(value).map_err(bad)?,
        "beta" => cfg.beta = parse_f64(value).map_err(bad)?,
        "xi0" => cfg.xi0 = parse_f64(value).map_err(bad)?,
        "upsilon0" => cfg.upsilon0 = parse_f64(value).map_err(bad)?,
        "zeta0" => cfg.zeta0 = parse_f64(value).map_err(bad)?,
        "tau" => cfg.tau = parse_f64(value).map_err(bad)?,
        "generate_steps" => cfg.generate_steps = parse_usize(value).map_err(bad)?,
        "reservoir_size" => cfg.reservoir_size = parse_usize(value).map_err(bad)?,
        "input_dim" => cfg.input_dim = parse_usize(value).map_err(bad)?,
        "spectral_radius" => cfg.spectral_radius = parse_f64(value).map_err(bad)?,
        "input_scale" => cfg.input_scale = parse_f64(value).map_err(bad)?,
        "seed" => cfg.seed = parse_u64(value).map_err(bad)?,
        "seeds" => cfg.seeds = parse_u64_list(value).map_err(bad)?,
        "lambda" => cfg.lambda = parse_f64(value).map_err(bad)?,
        "lambda_convention" => cfg.lambda_convention = value.parse().map_err(bad)?,
        "washout" => cfg.washout = parse_usize(value).map_err(bad)?,
        "ell" => cfg.ell = parse_usize(value).map_err(bad)?,
        "ell_grid" => cfg.ell_grid = parse_usize_list(value).map_err(bad)?,
        "eval_length" => cfg.eval_length = parse_usize(value).map_err(bad)?,
        "ref_length" => cfg.ref_length = parse_usize(value).map_err(bad)?,
        "clt_trials" => cfg.clt_trials = parse_usize(value).map_err(bad)?,
        "clt_ell_grid" => cfg.clt_ell_grid = parse_usize_list(value).map_err(bad)?,
        "pca_components" => cfg.pca_components = parse_usize(value).map_err(bad)?,
        "dump_esn" => cfg.dump_esn = parse_bool(value).map_err(bad)?,
        "guide_curves" => cfg.guide_curves = parse_bool(value).map_err(bad)?,
        other => {
            return Err(ConfigError::UnknownKey {
                line,
                key: other.to_string(),
            })
        }
    }
    Ok(())
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| e.to_string())
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.parse::<u64>().map_err(|e| e.to_string())
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse::<usize>().map_err(|e| e.to_string())
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected `true` or `false`, got `{other}`")),
    }
}

/// Lists are either `start:step:end` (inclusive) or comma separated.
fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    parse_u64_list(s).map(|v| v.into_iter().map(|x| x as usize).collect())
}

fn parse_u64_list(s: &str) -> Result<Vec<u64>, String> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected `start:step:end`, got `{s}`"));
        }
        let start = parse_u64(parts[0].trim())?;
        let step = parse_u64(parts[1].trim())?;
        let end = parse_u64(parts[2].trim())?;
        if step == 0 {
            return Err("step must be >= 1".into());
        }
        if start > end {
            return Err(format!("range start {start} exceeds end {end}"));
        }
        Ok((start..=end).step_by(step as usize).collect())
    } else {
        s.split(',')
            .map(|p| parse_u64(p.trim()))
            .collect::<Result<Vec<_>, _>>()
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.study_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.input_dim != 1 {
            return Err(ConfigError::Invalid(
                "the scalar observation pipeline requires input_dim = 1".into(),
            ));
        }
        if self.ell == 0 || self.ell + self.washout > self.ref_length {
            return Err(ConfigError::Invalid(format!(
                "ell = {} outside 1..={}",
                self.ell,
                self.ref_length - self.washout
            )));
        }
        if self.clt_trials < 30 {
            return Err(ConfigError::Invalid(format!(
                "clt_trials must be >= 30, got {}",
                self.clt_trials
            )));
        }
        if self.clt_ell_grid.is_empty() || self.clt_ell_grid.iter().any(|&l| l == 0) {
            return Err(ConfigError::Invalid(
                "clt_ell_grid entries must be >= 1".into(),
            ));
        }
        if self.pca_components == 0
            || self.pca_components > self.ell.min(self.reservoir_size)
        {
            return Err(ConfigError::Invalid(format!(
                "pca_components must be in 1..={}",
                self.ell.min(self.reservoir_size)
            )));
        }
        Ok(())
    }

    pub fn lorenz_params(&self) -> LorenzParams {
        LorenzParams {
            sigma: self.sigma,
            rho: self.rho,
            beta: self.beta,
        }
    }

    pub fn initial_state(&self) -> LorenzState {
        LorenzState::new(self.xi0, self.upsilon0, self.zeta0)
    }

    pub fn esn_params(&self) -> EsnParams {
        EsnParams {
            reservoir_size: self.reservoir_size,
            input_dim: self.input_dim,
            spectral_radius_target: self.spectral_radius,
            input_scale: self.input_scale,
            master_seed: self.seed,
        }
    }

    pub fn study_config(&self) -> StudyConfig {
        StudyConfig {
            lorenz: self.lorenz_params(),
            initial_state: self.initial_state(),
            tau: self.tau,
            esn: self.esn_params(),
            lambda: self.lambda,
            lambda_convention: self.lambda_convention,
            washout: self.washout,
            ell_grid: self.ell_grid.clone(),
            eval_length: self.eval_length,
            ref_length: self.ref_length,
            seeds: self.seeds.clone(),
        }
    }
}
