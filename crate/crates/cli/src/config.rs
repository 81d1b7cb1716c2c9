//! Run configuration: defaults, then a JSON config file, then environment
//! variables, then command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use formality::weights::CACHE_ENV;

pub const CONFIG_ENV: &str = "FORMALITY_CONFIG";
pub const SAMPLES_ENV: &str = "FORMALITY_SAMPLES";
pub const SEED_ENV: &str = "FORMALITY_SEED";
pub const K_SIGMA_ENV: &str = "FORMALITY_K_SIGMA";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub cache_root: PathBuf,
    pub use_cache: bool,
    /// Monte Carlo samples per graph.
    pub samples: u64,
    pub seed: u64,
    /// Degree bound of the Poisson-bracket span certificates.
    pub degree_bound: u32,
    /// A numeric check passes when every coefficient is within `k_sigma`
    /// standard errors of zero.
    pub k_sigma: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            cache_root: PathBuf::from(".formality-cache/weights"),
            use_cache: true,
            samples: 200_000,
            seed: 1,
            degree_bound: 6,
            k_sigma: 3.0,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

fn env_parse<T: std::str::FromStr>(name: &str) -> Result<Option<T>, ConfigError> {
    match std::env::var(name) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| ConfigError(format!("{name}={v} is not valid"))),
        Err(_) => Ok(None),
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    /// Defaults overlaid with the config file (explicit path, else
    /// `FORMALITY_CONFIG`) and the environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let mut cfg = match path.map(Path::to_path_buf).or(env_path) {
            Some(p) => Self::from_file(&p)?,
            None => Config::default(),
        };
        if let Some(dir) = std::env::var_os(CACHE_ENV) {
            cfg.cache_root = PathBuf::from(dir);
        }
        if let Some(s) = env_parse(SAMPLES_ENV)? {
            cfg.samples = s;
        }
        if let Some(s) = env_parse(SEED_ENV)? {
            cfg.seed = s;
        }
        if let Some(k) = env_parse(K_SIGMA_ENV)? {
            cfg.k_sigma = k;
        }
        Ok(cfg)
    }
}
