//! Service configuration: one TOML file, overridable per key through
//! `ELICIT_*` environment variables.

use std::path::{Path, PathBuf};

use elicit_core::dialogue::{EngineConfig, MAX_QUESTIONS_LIMIT};
use elicit_core::ranking::Strategy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("environment variable {var}: cannot parse `{value}`")]
    Env { var: String, value: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub catalog_path: PathBuf,
    /// Defaults to `schema.json` next to the catalog.
    pub schema_path: Option<PathBuf>,
    /// Per-session JSON-lines event logs; disabled when unset.
    pub log_dir: Option<PathBuf>,
    /// Directory of built web client assets served at `/`.
    pub static_dir: Option<PathBuf>,
    pub strategy: Strategy,
    /// Question budget k.
    pub k: usize,
    pub tau_h: f64,
    pub mmr_lambda: f64,
    pub risk_lambda: f64,
    pub match_tau: f64,
    /// Grid rows r and items per row n.
    pub rows: usize,
    pub per_row: usize,
    pub top_k: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let engine = EngineConfig::default();
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            catalog_path: PathBuf::from("data/catalog.csv"),
            schema_path: None,
            log_dir: None,
            static_dir: None,
            strategy: engine.strategy,
            k: engine.max_questions,
            tau_h: engine.tau_h,
            mmr_lambda: engine.ranking.mmr_lambda,
            risk_lambda: engine.ranking.risk_lambda,
            match_tau: engine.ranking.match_tau,
            rows: engine.rows,
            per_row: engine.per_row,
            top_k: engine.ranking.top_k,
        }
    }
}

fn parse_env<T: std::str::FromStr>(var: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Env {
        var: var.to_string(),
        value: value.to_string(),
    })
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path` if given, then applies the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        cfg.apply_env(std::env::vars())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `ELICIT_<FIELD>` overrides, e.g. `ELICIT_PORT=9000`.
    /// Unrelated variables are ignored.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in vars {
            let (var, value) = (k.as_ref(), v.as_ref());
            let Some(key) = var.strip_prefix("ELICIT_") else {
                continue;
            };
            let opt_path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
            match key {
                "HOST" => self.host = value.to_string(),
                "PORT" => self.port = parse_env(var, value)?,
                "CATALOG_PATH" => self.catalog_path = PathBuf::from(value),
                "SCHEMA_PATH" => self.schema_path = opt_path(value),
                "LOG_DIR" => self.log_dir = opt_path(value),
                "STATIC_DIR" => self.static_dir = opt_path(value),
                "STRATEGY" => self.strategy = parse_env(var, value)?,
                "K" => self.k = parse_env(var, value)?,
                "TAU_H" => self.tau_h = parse_env(var, value)?,
                "MMR_LAMBDA" => self.mmr_lambda = parse_env(var, value)?,
                "RISK_LAMBDA" => self.risk_lambda = parse_env(var, value)?,
                "MATCH_TAU" => self.match_tau = parse_env(var, value)?,
                "ROWS" => self.rows = parse_env(var, value)?,
                "PER_ROW" => self.per_row = parse_env(var, value)?,
                "TOP_K" => self.top_k = parse_env(var, value)?,
                _ => {}
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{name} must lie in [0, 1], got {x}")))
            }
        };
        unit("tau_h", self.tau_h)?;
        unit("mmr_lambda", self.mmr_lambda)?;
        unit("match_tau", self.match_tau)?;
        if !(self.risk_lambda >= 0.0) {
            return Err(ConfigError::Invalid("risk_lambda must be non-negative".into()));
        }
        if self.k > MAX_QUESTIONS_LIMIT {
            return Err(ConfigError::Invalid(format!("k must be at most {MAX_QUESTIONS_LIMIT}")));
        }
        if self.rows == 0 || self.per_row == 0 || self.top_k == 0 {
            return Err(ConfigError::Invalid("rows, per_row and top_k must be positive".into()));
        }
        Ok(())
    }

    pub fn schema_path(&self) -> PathBuf {
        self.schema_path.clone().unwrap_or_else(|| {
            self.catalog_path
                .parent()
                .unwrap_or(Path::new("."))
                .join("schema.json")
        })
    }

    /// Engine defaults for new sessions.
    pub fn engine_config(&self) -> EngineConfig {
        let mut e = EngineConfig {
            strategy: self.strategy,
            max_questions: self.k,
            tau_h: self.tau_h,
            rows: self.rows,
            per_row: self.per_row,
            ..EngineConfig::default()
        };
        e.ranking.mmr_lambda = self.mmr_lambda;
        e.ranking.risk_lambda = self.risk_lambda;
        e.ranking.match_tau = self.match_tau;
        e.ranking.top_k = self.top_k;
        e
    }
}
