//! Application configuration: a simple `key = value` file with CLI-flag
//! override precedence (flags > file > defaults). Secrets only ever travel
//! through environment variables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use thiserror::Error;

use crate::eval::PriceField;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("config line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("{0}")]
    Incomplete(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackendKind {
    #[default]
    Mock,
    Live,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mock" => Ok(BackendKind::Mock),
            "live" => Ok(BackendKind::Live),
            other => Err(format!("unknown backend `{other}` (expected mock or live)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AppConfig {
    pub db: Option<PathBuf>,
    pub backend: BackendKind,
    pub base_url: Option<String>,
    pub api_key_env: String,
    pub model: String,
    pub rate_card: Option<PathBuf>,
    pub mock_script: Option<PathBuf>,
    pub cutoffs: Option<PathBuf>,
    pub max_tool_rounds: usize,
    pub timeout_secs: u64,
    pub workers: usize,
    pub price_field: PriceField,
    pub report_dir: PathBuf,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            db: None,
            backend: BackendKind::Mock,
            base_url: None,
            api_key_env: "OPENAI_API_KEY".into(),
            model: "mock-model".into(),
            rate_card: None,
            mock_script: None,
            cutoffs: None,
            max_tool_rounds: 3,
            timeout_secs: 60,
            workers: 1,
            price_field: PriceField::Close,
            report_dir: PathBuf::from("reports"),
        }
    }
}

impl AppConfig {
    /// Parse a config file: `key = value` per line, `#` comments.
    pub fn load(path: impl AsRef<Path>) -> Result<AppConfig, ConfigError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        let mut config = AppConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Malformed {
                line: i + 1,
                reason: "expected `key = value`".into(),
            })?;
            config.apply(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    /// Set one key; used by both the file loader and flag overrides.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let invalid = |reason: String| ConfigError::Invalid {
            key: key.to_string(),
            reason,
        };
        match key {
            "db" => self.db = Some(PathBuf::from(value)),
            "backend" => self.backend = value.parse().map_err(invalid)?,
            "base_url" => self.base_url = Some(value.to_string()),
            "api_key_env" => self.api_key_env = value.to_string(),
            "model" => self.model = value.to_string(),
            "rate_card" => self.rate_card = Some(PathBuf::from(value)),
            "mock_script" => self.mock_script = Some(PathBuf::from(value)),
            "cutoffs" => self.cutoffs = Some(PathBuf::from(value)),
            "max_tool_rounds" => {
                self.max_tool_rounds = value
                    .parse()
                    .map_err(|_| invalid("must be a positive integer".into()))?
            }
            "timeout_secs" => {
                self.timeout_secs = value
                    .parse()
                    .map_err(|_| invalid("must be a positive integer".into()))?
            }
            "workers" => {
                self.workers = value
                    .parse()
                    .map_err(|_| invalid("must be a positive integer".into()))?
            }
            "price_field" => self.price_field = value.parse().map_err(invalid)?,
            "report_dir" => self.report_dir = PathBuf::from(value),
            other => {
                return Err(ConfigError::Invalid {
                    key: other.to_string(),
                    reason: "unknown key".into(),
                })
            }
        }
        Ok(())
    }

    /// Live backends need an endpoint; mock interaction needs a script.
    pub fn validate_for_chat(&self) -> Result<(), ConfigError> {
        match self.backend {
            BackendKind::Live => {
                if self.base_url.is_none() {
                    return Err(ConfigError::Incomplete(
                        "live backend requires base_url (config) or --base-url".into(),
                    ));
                }
            }
            BackendKind::Mock => {
                if self.mock_script.is_none() {
                    return Err(ConfigError::Incomplete(
                        "mock backend requires mock_script (config) or --mock-script".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Per-model knowledge-cutoff dates, `model_id,cutoff_date` CSV.
pub fn load_cutoffs(path: impl AsRef<Path>) -> Result<BTreeMap<String, NaiveDate>, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (i == 0 && line.starts_with("model_id")) {
            continue;
        }
        let (model, date) = line.split_once(',').ok_or(ConfigError::Malformed {
            line: i + 1,
            reason: "expected `model_id,cutoff_date`".into(),
        })?;
        let date = NaiveDate::from_str(date.trim()).map_err(|e| ConfigError::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.insert(model.trim().to_string(), date);
    }
    Ok(out)
}
