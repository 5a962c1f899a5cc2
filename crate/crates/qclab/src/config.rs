//! Flat key = value experiment configuration: order-preserving, lossless
//! through serialization, with unknown keys rejected against a
//! per-subcommand whitelist.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`")]
    Malformed(usize),
    #[error("duplicate key `{0}`")]
    Duplicate(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("missing required key `{0}`")]
    Missing(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pairs: Vec<(String, String)>,
}

impl ExperimentConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Malformed(lineno + 1))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if self.pairs.iter().any(|(k, _)| k == key) {
            return Err(ConfigError::Duplicate(key.into()));
        }
        self.pairs.push((key.into(), value.into()));
        Ok(())
    }

    /// Inserts or replaces (used by CLI-flag overrides).
    pub fn set_override(&mut self, key: &str, value: &str) {
        if let Some(pair) = self.pairs.iter_mut().find(|(k, _)| k == key) {
            pair.1 = value.into();
        } else {
            self.pairs.push((key.into(), value.into()));
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError::Missing(key.into()))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    message: format!("`{v}` is not a number"),
                })
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    message: format!("`{v}` is not a non-negative integer"),
                })
            })
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    message: format!("`{v}` is not a non-negative integer"),
                })
            })
            .transpose()
    }

    /// Rejects any key outside the whitelist.
    pub fn validate_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for (k, _) in &self.pairs {
            if !allowed.contains(&k.as_str()) {
                return Err(ConfigError::UnknownKey(k.clone()));
            }
        }
        Ok(())
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}
