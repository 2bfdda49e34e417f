//! Flat key=value run configuration with dotted section prefixes.
//!
//! A config file is plain text, one `key=value` per line, `#` comments and
//! blank lines ignored. Keys are dotted paths such as `mac.n_slots` or
//! `channel.noise_sigma`. `--set key=value` flags are applied on top of the
//! file, last assignment wins. Every key a subcommand does not consume is an
//! error, so typos never silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: line {line}: expected `key=value`, got `{text}`")]
    Malformed { origin: String, line: usize, text: String },
    #[error("config key `{key}`: expected {expected}, got `{value}`")]
    BadValue { key: String, expected: String, value: String },
    #[error("config key `{key}`: {detail}")]
    BadRange { key: String, detail: String },
    #[error("unknown config key{} for this subcommand: {}", if .0.len() == 1 { "" } else { "s" }, .0.join(", "))]
    UnknownKeys(Vec<String>),
}

/// Parsed key/value assignments, consumed key by key by a subcommand.
#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Load an optional config file, then apply `--set` overrides on top.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut s = Settings::default();
        if let Some(path) = path {
            let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
                path: path.display().to_string(),
                source,
            })?;
            s.ingest(&text, &path.display().to_string())?;
        }
        for (i, item) in overrides.iter().enumerate() {
            s.assign(item, "--set", i + 1)?;
        }
        Ok(s)
    }

    fn ingest(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.assign(line, origin, i + 1)?;
        }
        Ok(())
    }

    fn assign(&mut self, item: &str, origin: &str, line: usize) -> Result<(), ConfigError> {
        let Some((key, value)) = item.split_once('=') else {
            return Err(ConfigError::Malformed {
                origin: origin.into(),
                line,
                text: item.into(),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Malformed {
                origin: origin.into(),
                line,
                text: item.into(),
            });
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    fn take_parsed<T>(&mut self, key: &str, expected: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
    {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| ConfigError::BadValue {
                key: key.into(),
                expected: expected.into(),
                value: v,
            }),
        }
    }

    /// Consume `key` as a float, falling back to `default`.
    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.take_parsed::<f64>(key, "a number")?.unwrap_or(default);
        if !v.is_finite() {
            return Err(ConfigError::BadRange { key: key.into(), detail: "must be finite".into() });
        }
        Ok(v)
    }

    /// Consume `key` as a non-negative integer count, falling back to `default`.
    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        self.take_parsed::<usize>(key, "a non-negative integer").map(|v| v.unwrap_or(default))
    }

    /// Consume `key` as one of `choices` (case-sensitive), falling back to `default`.
    pub fn choice_or(
        &mut self,
        key: &str,
        choices: &[&str],
        default: &str,
    ) -> Result<String, ConfigError> {
        match self.values.remove(key) {
            None => Ok(default.to_string()),
            Some(v) if choices.contains(&v.as_str()) => Ok(v),
            Some(v) => Err(ConfigError::BadValue {
                key: key.into(),
                expected: format!("one of {}", choices.join(", ")),
                value: v,
            }),
        }
    }

    /// Consume `key` as a comma-separated list of positive integers.
    pub fn usize_list_or(
        &mut self,
        key: &str,
        default: &[usize],
    ) -> Result<Vec<usize>, ConfigError> {
        match self.values.remove(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|item| {
                    item.trim().parse::<usize>().map_err(|_| ConfigError::BadValue {
                        key: key.into(),
                        expected: "a comma-separated list of non-negative integers".into(),
                        value: v.clone(),
                    })
                })
                .collect(),
        }
    }

    /// Fail if `value` is outside `[lo, hi]`, naming the key.
    pub fn require_range<T: PartialOrd + Display>(
        key: &str,
        value: T,
        lo: T,
        hi: T,
    ) -> Result<T, ConfigError> {
        if value < lo || value > hi {
            return Err(ConfigError::BadRange {
                key: key.into(),
                detail: format!("must be in [{lo}, {hi}], got {value}"),
            });
        }
        Ok(value)
    }

    /// Error on any key nobody consumed. Call after all takes, before any work.
    pub fn finish(self) -> Result<(), ConfigError> {
        if self.values.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::UnknownKeys(self.values.into_keys().collect()))
        }
    }
}
