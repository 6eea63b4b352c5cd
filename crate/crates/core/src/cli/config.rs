//! `key = value` configuration files merged with command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::CliError;

/// Raw key/value pairs; keys are normalized to `snake_case`.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`", lineno + 1))
            })?;
            let key = normalize(k);
            if key.is_empty() {
                return Err(CliError::Usage(format!("config line {}: empty key", lineno + 1)));
            }
            // repeated keys accumulate, which is how several groups are listed
            entries
                .entry(key)
                .and_modify(|s: &mut String| {
                    s.push(';');
                    s.push_str(v.trim());
                })
                .or_insert_with(|| v.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize(key)).map(String::as_str)
    }

    /// Flag value if given, else the file value parsed, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key {key}: cannot parse {raw:?}: {e}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fwer {
    None,
    Bonferroni,
}

impl FromStr for Fwer {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Fwer::None),
            "bonferroni" => Ok(Fwer::Bonferroni),
            other => Err(format!("unknown correction {other:?}")),
        }
    }
}

/// Ridge penalty: a number or `auto` for `1/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RidgeLambda {
    Auto,
    Value(f64),
}

impl FromStr for RidgeLambda {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(RidgeLambda::Auto);
        }
        let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
        if v > 0.0 && v.is_finite() {
            Ok(RidgeLambda::Value(v))
        } else {
            Err(format!("ridge penalty must be positive, got {v}"))
        }
    }
}

/// Resolved settings for `fit` and `test`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub alpha: f64,
    pub eta: f64,
    pub lambda_ridge: RidgeLambda,
    pub n_mc: usize,
    pub seed: u64,
    pub fwer: Fwer,
    /// Group lists as given; resolved against the input header later.
    pub groups: Vec<String>,
    /// `intercept` and/or covariate column names forming the random-effect design.
    pub random_effects: Vec<String>,
}

pub fn check_unit_interval(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must lie in (0, 1), got {v}")))
    }
}

pub fn require_seed(seed: Option<u64>) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::Usage("a seed is required (--seed or `seed =` in the config)".into()))
}

/// Splits `a;b` (config accumulation) and keeps non-empty pieces.
pub fn split_list(raw: &str) -> Vec<String> {
    raw.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// Parses a comma-separated list of values.
pub fn parse_list<T: FromStr>(raw: &str, key: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| CliError::Usage(format!("{key}: cannot parse {s:?}: {e}")))
        })
        .collect()
}
