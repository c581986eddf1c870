//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::Path;

use skewprod::fiber::PARAM_KEYS;
use skewprod::SystemParams;
use thiserror::Error;

/// Keys besides the parameters that a config file may set; flags override them.
pub const KNOB_KEYS: [&str; 9] = ["depth", "max_period", "t_min", "t_max", "t_step", "tol", "seed", "workers", "budget"];

/// The only named preset.
pub const DEFAULT_PRESET: &str = "default-validated";

/// A usage or configuration problem (exit code 2).
#[derive(Debug, Error)]
pub enum UsageError {
    #[error("cannot read config `{path}`: {reason}")]
    Read { path: String, reason: String },
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown preset `{0}` (available: default-validated)")]
    Preset(String),
    #[error("{0}")]
    Invalid(String),
}

/// Parameters plus optional knob values read from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct FileConfig {
    pub params: SystemParams,
    pub knobs: BTreeMap<String, f64>,
}

/// Parses a config; parameters missing from the text keep their preset values.
pub fn parse(text: &str) -> Result<FileConfig, UsageError> {
    let mut params = SystemParams::default_validated();
    let mut knobs = BTreeMap::new();
    let mut seen = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |reason: String| UsageError::Syntax { line: i + 1, reason };
        let (key, value) = line.split_once('=').ok_or_else(|| syntax(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let v: f64 = value.parse().map_err(|_| syntax(format!("`{value}` is not a number")))?;
        if !v.is_finite() {
            return Err(syntax(format!("`{key}` must be finite")));
        }
        if seen.iter().any(|k| k == key) {
            return Err(syntax(format!("duplicate key `{key}`")));
        }
        seen.push(key.to_string());
        if PARAM_KEYS.contains(&key) {
            params.set(key, v).map_err(|e| syntax(e.to_string()))?;
        } else if KNOB_KEYS.contains(&key) {
            knobs.insert(key.to_string(), v);
        } else {
            return Err(syntax(format!("unknown key `{key}`")));
        }
    }
    Ok(FileConfig { params, knobs })
}

pub fn load(path: &Path) -> Result<FileConfig, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| UsageError::Read { path: path.display().to_string(), reason: e.to_string() })?;
    parse(&text)
}

pub fn preset(name: &str) -> Result<SystemParams, UsageError> {
    match name {
        DEFAULT_PRESET => Ok(SystemParams::default_validated()),
        other => Err(UsageError::Preset(other.to_string())),
    }
}

/// Serializes all parameters in config-file order.
pub fn render(params: &SystemParams) -> String {
    PARAM_KEYS.iter().map(|k| format!("{k} = {}\n", params.get(k).unwrap_or(f64::NAN))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let p = SystemParams::default_validated();
        assert_eq!(parse(&render(&p)).unwrap().params, p);
    }

    #[test]
    fn overrides_and_knobs() {
        let c = parse("# comment\nbeta0 = 2.0  # inline\n\ndepth = 8\n").unwrap();
        assert_eq!(c.params.beta0, 2.0);
        assert_eq!(c.params.gamma, SystemParams::default_validated().gamma);
        assert_eq!(c.knobs["depth"], 8.0);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(parse("beta0 2.0"), Err(UsageError::Syntax { line: 1, .. })));
        assert!(parse("beta0 = x").is_err());
        assert!(parse("colour = 1").is_err());
        assert!(parse("beta0 = 1.1\nbeta0 = 1.2").is_err());
        assert!(parse("beta0 = inf").is_err());
    }

    #[test]
    fn presets() {
        assert!(preset(DEFAULT_PRESET).is_ok());
        assert!(preset("other").is_err());
    }
}
