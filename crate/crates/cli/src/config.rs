//! Flat `key=value` configuration merged under command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde_json::Value;

/// A configuration problem, reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error in `{}`: {}", self.field, self.message)
    }
}

pub type ConfigResult<T> = Result<T, ConfigError>;

pub const KNOWN_KEYS: &[&str] = &[
    "alpha", "b", "d", "delta1", "delta2", "face", "forms", "grid", "input", "k", "limit", "max_spread", "measure",
    "mode", "n", "omega_cutoff", "probes", "r", "rule", "samples", "seed", "slack", "stability_slack",
    "trials", "weighted", "window",
];

/// Parse a config file: `key = value` lines (with `#` comments), or a JSON
/// report whose `config` object is taken as the key set.
pub fn parse_file(text: &str) -> ConfigResult<BTreeMap<String, String>> {
    let trimmed = text.trim_start();
    let mut out = BTreeMap::new();
    if trimmed.starts_with('{') {
        let v: Value = serde_json::from_str(trimmed).map_err(|e| ConfigError::new("config", e.to_string()))?;
        let obj = v.get("config").unwrap_or(&v);
        let map = obj.as_object().ok_or_else(|| ConfigError::new("config", "expected a JSON object"))?;
        for (k, v) in map {
            if k == "subcommand" {
                continue;
            }
            let s = match v {
                Value::String(s) => s.clone(),
                Value::Null => continue,
                other => other.to_string(),
            };
            out.insert(k.clone(), s);
        }
    } else {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new("config", format!("line {}: expected key=value", i + 1)))?;
            out.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    for k in out.keys() {
        if !KNOWN_KEYS.contains(&k.as_str()) {
            return Err(ConfigError::new(k, "unknown configuration key"));
        }
    }
    Ok(out)
}

/// Resolves each parameter from the CLI, then the file, then a default, and
/// records the effective value.
pub struct Resolver {
    file: BTreeMap<String, String>,
    pub effective: BTreeMap<String, Value>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Resolver { file, effective: BTreeMap::new() }
    }

    fn raw(&self, key: &str, cli: Option<&String>) -> Option<String> {
        cli.cloned().or_else(|| self.file.get(key).cloned())
    }

    pub fn get<T>(&mut self, key: &str, cli: Option<&String>, default: T) -> ConfigResult<T>
    where
        T: FromStr + serde::Serialize,
        T::Err: fmt::Display,
    {
        let v = match self.raw(key, cli) {
            Some(s) => s.trim().parse::<T>().map_err(|e| ConfigError::new(key, format!("{s:?}: {e}")))?,
            None => default,
        };
        self.effective.insert(key.into(), serde_json::to_value(&v).unwrap_or(Value::Null));
        Ok(v)
    }

    pub fn get_opt<T>(&mut self, key: &str, cli: Option<&String>) -> ConfigResult<Option<T>>
    where
        T: FromStr + serde::Serialize,
        T::Err: fmt::Display,
    {
        let v = match self.raw(key, cli) {
            Some(s) if !s.trim().is_empty() && s.trim() != "none" => {
                Some(s.trim().parse::<T>().map_err(|e| ConfigError::new(key, format!("{s:?}: {e}")))?)
            }
            _ => None,
        };
        self.effective.insert(key.into(), serde_json::to_value(&v).unwrap_or(Value::Null));
        Ok(v)
    }

    /// Comma-separated list.
    pub fn get_list<T>(&mut self, key: &str, cli: Option<&String>, default: &[T]) -> ConfigResult<Vec<T>>
    where
        T: FromStr + serde::Serialize + Clone,
        T::Err: fmt::Display,
    {
        let v = match self.raw(key, cli) {
            Some(s) => s
                .split(',')
                .map(|t| t.trim().parse::<T>().map_err(|e| ConfigError::new(key, format!("{t:?}: {e}"))))
                .collect::<ConfigResult<Vec<T>>>()?,
            None => default.to_vec(),
        };
        if v.is_empty() {
            return Err(ConfigError::new(key, "empty list"));
        }
        self.effective.insert(key.into(), serde_json::to_value(&v).unwrap_or(Value::Null));
        Ok(v)
    }

    pub fn get_str(&mut self, key: &str, cli: Option<&String>, default: &str) -> String {
        let v = self.raw(key, cli).unwrap_or_else(|| default.to_string());
        self.effective.insert(key.into(), Value::String(v.clone()));
        v
    }

    pub fn get_str_opt(&mut self, key: &str, cli: Option<&String>) -> Option<String> {
        let v = self.raw(key, cli).filter(|s| !s.is_empty());
        self.effective.insert(key.into(), v.clone().map_or(Value::Null, Value::String));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_overrides_file() {
        let file = parse_file("n = 64\n# comment\nseed=3\n").unwrap();
        let mut r = Resolver::new(file);
        assert_eq!(r.get::<u64>("n", Some(&"128".to_string()), 1).unwrap(), 128);
        assert_eq!(r.get::<u64>("seed", None, 0).unwrap(), 3);
        assert_eq!(r.get::<u64>("trials", None, 9).unwrap(), 9);
        assert_eq!(r.effective["n"], serde_json::json!(128));
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(parse_file("bogus=1").unwrap_err().field, "bogus");
        let mut r = Resolver::new(parse_file("delta1=abc").unwrap());
        assert_eq!(r.get::<f64>("delta1", None, 0.0).unwrap_err().field, "delta1");
    }

    #[test]
    fn json_report_config_is_accepted() {
        let text = r#"{"config": {"subcommand": "verify gcs", "n": 64, "seed": 7, "r": null}}"#;
        let file = parse_file(text).unwrap();
        assert_eq!(file.get("n").map(String::as_str), Some("64"));
        assert!(!file.contains_key("r"));
    }
}
