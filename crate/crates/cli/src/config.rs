//! INI configs flattened to `section.key`, validated against an allow-list.

use std::collections::BTreeMap;
use std::str::FromStr;

use ini::Ini;

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Parses `text` and rejects any key outside `allowed`.
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
        let mut values = BTreeMap::new();
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let name = match section {
                    Some(s) => format!("{s}.{key}"),
                    None => key.to_string(),
                };
                if !allowed.contains(&name.as_str()) {
                    return Err(CliError::UnknownKey(name));
                }
                if values.insert(name.clone(), value.trim().to_string()).is_some() {
                    return Err(CliError::Config(format!("key `{name}` given twice")));
                }
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
        raw.parse().map_err(|_| CliError::Config(format!("`{key}` has malformed value `{raw}`")))
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            Some(raw) => Self::parse_value(key, raw),
            None => Ok(default),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key).ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))?;
        Self::parse_value(key, raw)
    }

    pub fn list<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        match self.raw(key) {
            Some("") => Ok(vec![]),
            Some(raw) => raw.split(',').map(|s| Self::parse_value(key, s.trim())).collect(),
            None => Ok(default.to_vec()),
        }
    }

    pub fn string(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }
}
