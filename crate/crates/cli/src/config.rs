//! Optional TOML configuration. Keys are the long flag names; a key inside a
//! table named after the subcommand overrides the same key at top level, and
//! a flag given on the command line overrides both.

use std::path::Path;

use toml::{Table, Value};

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    global: Table,
    section: Table,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>, subcommand: &str) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text, subcommand).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str, subcommand: &str) -> Result<Self, String> {
        let mut global: Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
        let section = match global.remove(subcommand) {
            Some(Value::Table(t)) => t,
            Some(_) => return Err(format!("[{subcommand}] must be a table")),
            None => Table::new(),
        };
        Ok(ConfigFile { global, section })
    }

    fn lookup(&self, key: &str) -> Option<&Value> {
        let alt = key.replace('-', "_");
        [&self.section, &self.global]
            .into_iter()
            .find_map(|t| t.get(key).or_else(|| t.get(&alt)))
    }

    /// The value of `key` as text. Numbers are accepted but strings keep
    /// every digit of a high-precision input.
    pub fn string(&self, key: &str) -> Result<Option<String>, String> {
        match self.lookup(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Integer(i)) => Ok(Some(i.to_string())),
            Some(Value::Float(f)) => Ok(Some(f.to_string())),
            Some(other) => Err(format!(
                "config key {key}: expected a number or string, got {}",
                other.type_str()
            )),
        }
    }

    pub fn integer(&self, key: &str) -> Result<Option<u64>, String> {
        match self.lookup(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(Value::Float(f)) if *f >= 0.0 && f.fract() == 0.0 => Ok(Some(*f as u64)),
            Some(Value::String(s)) => parse_count(s).map(Some).map_err(|e| format!("config key {key}: {e}")),
            Some(other) => Err(format!(
                "config key {key}: expected a non-negative integer, got {other}"
            )),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, String> {
        match self.lookup(key) {
            None => Ok(false),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(other) => Err(format!("config key {key}: expected true or false, got {other}")),
        }
    }
}

/// Parses counts written as integers or in exponent form such as `1e6`.
pub fn parse_count(text: &str) -> Result<u64, String> {
    let t = text.trim().replace('_', "");
    if let Ok(n) = t.parse::<u64>() {
        return Ok(n);
    }
    match t.parse::<f64>() {
        Ok(f) if f >= 0.0 && f.fract() == 0.0 && f < 1.8e19 => Ok(f as u64),
        _ => Err(format!("not a non-negative integer: {text}")),
    }
}
