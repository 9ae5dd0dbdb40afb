//! Flat key = value configuration files.
//!
//! Precedence everywhere: command-line flag, then config file, then the
//! `UNLEARN_SEED` environment variable (seed only), then the built-in
//! default. Lines starting with `#` and blank lines are ignored.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

pub struct Settings {
    map: HashMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(format!(
                        "{} line {}: expected `key = value`, found {line:?}",
                        path.display(),
                        idx + 1
                    ));
                };
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Settings { map })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| format!("config key {key}: bad value {raw:?} ({e})")),
        }
    }

    /// CLI flag beats config beats default.
    pub fn resolve<T: FromStr>(&self, cli: Option<T>, key: &str, default: T) -> Result<T, String>
    where
        T::Err: Display,
    {
        match cli {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Like [`Settings::resolve`] but with no default.
    pub fn resolve_opt<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>, String>
    where
        T::Err: Display,
    {
        match cli {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    /// Seed resolution includes the `UNLEARN_SEED` environment variable
    /// between the config file and the default.
    pub fn resolve_seed(&self, cli: Option<u64>, default: u64) -> Result<u64, String> {
        if let Some(v) = cli {
            return Ok(v);
        }
        if let Some(v) = self.get("seed")? {
            return Ok(v);
        }
        match std::env::var("UNLEARN_SEED") {
            Ok(raw) => raw
                .parse()
                .map_err(|e| format!("UNLEARN_SEED: bad value {raw:?} ({e})")),
            Err(_) => Ok(default),
        }
    }
}

/// Comma-separated list parser for flags like `--sizes 10,100,1000`.
pub fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>, String>
where
    T::Err: Display,
{
    let mut out = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(
            part.parse()
                .map_err(|e| format!("bad {what} entry {part:?}: {e}"))?,
        );
    }
    if out.is_empty() {
        return Err(format!("{what} list is empty"));
    }
    Ok(out)
}
