//! Settings resolution (flag > config section > config top level > default),
//! grid syntax and the configuration hash.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::CliError;

/// Effective settings of one command run. Every value read through a getter
/// is recorded, so [`Settings::hash`] covers defaults as well as overrides.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    command: String,
    explicit: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> String {
    key.replace('-', "_")
}

fn toml_to_string(value: &toml::Value) -> Option<String> {
    match value {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(f.to_string()),
        toml::Value::Boolean(b) => Some(b.to_string()),
        toml::Value::Array(items) => {
            let parts: Option<Vec<String>> = items.iter().map(toml_to_string).collect();
            parts.map(|p| p.join(","))
        }
        _ => None,
    }
}

impl Settings {
    /// Merges `flags` over the `[command]` section and top-level keys of the
    /// optional TOML config file.
    pub fn resolve(command: &str, config: Option<&Path>, flags: Vec<(&str, Option<String>)>) -> Result<Self, CliError> {
        let mut explicit = BTreeMap::new();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
            let table: toml::Table = text
                .parse()
                .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
            let mut apply = |t: &toml::Table| -> Result<(), CliError> {
                for (k, v) in t {
                    if v.is_table() {
                        continue;
                    }
                    let s = toml_to_string(v).ok_or_else(|| CliError::Validation(format!("config key `{k}` has an unsupported value")))?;
                    explicit.insert(normalize_key(k), s);
                }
                Ok(())
            };
            apply(&table)?;
            let section = table.get(command).or_else(|| table.get(&normalize_key(command)));
            if let Some(section) = section {
                let section = section
                    .as_table()
                    .ok_or_else(|| CliError::Validation(format!("config section `{command}` is not a table")))?;
                apply(section)?;
            }
        }
        for (k, v) in flags {
            if let Some(v) = v {
                explicit.insert(normalize_key(k), v);
            }
        }
        Ok(Self {
            command: command.to_string(),
            explicit,
            resolved: BTreeMap::new(),
        })
    }

    fn raw(&mut self, key: &str, default: Option<&str>) -> Option<String> {
        let key = normalize_key(key);
        let value = self.explicit.get(&key).cloned().or_else(|| default.map(str::to_string));
        if let Some(v) = &value {
            self.resolved.insert(key, v.clone());
        }
        value
    }

    /// Reads a value without recording it in the hash (output location and
    /// format do not change results).
    pub fn peek(&self, key: &str) -> Option<String> {
        self.explicit.get(&normalize_key(key)).cloned()
    }

    pub fn string(&mut self, key: &str, default: &str) -> String {
        self.raw(key, Some(default)).expect("default supplied")
    }

    pub fn optional_string(&mut self, key: &str) -> Option<String> {
        self.raw(key, None)
    }

    fn parse<T: std::str::FromStr>(key: &str, text: &str) -> Result<T, CliError> {
        text.trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("`{key}`: cannot parse `{text}`")))
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        let text = self.string(key, &default.to_string());
        Self::parse(key, &text)
    }

    pub fn optional_f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        self.optional_string(key).map(|t| Self::parse(key, &t)).transpose()
    }

    /// Accepts plain integers and exact float notation such as `1e7`.
    fn parse_count(key: &str, text: &str) -> Result<u64, CliError> {
        if let Ok(v) = text.trim().parse::<u64>() {
            return Ok(v);
        }
        let v: f64 = Self::parse(key, text)?;
        if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
            Ok(v as u64)
        } else {
            Err(CliError::Validation(format!("`{key}`: `{text}` is not a non-negative integer")))
        }
    }

    pub fn u64(&mut self, key: &str, default: u64) -> Result<u64, CliError> {
        let text = self.string(key, &default.to_string());
        Self::parse_count(key, &text)
    }

    pub fn optional_u64(&mut self, key: &str) -> Result<Option<u64>, CliError> {
        self.optional_string(key).map(|t| Self::parse_count(key, &t)).transpose()
    }

    pub fn bool(&mut self, key: &str) -> Result<bool, CliError> {
        let text = self.string(key, "false");
        Self::parse(key, &text)
    }

    /// Seed for a stochastic command; absent seeds are a validation error.
    pub fn seed(&mut self) -> Result<u64, CliError> {
        self.optional_u64("seed")?
            .ok_or_else(|| CliError::Validation(format!("`{}` is stochastic and needs --seed", self.command)))
    }

    pub fn grid(&mut self, key: &str, default: &str) -> Result<Vec<f64>, CliError> {
        let text = self.string(key, default);
        parse_grid(&text).map_err(|e| CliError::Validation(format!("`{key}`: {e}")))
    }

    pub fn int_grid(&mut self, key: &str, default: &str) -> Result<Vec<usize>, CliError> {
        let text = self.string(key, default);
        parse_int_grid(&text).map_err(|e| CliError::Validation(format!("`{key}`: {e}")))
    }

    /// SHA-256 over the command name and every resolved setting.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        for (k, v) in &self.resolved {
            h.update(b"\n");
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}

/// Parses `a,b,c`, `start:stop:count` or `start:stop:count:log`. Values must
/// be strictly increasing.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let (log, parts) = match parts.as_slice() {
            [a, b, c] => (false, [*a, *b, *c]),
            [a, b, c, "log"] => (true, [*a, *b, *c]),
            _ => return Err(format!("range `{text}` must be start:stop:count[:log]")),
        };
        let start: f64 = parts[0].parse().map_err(|_| format!("bad start `{}`", parts[0]))?;
        let stop: f64 = parts[1].parse().map_err(|_| format!("bad stop `{}`", parts[1]))?;
        let count: usize = parts[2].parse().map_err(|_| format!("bad count `{}`", parts[2]))?;
        if count == 0 {
            return Err("range count must be positive".into());
        }
        if !(start.is_finite() && stop.is_finite()) {
            return Err("range ends must be finite".into());
        }
        if log && !(start > 0.0 && stop > 0.0) {
            return Err("log range needs positive ends".into());
        }
        if count == 1 {
            vec![start]
        } else {
            let step = |i: usize| i as f64 / (count - 1) as f64;
            if log {
                let (a, b) = (start.ln(), stop.ln());
                (0..count).map(|i| (a + (b - a) * step(i)).exp()).collect()
            } else {
                (0..count).map(|i| start + (stop - start) * step(i)).collect()
            }
        }
    } else {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| format!("bad value `{s}`")))
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err("grid is empty".into());
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err("grid contains NaN".into());
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("grid `{text}` is not strictly increasing"));
    }
    Ok(values)
}

/// Integer grid: list entries must be integers; range points are rounded and
/// deduplicated.
pub fn parse_int_grid(text: &str) -> Result<Vec<usize>, String> {
    let values = parse_grid(text)?;
    let ranged = text.contains(':');
    let mut out: Vec<usize> = Vec::with_capacity(values.len());
    for v in values {
        let r = v.round();
        if (!ranged && r != v) || r < 0.0 || !r.is_finite() {
            return Err(format!("`{v}` is not a non-negative integer"));
        }
        let r = r as usize;
        if out.last() != Some(&r) {
            out.push(r);
        }
    }
    Ok(out)
}

/// Independent per-grid-point seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
