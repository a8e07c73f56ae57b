//! Sectioned key-value config files. Flags take precedence over config
//! entries, config entries over built-in defaults; the fully resolved view
//! is what lands in the manifest.
//!
//! ```text
//! [simulate]
//! lambda = 0.5
//! depth = 8
//! ```

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<(String, String), String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        ConfigFile::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ConfigFile, String> {
        let mut entries = BTreeMap::new();
        let mut section = String::from("global");
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("config line {}: expected key = value, got {raw:?}", no + 1));
            };
            entries.insert(
                (section.clone(), key.trim().to_string()),
                value.trim().to_string(),
            );
        }
        Ok(ConfigFile { entries })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .or_else(|| self.entries.get(&("global".to_string(), key.to_string())))
            .map(String::as_str)
    }
}

/// One resolved setting set, recorded key by key for the manifest.
#[derive(Clone, Debug, Default)]
pub struct Resolved {
    pub section: String,
    pub values: BTreeMap<String, String>,
}

impl Resolved {
    pub fn new(section: &str) -> Resolved {
        Resolved { section: section.to_string(), values: BTreeMap::new() }
    }

    /// flag > config > default; records the winning value.
    pub fn resolve<T: std::str::FromStr + ToString>(
        &mut self,
        cfg: &ConfigFile,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        let value = if let Some(v) = flag {
            v
        } else if let Some(raw) = cfg.get(&self.section, key) {
            raw.parse::<T>()
                .map_err(|e| format!("config [{}] {key} = {raw:?}: {e}", self.section))?
        } else {
            default
        };
        self.values.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// As [`Resolved::resolve`] but with no default: the setting is required.
    pub fn resolve_required<T: std::str::FromStr + ToString>(
        &mut self,
        cfg: &ConfigFile,
        key: &str,
        flag: Option<T>,
    ) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        let value = if let Some(v) = flag {
            v
        } else if let Some(raw) = cfg.get(&self.section, key) {
            raw.parse::<T>()
                .map_err(|e| format!("config [{}] {key} = {raw:?}: {e}", self.section))?
        } else {
            return Err(format!("missing required setting {key} (flag or config)"));
        };
        self.values.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }
}
