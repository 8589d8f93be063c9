//! Run manifests: `key = value` lines, `#` comments. Keys are the long flag
//! names without dashes; relative paths resolve against the manifest's
//! directory. Command-line flags override manifest entries.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::UsageError;

pub const KEYS: &[&str] = &[
    "embeddings",
    "instances",
    "gold",
    "freq",
    "system",
    "out",
    "window",
    "k",
    "sim",
    "compose",
    "folds",
    "threshold",
    "seed",
    "filter",
    "debug",
    "unseen",
    "mapping",
    "weight-ratio",
    "precision",
    "kind",
    "lemma",
];

const PATH_KEYS: &[&str] = &["embeddings", "instances", "gold", "freq", "system", "out"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
    base: PathBuf,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError::new(format!("--manifest {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|e| UsageError::new(format!("--manifest {}: {}", path.display(), e.0)))
    }

    pub fn parse(text: &str, base: PathBuf) -> Result<Self, UsageError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(UsageError::new(format!("line {}: expected key = value", i + 1)));
            };
            let key = key.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(UsageError::new(format!("line {}: unknown key {key:?}", i + 1)));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(UsageError::new(format!("line {}: {key} given twice", i + 1)));
            }
        }
        Ok(Self { entries, base })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        debug_assert!(PATH_KEYS.contains(&key));
        self.get(key).map(|v| {
            let p = PathBuf::from(v);
            if p.is_relative() {
                self.base.join(p)
            } else {
                p
            }
        })
    }
}
