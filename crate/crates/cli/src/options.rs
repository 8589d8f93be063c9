//! Resolution of flags and manifest entries into validated settings.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use senseforge::eval::{MappingMode, UnseenPolicy};
use senseforge::induction::{DEFAULT_CONNECTIVITIES, DEFAULT_WINDOWS};
use senseforge::{
    Composition, Connectivity, EmbeddingTable, EvalSettings, InstanceFilter, Louvain, MappingConfig, NodeOrder,
    PipelineConfig, Similarity, WindowMode,
};

use crate::manifest::Manifest;
use crate::{EvalArgs, PipelineArgs, UsageError};

type Usage<T> = std::result::Result<T, UsageError>;

/// Flag values first, then manifest entries, then defaults.
#[derive(Debug, Clone, Default)]
pub struct Resolver {
    manifest: Option<Manifest>,
}

impl Resolver {
    pub fn new(manifest: Option<&Path>) -> Usage<Self> {
        Ok(Self { manifest: manifest.map(Manifest::load).transpose()? })
    }

    fn raw(&self, flag: Option<&str>, key: &str) -> Option<String> {
        flag.map(str::to_owned).or_else(|| self.manifest.as_ref().and_then(|m| m.get(key)).map(str::to_owned))
    }

    pub fn path(&self, flag: Option<&Path>, key: &str) -> Option<PathBuf> {
        flag.map(Path::to_path_buf).or_else(|| self.manifest.as_ref().and_then(|m| m.path(key)))
    }

    /// A required input file that must exist.
    pub fn input(&self, flag: Option<&Path>, key: &str) -> Usage<PathBuf> {
        let p = self.path(flag, key).ok_or_else(|| UsageError::new(format!("missing required flag --{key}")))?;
        check_exists(p, key)
    }

    pub fn optional_input(&self, flag: Option<&Path>, key: &str) -> Usage<Option<PathBuf>> {
        self.path(flag, key).map(|p| check_exists(p, key)).transpose()
    }

    pub fn output(&self, flag: Option<&Path>, key: &str) -> Usage<PathBuf> {
        self.path(flag, key).ok_or_else(|| UsageError::new(format!("missing required flag --{key}")))
    }

    pub fn optional<T>(&self, flag: Option<&str>, key: &str) -> Usage<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(flag, key).map(|v| parse_one(&v, key)).transpose()
    }

    pub fn value<T>(&self, flag: Option<&str>, key: &str, default: T) -> Usage<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.optional(flag, key)?.unwrap_or(default))
    }

    /// Comma-separated values, duplicates removed, order kept.
    pub fn list<T>(&self, flag: Option<&str>, key: &str, default: &[T]) -> Usage<Vec<T>>
    where
        T: FromStr + PartialEq + Clone,
        T::Err: Display,
    {
        let Some(raw) = self.raw(flag, key) else {
            return Ok(default.to_vec());
        };
        let mut out: Vec<T> = Vec::new();
        for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let v = parse_one(part, key)?;
            if !out.contains(&v) {
                out.push(v);
            }
        }
        if out.is_empty() {
            return Err(UsageError::new(format!("--{key} needs at least one value")));
        }
        Ok(out)
    }

    /// Boolean switch: the flag, or `true`/`false` in the manifest.
    pub fn switch(&self, flag: bool, key: &str) -> Usage<bool> {
        if flag {
            return Ok(true);
        }
        self.value(None, key, false)
    }
}

fn parse_one<T>(v: &str, key: &str) -> Usage<T>
where
    T: FromStr,
    T::Err: Display,
{
    v.trim().parse().map_err(|e| UsageError::new(format!("invalid value {v:?} for --{key}: {e}")))
}

fn check_exists(p: PathBuf, key: &str) -> Usage<PathBuf> {
    if p.is_file() {
        Ok(p)
    } else {
        Err(UsageError::new(format!("--{key}: no such file {}", p.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            _ => Err("expected f32 or f64".into()),
        }
    }
}

/// Clustering settings shared by every configuration of a run.
#[derive(Debug, Clone)]
pub struct Engine {
    pub louvain: Louvain,
    pub precision: Precision,
}

pub fn engine(r: &Resolver, a: &PipelineArgs) -> Usage<Engine> {
    let seed: Option<u64> = r.optional(a.seed.as_deref(), "seed")?;
    Ok(Engine {
        louvain: Louvain { order: seed.map_or(NodeOrder::Ascending, NodeOrder::Shuffled), ..Louvain::default() },
        precision: r.value(a.precision.as_deref(), "precision", Precision::default())?,
    })
}

fn single<T>(r: &Resolver, flag: Option<&str>, key: &str, default: T) -> Usage<T>
where
    T: FromStr + PartialEq + Clone,
    T::Err: Display,
{
    let v = r.list(flag, key, &[default])?;
    if v.len() > 1 {
        return Err(UsageError::new(format!("--{key} takes a single value here, got {}", v.len())));
    }
    Ok(v[0].clone())
}

/// One configuration; defaults to ADD, ω = 10, fully connected, cosine.
pub fn single_config(r: &Resolver, a: &PipelineArgs) -> Usage<PipelineConfig> {
    Ok(PipelineConfig {
        composition: single(r, a.compose.as_deref(), "compose", Composition::Add)?,
        window: single(r, a.window.as_deref(), "window", WindowMode::Tokens(10))?,
        connectivity: single(r, a.k.as_deref(), "k", Connectivity::Full)?,
        similarity: single(r, a.sim.as_deref(), "sim", Similarity::Cosine)?,
    })
}

/// Parameter grid; unset dimensions take the full default sweep.
pub fn grid(r: &Resolver, a: &PipelineArgs) -> Usage<Vec<PipelineConfig>> {
    let sims = r.list(a.sim.as_deref(), "sim", &[Similarity::Cosine, Similarity::InverseEuclidean])?;
    let comps = r.list(a.compose.as_deref(), "compose", &[Composition::Add, Composition::Avg])?;
    let windows = r.list(a.window.as_deref(), "window", &DEFAULT_WINDOWS)?;
    let conns = r.list(a.k.as_deref(), "k", &DEFAULT_CONNECTIVITIES)?;
    Ok(PipelineConfig::grid(&sims, &comps, &windows, &conns))
}

#[derive(Debug, Clone)]
pub struct Scoring {
    pub gold: PathBuf,
    pub settings: EvalSettings,
    pub filters: Vec<InstanceFilter>,
}

pub fn scoring(r: &Resolver, a: &EvalArgs) -> Usage<Scoring> {
    let gold = r.input(a.gold.as_deref(), "gold")?;
    let defaults = MappingConfig::default();
    let mapping = MappingConfig {
        folds: r.value(a.folds.as_deref(), "folds", defaults.folds)?,
        threshold: r.value(a.threshold.as_deref(), "threshold", defaults.threshold)?,
        unseen: r.value(a.unseen.as_deref(), "unseen", UnseenPolicy::default())?,
    };
    mapping.validate().map_err(|e| UsageError::new(format!("--folds/--threshold: {e}")))?;
    let mode = match r.value(a.mapping.as_deref(), "mapping", "auto".to_string())?.as_str() {
        "auto" => MappingMode::Auto,
        "always" => MappingMode::Always,
        "never" => MappingMode::Never,
        other => {
            return Err(UsageError::new(format!(
                "invalid value {other:?} for --mapping: expected auto, always or never"
            )))
        }
    };
    let weight_ratio = !a.no_weight_ratio && r.value(None, "weight-ratio", true)?;
    Ok(Scoring {
        gold,
        settings: EvalSettings { mapping, mode, weight_ratio },
        filters: r.list(a.filter.as_deref(), "filter", &InstanceFilter::ALL)?,
    })
}

/// Reads word2vec vectors; `.txt`, `.vec` and `.text` files use the text
/// format, anything else the binary one.
pub fn load_embeddings(path: &Path) -> senseforge::Result<EmbeddingTable> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "txt" | "vec" | "text" => EmbeddingTable::load_word2vec_text(path),
        _ => EmbeddingTable::load_word2vec_binary(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("run.conf");
        std::fs::write(&m, "window = 3\nk = 5,full\nsim = cosine\n").unwrap();
        let r = Resolver::new(Some(&m)).unwrap();
        let a = PipelineArgs { window: Some("full".into()), ..Default::default() };
        let g = grid(&r, &a).unwrap();
        assert_eq!(g.len(), 2 * 2);
        assert!(g.iter().all(|c| c.window == WindowMode::FullSentence));
        assert!(single_config(&r, &a).unwrap_err().0.contains("--k"));
    }

    #[test]
    fn default_grid_size() {
        let g = grid(&Resolver::default(), &PipelineArgs::default()).unwrap();
        assert_eq!(g.len(), 128);
    }

    #[test]
    fn bad_values_name_the_flag() {
        let r = Resolver::default();
        let a = PipelineArgs { window: Some("0".into()), ..Default::default() };
        assert!(single_config(&r, &a).unwrap_err().0.contains("--window"));
        let e = r.input(None, "embeddings").unwrap_err();
        assert!(e.0.contains("--embeddings"));
        let e = r.input(Some(Path::new("/nonexistent/x.bin")), "embeddings").unwrap_err();
        assert!(e.0.contains("--embeddings"));
    }
}
