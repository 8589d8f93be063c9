//! Instance corpora, weighted sense keys and context-window extraction.
//!
//! Instances arrive pre-tokenized as JSON lines:
//!
//! ```text
//! {"lemma":"add.v","id":"add.v.1","tokens":["we","add","salt"],"target":1}
//! ```
//!
//! Gold standards and system outputs share one key format, one instance per
//! line: `lemma.pos instance_id sense/weight [sense/weight ...]`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};

const INSTANCES: &str = "instance file";
const KEY: &str = "key file";

/// One occurrence of an ambiguous lemma.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(rename = "lemma")]
    pub lemma_key: String,
    #[serde(rename = "id")]
    pub instance_id: String,
    pub tokens: Vec<String>,
    #[serde(rename = "target")]
    pub target_index: usize,
}

impl Instance {
    pub fn target(&self) -> &str {
        &self.tokens[self.target_index]
    }
}

#[derive(Deserialize)]
struct RawInstance {
    lemma: String,
    id: String,
    tokens: Vec<String>,
    target: i64,
}

/// All instances of a corpus, in file order.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    instances: Vec<Instance>,
    by_id: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(instances: Vec<Instance>) -> Result<Self> {
        let mut ds = Dataset::default();
        for (i, inst) in instances.into_iter().enumerate() {
            ds.push(inst).map_err(|m| Error::parse(INSTANCES, Location::Line(i + 1), m))?;
        }
        Ok(ds)
    }

    fn push(&mut self, inst: Instance) -> std::result::Result<(), String> {
        if inst.tokens.is_empty() {
            return Err(format!("instance {} has no tokens", inst.instance_id));
        }
        if inst.target_index >= inst.tokens.len() {
            return Err(format!(
                "instance {}: target {} out of range for {} tokens",
                inst.instance_id,
                inst.target_index,
                inst.tokens.len()
            ));
        }
        if self.by_id.contains_key(&inst.instance_id) {
            return Err(format!("duplicate instance id {}", inst.instance_id));
        }
        self.by_id.insert(inst.instance_id.clone(), self.instances.len());
        self.instances.push(inst);
        Ok(())
    }

    pub fn load_instances(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_instances(BufReader::new(file))
    }

    pub fn read_instances<R: BufRead>(reader: R) -> Result<Self> {
        let mut ds = Dataset::default();
        for (i, line) in reader.lines().enumerate() {
            let at = Location::Line(i + 1);
            let line = line.map_err(|e| Error::parse(INSTANCES, at, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawInstance =
                serde_json::from_str(&line).map_err(|e| Error::parse(INSTANCES, at, e.to_string()))?;
            let target = usize::try_from(raw.target)
                .map_err(|_| Error::parse(INSTANCES, at, format!("negative target {}", raw.target)))?;
            ds.push(Instance { lemma_key: raw.lemma, instance_id: raw.id, tokens: raw.tokens, target_index: target })
                .map_err(|m| Error::parse(INSTANCES, at, m))?;
        }
        Ok(ds)
    }

    pub fn write_instances<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for inst in &self.instances {
            serde_json::to_writer(&mut *w, inst)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn get(&self, instance_id: &str) -> Option<&Instance> {
        self.by_id.get(instance_id).map(|&i| &self.instances[i])
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Instances grouped by lemma key; file order is kept within a lemma.
    pub fn by_lemma(&self) -> BTreeMap<&str, Vec<&Instance>> {
        let mut groups: BTreeMap<&str, Vec<&Instance>> = BTreeMap::new();
        for inst in &self.instances {
            groups.entry(&inst.lemma_key).or_default().push(inst);
        }
        groups
    }
}

/// Weighted senses of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SenseEntry {
    pub lemma: String,
    pub senses: Vec<(String, f64)>,
}

impl SenseEntry {
    /// Senses ordered by descending weight, ties by ascending sense id.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut r: Vec<(&str, f64)> = self.senses.iter().map(|(s, w)| (s.as_str(), *w)).collect();
        r.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        r
    }

    /// Ranked senses with weights rescaled to sum to one.
    pub fn normalized(&self) -> Vec<(&str, f64)> {
        let total: f64 = self.senses.iter().map(|(_, w)| w).sum();
        self.ranked().into_iter().map(|(s, w)| (s, w / total)).collect()
    }

    pub fn sense_set(&self) -> BTreeSet<&str> {
        self.senses.iter().map(|(s, _)| s.as_str()).collect()
    }
}

/// Instance id → weighted sense set.
///
/// Used both for gold standards and for system labelings, which share the
/// key-file format.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SenseAssignments {
    entries: BTreeMap<String, SenseEntry>,
}

pub type GoldStandard = SenseAssignments;
pub type SenseLabeling = SenseAssignments;

impl SenseAssignments {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one instance. Senses must be non-empty, unique, whitespace-free
    /// and carry a positive finite weight.
    pub fn insert(
        &mut self,
        lemma: impl Into<String>,
        instance_id: impl Into<String>,
        senses: Vec<(String, f64)>,
    ) -> Result<()> {
        let instance_id = instance_id.into();
        let entry = SenseEntry { lemma: lemma.into(), senses };
        check_entry(&instance_id, &entry).map_err(Error::Config)?;
        if self.entries.contains_key(&instance_id) {
            return Err(Error::Config(format!("duplicate instance {instance_id}")));
        }
        self.entries.insert(instance_id, entry);
        Ok(())
    }

    pub fn get(&self, instance_id: &str) -> Option<&SenseEntry> {
        self.entries.get(instance_id)
    }

    pub fn contains(&self, instance_id: &str) -> bool {
        self.entries.contains_key(instance_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries ordered by instance id.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &SenseEntry)> + '_ {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn instance_ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.keys().map(String::as_str)
    }

    /// Instance ids grouped by lemma.
    pub fn by_lemma(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut groups: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (id, e) in &self.entries {
            groups.entry(e.lemma.as_str()).or_default().push(id.as_str());
        }
        groups
    }

    /// Distinct sense ids per lemma.
    pub fn inventory(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut inv: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for e in self.entries.values() {
            inv.entry(e.lemma.as_str()).or_default().extend(e.senses.iter().map(|(s, _)| s.as_str()));
        }
        inv
    }

    /// Splits instance ids into (single-sense, multi-sense).
    pub fn split_by_sense_count(&self) -> (BTreeSet<String>, BTreeSet<String>) {
        let mut single = BTreeSet::new();
        let mut multi = BTreeSet::new();
        for (id, e) in &self.entries {
            if e.senses.len() == 1 {
                single.insert(id.clone());
            } else {
                multi.insert(id.clone());
            }
        }
        (single, multi)
    }

    /// Copy holding only the given instances.
    pub fn restrict<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> SenseAssignments {
        let entries =
            ids.into_iter().filter_map(|id| self.entries.get(id).map(|e| (id.to_owned(), e.clone()))).collect();
        SenseAssignments { entries }
    }

    /// Moves every entry of `other` into `self`; later entries win.
    pub fn extend(&mut self, other: SenseAssignments) {
        self.entries.extend(other.entries);
    }

    pub fn load_key(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_key(BufReader::new(file))
    }

    pub fn read_key<R: BufRead>(reader: R) -> Result<Self> {
        let mut out = SenseAssignments::new();
        for (i, line) in reader.lines().enumerate() {
            let at = Location::Line(i + 1);
            let line = line.map_err(|e| Error::parse(KEY, at, e.to_string()))?;
            let mut fields = line.split_ascii_whitespace();
            let Some(lemma) = fields.next() else { continue };
            let id = fields.next().ok_or_else(|| Error::parse(KEY, at, "missing instance id"))?;
            let mut senses = Vec::new();
            for field in fields {
                let (sense, weight) = field
                    .rsplit_once('/')
                    .ok_or_else(|| Error::parse(KEY, at, format!("expected sense/weight, got {field:?}")))?;
                let weight: f64 =
                    weight.parse().map_err(|_| Error::parse(KEY, at, format!("non-numeric weight in {field:?}")))?;
                senses.push((sense.to_owned(), weight));
            }
            let entry = SenseEntry { lemma: lemma.to_owned(), senses };
            check_entry(id, &entry).map_err(|m| Error::parse(KEY, at, m))?;
            if out.entries.contains_key(id) {
                return Err(Error::parse(KEY, at, format!("duplicate instance line for {id}")));
            }
            out.entries.insert(id.to_owned(), entry);
        }
        Ok(out)
    }

    pub fn write_key<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (id, e) in &self.entries {
            write!(w, "{} {}", e.lemma, id)?;
            for (s, wt) in &e.senses {
                write!(w, " {s}/{wt}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_key(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_key(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }
}

fn check_entry(id: &str, e: &SenseEntry) -> std::result::Result<(), String> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(format!("invalid instance id {id:?}"));
    }
    if e.lemma.is_empty() || e.lemma.chars().any(char::is_whitespace) {
        return Err(format!("invalid lemma {:?}", e.lemma));
    }
    if e.senses.is_empty() {
        return Err(format!("instance {id} has no senses"));
    }
    let mut seen = BTreeSet::new();
    for (s, w) in &e.senses {
        if s.is_empty() || s.chars().any(char::is_whitespace) {
            return Err(format!("invalid sense id {s:?}"));
        }
        if !(w.is_finite() && *w > 0.0) {
            return Err(format!("sense {s} has non-positive weight {w}"));
        }
        if !seen.insert(s.as_str()) {
            return Err(format!("sense {s} listed twice for {id}"));
        }
    }
    Ok(())
}

/// Context extent around the target word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WindowMode {
    /// Up to this many tokens on each side of the target.
    Tokens(usize),
    FullSentence,
}

impl fmt::Display for WindowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowMode::Tokens(n) => write!(f, "{n}"),
            WindowMode::FullSentence => f.write_str("full"),
        }
    }
}

impl FromStr for WindowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" | "full-sentence" | "-" => Ok(WindowMode::FullSentence),
            n => match n.parse::<usize>() {
                Ok(w) if w > 0 => Ok(WindowMode::Tokens(w)),
                _ => Err(Error::Config(format!("window must be a positive integer or 'full', got {s:?}"))),
            },
        }
    }
}

/// Tokens surrounding the target of one instance; the target itself is
/// never included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextWindow<'a> {
    pub instance_id: &'a str,
    pub left: &'a [String],
    pub right: &'a [String],
}

impl<'a> ContextWindow<'a> {
    /// Left tokens then right tokens, in sentence order.
    pub fn tokens(&self) -> impl Iterator<Item = &'a str> + 'a {
        self.left.iter().chain(self.right.iter()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn extract_window(inst: &Instance, mode: WindowMode) -> ContextWindow<'_> {
    let t = inst.target_index;
    let (lo, hi) = match mode {
        WindowMode::Tokens(w) => (t.saturating_sub(w), (t + 1 + w).min(inst.tokens.len())),
        WindowMode::FullSentence => (0, inst.tokens.len()),
    };
    ContextWindow { instance_id: &inst.instance_id, left: &inst.tokens[lo..t], right: &inst.tokens[t + 1..hi] }
}
