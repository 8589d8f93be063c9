//! Reference systems: one sense per lemma, one sense per instance, and the
//! most-frequent / frequency-ranked senses from an external count table.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{Dataset, SenseLabeling};
use crate::error::{Error, Location, Result};

const FREQ: &str = "frequency table";

/// Sense counts per lemma, each list ordered by count descending then sense
/// id ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SenseFrequencyTable {
    lemmas: BTreeMap<String, Vec<(String, u64)>>,
}

impl SenseFrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or accumulates a count.
    pub fn add(&mut self, lemma: impl Into<String>, sense: impl Into<String>, count: u64) {
        let senses = self.lemmas.entry(lemma.into()).or_default();
        let sense = sense.into();
        match senses.iter_mut().find(|(s, _)| *s == sense) {
            Some((_, c)) => *c += count,
            None => senses.push((sense, count)),
        }
        senses.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    }

    pub fn get(&self, lemma: &str) -> Option<&[(String, u64)]> {
        self.lemmas.get(lemma).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    /// Lines of `lemma sense_id count`; blank lines and `#` comments are
    /// skipped. Repeated (lemma, sense) pairs accumulate.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut out = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let at = Location::Line(i + 1);
            let line = line.map_err(|e| Error::parse(FREQ, at, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_ascii_whitespace().collect();
            let [lemma, sense, count] = fields[..] else {
                return Err(Error::parse(FREQ, at, format!("expected 3 fields, found {}", fields.len())));
            };
            let count: u64 = count
                .parse()
                .map_err(|_| Error::parse(FREQ, at, format!("count {count:?} is not a non-negative integer")))?;
            out.add(lemma, sense, count);
        }
        Ok(out)
    }

    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (lemma, senses) in &self.lemmas {
            for (s, c) in senses {
                writeln!(w, "{lemma} {s} {c}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    OneSense,
    OneClusterPerInstance,
    Mfs,
    Ranked,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] =
        [BaselineKind::OneSense, BaselineKind::OneClusterPerInstance, BaselineKind::Mfs, BaselineKind::Ranked];

    pub fn needs_frequencies(self) -> bool {
        matches!(self, BaselineKind::Mfs | BaselineKind::Ranked)
    }

    /// Label used in report rows.
    pub fn label(self) -> &'static str {
        match self {
            BaselineKind::OneSense => "One sense",
            BaselineKind::OneClusterPerInstance => "1c1inst",
            BaselineKind::Mfs => "MFS",
            BaselineKind::Ranked => "Ranked",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::OneSense => "one-sense",
            BaselineKind::OneClusterPerInstance => "1c1inst",
            BaselineKind::Mfs => "mfs",
            BaselineKind::Ranked => "ranked",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "one-sense" | "onesense" | "one" => Ok(BaselineKind::OneSense),
            "1c1inst" => Ok(BaselineKind::OneClusterPerInstance),
            "mfs" => Ok(BaselineKind::Mfs),
            "ranked" => Ok(BaselineKind::Ranked),
            _ => Err(Error::Config(format!("baseline must be one of one-sense, 1c1inst, mfs, ranked; got {s:?}"))),
        }
    }
}

/// Labels every instance of `dataset` with the chosen baseline.
///
/// One-sense and 1c1inst produce induced-style ids (`<lemma>.c<N>`) that
/// still need mapping; mfs and ranked emit inventory senses directly. Ranked
/// weights are `n - r + 1` for rank `r` of `n`, normalized to sum to one.
pub fn baseline(kind: BaselineKind, dataset: &Dataset, freq: Option<&SenseFrequencyTable>) -> Result<SenseLabeling> {
    let mut out = SenseLabeling::new();
    if kind.needs_frequencies() && freq.is_none() {
        return Err(Error::Config(format!("baseline {kind} needs a sense frequency table")));
    }
    for (lemma, instances) in dataset.by_lemma() {
        let senses: Option<&[(String, u64)]> = match freq {
            Some(f) if kind.needs_frequencies() => {
                let s = f.get(lemma).ok_or_else(|| Error::UnknownLemma(lemma.to_owned()))?;
                if s.is_empty() {
                    return Err(Error::UnknownLemma(lemma.to_owned()));
                }
                Some(s)
            }
            _ => None,
        };
        for (n, inst) in instances.iter().enumerate() {
            let labels = match kind {
                BaselineKind::OneSense => vec![(format!("{lemma}.c0"), 1.0)],
                BaselineKind::OneClusterPerInstance => vec![(format!("{lemma}.c{n}"), 1.0)],
                BaselineKind::Mfs => vec![(senses.expect("checked")[0].0.clone(), 1.0)],
                BaselineKind::Ranked => {
                    let s = senses.expect("checked");
                    let k = s.len();
                    let total = (k * (k + 1) / 2) as f64;
                    s.iter().enumerate().map(|(r, (id, _))| (id.clone(), (k - r) as f64 / total)).collect()
                }
            };
            out.insert(lemma, &inst.instance_id, labels)?;
        }
    }
    Ok(out)
}
