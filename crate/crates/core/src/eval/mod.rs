//! Two-part evaluation of a sense labeling against graded gold annotations.
//!
//! WSD scores (Jaccard, K_δ^sim, WNDCG) compare gold with the system
//! labeling after it has been mapped into the gold inventory. Cluster scores
//! (fuzzy NMI, fuzzy B-Cubed) compare the raw system clusters with gold.
//! Mapping always runs over every instance; instance filters only select
//! which instances are scored.

pub mod baseline;
pub mod cluster;
pub mod mapping;
pub mod report;
pub mod wsd;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::corpus::{GoldStandard, SenseLabeling};
use crate::error::{Error, Result};

pub use baseline::{baseline, BaselineKind, SenseFrequencyTable};
pub use cluster::{fuzzy_bcubed, fuzzy_nmi, BCubed};
pub use mapping::{assign_folds, in_gold_space, map_senses, Mapping, MappingConfig, UnseenPolicy};
pub use report::MetricReport;
pub use wsd::{combine_f1, jaccard_score, kendall_sim, wndcg, F1Score};

/// Which gold instances are scored, by the number of senses gold assigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum InstanceFilter {
    All,
    SingleSense,
    MultiSense,
}

impl InstanceFilter {
    pub const ALL: [InstanceFilter; 3] = [InstanceFilter::All, InstanceFilter::SingleSense, InstanceFilter::MultiSense];

    /// Ids of the gold instances this filter keeps.
    pub fn select(self, gold: &GoldStandard) -> BTreeSet<String> {
        match self {
            InstanceFilter::All => gold.instance_ids().map(str::to_owned).collect(),
            InstanceFilter::SingleSense => gold.split_by_sense_count().0,
            InstanceFilter::MultiSense => gold.split_by_sense_count().1,
        }
    }
}

impl fmt::Display for InstanceFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceFilter::All => "all",
            InstanceFilter::SingleSense => "single-sense",
            InstanceFilter::MultiSense => "multi-sense",
        })
    }
}

impl FromStr for InstanceFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(InstanceFilter::All),
            "single-sense" | "single" => Ok(InstanceFilter::SingleSense),
            "multi-sense" | "multi" => Ok(InstanceFilter::MultiSense),
            _ => Err(Error::Config(format!("filter must be all, single-sense or multi-sense; got {s:?}"))),
        }
    }
}

/// Whether the system labeling is mapped before WSD scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MappingMode {
    /// Map unless every system sense already belongs to the gold inventory.
    #[default]
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub mapping: MappingConfig,
    pub mode: MappingMode,
    /// Scale WNDCG gains by the system/gold weight ratio.
    pub weight_ratio: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { mapping: MappingConfig::default(), mode: MappingMode::Auto, weight_ratio: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scores {
    pub jaccard: F1Score,
    pub kendall: F1Score,
    pub wndcg: F1Score,
    pub fnmi: f64,
    pub fbc: BCubed,
    pub instances: usize,
}

/// Instance-level problems found while evaluating. None of them abort the
/// evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Gold instances the system did not label; scored as unlabeled.
    pub missing_from_system: Vec<String>,
    /// System instances unknown to gold; ignored.
    pub unknown_to_gold: Vec<String>,
    /// Instances whose lemma differs between system and gold.
    pub lemma_mismatch: Vec<String>,
    pub warnings: Vec<String>,
    pub mapped: bool,
}

impl Diagnostics {
    pub fn is_clean(&self) -> bool {
        self.missing_from_system.is_empty() && self.unknown_to_gold.is_empty() && self.lemma_mismatch.is_empty()
    }

    pub fn write<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "mapped\t{}", self.mapped)?;
        for id in &self.missing_from_system {
            writeln!(w, "missing_from_system\t{id}")?;
        }
        for id in &self.unknown_to_gold {
            writeln!(w, "unknown_to_gold\t{id}")?;
        }
        for id in &self.lemma_mismatch {
            writeln!(w, "lemma_mismatch\t{id}")?;
        }
        for msg in &self.warnings {
            writeln!(w, "warning\t{msg}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub rows: Vec<(InstanceFilter, Scores)>,
    pub mapped: SenseLabeling,
    pub diagnostics: Diagnostics,
}

impl Evaluation {
    pub fn scores(&self, filter: InstanceFilter) -> Option<&Scores> {
        self.rows.iter().find(|(f, _)| *f == filter).map(|(_, s)| s)
    }
}

fn cluster_or_zero<T>(
    r: Result<T>,
    zero: T,
    what: &str,
    filter: InstanceFilter,
    warnings: &mut Vec<String>,
) -> Result<T> {
    match r {
        Err(Error::EmptyCover) => {
            warnings.push(format!("{what} on {filter}: empty cover, scored 0"));
            Ok(zero)
        }
        other => other,
    }
}

/// Scores `system` against `gold` for each requested filter.
pub fn evaluate(
    system: &SenseLabeling,
    gold: &GoldStandard,
    settings: &EvalSettings,
    filters: &[InstanceFilter],
) -> Result<Evaluation> {
    let mut diagnostics = Diagnostics::default();
    for (id, g) in gold.iter() {
        match system.get(id) {
            None => diagnostics.missing_from_system.push(id.to_owned()),
            Some(s) if s.lemma != g.lemma => diagnostics.lemma_mismatch.push(id.to_owned()),
            Some(_) => {}
        }
    }
    diagnostics.unknown_to_gold = system.instance_ids().filter(|id| !gold.contains(id)).map(str::to_owned).collect();

    let do_map = match settings.mode {
        MappingMode::Auto => !in_gold_space(system, gold),
        MappingMode::Always => true,
        MappingMode::Never => false,
    };
    diagnostics.mapped = do_map;
    let mapped = if do_map {
        let m = map_senses(system, gold, &settings.mapping)?;
        diagnostics.warnings.extend(m.warnings);
        m.mapped
    } else {
        system.restrict(gold.instance_ids())
    };

    let mut rows = Vec::with_capacity(filters.len());
    for &filter in filters {
        let ids = filter.select(gold);
        let g = gold.restrict(ids.iter().map(String::as_str));
        let m = mapped.restrict(ids.iter().map(String::as_str));
        let s = system.restrict(ids.iter().map(String::as_str));
        let zero_b = BCubed { precision: 0.0, recall: 0.0, f1: 0.0 };
        let fnmi = cluster_or_zero(fuzzy_nmi(&s, &g), 0.0, "fuzzy NMI", filter, &mut diagnostics.warnings)?;
        let fbc = cluster_or_zero(fuzzy_bcubed(&s, &g), zero_b, "fuzzy B-Cubed", filter, &mut diagnostics.warnings)?;
        rows.push((
            filter,
            Scores {
                jaccard: jaccard_score(&m, &g),
                kendall: kendall_sim(&m, &g),
                wndcg: wndcg(&m, &g, settings.weight_ratio),
                fnmi,
                fbc,
                instances: g.len(),
            },
        ));
    }
    Ok(Evaluation { rows, mapped, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graded_gold() -> GoldStandard {
        let mut g = GoldStandard::new();
        let rows: &[(&str, &[(&str, f64)])] = &[
            ("1", &[("s1", 1.0)]),
            ("2", &[("s1", 4.0), ("s2", 2.0)]),
            ("3", &[("s2", 1.0)]),
            ("4", &[("s2", 3.0), ("s3", 1.0)]),
            ("5", &[("s3", 1.0)]),
            ("6", &[("s1", 1.0)]),
        ];
        for (id, senses) in rows {
            g.insert("w.n", format!("w.n.{id}"), senses.iter().map(|(s, w)| (s.to_string(), *w)).collect()).unwrap();
        }
        g
    }

    #[test]
    fn gold_against_itself_is_perfect() {
        let g = graded_gold();
        let e = evaluate(&g, &g, &EvalSettings::default(), &InstanceFilter::ALL).unwrap();
        assert!(!e.diagnostics.mapped);
        assert!(e.diagnostics.is_clean());
        for (_, s) in &e.rows {
            assert_eq!(s.jaccard.f1, 1.0);
            assert_eq!(s.kendall.f1, 1.0);
            assert!((s.wndcg.f1 - 1.0).abs() < 1e-12);
            assert_eq!(s.fnmi, 1.0);
            assert_eq!(s.fbc.f1, 1.0);
        }
        let sizes: Vec<usize> = e.rows.iter().map(|(_, s)| s.instances).collect();
        assert_eq!(sizes, [6, 4, 2]);
    }

    #[test]
    fn diagnostics_list_mismatches() {
        let g = graded_gold();
        let mut s = g.restrict(["w.n.1", "w.n.2"]);
        s.insert("w.n", "w.n.99", vec![("s1".into(), 1.0)]).unwrap();
        s.insert("v.v", "w.n.3", vec![("s2".into(), 1.0)]).unwrap();
        let e = evaluate(&s, &g, &EvalSettings::default(), &[InstanceFilter::All]).unwrap();
        assert_eq!(e.diagnostics.missing_from_system, ["w.n.4", "w.n.5", "w.n.6"]);
        assert_eq!(e.diagnostics.unknown_to_gold, ["w.n.99"]);
        assert_eq!(e.diagnostics.lemma_mismatch, ["w.n.3"]);
        let j = e.scores(InstanceFilter::All).unwrap().jaccard;
        assert_eq!((j.labeled, j.total), (3, 6));
        let mut buf = Vec::new();
        e.diagnostics.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("unknown_to_gold\tw.n.99"));
    }

    #[test]
    fn empty_filter_scores_zero() {
        let mut g = GoldStandard::new();
        g.insert("w.n", "a", vec![("s1".into(), 1.0)]).unwrap();
        g.insert("w.n", "b", vec![("s1".into(), 1.0)]).unwrap();
        let e = evaluate(&g, &g, &EvalSettings::default(), &[InstanceFilter::MultiSense]).unwrap();
        let s = e.scores(InstanceFilter::MultiSense).unwrap();
        assert_eq!((s.instances, s.jaccard.f1, s.fnmi, s.fbc.f1), (0, 0.0, 0.0, 0.0));
        assert!(!e.diagnostics.warnings.is_empty());
    }

    #[test]
    fn filter_names_round_trip() {
        for f in InstanceFilter::ALL {
            assert_eq!(f.to_string().parse::<InstanceFilter>().unwrap(), f);
        }
        assert!("some".parse::<InstanceFilter>().is_err());
    }

    proptest! {
        #[test]
        fn filters_recombine_to_all(
            labels in prop::collection::vec((0usize..4, 0usize..3, prop::option::of(0usize..3)), 4..40),
        ) {
            let mut g = GoldStandard::new();
            let mut s = SenseLabeling::new();
            for (i, (c, top, second)) in labels.iter().enumerate() {
                let mut senses = vec![(format!("g{top}"), 2.0)];
                if let Some(x) = second.filter(|x| x != top) {
                    senses.push((format!("g{x}"), 1.0));
                }
                g.insert("w.n", format!("i{i}"), senses).unwrap();
                if i % 5 != 3 {
                    s.insert("w.n", format!("i{i}"), vec![(format!("w.n.c{c}"), 1.0)]).unwrap();
                }
            }
            let e = evaluate(&s, &g, &EvalSettings::default(), &InstanceFilter::ALL).unwrap();
            let all = e.scores(InstanceFilter::All).unwrap();
            let one = e.scores(InstanceFilter::SingleSense).unwrap();
            let many = e.scores(InstanceFilter::MultiSense).unwrap();
            prop_assert_eq!(one.instances + many.instances, all.instances);
            for pick in [|s: &Scores| s.jaccard, |s: &Scores| s.kendall, |s: &Scores| s.wndcg] {
                let (a, b, c) = (pick(all), pick(one), pick(many));
                prop_assert_eq!(b.total + c.total, a.total);
                prop_assert_eq!(b.labeled + c.labeled, a.labeled);
                prop_assert!((b.sum + c.sum - a.sum).abs() < 1e-9);
                let recombined = (b.recall * b.total as f64 + c.recall * c.total as f64) / a.total as f64;
                prop_assert!((recombined - a.recall).abs() < 1e-9);
            }
            for (_, sc) in &e.rows {
                for v in [sc.jaccard.f1, sc.kendall.f1, sc.wndcg.f1, sc.fnmi, sc.fbc.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }
}
