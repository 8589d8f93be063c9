//! Cross-validated mapping of induced senses onto the gold inventory.
//!
//! Within each lemma the instances are split into folds. For every fold a
//! community-to-sense matrix is learned from the other folds and applied to
//! the held-out instances, which yields graded gold-space labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::corpus::{GoldStandard, SenseEntry, SenseLabeling};
use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// What to do with a held-out instance whose community never occurs in the
/// training folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnseenPolicy {
    /// Contribute the training-fold gold sense distribution instead.
    #[default]
    Prior,
    /// Contribute nothing; an instance left with no score stays unlabeled.
    Drop,
}

impl fmt::Display for UnseenPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnseenPolicy::Prior => "prior",
            UnseenPolicy::Drop => "drop",
        })
    }
}

impl FromStr for UnseenPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prior" => Ok(UnseenPolicy::Prior),
            "drop" => Ok(UnseenPolicy::Drop),
            _ => Err(Error::Config(format!("unseen policy must be prior or drop, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingConfig {
    pub folds: usize,
    /// Mapped senses whose normalized score falls below this are dropped;
    /// the top sense is always kept.
    pub threshold: f64,
    pub unseen: UnseenPolicy,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self { folds: DEFAULT_FOLDS, threshold: DEFAULT_THRESHOLD, unseen: UnseenPolicy::Prior }
    }
}

impl MappingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("mapping needs at least 2 folds, got {}", self.folds)));
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold must lie in [0, 1), got {}", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Mapping {
    pub mapped: SenseLabeling,
    pub warnings: Vec<String>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Fold index per instance id. Instances are grouped by their top gold
/// sense; each group is ordered by id hash and dealt round-robin, with the
/// deal continuing across groups so no fold starts every group.
pub fn assign_folds<'a>(ids: &[&'a str], gold: &GoldStandard, folds: usize) -> BTreeMap<&'a str, usize> {
    let mut groups: BTreeMap<&str, Vec<&'a str>> = BTreeMap::new();
    for &id in ids {
        let top = gold.get(id).and_then(|e| e.ranked().first().map(|(s, _)| *s)).unwrap_or("");
        groups.entry(top).or_default().push(id);
    }
    let mut out = BTreeMap::new();
    let mut deal = 0usize;
    for members in groups.values_mut() {
        members.sort_by_key(|id| (fnv1a(id.as_bytes()), *id));
        for id in members.iter() {
            out.insert(*id, deal % folds);
            deal += 1;
        }
    }
    out
}

/// True when every system sense already names a gold sense of its lemma, in
/// which case the labeling needs no mapping.
pub fn in_gold_space(system: &SenseLabeling, gold: &GoldStandard) -> bool {
    let inv = gold.inventory();
    system.iter().all(|(_, e)| {
        inv.get(e.lemma.as_str()).is_some_and(|senses| e.senses.iter().all(|(s, _)| senses.contains(s.as_str())))
    })
}

fn normalize(scores: &mut BTreeMap<String, f64>) {
    let total: f64 = scores.values().sum();
    if total > 0.0 {
        for v in scores.values_mut() {
            *v /= total;
        }
    }
}

fn finalize(mut scores: BTreeMap<String, f64>, threshold: f64) -> Vec<(String, f64)> {
    normalize(&mut scores);
    let mut ranked: Vec<(String, f64)> = scores.into_iter().filter(|(_, w)| *w > 0.0).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut keep: Vec<(String, f64)> =
        ranked.iter().enumerate().filter(|(i, (_, w))| *i == 0 || *w >= threshold).map(|(_, p)| p.clone()).collect();
    let total: f64 = keep.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut keep {
        *w /= total;
    }
    keep
}

fn weights(e: &SenseEntry) -> impl Iterator<Item = (&str, f64)> + '_ {
    e.normalized().into_iter()
}

fn map_lemma(
    lemma: &str,
    ids: &[&str],
    system: &SenseLabeling,
    gold: &GoldStandard,
    cfg: &MappingConfig,
    out: &mut Mapping,
) -> Result<()> {
    let fold_of = assign_folds(ids, gold, cfg.folds);
    let mut unseen_hits = 0usize;
    let mut unlabeled = 0usize;
    for fold in 0..cfg.folds {
        let (held, train): (Vec<&str>, Vec<&str>) = ids.iter().partition(|id| fold_of[**id] == fold);
        if held.is_empty() {
            continue;
        }
        let mut matrix: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
        let mut prior: BTreeMap<&str, f64> = BTreeMap::new();
        for id in &train {
            let s = system.get(id).expect("training id labeled");
            let g = gold.get(id).expect("training id in gold");
            for (gs, gw) in weights(g) {
                *prior.entry(gs).or_default() += gw;
            }
            for (c, cw) in weights(s) {
                let row = matrix.entry(c).or_default();
                for (gs, gw) in weights(g) {
                    *row.entry(gs).or_default() += cw * gw;
                }
            }
        }
        for row in matrix.values_mut() {
            let total: f64 = row.values().sum();
            for v in row.values_mut() {
                *v /= total;
            }
        }
        let prior_total: f64 = prior.values().sum();

        for id in held {
            let s = system.get(id).expect("held-out id labeled");
            let mut scores: BTreeMap<String, f64> = BTreeMap::new();
            let mut used_prior = false;
            for (c, cw) in weights(s) {
                match matrix.get(c) {
                    Some(row) => {
                        for (gs, m) in row {
                            *scores.entry((*gs).to_owned()).or_default() += cw * m;
                        }
                    }
                    None if cfg.unseen == UnseenPolicy::Prior && prior_total > 0.0 => {
                        used_prior = true;
                        for (gs, p) in &prior {
                            *scores.entry((*gs).to_owned()).or_default() += cw * p / prior_total;
                        }
                    }
                    None => {}
                }
            }
            unseen_hits += used_prior as usize;
            if scores.values().all(|v| *v <= 0.0) {
                unlabeled += 1;
                continue;
            }
            out.mapped.insert(lemma, id, finalize(scores, cfg.threshold))?;
        }
    }
    if unseen_hits > 0 {
        let msg = format!(
            "{lemma}: {unseen_hits} held-out instances had communities unseen in training; used the gold prior"
        );
        log::warn!("{msg}");
        out.warnings.push(msg);
    }
    if unlabeled > 0 {
        let msg = format!("{lemma}: {unlabeled} instances could not be mapped and stay unlabeled");
        log::warn!("{msg}");
        out.warnings.push(msg);
    }
    Ok(())
}

/// Maps a system labeling into the gold sense space.
///
/// Only instances present in both labelings take part, grouped by their gold
/// lemma. Gold instances the system left unlabeled stay unlabeled.
pub fn map_senses(system: &SenseLabeling, gold: &GoldStandard, cfg: &MappingConfig) -> Result<Mapping> {
    cfg.validate()?;
    let mut out = Mapping::default();
    for (lemma, ids) in gold.by_lemma() {
        let labeled: Vec<&str> = ids.into_iter().filter(|id| system.contains(id)).collect();
        if labeled.is_empty() {
            continue;
        }
        map_lemma(lemma, &labeled, system, gold, cfg, &mut out)?;
    }
    let extra: BTreeSet<&str> = system.instance_ids().filter(|id| !gold.contains(id)).collect();
    if !extra.is_empty() {
        out.warnings.push(format!("{} system instances are absent from gold and were ignored", extra.len()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gold_fixture() -> GoldStandard {
        // three senses with 4, 3 and 2 instances, plus one two-sense instance
        let mut g = GoldStandard::new();
        let labels = [0, 1, 0, 2, 1, 0, 2, 1, 0];
        for (i, l) in labels.iter().enumerate() {
            g.insert("bank.n", format!("bank.n.{i}"), vec![(format!("bank%{l}"), 1.0)]).unwrap();
        }
        g.insert("bank.n", "bank.n.9", vec![("bank%0".into(), 3.0), ("bank%1".into(), 1.0)]).unwrap();
        g
    }

    fn communities_from_top_sense(g: &GoldStandard) -> SenseLabeling {
        let mut s = SenseLabeling::new();
        for (id, e) in g.iter() {
            let top = e.ranked()[0].0.replace("bank%", "bank.n.c");
            s.insert(&e.lemma, id, vec![(top, 1.0)]).unwrap();
        }
        s
    }

    #[test]
    fn folds_partition_and_stratify() {
        let g = gold_fixture();
        let ids: Vec<&str> = g.instance_ids().collect();
        let folds = assign_folds(&ids, &g, 3);
        assert_eq!(folds.len(), ids.len());
        assert!(folds.values().all(|f| *f < 3));
        for sense in ["bank%0", "bank%1", "bank%2"] {
            let used: BTreeSet<usize> =
                ids.iter().filter(|id| g.get(id).unwrap().ranked()[0].0 == sense).map(|id| folds[id]).collect();
            assert!(used.len() >= 2, "{sense} sits in one fold");
        }
        assert_eq!(folds, assign_folds(&ids, &g, 3));
    }

    #[test]
    fn perfect_system_recovers_gold() {
        let mut g = GoldStandard::new();
        for (i, l) in [0, 0, 1, 1, 2, 2, 0, 1, 2, 0, 1, 2].iter().enumerate() {
            g.insert("w.n", format!("w.n.{i}"), vec![(format!("w%{l}"), 1.0)]).unwrap();
        }
        let s = {
            let mut s = SenseLabeling::new();
            for (id, e) in g.iter() {
                s.insert("w.n", id, vec![(e.senses[0].0.replace('%', ".c"), 1.0)]).unwrap();
            }
            s
        };
        for folds in [2, 5] {
            let m = map_senses(&s, &g, &MappingConfig { folds, ..Default::default() }).unwrap();
            assert_eq!(m.mapped, g, "folds = {folds}");
            assert!(m.warnings.is_empty());
        }
    }

    #[test]
    fn single_community_maps_to_gold_distribution() {
        let mut g = GoldStandard::new();
        let mut s = SenseLabeling::new();
        for i in 0..10 {
            g.insert("w.n", format!("{i}"), vec![("a".into(), 2.0), ("b".into(), 1.0)]).unwrap();
            s.insert("w.n", format!("{i}"), vec![("w.n.c0".into(), 1.0)]).unwrap();
        }
        let m = map_senses(&s, &g, &MappingConfig::default()).unwrap();
        for (_, e) in m.mapped.iter() {
            assert_eq!(e.senses.len(), 2);
            assert_eq!(e.senses[0].0, "a");
            assert!((e.senses[0].1 - 2.0 / 3.0).abs() < 1e-12);
            assert!((e.senses[1].1 - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_drops_minor_senses() {
        let mut scores = BTreeMap::new();
        scores.insert("a".to_string(), 0.9);
        scores.insert("b".to_string(), 0.06);
        scores.insert("c".to_string(), 0.04);
        let kept = finalize(scores.clone(), 0.05);
        assert_eq!(kept.iter().map(|(s, _)| s.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        assert!((kept.iter().map(|(_, w)| w).sum::<f64>() - 1.0).abs() < 1e-12);
        let top_only = finalize(scores, 0.95);
        assert_eq!(top_only, vec![("a".to_string(), 1.0)]);
    }

    #[test]
    fn unseen_communities() {
        let g = gold_fixture();
        let mut s = SenseLabeling::new();
        for (id, e) in g.iter() {
            s.insert(&e.lemma, id, vec![(format!("{id}.own"), 1.0)]).unwrap();
        }
        let prior = map_senses(&s, &g, &MappingConfig::default()).unwrap();
        assert_eq!(prior.mapped.len(), g.len());
        assert!(prior.mapped.iter().all(|(_, e)| e.ranked()[0].0 == "bank%0"));
        assert!(!prior.warnings.is_empty());
        let drop = map_senses(&s, &g, &MappingConfig { unseen: UnseenPolicy::Drop, ..Default::default() }).unwrap();
        assert!(drop.mapped.is_empty());
    }

    #[test]
    fn relabeling_communities_changes_nothing() {
        let g = gold_fixture();
        let s = communities_from_top_sense(&g);
        let mut renamed = SenseLabeling::new();
        for (id, e) in s.iter() {
            let c =
                format!("x{}", e.senses[0].0.len() * 31 + e.senses[0].0.as_bytes().last().copied().unwrap() as usize);
            renamed.insert(&e.lemma, id, vec![(c, 1.0)]).unwrap();
        }
        let cfg = MappingConfig::default();
        assert_eq!(map_senses(&s, &g, &cfg).unwrap().mapped, map_senses(&renamed, &g, &cfg).unwrap().mapped);
    }

    #[test]
    fn partial_coverage_and_validation() {
        let g = gold_fixture();
        let s = communities_from_top_sense(&g).restrict(["bank.n.0", "bank.n.2", "bank.n.5", "bank.n.8"]);
        let m = map_senses(&s, &g, &MappingConfig { folds: 2, ..Default::default() }).unwrap();
        assert_eq!(m.mapped.len(), 4);
        assert!(map_senses(&s, &g, &MappingConfig { folds: 1, ..Default::default() }).is_err());
        assert!(map_senses(&s, &g, &MappingConfig { threshold: 1.0, ..Default::default() }).is_err());
        assert!(in_gold_space(&g, &g));
        assert!(!in_gold_space(&s, &g));
    }
}
