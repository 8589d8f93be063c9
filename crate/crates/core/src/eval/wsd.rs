//! Sense-disambiguation scores over mapped labelings: applicability
//! (Jaccard), ranking agreement (positionally weighted Kendall similarity)
//! and weighted NDCG, each folded into an F1 against full-coverage recall.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::{GoldStandard, SenseEntry, SenseLabeling};

/// Precision over labeled instances, recall over all instances, and their
/// harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Sum of per-instance scores.
    pub sum: f64,
    pub labeled: usize,
    pub total: usize,
}

pub fn combine_f1(scores: &[f64], total: usize) -> F1Score {
    let sum: f64 = scores.iter().sum();
    let labeled = scores.len();
    if labeled == 0 || total == 0 {
        return F1Score { precision: 0.0, recall: 0.0, f1: 0.0, sum, labeled, total };
    }
    let precision = sum / labeled as f64;
    let recall = sum / total as f64;
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    F1Score { precision, recall, f1, sum, labeled, total }
}

/// `|S ∩ G| / |S ∪ G|` over applicable sense sets.
pub fn jaccard_index(system: &SenseEntry, gold: &SenseEntry) -> f64 {
    let s = system.sense_set();
    let g = gold.sense_set();
    let inter = s.intersection(&g).count();
    let union = s.union(&g).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Positionally weighted rank agreement in `[0, 1]`.
///
/// The system ranking is its senses by descending weight, followed by any
/// gold sense it omitted in lexicographic order. For every gold sense at
/// gold rank `r` the displacement `|r − r_sys|` is weighted by `1/r`; the
/// total is normalized by the displacement of the reversed gold ranking.
pub fn kendall_sim_instance(system: &SenseEntry, gold: &SenseEntry) -> f64 {
    let gold_rank: Vec<&str> = gold.ranked().into_iter().map(|(s, _)| s).collect();
    let mut sys_rank: Vec<&str> = system.ranked().into_iter().map(|(s, _)| s).collect();
    let present: BTreeSet<&str> = sys_rank.iter().copied().collect();
    let missing: BTreeSet<&str> = gold_rank.iter().copied().filter(|s| !present.contains(s)).collect();
    sys_rank.extend(missing);
    let sys_pos: BTreeMap<&str, usize> = sys_rank.iter().enumerate().map(|(i, s)| (*s, i + 1)).collect();

    let n = gold_rank.len();
    let mut d = 0.0;
    let mut d_max = 0.0;
    for (i, s) in gold_rank.iter().enumerate() {
        let r = (i + 1) as f64;
        let delta = 1.0 / r;
        d += delta * (r - sys_pos[s] as f64).abs();
        d_max += delta * (r - (n - i) as f64).abs();
    }
    if d_max == 0.0 {
        return if d == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - d / d_max).clamp(0.0, 1.0)
}

/// Weighted NDCG of the system ranking against gold applicabilities.
///
/// Both sides are normalized to sum to one. The gain of a system sense is
/// its gold weight, scaled by `min(w_sys, w_gold) / max(w_sys, w_gold)`
/// when `weight_ratio` is set; senses absent from gold gain nothing.
pub fn wndcg_instance(system: &SenseEntry, gold: &SenseEntry, weight_ratio: bool) -> f64 {
    let gold_w: BTreeMap<&str, f64> = gold.normalized().into_iter().collect();
    let mut dcg = 0.0;
    for (i, (s, ws)) in system.normalized().into_iter().enumerate() {
        let Some(&wg) = gold_w.get(s) else { continue };
        let gain = if weight_ratio { wg * ws.min(wg) / ws.max(wg) } else { wg };
        dcg += gain / ((i + 2) as f64).log2();
    }
    let ideal: f64 = gold.normalized().into_iter().enumerate().map(|(i, (_, w))| w / ((i + 2) as f64).log2()).sum();
    if ideal <= 0.0 {
        return 0.0;
    }
    (dcg / ideal).clamp(0.0, 1.0)
}

fn aggregate(mapped: &SenseLabeling, gold: &GoldStandard, score: impl Fn(&SenseEntry, &SenseEntry) -> f64) -> F1Score {
    let scores: Vec<f64> = gold.iter().filter_map(|(id, g)| mapped.get(id).map(|s| score(s, g))).collect();
    combine_f1(&scores, gold.len())
}

/// Jaccard F1 over every gold instance; unlabeled instances lower recall.
pub fn jaccard_score(mapped: &SenseLabeling, gold: &GoldStandard) -> F1Score {
    aggregate(mapped, gold, jaccard_index)
}

pub fn kendall_sim(mapped: &SenseLabeling, gold: &GoldStandard) -> F1Score {
    aggregate(mapped, gold, kendall_sim_instance)
}

pub fn wndcg(mapped: &SenseLabeling, gold: &GoldStandard, weight_ratio: bool) -> F1Score {
    aggregate(mapped, gold, |s, g| wndcg_instance(s, g, weight_ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(senses: &[(&str, f64)]) -> SenseEntry {
        SenseEntry { lemma: "x.n".into(), senses: senses.iter().map(|(s, w)| (s.to_string(), *w)).collect() }
    }

    #[test]
    fn f1_rule() {
        let all = combine_f1(&[0.2, 0.6, 1.0], 3);
        assert!((all.precision - all.recall).abs() < 1e-15);
        assert!((all.f1 - 0.6).abs() < 1e-15);
        let half = combine_f1(&[1.0, 1.0], 4);
        assert_eq!(half.precision, 1.0);
        assert_eq!(half.recall, 0.5);
        assert_eq!(half.f1, 2.0 / 3.0);
        assert_eq!(combine_f1(&[], 5).f1, 0.0);
        assert_eq!(combine_f1(&[0.0, 0.0], 2).f1, 0.0);
    }

    #[test]
    fn jaccard_cases() {
        assert_eq!(jaccard_index(&entry(&[("a", 1.0), ("b", 2.0)]), &entry(&[("b", 1.0), ("a", 1.0)])), 1.0);
        assert_eq!(jaccard_index(&entry(&[("a", 1.0)]), &entry(&[("a", 1.0), ("b", 1.0)])), 0.5);
        assert_eq!(jaccard_index(&entry(&[("c", 1.0)]), &entry(&[("a", 1.0)])), 0.0);
    }

    #[test]
    fn kendall_cases() {
        let gold = entry(&[("a", 3.0), ("b", 2.0), ("c", 1.0)]);
        assert_eq!(kendall_sim_instance(&gold, &gold), 1.0);
        let reversed = entry(&[("a", 1.0), ("b", 2.0), ("c", 3.0)]);
        assert_eq!(kendall_sim_instance(&reversed, &gold), 0.0);
        // swap of the top two: D = 1·1 + ½·1 = 1.5, D_max = 1·2 + 0 + ⅓·2 = 8/3
        let swapped = entry(&[("b", 3.0), ("a", 2.0), ("c", 1.0)]);
        assert!((kendall_sim_instance(&swapped, &gold) - (1.0 - 1.5 / (8.0 / 3.0))).abs() < 1e-12);
        // omitted gold senses go to the tail in lexicographic order
        let partial = entry(&[("a", 1.0)]);
        assert_eq!(kendall_sim_instance(&partial, &gold), 1.0);
        let single = entry(&[("a", 1.0)]);
        assert_eq!(kendall_sim_instance(&single, &single), 1.0);
        assert_eq!(kendall_sim_instance(&entry(&[("z", 2.0), ("a", 1.0)]), &single), 0.0);
    }

    #[test]
    fn wndcg_cases() {
        let gold = entry(&[("a", 3.0), ("b", 1.0)]);
        assert!((wndcg_instance(&gold, &gold, true) - 1.0).abs() < 1e-12);
        // zero-gain sense first, gold sense second
        let sys = entry(&[("z", 2.0), ("a", 1.0)]);
        let single = entry(&[("a", 1.0)]);
        let plain = wndcg_instance(&sys, &single, false);
        assert!((plain - 1.0 / 3f64.log2()).abs() < 1e-12);
        assert!((plain - 0.6309).abs() < 1e-4);
        // the weight ratio multiplies the gain by w_sys(a) = 1/3
        let ratio = wndcg_instance(&sys, &single, true);
        assert!((ratio - (1.0 / 3.0) / 3f64.log2()).abs() < 1e-12);
        assert_eq!(wndcg_instance(&entry(&[("q", 1.0)]), &gold, true), 0.0);
    }

    #[test]
    fn unlabeled_instances_cost_recall() {
        let mut gold = GoldStandard::new();
        gold.insert("x.n", "1", vec![("a".into(), 1.0)]).unwrap();
        gold.insert("x.n", "2", vec![("a".into(), 1.0)]).unwrap();
        let mut sys = SenseLabeling::new();
        sys.insert("x.n", "1", vec![("a".into(), 1.0)]).unwrap();
        let j = jaccard_score(&sys, &gold);
        assert_eq!((j.precision, j.recall, j.labeled, j.total), (1.0, 0.5, 1, 2));
        assert_eq!(j.f1, 2.0 / 3.0);
    }

    fn ranked_entry() -> impl Strategy<Value = Vec<(String, f64)>> {
        prop::collection::btree_map("[a-f]", 0.01f64..5.0, 1..6).prop_map(|m| m.into_iter().collect::<Vec<_>>())
    }

    proptest! {
        #[test]
        fn instance_scores_are_bounded(s in ranked_entry(), g in ranked_entry()) {
            let s = SenseEntry { lemma: "x.n".into(), senses: s };
            let g = SenseEntry { lemma: "x.n".into(), senses: g };
            for v in [jaccard_index(&s, &g), kendall_sim_instance(&s, &g), wndcg_instance(&s, &g, true), wndcg_instance(&s, &g, false)] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert_eq!(kendall_sim_instance(&g, &g), 1.0);
            prop_assert!((wndcg_instance(&g, &g, true) - 1.0).abs() < 1e-12);
        }
    }
}
