//! Cluster-level (overlapping NMI) and instance-level (extended B-Cubed)
//! comparison of a system labeling with gold. Memberships are binarized:
//! an instance belongs to every sense it lists with positive weight.
//!
//! Both measures are computed per lemma over the gold instances of that
//! lemma and macro-averaged over lemmas. System entries for instances absent
//! from gold are ignored; gold instances the system did not label belong to
//! no system cluster.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{GoldStandard, SenseLabeling};
use crate::error::{Error, Result};

/// Per-lemma binarized memberships: for every gold instance, the indices of
/// the system clusters and gold senses it belongs to.
struct LemmaCovers {
    system: Vec<BTreeSet<usize>>,
    gold: Vec<BTreeSet<usize>>,
    n_system: usize,
    n_gold: usize,
}

fn index_of<'a>(ids: &mut BTreeMap<&'a str, usize>, s: &'a str) -> usize {
    let next = ids.len();
    *ids.entry(s).or_insert(next)
}

fn lemma_covers(system: &SenseLabeling, gold: &GoldStandard) -> Vec<(String, LemmaCovers)> {
    gold.by_lemma()
        .into_iter()
        .map(|(lemma, ids)| {
            let mut sys_ids = BTreeMap::new();
            let mut gold_ids = BTreeMap::new();
            let mut sys_m = Vec::with_capacity(ids.len());
            let mut gold_m = Vec::with_capacity(ids.len());
            for id in ids {
                let g = gold.get(id).expect("id from gold");
                gold_m.push(g.senses.iter().map(|(s, _)| index_of(&mut gold_ids, s)).collect());
                sys_m.push(match system.get(id) {
                    Some(e) => {
                        e.senses.iter().filter(|(_, w)| *w > 0.0).map(|(s, _)| index_of(&mut sys_ids, s)).collect()
                    }
                    None => BTreeSet::new(),
                });
            }
            let covers = LemmaCovers { system: sys_m, gold: gold_m, n_system: sys_ids.len(), n_gold: gold_ids.len() };
            (lemma.to_owned(), covers)
        })
        .collect()
}

fn h(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// One membership bitmap per cluster.
fn cluster_members(membership: &[BTreeSet<usize>], n_clusters: usize) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; membership.len()]; n_clusters];
    for (i, cs) in membership.iter().enumerate() {
        for &c in cs {
            m[c][i] = true;
        }
    }
    m
}

/// Mean normalized conditional entropy of each cluster of `xs` given the
/// cover `ys`.
fn mean_conditional_ratio(xs: &[Vec<bool>], ys: &[Vec<bool>], n: usize) -> f64 {
    let nf = n as f64;
    let entropy = |a: usize| h(a as f64 / nf) + h((n - a) as f64 / nf);
    let counts = |c: &[bool]| c.iter().filter(|&&b| b).count();
    let y_counts: Vec<usize> = ys.iter().map(|y| counts(y)).collect();
    let mut total = 0.0;
    for x in xs {
        let a = counts(x);
        let hx = entropy(a);
        if hx == 0.0 {
            // A cluster holding every instance (or none) carries no
            // information; it only agrees with an identical cluster.
            total += if ys.iter().any(|y| y == x) { 0.0 } else { 1.0 };
            continue;
        }
        let mut best = hx;
        for (y, &b) in ys.iter().zip(&y_counts) {
            let n11 = x.iter().zip(y).filter(|(p, q)| **p && **q).count();
            let n10 = a - n11;
            let n01 = b - n11;
            let n00 = n - n11 - n10 - n01;
            let (p11, p10, p01, p00) = (h(n11 as f64 / nf), h(n10 as f64 / nf), h(n01 as f64 / nf), h(n00 as f64 / nf));
            if p11 + p00 < p01 + p10 {
                continue;
            }
            let cond = p11 + p10 + p01 + p00 - entropy(b);
            if cond < best {
                best = cond;
            }
        }
        total += (best / hx).clamp(0.0, 1.0);
    }
    total / xs.len() as f64
}

fn lemma_nmi(c: &LemmaCovers) -> f64 {
    if c.n_system == 0 || c.n_gold == 0 {
        return 0.0;
    }
    let n = c.gold.len();
    let xs = cluster_members(&c.system, c.n_system);
    let ys = cluster_members(&c.gold, c.n_gold);
    let r_x = mean_conditional_ratio(&xs, &ys, n);
    let r_y = mean_conditional_ratio(&ys, &xs, n);
    (1.0 - 0.5 * (r_x + r_y)).clamp(0.0, 1.0)
}

/// Overlapping-cover NMI, macro-averaged over lemmas.
///
/// A lemma the system left entirely unlabeled scores 0. Errors when gold is
/// empty or the system labels none of the gold instances.
pub fn fuzzy_nmi(system: &SenseLabeling, gold: &GoldStandard) -> Result<f64> {
    let covers = lemma_covers(system, gold);
    if covers.is_empty() || covers.iter().all(|(_, c)| c.n_system == 0) {
        return Err(Error::EmptyCover);
    }
    let per: Vec<f64> = covers.par_iter().map(|(_, c)| lemma_nmi(c)).collect();
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BCubed {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn lemma_bcubed(c: &LemmaCovers) -> BCubed {
    let n = c.gold.len();
    let mut p_sum = 0.0;
    let mut p_count = 0usize;
    let mut r_sum = 0.0;
    for e in 0..n {
        let (mut pe, mut pn) = (0.0, 0usize);
        let (mut re, mut rn) = (0.0, 0usize);
        for f in 0..n {
            let cs = c.system[e].intersection(&c.system[f]).count();
            let ls = c.gold[e].intersection(&c.gold[f]).count();
            let shared = cs.min(ls) as f64;
            if cs > 0 {
                pe += shared / cs as f64;
                pn += 1;
            }
            if ls > 0 {
                re += shared / ls as f64;
                rn += 1;
            }
        }
        if pn > 0 {
            p_sum += pe / pn as f64;
            p_count += 1;
        }
        r_sum += re / rn as f64;
    }
    let precision = if p_count > 0 { p_sum / p_count as f64 } else { 0.0 };
    let recall = r_sum / n as f64;
    BCubed { precision, recall, f1: harmonic(precision, recall) }
}

/// Extended B-Cubed over ordered instance pairs, self-pairs included.
///
/// Precision averages over instances with at least one system cluster.
/// Precision, recall and F are each macro-averaged over lemmas.
pub fn fuzzy_bcubed(system: &SenseLabeling, gold: &GoldStandard) -> Result<BCubed> {
    let covers = lemma_covers(system, gold);
    if covers.is_empty() || covers.iter().all(|(_, c)| c.n_system == 0) {
        return Err(Error::EmptyCover);
    }
    let per: Vec<BCubed> = covers.par_iter().map(|(_, c)| lemma_bcubed(c)).collect();
    let k = per.len() as f64;
    Ok(BCubed {
        precision: per.iter().map(|b| b.precision).sum::<f64>() / k,
        recall: per.iter().map(|b| b.recall).sum::<f64>() / k,
        f1: per.iter().map(|b| b.f1).sum::<f64>() / k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hard(lemma: &str, labels: &[usize], prefix: &str) -> SenseLabeling {
        let mut out = SenseLabeling::new();
        for (i, l) in labels.iter().enumerate() {
            out.insert(lemma, format!("{lemma}.{i}"), vec![(format!("{prefix}{l}"), 1.0)]).unwrap();
        }
        out
    }

    /// Textbook B-Cubed on hard partitions.
    fn classic_bcubed(sys: &[usize], gold: &[usize]) -> f64 {
        let n = sys.len();
        let (mut p, mut r) = (0.0, 0.0);
        for e in 0..n {
            let same_sys = (0..n).filter(|&f| sys[f] == sys[e]).count() as f64;
            let same_gold = (0..n).filter(|&f| gold[f] == gold[e]).count() as f64;
            let both = (0..n).filter(|&f| sys[f] == sys[e] && gold[f] == gold[e]).count() as f64;
            p += both / same_sys;
            r += both / same_gold;
        }
        let (p, r) = (p / n as f64, r / n as f64);
        2.0 * p * r / (p + r)
    }

    /// Cover NMI straight from the definition, on label vectors.
    fn naive_cover_nmi(sys: &[usize], gold: &[usize]) -> f64 {
        let n = sys.len() as f64;
        let ent = |ps: &[f64]| -> f64 { ps.iter().filter(|&&p| p > 0.0).map(|p| -p * p.log2()).sum() };
        let clusters = |labels: &[usize]| -> Vec<Vec<bool>> {
            let ids: BTreeSet<usize> = labels.iter().copied().collect();
            ids.into_iter().map(|c| labels.iter().map(|&l| l == c).collect()).collect()
        };
        let xs = clusters(sys);
        let ys = clusters(gold);
        let side = |xs: &[Vec<bool>], ys: &[Vec<bool>]| -> f64 {
            let mut acc = 0.0;
            for x in xs {
                let px = x.iter().filter(|&&b| b).count() as f64 / n;
                let hx = ent(&[px, 1.0 - px]);
                if hx == 0.0 {
                    acc += if ys.contains(x) { 0.0 } else { 1.0 };
                    continue;
                }
                let mut best = hx;
                for y in ys {
                    let mut joint = [0.0f64; 4];
                    for (a, b) in x.iter().zip(y) {
                        joint[(*a as usize) * 2 + *b as usize] += 1.0 / n;
                    }
                    let hh = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
                    if hh(joint[3]) + hh(joint[0]) < hh(joint[1]) + hh(joint[2]) {
                        continue;
                    }
                    let py = joint[1] + joint[3];
                    best = best.min(ent(&joint) - ent(&[py, 1.0 - py]));
                }
                acc += (best / hx).clamp(0.0, 1.0);
            }
            acc / xs.len() as f64
        };
        (1.0 - 0.5 * (side(&xs, &ys) + side(&ys, &xs))).clamp(0.0, 1.0)
    }

    #[test]
    fn identical_partitions_score_one() {
        let g = hard("w.n", &[0, 0, 1, 1, 2], "g");
        assert_eq!(fuzzy_nmi(&g, &g).unwrap(), 1.0);
        assert_eq!(fuzzy_bcubed(&g, &g).unwrap().f1, 1.0);
        let s = hard("w.n", &[7, 7, 3, 3, 5], "c");
        assert_eq!(fuzzy_nmi(&s, &g).unwrap(), 1.0);
        assert_eq!(fuzzy_bcubed(&s, &g).unwrap().f1, 1.0);
    }

    #[test]
    fn one_cluster_system_has_zero_nmi() {
        let g = hard("w.n", &[0, 0, 1, 1, 2, 1], "g");
        let one = hard("w.n", &[0; 6], "c");
        assert_eq!(fuzzy_nmi(&one, &g).unwrap(), 0.0);
        // a single-sense gold lemma matched by a single cluster agrees perfectly
        let g1 = hard("w.n", &[0; 6], "g");
        assert_eq!(fuzzy_nmi(&one, &g1).unwrap(), 1.0);
    }

    #[test]
    fn singleton_system_bcubed() {
        // with self-pairs counted, singletons keep full precision and
        // recall 1/|gold cluster| per instance
        let g = hard("w.n", &[0, 0, 0, 0], "g");
        let s = hard("w.n", &[0, 1, 2, 3], "c");
        let b = fuzzy_bcubed(&s, &g).unwrap();
        assert_eq!(b.precision, 1.0);
        assert_eq!(b.recall, 0.25);
        assert!((b.f1 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn overlapping_pairs() {
        // e0: sys {a,b}, gold {x,y}; e1: sys {a}, gold {x}
        let mut g = GoldStandard::new();
        g.insert("w.n", "0", vec![("x".into(), 1.0), ("y".into(), 1.0)]).unwrap();
        g.insert("w.n", "1", vec![("x".into(), 1.0)]).unwrap();
        let mut s = SenseLabeling::new();
        s.insert("w.n", "0", vec![("a".into(), 1.0), ("b".into(), 1.0)]).unwrap();
        s.insert("w.n", "1", vec![("a".into(), 1.0)]).unwrap();
        assert_eq!(fuzzy_bcubed(&s, &g).unwrap().f1, 1.0);
        // e0 loses its second system cluster: precision of (0,0) stays 1,
        // recall of (0,0) drops to 1/2
        let mut s2 = SenseLabeling::new();
        s2.insert("w.n", "0", vec![("a".into(), 1.0)]).unwrap();
        s2.insert("w.n", "1", vec![("a".into(), 1.0)]).unwrap();
        let b = fuzzy_bcubed(&s2, &g).unwrap();
        assert_eq!(b.precision, 1.0);
        assert!((b.recall - 0.875).abs() < 1e-12);
    }

    #[test]
    fn macro_average_over_lemmas() {
        let mut g = hard("a.n", &[0, 0, 1, 1], "g");
        g.extend(hard("b.n", &[0, 0, 0], "g"));
        let mut s = hard("a.n", &[0, 0, 1, 1], "c");
        s.extend(hard("b.n", &[0, 1, 2], "c"));
        let b = fuzzy_bcubed(&s, &g).unwrap();
        let lemma_b = classic_bcubed(&[0, 1, 2], &[0, 0, 0]);
        assert!((b.f1 - (1.0 + lemma_b) / 2.0).abs() < 1e-12);
        let nmi = fuzzy_nmi(&s, &g).unwrap();
        assert!((nmi - (1.0 + naive_cover_nmi(&[0, 1, 2], &[0, 0, 0])) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn unlabeled_instances_and_errors() {
        let g = hard("w.n", &[0, 0, 1, 1], "g");
        assert!(matches!(fuzzy_nmi(&SenseLabeling::new(), &g), Err(Error::EmptyCover)));
        assert!(matches!(fuzzy_bcubed(&SenseLabeling::new(), &g), Err(Error::EmptyCover)));
        assert!(matches!(fuzzy_nmi(&g, &GoldStandard::new()), Err(Error::EmptyCover)));
        let partial = g.restrict(["w.n.0", "w.n.1"]);
        let b = fuzzy_bcubed(&partial, &g).unwrap();
        assert_eq!(b.precision, 1.0);
        assert_eq!(b.recall, 0.5);
        let ignored = {
            let mut s = g.clone();
            s.insert("w.n", "extra", vec![("g9".into(), 1.0)]).unwrap();
            s
        };
        assert_eq!(fuzzy_nmi(&ignored, &g).unwrap(), 1.0);
    }

    fn partitions() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        (2usize..=20).prop_flat_map(|n| (prop::collection::vec(0usize..5, n), prop::collection::vec(0usize..5, n)))
    }

    proptest! {
        #[test]
        fn hard_partitions_match_oracles((sys, gold) in partitions()) {
            let s = hard("w.n", &sys, "c");
            let g = hard("w.n", &gold, "g");
            let b = fuzzy_bcubed(&s, &g).unwrap().f1;
            prop_assert!((b - classic_bcubed(&sys, &gold)).abs() < 1e-9);
            let nmi = fuzzy_nmi(&s, &g).unwrap();
            prop_assert!((nmi - naive_cover_nmi(&sys, &gold)).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&nmi));
        }

        #[test]
        fn cluster_ids_do_not_matter((sys, gold) in partitions(), shift in 1usize..50) {
            let g = hard("w.n", &gold, "g");
            let a = hard("w.n", &sys, "c");
            let relabeled: Vec<usize> = sys.iter().map(|l| (l * 7 + shift) % 101).collect();
            let b = hard("w.n", &relabeled, "z");
            prop_assert!((fuzzy_nmi(&a, &g).unwrap() - fuzzy_nmi(&b, &g).unwrap()).abs() < 1e-12);
            prop_assert!((fuzzy_bcubed(&a, &g).unwrap().f1 - fuzzy_bcubed(&b, &g).unwrap().f1).abs() < 1e-12);
        }
    }
}
