//! End-to-end sense induction for one lemma and for whole corpora.
//!
//! windows → context embeddings → similarity graph → Louvain partition;
//! every community becomes an induced sense `<lemma>.c<N>` and each
//! instance is labeled with its community at weight 1. Instances without
//! any in-vocabulary context word never enter the graph and receive a
//! singleton sense.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::context_embed::{compose, Composition, ContextEmbedding};
use crate::corpus::{extract_window, Dataset, Instance, SenseLabeling, WindowMode};
use crate::embed_store::EmbeddingTable;
use crate::error::Result;
use crate::graph::{build, Connectivity, ContextGraph, Similarity};
use crate::louvain::{Louvain, Partition};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PipelineConfig {
    pub composition: Composition,
    pub window: WindowMode,
    pub connectivity: Connectivity,
    pub similarity: Similarity,
}

/// Window sizes swept by default, plus the full sentence.
pub const DEFAULT_WINDOWS: [WindowMode; 8] = [
    WindowMode::Tokens(1),
    WindowMode::Tokens(2),
    WindowMode::Tokens(3),
    WindowMode::Tokens(4),
    WindowMode::Tokens(5),
    WindowMode::Tokens(7),
    WindowMode::Tokens(10),
    WindowMode::FullSentence,
];

/// Neighbourhood sizes swept by default, plus the fully-connected model.
pub const DEFAULT_CONNECTIVITIES: [Connectivity; 4] =
    [Connectivity::Knn(1), Connectivity::Knn(5), Connectivity::Knn(15), Connectivity::Full];

impl PipelineConfig {
    /// Cartesian product in (similarity, composition, window, connectivity)
    /// order.
    pub fn grid(
        similarities: &[Similarity],
        compositions: &[Composition],
        windows: &[WindowMode],
        connectivities: &[Connectivity],
    ) -> Vec<PipelineConfig> {
        let mut out = Vec::new();
        for &similarity in similarities {
            for &composition in compositions {
                for &window in windows {
                    for &connectivity in connectivities {
                        out.push(PipelineConfig { composition, window, connectivity, similarity });
                    }
                }
            }
        }
        out
    }

    pub fn default_grid(similarities: &[Similarity]) -> Vec<PipelineConfig> {
        Self::grid(similarities, &[Composition::Add, Composition::Avg], &DEFAULT_WINDOWS, &DEFAULT_CONNECTIVITIES)
    }
}

impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CN-{} window={} k={} sim={}", self.composition, self.window, self.connectivity, self.similarity)
    }
}

/// Everything produced while inducing the senses of one lemma.
#[derive(Debug, Clone)]
pub struct LemmaInduction<T> {
    pub lemma: String,
    pub labeling: SenseLabeling,
    pub embeddings: Vec<ContextEmbedding<T>>,
    /// Instances whose window had no in-vocabulary token.
    pub empty_contexts: Vec<String>,
    pub graph: Option<ContextGraph<T>>,
    pub partition: Option<Partition<T>>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> LemmaInduction<T> {
    pub fn sense_count(&self) -> usize {
        let mut senses: Vec<&str> =
            self.labeling.iter().flat_map(|(_, e)| e.senses.iter().map(|(s, _)| s.as_str())).collect();
        senses.sort_unstable();
        senses.dedup();
        senses.len()
    }
}

/// Induces senses for the instances of a single lemma.
pub fn induce<T: Scalar>(
    lemma: &str,
    instances: &[&Instance],
    table: &EmbeddingTable,
    cfg: &PipelineConfig,
    louvain: &Louvain,
) -> Result<LemmaInduction<T>> {
    let mut warnings = Vec::new();
    let mut embeddings = Vec::new();
    let mut empty_contexts = Vec::new();
    for inst in instances {
        let window = extract_window(inst, cfg.window);
        match compose::<T>(&window, table, cfg.composition) {
            Some(e) => embeddings.push(e),
            None => empty_contexts.push(inst.instance_id.clone()),
        }
    }
    if !empty_contexts.is_empty() {
        warnings.push(format!(
            "{lemma}: {} instance(s) without in-vocabulary context get singleton senses",
            empty_contexts.len()
        ));
    }
    if embeddings.is_empty() && !instances.is_empty() {
        warnings.push(format!("{lemma}: every context is empty"));
    }

    let mut groups: Vec<Vec<String>> = empty_contexts.iter().map(|id| vec![id.clone()]).collect();
    let mut graph = None;
    let mut partition = None;
    match embeddings.len() {
        0 => {}
        1 => groups.push(vec![embeddings[0].instance_id.clone()]),
        _ => {
            let g = build(&embeddings, cfg.connectivity, cfg.similarity)?;
            if g.edge_count() == 0 {
                warnings.push(format!("{lemma}: similarity graph has no positive edge; all singletons"));
                groups.extend(g.nodes().iter().map(|id| vec![id.clone()]));
            } else {
                let p = louvain.run(&g)?;
                for members in p.communities() {
                    groups.push(members.into_iter().map(|i| g.nodes()[i].clone()).collect());
                }
                partition = Some(p);
            }
            graph = Some(g);
        }
    }

    let labeling = label_groups(lemma, groups)?;
    Ok(LemmaInduction { lemma: lemma.to_owned(), labeling, embeddings, empty_contexts, graph, partition, warnings })
}

/// Names groups `<lemma>.c<N>` in order of their smallest instance id.
fn label_groups(lemma: &str, mut groups: Vec<Vec<String>>) -> Result<SenseLabeling> {
    for g in &mut groups {
        g.sort();
    }
    groups.sort_by(|a, b| a[0].cmp(&b[0]));
    let mut labeling = SenseLabeling::new();
    for (c, members) in groups.into_iter().enumerate() {
        let sense = format!("{lemma}.c{c}");
        for id in members {
            labeling.insert(lemma, id, vec![(sense.clone(), 1.0)])?;
        }
    }
    Ok(labeling)
}

/// Labels every instance as its own singleton sense.
fn singleton_labeling(lemma: &str, instances: &[&Instance]) -> Result<SenseLabeling> {
    label_groups(lemma, instances.iter().map(|i| vec![i.instance_id.clone()]).collect())
}

#[derive(Debug, Clone, Default)]
pub struct BatchInduction {
    pub labelings: BTreeMap<String, SenseLabeling>,
    pub warnings: Vec<String>,
}

impl BatchInduction {
    /// All lemmas in one labeling, ready for the key-file writer.
    pub fn merged(&self) -> SenseLabeling {
        let mut all = SenseLabeling::new();
        for l in self.labelings.values() {
            all.extend(l.clone());
        }
        all
    }
}

/// Runs [`induce`] for every lemma in parallel. A failing lemma falls back
/// to singleton senses and is reported in the warnings.
pub fn induce_all<T: Scalar>(
    dataset: &Dataset,
    table: &EmbeddingTable,
    cfg: &PipelineConfig,
    louvain: &Louvain,
) -> BatchInduction {
    let groups: Vec<(&str, Vec<&Instance>)> = dataset.by_lemma().into_iter().collect();
    let results: Vec<(String, SenseLabeling, Vec<String>)> = groups
        .par_iter()
        .map(|(lemma, instances)| match induce::<T>(lemma, instances, table, cfg, louvain) {
            Ok(r) => (r.lemma, r.labeling, r.warnings),
            Err(e) => {
                let labeling = singleton_labeling(lemma, instances).unwrap_or_default();
                (lemma.to_string(), labeling, vec![format!("{lemma}: {e}; fell back to singletons")])
            }
        })
        .collect();

    let mut out = BatchInduction::default();
    for (lemma, labeling, warnings) in results {
        for w in &warnings {
            log::warn!("{w}");
        }
        out.warnings.extend(warnings);
        out.labelings.insert(lemma, labeling);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(lemma: &str, id: &str, tokens: &[&str], target: usize) -> Instance {
        Instance {
            lemma_key: lemma.into(),
            instance_id: id.into(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            target_index: target,
        }
    }

    fn cfg(connectivity: Connectivity) -> PipelineConfig {
        PipelineConfig {
            composition: Composition::Add,
            window: WindowMode::Tokens(2),
            connectivity,
            similarity: Similarity::Cosine,
        }
    }

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(3).unwrap();
        t.insert("salt", &[1.0, 0.0, 0.0]).unwrap();
        t.insert("pepper", &[0.9, 0.1, 0.0]).unwrap();
        t.insert("numbers", &[0.0, 1.0, 0.0]).unwrap();
        t.insert("sum", &[0.0, 0.9, 0.1]).unwrap();
        t
    }

    #[test]
    fn grid_size() {
        assert_eq!(PipelineConfig::default_grid(&[Similarity::Cosine]).len(), 64);
        assert_eq!(PipelineConfig::default_grid(&[Similarity::Cosine, Similarity::InverseEuclidean]).len(), 128);
    }

    #[test]
    fn identical_contexts_share_a_sense() {
        let a = instance("add.v", "add.v.1", &["salt", "add"], 1);
        let b = instance("add.v", "add.v.2", &["add", "salt"], 0);
        let r: LemmaInduction<f64> =
            induce("add.v", &[&a, &b], &table(), &cfg(Connectivity::Full), &Louvain::default()).unwrap();
        assert_eq!(r.sense_count(), 1);
        assert_eq!(r.labeling.get("add.v.1").unwrap().senses, vec![("add.v.c0".to_string(), 1.0)]);
        assert_eq!(r.labeling.get("add.v.1").unwrap().senses, r.labeling.get("add.v.2").unwrap().senses);
    }

    #[test]
    fn two_topics_two_senses_and_empty_context_singleton() {
        let insts = [
            instance("add.v", "add.v.1", &["salt", "add", "pepper"], 1),
            instance("add.v", "add.v.2", &["pepper", "add"], 1),
            instance("add.v", "add.v.3", &["add", "salt"], 0),
            instance("add.v", "add.v.4", &["numbers", "add", "sum"], 1),
            instance("add.v", "add.v.5", &["sum", "add"], 1),
            instance("add.v", "add.v.6", &["add", "numbers"], 0),
            instance("add.v", "add.v.7", &["add", "zzz"], 0),
        ];
        let refs: Vec<&Instance> = insts.iter().collect();
        let r: LemmaInduction<f64> =
            induce("add.v", &refs, &table(), &cfg(Connectivity::Full), &Louvain::default()).unwrap();
        assert_eq!(r.empty_contexts, vec!["add.v.7".to_string()]);
        assert_eq!(r.labeling.len(), 7);
        assert_eq!(r.sense_count(), 3);
        let sense = |id: &str| r.labeling.get(id).unwrap().senses[0].0.clone();
        assert_eq!(sense("add.v.1"), "add.v.c0");
        assert_eq!(sense("add.v.2"), "add.v.c0");
        assert_eq!(sense("add.v.4"), "add.v.c1");
        assert_eq!(sense("add.v.7"), "add.v.c2");
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn all_empty_contexts() {
        let a = instance("x.n", "x.n.1", &["x"], 0);
        let b = instance("x.n", "x.n.2", &["x", "qq"], 0);
        let r: LemmaInduction<f32> =
            induce("x.n", &[&a, &b], &table(), &cfg(Connectivity::Knn(1)), &Louvain::default()).unwrap();
        assert_eq!(r.sense_count(), 2);
        assert!(r.graph.is_none());
        assert!(r.warnings.iter().any(|w| w.contains("every context is empty")));
    }

    #[test]
    fn graph_without_edges_is_all_singletons() {
        let mut t = EmbeddingTable::new(2).unwrap();
        t.insert("p", &[1.0, 0.0]).unwrap();
        t.insert("q", &[-1.0, 0.0]).unwrap();
        let a = instance("x.n", "x.n.1", &["x", "p"], 0);
        let b = instance("x.n", "x.n.2", &["x", "q"], 0);
        let r: LemmaInduction<f64> =
            induce("x.n", &[&a, &b], &t, &cfg(Connectivity::Full), &Louvain::default()).unwrap();
        assert_eq!(r.sense_count(), 2);
        assert!(r.partition.is_none());
    }

    #[test]
    fn batch_covers_every_instance() {
        let insts = vec![
            instance("add.v", "add.v.1", &["salt", "add"], 1),
            instance("add.v", "add.v.2", &["add", "sum"], 0),
            instance("add.v", "add.v.3", &["add", "numbers"], 0),
            instance("bank.n", "bank.n.1", &["bank"], 0),
        ];
        let ds = Dataset::new(insts).unwrap();
        let out = induce_all::<f64>(&ds, &table(), &cfg(Connectivity::Knn(1)), &Louvain::default());
        assert_eq!(out.labelings.len(), 2);
        assert_eq!(out.merged().len(), 4);
        let empty = induce_all::<f64>(&Dataset::default(), &table(), &cfg(Connectivity::Full), &Louvain::default());
        assert!(empty.labelings.is_empty());
    }
}
