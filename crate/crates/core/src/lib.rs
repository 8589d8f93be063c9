//! Word sense induction from context embeddings and similarity-graph
//! community detection, with SemEval-2013 Task 13 style evaluation.
//!
//! The numeric core (context embeddings, graphs, Louvain) is generic over
//! [`Scalar`], implemented for `f32` and `f64`. Word vectors are stored as
//! `f32` as in the word2vec formats; evaluation works in `f64`.
//!
//! ```
//! use senseforge::{
//!     induce, Composition, Connectivity, Dataset, EmbeddingTable, Louvain, PipelineConfig,
//!     Similarity, WindowMode,
//! };
//!
//! let mut table = EmbeddingTable::new(2).unwrap();
//! table.insert("river", &[1.0, 0.0]).unwrap();
//! table.insert("money", &[0.0, 1.0]).unwrap();
//! let line = |id: &str, ctx: &str| {
//!     format!(r#"{{"lemma":"bank.n","id":"{id}","tokens":["{ctx}","bank"],"target":1}}"#)
//! };
//! let jsonl = [line("b1", "river"), line("b2", "river"), line("b3", "money"), line("b4", "money")].join("\n");
//! let data = Dataset::read_instances(jsonl.as_bytes()).unwrap();
//! let cfg = PipelineConfig {
//!     composition: Composition::Add,
//!     window: WindowMode::FullSentence,
//!     connectivity: Connectivity::Full,
//!     similarity: Similarity::Cosine,
//! };
//! let instances: Vec<_> = data.instances().iter().collect();
//! let out = induce::<f64>("bank.n", &instances, &table, &cfg, &Louvain::default()).unwrap();
//! assert_eq!(out.sense_count(), 2);
//! ```

pub mod context_embed;
pub mod corpus;
pub mod embed_store;
pub mod error;
pub mod eval;
pub mod graph;
pub mod induction;
pub mod louvain;
pub mod scalar;

pub use context_embed::{compose, compose_add, compose_avg, Composition, ContextEmbedding};
pub use corpus::{
    extract_window, ContextWindow, Dataset, GoldStandard, Instance, SenseAssignments, SenseEntry, SenseLabeling,
    WindowMode,
};
pub use embed_store::{cosine_similarity, euclidean_distance, EmbeddingTable};
pub use error::{Error, Location, Result};
pub use eval::{
    baseline, evaluate, fuzzy_bcubed, fuzzy_nmi, map_senses, BaselineKind, EvalSettings, Evaluation, InstanceFilter,
    MappingConfig, MetricReport, SenseFrequencyTable,
};
pub use graph::{build, build_full, build_knn, Connectivity, ContextGraph, Edge, Similarity};
pub use induction::{induce, induce_all, BatchInduction, LemmaInduction, PipelineConfig};
pub use louvain::{louvain, modularity, Louvain, NodeOrder, Partition};
pub use scalar::Scalar;

pub type ContextEmbedding32 = ContextEmbedding<f32>;
pub type ContextEmbedding64 = ContextEmbedding<f64>;
pub type ContextGraph32 = ContextGraph<f32>;
pub type ContextGraph64 = ContextGraph<f64>;
pub type Partition32 = Partition<f32>;
pub type Partition64 = Partition<f64>;
pub type LemmaInduction32 = LemmaInduction<f32>;
pub type LemmaInduction64 = LemmaInduction<f64>;
