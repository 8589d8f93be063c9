//! Context-similarity networks over the instances of one lemma.
//!
//! Nodes are context embeddings. Edges are undirected, stored once with
//! `i < j`, and always carry a strictly positive weight:
//!
//! * cosine weights are the raw cosine; non-positive similarities are
//!   dropped and the value is capped at 1;
//! * inverse-euclidean weights are `1 / (d + 1e-9)`.
//!
//! In k-NN mode every node picks its `k` most similar peers (ties go to the
//! lower node index) and the graph is the union of those choices.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::context_embed::ContextEmbedding;
use crate::embed_store::{cosine_similarity, euclidean_distance};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Guard added to distances before inversion.
pub const INVERSE_EUCLIDEAN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Similarity {
    Cosine,
    InverseEuclidean,
}

impl Similarity {
    /// Ranking score (higher is more similar) and edge weight for a pair.
    fn score_and_weight<T: Scalar>(self, u: &[T], v: &[T]) -> (f64, f64) {
        match self {
            Similarity::Cosine => match cosine_similarity(u, v) {
                Ok(c) => (c, c.min(1.0)),
                // zero context vector: no direction, never linked
                Err(_) => (f64::NEG_INFINITY, 0.0),
            },
            Similarity::InverseEuclidean => {
                let d = euclidean_distance(u, v).unwrap_or(f64::INFINITY);
                (-d, 1.0 / (d + INVERSE_EUCLIDEAN_EPS))
            }
        }
    }
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Similarity::Cosine => "cosine",
            Similarity::InverseEuclidean => "euclidean",
        })
    }
}

impl FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cosine" | "cos" => Ok(Similarity::Cosine),
            "euclidean" | "inverse-euclidean" | "euclid" => Ok(Similarity::InverseEuclidean),
            _ => Err(Error::Config(format!("similarity must be cosine or euclidean, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Connectivity {
    /// Each node links to its `k` nearest neighbours.
    Knn(usize),
    Full,
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Connectivity::Knn(k) => write!(f, "{k}"),
            Connectivity::Full => f.write_str("full"),
        }
    }
}

impl FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" | "fully-connected" | "-" => Ok(Connectivity::Full),
            n => match n.parse::<usize>() {
                Ok(k) if k > 0 => Ok(Connectivity::Knn(k)),
                _ => Err(Error::Config(format!("k must be a positive integer or 'full', got {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub i: usize,
    pub j: usize,
    pub weight: T,
}

/// Weighted undirected graph without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextGraph<T> {
    nodes: Vec<String>,
    edges: Vec<Edge<T>>,
    adjacency: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> ContextGraph<T> {
    /// Builds a graph from raw `(i, j, w)` triples. Pairs are normalized to
    /// `i < j`; self-loops, duplicates and non-positive weights are rejected.
    pub fn from_edges(nodes: Vec<String>, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        let n = nodes.len();
        let mut map = BTreeMap::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::Config(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            if a == b {
                return Err(Error::Config(format!("self-loop on node {a}")));
            }
            if !(w.is_finite() && w > T::zero()) {
                return Err(Error::Config(format!("edge ({a}, {b}) has non-positive weight {w}")));
            }
            if map.insert((a.min(b), a.max(b)), w).is_some() {
                return Err(Error::Config(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(Self::assemble(nodes, map))
    }

    fn assemble(nodes: Vec<String>, map: BTreeMap<(usize, usize), T>) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let edges: Vec<Edge<T>> = map
            .into_iter()
            .map(|((i, j), weight)| {
                adjacency[i].push((j, weight));
                adjacency[j].push((i, weight));
                Edge { i, j, weight }
            })
            .collect();
        for row in &mut adjacency {
            row.sort_by_key(|&(j, _)| j);
        }
        ContextGraph { nodes, edges, adjacency }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Edges sorted by `(i, j)`, each with `i < j`.
    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbours of `i` in ascending index order.
    pub fn neighbors(&self, i: usize) -> &[(usize, T)] {
        &self.adjacency[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<T> {
        let row = self.adjacency.get(i)?;
        row.binary_search_by_key(&j, |&(k, _)| k).ok().map(|p| row[p].1)
    }

    pub fn degree(&self, i: usize) -> T {
        self.adjacency[i].iter().map(|&(_, w)| w).sum()
    }

    /// Sum of edge weights, each edge counted once.
    pub fn total_weight(&self) -> T {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// `id_i id_j weight` lines, weights with 9 significant digits.
    pub fn write_edge_list<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for e in &self.edges {
            writeln!(w, "{} {} {}", self.nodes[e.i], self.nodes[e.j], format_sig9(e.weight.wide()))?;
        }
        Ok(())
    }
}

/// `%.9g`-style formatting.
pub fn format_sig9(x: f64) -> String {
    const SIG: i32 = 9;
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..SIG).contains(&exp) {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let fixed = format!("{:.*}", (SIG - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

type Scores = Vec<Vec<(f64, f64)>>;

fn check_input<T>(embs: &[ContextEmbedding<T>]) -> Result<()> {
    if embs.len() < 2 {
        return Err(Error::DegenerateGraph { nodes: embs.len() });
    }
    let dim = embs[0].vector.len();
    if let Some(e) = embs.iter().find(|e| e.vector.len() != dim) {
        return Err(Error::DimensionMismatch { left: dim, right: e.vector.len() });
    }
    Ok(())
}

/// Pairwise (score, weight) matrix, rows computed in parallel.
fn pairwise<T: Scalar>(embs: &[ContextEmbedding<T>], sim: Similarity) -> Scores {
    (0..embs.len())
        .into_par_iter()
        .map(|i| embs.iter().map(|other| sim.score_and_weight(&embs[i].vector, &other.vector)).collect())
        .collect()
}

fn node_ids<T>(embs: &[ContextEmbedding<T>]) -> Vec<String> {
    embs.iter().map(|e| e.instance_id.clone()).collect()
}

fn keep<T: Scalar>(map: &mut BTreeMap<(usize, usize), T>, i: usize, j: usize, weight: f64) {
    let w = T::lit(weight);
    if w > T::zero() && w.is_finite() {
        map.insert((i.min(j), i.max(j)), w);
    }
}

/// Union-symmetrized k-nearest-neighbour graph. `k >= n` is clamped to
/// `n - 1`.
pub fn build_knn<T: Scalar>(embs: &[ContextEmbedding<T>], k: usize, sim: Similarity) -> Result<ContextGraph<T>> {
    check_input(embs)?;
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    let n = embs.len();
    let k = if k >= n {
        log::warn!("k = {k} exceeds the {n} available nodes; clamped to {}", n - 1);
        n - 1
    } else {
        k
    };

    let scores = pairwise(embs, sim);
    let mut map = BTreeMap::new();
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for (i, row) in scores.iter().enumerate() {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| row[b].0.total_cmp(&row[a].0).then(a.cmp(&b)));
        for &j in &order[..k] {
            keep(&mut map, i, j, row[j].1);
        }
    }
    Ok(ContextGraph::assemble(node_ids(embs), map))
}

/// Every unordered pair with a positive weight.
pub fn build_full<T: Scalar>(embs: &[ContextEmbedding<T>], sim: Similarity) -> Result<ContextGraph<T>> {
    check_input(embs)?;
    let scores = pairwise(embs, sim);
    let mut map = BTreeMap::new();
    for (i, row) in scores.iter().enumerate() {
        for (j, &(_, w)) in row.iter().enumerate().skip(i + 1) {
            keep(&mut map, i, j, w);
        }
    }
    Ok(ContextGraph::assemble(node_ids(embs), map))
}

pub fn build<T: Scalar>(embs: &[ContextEmbedding<T>], conn: Connectivity, sim: Similarity) -> Result<ContextGraph<T>> {
    match conn {
        Connectivity::Knn(k) => build_knn(embs, k, sim),
        Connectivity::Full => build_full(embs, sim),
    }
}
