//! Louvain modularity maximization.
//!
//! Phase 1 sweeps the nodes and moves each one to the neighbouring
//! community with the largest positive modularity gain until a pass stops
//! improving. Phase 2 collapses every community into a super-node whose
//! self-loop carries the internal weight, and the two phases repeat on the
//! coarser graph until a level brings no improvement.
//!
//! Nodes are visited in ascending index order unless a shuffle seed is
//! given. Gain ties resolve to the lowest community id, and a node never
//! leaves its community for an equal gain.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::ContextGraph;
use crate::scalar::Scalar;

/// Hard assignment of graph nodes to dense community ids `0..C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<T> {
    assignment: Vec<usize>,
    community_count: usize,
    modularity: T,
}

impl<T: Scalar> Partition<T> {
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    /// Modularity tracked incrementally during optimization.
    pub fn modularity(&self) -> T {
        self.modularity
    }

    /// Member node indices of each community, ascending.
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.community_count];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }

    /// `instance_id community_id` lines.
    pub fn write_dump<W: Write>(&self, g: &ContextGraph<T>, w: &mut W) -> io::Result<()> {
        for (id, c) in g.nodes().iter().zip(&self.assignment) {
            writeln!(w, "{id} {c}")?;
        }
        Ok(())
    }
}

/// Newman modularity of an arbitrary assignment (community labels need not
/// be dense).
pub fn modularity<T: Scalar>(g: &ContextGraph<T>, assignment: &[usize]) -> Result<T> {
    if assignment.len() != g.node_count() {
        return Err(Error::PartitionSize { expected: g.node_count(), got: assignment.len() });
    }
    let level = Level::from_graph(g);
    if level.m <= T::zero() {
        return Err(Error::ZeroWeightGraph);
    }
    let labels = densify(assignment);
    Ok(level.modularity(&labels))
}

fn densify(assignment: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    assignment
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeOrder {
    Ascending,
    /// Random visiting order per level, from a seeded ChaCha stream.
    Shuffled(u64),
}

#[derive(Debug, Clone)]
pub struct Louvain {
    pub order: NodeOrder,
    /// Minimum modularity gain for a pass or level to count as progress.
    pub min_gain: f64,
    pub max_passes: usize,
    pub max_levels: usize,
}

impl Default for Louvain {
    fn default() -> Self {
        Louvain { order: NodeOrder::Ascending, min_gain: 1e-7, max_passes: 1000, max_levels: 64 }
    }
}

/// Runs Louvain with default settings; `seed` switches to shuffled order.
pub fn louvain<T: Scalar>(g: &ContextGraph<T>, seed: Option<u64>) -> Result<Partition<T>> {
    let cfg = Louvain { order: seed.map_or(NodeOrder::Ascending, NodeOrder::Shuffled), ..Louvain::default() };
    cfg.run(g)
}

impl Louvain {
    pub fn run<T: Scalar>(&self, g: &ContextGraph<T>) -> Result<Partition<T>> {
        let mut level = Level::from_graph(g);
        if level.m <= T::zero() {
            return Err(Error::ZeroWeightGraph);
        }
        let min_gain = T::lit(self.min_gain);
        let mut rng = match self.order {
            NodeOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            NodeOrder::Ascending => None,
        };

        let mut membership: Vec<usize> = (0..g.node_count()).collect();
        let singletons: Vec<usize> = (0..level.n()).collect();
        let mut q = level.modularity(&singletons);

        for _ in 0..self.max_levels {
            let mut order: Vec<usize> = (0..level.n()).collect();
            if let Some(rng) = rng.as_mut() {
                order.shuffle(rng);
            }
            let (labels, gained) = level.local_moves(&order, min_gain, self.max_passes);
            if gained <= T::zero() {
                break;
            }
            q += gained;
            let labels = densify(&labels);
            for m in membership.iter_mut() {
                *m = labels[*m];
            }
            let count = labels.iter().max().map_or(0, |&c| c + 1);
            let coarse_enough = count == level.n();
            level = level.aggregate(&labels, count);
            if gained < min_gain || coarse_enough {
                break;
            }
        }

        let assignment = densify(&membership);
        let community_count = assignment.iter().max().map_or(0, |&c| c + 1);
        Ok(Partition { assignment, community_count, modularity: q })
    }
}

/// Working graph of one aggregation level.
struct Level<T> {
    adj: Vec<Vec<(usize, T)>>,
    self_loops: Vec<T>,
    degree: Vec<T>,
    /// Total edge weight, self-loops included once.
    m: T,
}

impl<T: Scalar> Level<T> {
    fn from_graph(g: &ContextGraph<T>) -> Self {
        let adj: Vec<Vec<(usize, T)>> = (0..g.node_count()).map(|i| g.neighbors(i).to_vec()).collect();
        Self::new(adj, vec![T::zero(); g.node_count()])
    }

    fn new(adj: Vec<Vec<(usize, T)>>, self_loops: Vec<T>) -> Self {
        let two = T::lit(2.0);
        let degree: Vec<T> =
            adj.iter().zip(&self_loops).map(|(row, &s)| row.iter().map(|&(_, w)| w).sum::<T>() + two * s).collect();
        let m = degree.iter().copied().sum::<T>() / two;
        Level { adj, self_loops, degree, m }
    }

    fn n(&self) -> usize {
        self.adj.len()
    }

    /// Σ_c [in_c / m − (tot_c / 2m)²] for dense labels.
    fn modularity(&self, labels: &[usize]) -> T {
        let count = labels.iter().max().map_or(0, |&c| c + 1);
        let mut inner = vec![T::zero(); count];
        let mut tot = vec![T::zero(); count];
        let half = T::lit(0.5);
        for i in 0..self.n() {
            let c = labels[i];
            tot[c] += self.degree[i];
            inner[c] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                if labels[j] == c {
                    // each internal edge is seen from both ends
                    inner[c] += w * half;
                }
            }
        }
        let two_m = self.m + self.m;
        inner.iter().zip(&tot).map(|(&a, &t)| a / self.m - (t / two_m) * (t / two_m)).sum()
    }

    /// Phase 1. Returns the labels (community = some member's node index)
    /// and the modularity gained.
    fn local_moves(&self, order: &[usize], min_gain: T, max_passes: usize) -> (Vec<usize>, T) {
        let n = self.n();
        let two_m = self.m + self.m;
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.degree.clone();
        let mut link = vec![T::zero(); n];
        let mut touched: Vec<usize> = Vec::new();
        let mut total_gain = T::zero();

        for _ in 0..max_passes {
            let mut pass_gain = T::zero();
            let mut moved = false;
            for &i in order {
                let home = comm[i];
                let ki = self.degree[i];

                for &(j, w) in &self.adj[i] {
                    let c = comm[j];
                    if link[c] == T::zero() {
                        touched.push(c);
                    }
                    link[c] += w;
                }
                tot[home] -= ki;

                let gain = |link_c: T, tot_c: T| link_c - tot_c * ki / two_m;
                let home_gain = gain(link[home], tot[home]);
                let mut best = home;
                let mut best_gain = home_gain;
                touched.sort_unstable();
                for &c in &touched {
                    if c == home {
                        continue;
                    }
                    let gc = gain(link[c], tot[c]);
                    if gc > best_gain {
                        best = c;
                        best_gain = gc;
                    }
                }

                tot[best] += ki;
                if best != home {
                    comm[i] = best;
                    moved = true;
                    pass_gain += (best_gain - home_gain) / self.m;
                }
                for &c in &touched {
                    link[c] = T::zero();
                }
                touched.clear();
            }
            total_gain += pass_gain;
            if !moved || pass_gain < min_gain {
                break;
            }
        }
        (comm, total_gain)
    }

    /// Phase 2: one super-node per community.
    fn aggregate(&self, labels: &[usize], count: usize) -> Level<T> {
        let mut self_loops = vec![T::zero(); count];
        let mut links: Vec<std::collections::BTreeMap<usize, T>> = vec![Default::default(); count];
        let half = T::lit(0.5);
        for i in 0..self.n() {
            let ci = labels[i];
            self_loops[ci] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                let cj = labels[j];
                if ci == cj {
                    self_loops[ci] += w * half;
                } else {
                    *links[ci].entry(cj).or_insert(T::zero()) += w;
                }
            }
        }
        let adj = links.into_iter().map(|row| row.into_iter().collect()).collect();
        Level::new(adj, self_loops)
    }
}
