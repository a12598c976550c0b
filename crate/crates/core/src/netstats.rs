//! Degree distributions and clustering coefficients.
//!
//! Clustering works on the simple undirected graph obtained by joining `i`
//! and `j` whenever either owes the other anything. The headline number is
//! the mean of local coefficients `C_i = t_i / (k_i (k_i - 1) / 2)`, where
//! nodes with degree below two count as `C_i = 0`. Transitivity is reported
//! alongside.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::network::{LiabilityNetwork, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl HistogramSpec {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(hi > lo && bins > 0, "empty histogram range");
        HistogramSpec { lo, hi, bins }
    }

    pub fn edges(&self) -> Vec<f64> {
        let w = (self.hi - self.lo) / self.bins as f64;
        (0..=self.bins).map(|k| self.lo + w * k as f64).collect()
    }
}

/// Uniform bins over `[lo, hi]`; the top edge belongs to the last bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub spec: HistogramSpec,
    pub counts: Vec<usize>,
    pub underflow: usize,
    pub overflow: usize,
}

impl Histogram {
    pub fn build(values: impl IntoIterator<Item = f64>, spec: HistogramSpec) -> Self {
        let mut counts = vec![0; spec.bins];
        let mut underflow = 0;
        let mut overflow = 0;
        let width = (spec.hi - spec.lo) / spec.bins as f64;
        for x in values {
            if x < spec.lo {
                underflow += 1;
            } else if x > spec.hi {
                overflow += 1;
            } else {
                let k = (((x - spec.lo) / width) as usize).min(spec.bins - 1);
                counts[k] += 1;
            }
        }
        Histogram {
            spec,
            counts,
            underflow,
            overflow,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.underflow + self.overflow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeDistribution {
    pub in_degree: Vec<usize>,
    pub out_degree: Vec<usize>,
    pub in_histogram: Histogram,
    pub out_histogram: Histogram,
}

pub fn degree_stats(net: &LiabilityNetwork, bins: HistogramSpec) -> DegreeDistribution {
    let n = net.node_count();
    let mut in_degree = vec![0; n];
    let out_degree: Vec<usize> = (0..n).map(|i| net.out_degree(NodeId(i))).collect();
    for e in net.entries() {
        in_degree[e.creditor.0] += 1;
    }
    DegreeDistribution {
        in_histogram: Histogram::build(in_degree.iter().map(|&d| d as f64), bins),
        out_histogram: Histogram::build(out_degree.iter().map(|&d| d as f64), bins),
        in_degree,
        out_degree,
    }
}

/// Degree histograms restricted to a subset of nodes (e.g. banks or firms).
pub fn degree_histograms(
    dist: &DegreeDistribution,
    nodes: impl IntoIterator<Item = NodeId> + Clone,
    bins: HistogramSpec,
) -> (Histogram, Histogram) {
    (
        Histogram::build(
            nodes
                .clone()
                .into_iter()
                .map(|k| dist.in_degree[k.0] as f64),
            bins,
        ),
        Histogram::build(nodes.into_iter().map(|k| dist.out_degree[k.0] as f64), bins),
    )
}

/// Simple undirected graph with sorted neighbour lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    adjacency: Vec<Vec<usize>>,
}

impl UndirectedGraph {
    /// Collapses arbitrary (possibly repeated, possibly reversed) pairs;
    /// self-pairs are ignored.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for (a, b) in edges {
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        UndirectedGraph { adjacency }
    }

    pub fn from_network(net: &LiabilityNetwork) -> Self {
        Self::from_edges(
            net.node_count(),
            net.entries().map(|e| (e.debtor.0, e.creditor.0)),
        )
    }

    /// `G(n, m)`: `m` distinct edges chosen uniformly.
    pub fn gnm<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        let pairs = n * n.saturating_sub(1) / 2;
        assert!(m <= pairs, "{m} edges do not fit in {n} nodes");
        let picks = sample(rng, pairs, m);
        Self::from_edges(n, picks.into_iter().map(|k| unrank_pair(k, n)))
    }

    /// `G(n, p)`: every pair independently with probability `p`.
    pub fn gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((a, b));
                }
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbours(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, l)| l.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    pub fn with_isolated_nodes(&self, extra: usize) -> Self {
        let mut adjacency = self.adjacency.clone();
        adjacency.extend(std::iter::repeat_with(Vec::new).take(extra));
        UndirectedGraph { adjacency }
    }

    /// Triangles through each node.
    pub fn triangles(&self) -> Vec<usize> {
        let mut t = vec![0; self.node_count()];
        for u in 0..self.node_count() {
            let nu = &self.adjacency[u];
            for &v in nu.iter().filter(|&&v| v > u) {
                let nv = &self.adjacency[v];
                // Common neighbours w > v, by merging the sorted lists.
                let (mut a, mut b) = (
                    nu.partition_point(|&x| x <= v),
                    nv.partition_point(|&x| x <= v),
                );
                while a < nu.len() && b < nv.len() {
                    match nu[a].cmp(&nv[b]) {
                        std::cmp::Ordering::Less => a += 1,
                        std::cmp::Ordering::Greater => b += 1,
                        std::cmp::Ordering::Equal => {
                            let w = nu[a];
                            t[u] += 1;
                            t[v] += 1;
                            t[w] += 1;
                            a += 1;
                            b += 1;
                        }
                    }
                }
            }
        }
        t
    }

    pub fn local_clustering(&self) -> Vec<f64> {
        self.triangles()
            .into_iter()
            .zip(&self.adjacency)
            .map(|(t, l)| {
                let k = l.len();
                if k < 2 {
                    0.0
                } else {
                    2.0 * t as f64 / (k * (k - 1)) as f64
                }
            })
            .collect()
    }

    pub fn mean_local_clustering(&self) -> f64 {
        let n = self.node_count();
        if n == 0 {
            return 0.0;
        }
        self.local_clustering().iter().sum::<f64>() / n as f64
    }

    /// `3 × triangles / connected triples`.
    pub fn transitivity(&self) -> f64 {
        let closed: usize = self.triangles().iter().sum();
        let triples: usize = self
            .adjacency
            .iter()
            .map(|l| l.len() * l.len().saturating_sub(1) / 2)
            .sum();
        if triples == 0 {
            0.0
        } else {
            closed as f64 / triples as f64
        }
    }

    pub fn density(&self) -> f64 {
        edge_density(self.node_count(), self.edge_count())
    }
}

fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    // Row a holds pairs (a, a+1..n).
    let mut a = 0;
    loop {
        let row = n - 1 - a;
        if k < row {
            return (a, a + 1 + k);
        }
        k -= row;
        a += 1;
    }
}

/// `2E / (n (n - 1))`, the expected clustering of a uniform random graph with
/// the same number of nodes and links.
pub fn edge_density(nodes: usize, edges: usize) -> f64 {
    if nodes < 2 {
        return 0.0;
    }
    2.0 * edges as f64 / (nodes as f64 * (nodes as f64 - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusteringConvention {
    #[default]
    MeanLocal,
    Transitivity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringReport {
    pub mean_local_clustering: f64,
    pub transitivity: f64,
    /// Density of the collapsed undirected graph.
    pub random_baseline: f64,
    /// Directed entry count over `n (n - 1)` ordered pairs.
    pub random_baseline_directed: f64,
    pub node_count: usize,
    pub undirected_edge_count: usize,
    pub directed_edge_count: usize,
}

impl ClusteringReport {
    pub fn coefficient(&self, convention: ClusteringConvention) -> f64 {
        match convention {
            ClusteringConvention::MeanLocal => self.mean_local_clustering,
            ClusteringConvention::Transitivity => self.transitivity,
        }
    }
}

pub fn global_clustering(net: &LiabilityNetwork) -> ClusteringReport {
    let g = UndirectedGraph::from_network(net);
    let n = net.node_count();
    let directed = net.entry_count();
    ClusteringReport {
        mean_local_clustering: g.mean_local_clustering(),
        transitivity: g.transitivity(),
        random_baseline: g.density(),
        random_baseline_directed: if n < 2 {
            0.0
        } else {
            directed as f64 / (n as f64 * (n as f64 - 1.0))
        },
        node_count: n,
        undirected_edge_count: g.edge_count(),
        directed_edge_count: directed,
    }
}

/// Mean-local clustering averaged over `samples` uniform `G(n, m)` graphs.
pub fn sampled_random_baseline(nodes: usize, edges: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: f64 = (0..samples)
        .map(|_| UndirectedGraph::gnm(nodes, edges, &mut rng).mean_local_clustering())
        .sum();
    total / samples.max(1) as f64
}
