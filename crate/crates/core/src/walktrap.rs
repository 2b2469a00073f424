//! Random-walk community detection (walktrap) on weighted graphs.
//!
//! Vertices are compared through the distribution of a `t`-step random walk
//! started at them. The walk runs on the graph with a self-loop on every
//! vertex, weighted by the vertex's mean incident edge weight. Communities
//! start as singletons and the adjacent pair whose merge least increases the
//! within-community squared walk distance (Ward criterion) is merged until no
//! adjacent pairs remain. The dendrogram is cut where weighted modularity
//! (computed on the graph without loops) is largest.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Symmetric non-negative adjacency matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    adjacency: DMatrix<f64>,
    pub node_labels: Vec<String>,
}

impl WeightedGraph {
    pub fn new(adjacency: DMatrix<f64>) -> Result<Self> {
        let labels = (1..=adjacency.nrows()).map(|i| i.to_string()).collect();
        Self::with_labels(adjacency, labels)
    }

    pub fn with_labels(adjacency: DMatrix<f64>, node_labels: Vec<String>) -> Result<Self> {
        let p = adjacency.nrows();
        if adjacency.ncols() != p || node_labels.len() != p {
            return Err(Error::InvalidInput(
                "adjacency must be square and fully labelled".into(),
            ));
        }
        if adjacency.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(
                "edge weights must be finite and non-negative".into(),
            ));
        }
        for i in 0..p {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::InvalidInput("graph must not contain self-loops".into()));
            }
            for j in (i + 1)..p {
                if adjacency[(i, j)] != adjacency[(j, i)] {
                    return Err(Error::InvalidInput("adjacency must be symmetric".into()));
                }
            }
        }
        Ok(Self { adjacency, node_labels })
    }

    /// Absolute values of a signed weight matrix (e.g. partial correlations).
    pub fn from_signed(weights: &DMatrix<f64>) -> Result<Self> {
        let mut adj = weights.map(f64::abs);
        for i in 0..adj.nrows() {
            adj[(i, i)] = 0.0;
        }
        crate::linalg::symmetrize(&mut adj);
        Self::new(adj)
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn strength(&self, i: usize) -> f64 {
        self.adjacency.row(i).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.adjacency.sum() / 2.0
    }
}

/// Newman modularity of `membership` (any labelling) on a weighted graph.
///
/// `Q = sum_c [ w_c / w - (s_c / 2w)^2 ]`; zero for a graph without edges.
pub fn modularity(g: &WeightedGraph, membership: &[usize]) -> f64 {
    let w = g.total_weight();
    if w <= 0.0 {
        return 0.0;
    }
    let mut within: BTreeMap<usize, f64> = BTreeMap::new();
    let mut strength: BTreeMap<usize, f64> = BTreeMap::new();
    let p = g.n_nodes();
    for i in 0..p {
        *strength.entry(membership[i]).or_default() += g.strength(i);
        for j in (i + 1)..p {
            if membership[i] == membership[j] {
                *within.entry(membership[i]).or_default() += g.adjacency[(i, j)];
            }
        }
    }
    strength
        .iter()
        .map(|(c, s)| within.get(c).copied().unwrap_or(0.0) / w - (s / (2.0 * w)).powi(2))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Merge {
    /// Community ids: `0..p` are the vertices, `p + m` is created by merge `m`.
    pub left: usize,
    pub right: usize,
    /// Increase of the within-community squared distance caused by this merge.
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityPartition {
    /// Community of each node, contiguous from 1 in order of first appearance.
    pub membership: Vec<usize>,
    pub n_communities: usize,
    pub modularity: f64,
    pub dendrogram: Vec<Merge>,
    /// Modularity after 0, 1, ..., dendrogram.len() merges.
    pub modularity_by_cut: Vec<f64>,
}

pub const DEFAULT_STEPS: usize = 4;

struct Community {
    size: f64,
    walk: DVector<f64>,
    neighbors: BTreeSet<usize>,
}

pub fn walktrap_communities(g: &WeightedGraph, steps: usize) -> Result<CommunityPartition> {
    let p = g.n_nodes();
    if p == 0 {
        return Err(Error::EmptyGraph);
    }
    if steps == 0 {
        return Err(Error::InvalidInput("walktrap needs at least one step".into()));
    }
    let strength: Vec<f64> = (0..p).map(|i| g.strength(i)).collect();
    let active: Vec<usize> = (0..p).filter(|&i| strength[i] > 0.0).collect();
    let n_active = active.len().max(1) as f64;

    // each vertex gets a self-loop weighted by its mean incident edge weight,
    // which damps the period-two oscillation of walks on tight pairs
    let mut walk_adj = g.adjacency.clone();
    let mut walk_strength = strength.clone();
    for &i in &active {
        let degree = (0..p).filter(|&j| g.adjacency[(i, j)] > 0.0).count() as f64;
        let loop_weight = strength[i] / degree;
        walk_adj[(i, i)] = loop_weight;
        walk_strength[i] += loop_weight;
    }

    // t-step transition probabilities; isolated vertices keep zero rows
    let transition = DMatrix::from_fn(p, p, |i, j| {
        if walk_strength[i] > 0.0 {
            walk_adj[(i, j)] / walk_strength[i]
        } else {
            0.0
        }
    });
    let mut walk = transition.clone();
    for _ in 1..steps {
        walk = &walk * &transition;
    }
    let inv_strength: Vec<f64> = walk_strength
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 })
        .collect();

    let mut communities: BTreeMap<usize, Community> = BTreeMap::new();
    for &i in &active {
        let neighbors = (0..p).filter(|&j| j != i && g.adjacency[(i, j)] > 0.0).collect();
        communities.insert(
            i,
            Community {
                size: 1.0,
                walk: walk.row(i).transpose(),
                neighbors,
            },
        );
    }

    let delta_sigma = |a: &Community, b: &Community| {
        let dist: f64 = a
            .walk
            .iter()
            .zip(b.walk.iter())
            .zip(&inv_strength)
            .map(|((x, y), w)| (x - y).powi(2) * w)
            .sum();
        a.size * b.size / (a.size + b.size) * dist / n_active
    };

    let mut candidates: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&a, ca) in &communities {
        for &b in ca.neighbors.range((a + 1)..) {
            candidates.insert((a, b), delta_sigma(ca, &communities[&b]));
        }
    }

    let mut dendrogram = Vec::new();
    let mut next_id = p;
    while let Some((&(a, b), &height)) = candidates.iter().min_by(|x, y| x.1.total_cmp(y.1).then(x.0.cmp(y.0))) {
        let ca = communities.remove(&a).expect("community a");
        let cb = communities.remove(&b).expect("community b");
        candidates.retain(|&(x, y), _| x != a && x != b && y != a && y != b);

        let size = ca.size + cb.size;
        let merged_walk = (&ca.walk * ca.size + &cb.walk * cb.size) / size;
        let mut neighbors: BTreeSet<usize> = ca.neighbors.union(&cb.neighbors).copied().collect();
        neighbors.remove(&a);
        neighbors.remove(&b);
        let id = next_id;
        next_id += 1;
        for &nb in &neighbors {
            let other = communities.get_mut(&nb).expect("neighbor community");
            other.neighbors.remove(&a);
            other.neighbors.remove(&b);
            other.neighbors.insert(id);
        }
        let merged = Community {
            size,
            walk: merged_walk,
            neighbors,
        };
        for &nb in &merged.neighbors {
            candidates.insert((nb, id), delta_sigma(&communities[&nb], &merged));
        }
        communities.insert(id, merged);
        dendrogram.push(Merge {
            left: a,
            right: b,
            height,
        });
    }

    // replay the dendrogram, scoring every cut
    let mut labels: Vec<usize> = (0..p).collect();
    let mut members: BTreeMap<usize, Vec<usize>> = (0..p).map(|i| (i, vec![i])).collect();
    let mut scores = vec![modularity(g, &labels)];
    let mut states = vec![labels.clone()];
    for (m, merge) in dendrogram.iter().enumerate() {
        let id = p + m;
        let mut nodes = members.remove(&merge.left).unwrap_or_default();
        nodes.extend(members.remove(&merge.right).unwrap_or_default());
        for &v in &nodes {
            labels[v] = id;
        }
        members.insert(id, nodes);
        scores.push(modularity(g, &labels));
        states.push(labels.clone());
    }
    let best_q = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = scores
        .iter()
        .rposition(|&q| q >= best_q - 1e-12)
        .expect("at least one cut");
    let membership = relabel(&states[cut]);
    let n_communities = membership.iter().copied().max().unwrap_or(0);
    Ok(CommunityPartition {
        membership,
        n_communities,
        modularity: scores[cut],
        dendrogram,
        modularity_by_cut: scores,
    })
}

/// Contiguous ids from 1 in order of first appearance.
pub fn relabel(raw: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    raw.iter()
        .map(|r| {
            let next = map.len() + 1;
            *map.entry(*r).or_insert(next)
        })
        .collect()
}
