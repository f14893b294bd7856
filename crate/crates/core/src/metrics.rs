//! δ-neighbor graph, convergence statistics, and cluster extraction.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dist, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Undirected graph joining every pair of points within δ, weighted by
/// their distance. Edges are ordered by `i`, then `j`, with `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaGraph {
    pub vertex_count: usize,
    pub edges: Vec<Edge>,
}

pub fn build_delta_graph(state: &StateVector, delta: f64) -> DeltaGraph {
    let n = state.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let weight = dist(state.row(i), state.row(j));
            if weight <= delta {
                edges.push(Edge { i, j, weight });
            }
        }
    }
    DeltaGraph {
        vertex_count: n,
        edges,
    }
}

/// Mean edge weight; an edgeless graph counts as fully synchronized (0).
pub fn ave_len(graph: &DeltaGraph) -> f64 {
    if graph.edges.is_empty() {
        return 0.0;
    }
    graph.edges.iter().map(|e| e.weight).sum::<f64>() / graph.edges.len() as f64
}

/// `(1/n) Σ_i Σ_{Y ∈ δ(X_i)} exp(-dis(X_i, Y))`, unnormalized.
pub fn cluster_order_parameter(state: &StateVector, delta: f64) -> f64 {
    let n = state.len();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        let p = state.row(i);
        for j in (0..n).filter(|&j| j != i) {
            let d = dist(p, state.row(j));
            if d <= delta {
                total += (-d).exp();
            }
        }
    }
    total / n as f64
}

/// A partition of the points with contiguous labels `0..k` and the mean
/// location of each part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabels {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
}

impl ClusterLabels {
    /// Relabels an arbitrary assignment in order of first appearance and
    /// computes the part means over `state`.
    pub fn from_assignment(assignment: &[usize], state: &StateVector) -> Self {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let labels: Vec<usize> = assignment
            .iter()
            .map(|&a| {
                let next = remap.len();
                *remap.entry(a).or_insert(next)
            })
            .collect();
        let k = remap.len();
        let dim = state.dim();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(state.row(i)) {
                *s += x;
            }
        }
        for (s, &c) in sums.iter_mut().zip(&counts) {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
        Self {
            labels,
            centers: sums,
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.centers.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Joins the two sets; the smaller root index survives.
    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Connected components of the graph joining points closer than `epsilon`.
///
/// Bit-identical locations are grouped first; the remaining locations are
/// swept along the first coordinate so only pairs within `epsilon` on that
/// axis are measured.
pub fn extract_clusters(state: &StateVector, epsilon: f64) -> Result<ClusterLabels> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let n = state.len();
    let mut unique: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut reps: Vec<usize> = Vec::new();
    let point_loc: Vec<usize> = (0..n)
        .map(|i| {
            let key: Vec<u64> = state.row(i).iter().map(|x| x.to_bits()).collect();
            *unique.entry(key).or_insert_with(|| {
                reps.push(i);
                reps.len() - 1
            })
        })
        .collect();

    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.sort_by(|&a, &b| {
        state.row(reps[a])[0]
            .total_cmp(&state.row(reps[b])[0])
            .then(a.cmp(&b))
    });
    let mut sets = DisjointSet::new(reps.len());
    for (pos, &a) in order.iter().enumerate() {
        let pa = state.row(reps[a]);
        for &b in &order[pos + 1..] {
            let pb = state.row(reps[b]);
            if pb[0] - pa[0] >= epsilon {
                break;
            }
            if dist(pa, pb) < epsilon {
                sets.union(a, b);
            }
        }
    }
    let assignment: Vec<usize> = point_loc.iter().map(|&u| sets.find(u)).collect();
    Ok(ClusterLabels::from_assignment(&assignment, state))
}

/// True when both label vectors describe the same set partition.
pub fn match_labels(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut ab: HashMap<usize, usize> = HashMap::new();
    let mut ba: HashMap<usize, usize> = HashMap::new();
    a.iter()
        .zip(b)
        .all(|(&x, &y)| *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x)
}
