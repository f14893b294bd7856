//! Synchronous update rules.
//!
//! Every rule reads only the step-`t` positions and writes a fresh buffer.
//! Neighbor contributions are always summed in ascending point index, with
//! the point itself slotted in at its own index for the averaging rules, so
//! any two routes that discover the same neighbor sets produce bit-identical
//! output.

use rayon::prelude::*;

use super::state::{dist, ModelParams, StateVector};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ssync::Core;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Rule<'a> {
    /// Averaging over the closed neighborhood, optionally count-weighted.
    Average {
        weights: Option<&'a [f64]>,
    },
    Kuramoto,
    Vicsek {
        v_dt: f64,
    },
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Search<'a> {
    Naive,
    Grid(&'a Grid),
}

/// Edge and work statistics gathered while applying one synchronous step.
///
/// Edge sums run over ordered pairs, so every undirected edge is seen twice;
/// the ratios below are unaffected.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct PassStats {
    pub edge_len_sum: f64,
    pub directed_edges: u64,
    pub rc_sum: f64,
    pub distance_evals: u64,
    pub points: usize,
}

impl PassStats {
    pub fn ave_len(&self) -> f64 {
        if self.directed_edges == 0 {
            0.0
        } else {
            self.edge_len_sum / self.directed_edges as f64
        }
    }

    pub fn r_c(&self) -> f64 {
        if self.points == 0 {
            0.0
        } else {
            self.rc_sum / self.points as f64
        }
    }

    pub fn edges(&self) -> u64 {
        self.directed_edges / 2
    }
}

pub(crate) struct Pass {
    pub next: Vec<f64>,
    pub stats: PassStats,
    /// Points whose Vicsek direction vector had zero norm.
    pub degenerate: Vec<usize>,
}

#[derive(Default)]
struct PointStats {
    len_sum: f64,
    edges: u64,
    rc: f64,
    evals: u64,
    degenerate: bool,
}

#[derive(Default)]
struct Scratch {
    candidates: Vec<usize>,
    neighbors: Vec<(usize, f64)>,
    acc: Vec<f64>,
}

fn gather(
    coords: &[f64],
    dim: usize,
    i: usize,
    delta: f64,
    search: Search<'_>,
    scratch: &mut Scratch,
) -> u64 {
    let p = &coords[i * dim..(i + 1) * dim];
    let n = coords.len() / dim;
    scratch.neighbors.clear();
    let mut evals = 0;
    match search {
        Search::Naive => {
            for j in (0..n).filter(|&j| j != i) {
                let d = dist(p, &coords[j * dim..(j + 1) * dim]);
                evals += 1;
                if d <= delta {
                    scratch.neighbors.push((j, d));
                }
            }
        }
        Search::Grid(grid) => {
            scratch.candidates.clear();
            grid.candidates_into(p, delta, &mut scratch.candidates);
            scratch.candidates.sort_unstable();
            for &j in scratch.candidates.iter().filter(|&&j| j != i) {
                let d = dist(p, &coords[j * dim..(j + 1) * dim]);
                evals += 1;
                if d <= delta {
                    scratch.neighbors.push((j, d));
                }
            }
        }
    }
    evals
}

fn apply_rule(
    coords: &[f64],
    dim: usize,
    i: usize,
    rule: Rule<'_>,
    scratch: &mut Scratch,
    out: &mut [f64],
) -> bool {
    let x = &coords[i * dim..(i + 1) * dim];
    let nbrs = &scratch.neighbors;
    let row = |j: usize| &coords[j * dim..(j + 1) * dim];
    match rule {
        Rule::Average { weights } => {
            if nbrs.is_empty() {
                out.copy_from_slice(x);
                return false;
            }
            // Compensated sums, so averaging many coincident points returns
            // their location to within an ulp. The second half holds the
            // running error terms.
            let acc = &mut scratch.acc;
            acc.clear();
            acc.resize(2 * dim, 0.0);
            let (sums, errs) = acc.split_at_mut(dim);
            let mut total = 0.0;
            let mut add = |j: usize| {
                let w = weights.map_or(1.0, |w| w[j]);
                for ((s, e), y) in sums.iter_mut().zip(errs.iter_mut()).zip(row(j)) {
                    let v = w * y;
                    let t = *s + v;
                    *e += if s.abs() >= v.abs() {
                        (*s - t) + v
                    } else {
                        (v - t) + *s
                    };
                    *s = t;
                }
                total += w;
            };
            let mut self_added = false;
            for &(j, _) in nbrs {
                if !self_added && j > i {
                    add(i);
                    self_added = true;
                }
                add(j);
            }
            if !self_added {
                add(i);
            }
            for k in 0..dim {
                out[k] = (sums[k] + errs[k]) / total;
            }
            false
        }
        Rule::Kuramoto => {
            if nbrs.is_empty() {
                out.copy_from_slice(x);
                return false;
            }
            let m = nbrs.len() as f64;
            for k in 0..dim {
                let s: f64 = nbrs.iter().map(|&(j, _)| (row(j)[k] - x[k]).sin()).sum();
                out[k] = x[k] + s / m;
            }
            false
        }
        Rule::Vicsek { v_dt } => {
            let acc = &mut scratch.acc;
            acc.clear();
            acc.extend_from_slice(x);
            for &(j, _) in nbrs {
                for (a, y) in acc.iter_mut().zip(row(j)) {
                    *a += y;
                }
            }
            let norm = acc.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                out.copy_from_slice(x);
                return true;
            }
            for k in 0..dim {
                out[k] = x[k] + v_dt * (acc[k] / norm);
            }
            false
        }
    }
}

/// Applies `rule` to every point of `coords` at once.
pub(crate) fn synchronous_pass(
    coords: &[f64],
    dim: usize,
    delta: f64,
    rule: Rule<'_>,
    search: Search<'_>,
) -> Pass {
    let n = coords.len() / dim;
    let mut next = vec![0.0; coords.len()];
    let per_point: Vec<PointStats> = next
        .par_chunks_mut(dim)
        .enumerate()
        .map_init(Scratch::default, |scratch, (i, out)| {
            let evals = gather(coords, dim, i, delta, search, scratch);
            let degenerate = apply_rule(coords, dim, i, rule, scratch, out);
            let mut ps = PointStats {
                evals,
                degenerate,
                edges: scratch.neighbors.len() as u64,
                ..Default::default()
            };
            for &(_, d) in &scratch.neighbors {
                ps.len_sum += d;
                ps.rc += (-d).exp();
            }
            ps
        })
        .collect();

    // Sequential reduction keeps the floating-point sums reproducible.
    let mut stats = PassStats {
        points: n,
        ..Default::default()
    };
    let mut degenerate = Vec::new();
    for (i, ps) in per_point.iter().enumerate() {
        stats.edge_len_sum += ps.len_sum;
        stats.directed_edges += ps.edges;
        stats.rc_sum += ps.rc;
        stats.distance_evals += ps.evals;
        if ps.degenerate {
            degenerate.push(i);
        }
    }
    Pass {
        next,
        stats,
        degenerate,
    }
}

/// One step of the linearized Vicsek rule: every point moves to the mean of
/// itself and its δ-neighbors.
pub fn lv_update(state: &StateVector, params: &ModelParams) -> StateVector {
    let pass = synchronous_pass(
        state.coords(),
        state.dim(),
        params.delta,
        Rule::Average { weights: None },
        Search::Naive,
    );
    state.successor(pass.next)
}

/// One step of the per-dimension sinusoidal coupling used by SynC.
/// Points without neighbors stay where they are.
pub fn ek_update(state: &StateVector, params: &ModelParams) -> StateVector {
    let pass = synchronous_pass(
        state.coords(),
        state.dim(),
        params.delta,
        Rule::Kuramoto,
        Search::Naive,
    );
    state.successor(pass.next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VicsekStep {
    pub state: StateVector,
    /// Points left in place because their direction vector vanished.
    pub degenerate: Vec<usize>,
}

/// One step of the constant-speed Vicsek rule: each point moves `v_dt`
/// along the normalized sum of its own position and its neighbors'.
pub fn ov_update(state: &StateVector, params: &ModelParams) -> VicsekStep {
    let pass = synchronous_pass(
        state.coords(),
        state.dim(),
        params.delta,
        Rule::Vicsek { v_dt: params.v_dt },
        Search::Naive,
    );
    VicsekStep {
        state: state.successor(pass.next),
        degenerate: pass.degenerate,
    }
}

/// Count-weighted averaging over core locations. Neighbor sets are taken
/// over all of `cores`, which are summed in slice order.
pub fn weighted_core_update(cores: &[Core], delta: f64) -> Result<Vec<Vec<f64>>> {
    let Some(first) = cores.first() else {
        return Ok(Vec::new());
    };
    let dim = first.location.len();
    let mut coords = Vec::with_capacity(cores.len() * dim);
    let mut weights = Vec::with_capacity(cores.len());
    for core in cores {
        if core.location.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: core.location.len(),
            });
        }
        if core.containing_points == 0 {
            return Err(Error::invalid(format!(
                "core {} contains no points",
                core.core_id
            )));
        }
        coords.extend_from_slice(&core.location);
        weights.push(core.containing_points as f64);
    }
    let pass = synchronous_pass(
        &coords,
        dim,
        delta,
        Rule::Average {
            weights: Some(&weights),
        },
        Search::Naive,
    );
    Ok(pass.next.chunks_exact(dim).map(<[f64]>::to_vec).collect())
}
