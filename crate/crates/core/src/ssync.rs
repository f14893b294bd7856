//! Shrinking synchronization over weighted cores.
//!
//! Every point starts as an active core of weight one. Each iteration moves
//! the active cores by the count-weighted averaging rule, then lets each
//! surviving core absorb the actives that landed within ε of it. Absorbed
//! cores leave the active set and hang off their absorber in a parent
//! forest, so later iterations only pay for the shrinking set of actives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esync::DEFAULT_CONV_TOL;
use crate::metrics::ClusterLabels;
use crate::model::{dist, synchronous_pass, Rule, Search, StateVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Core {
    pub core_id: usize,
    pub location: Vec<f64>,
    pub parent_core_id: usize,
    pub containing_points: usize,
    pub active: bool,
}

impl Core {
    pub fn new(core_id: usize, location: Vec<f64>) -> Self {
        Self {
            core_id,
            location,
            parent_core_id: core_id,
            containing_points: 1,
            active: true,
        }
    }

    pub fn is_root(&self) -> bool {
        self.parent_core_id == self.core_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoreClass {
    Isolate,
    ClusterRoot,
    Absorbed,
}

/// Roots holding one point are isolates; roots holding two or more are
/// cluster roots.
pub fn classify_core(core: &Core) -> CoreClass {
    match (core.is_root(), core.containing_points) {
        (false, _) => CoreClass::Absorbed,
        (true, 1) => CoreClass::Isolate,
        (true, _) => CoreClass::ClusterRoot,
    }
}

/// Follows parent links from `id` to its root. `cores[k].core_id` must be `k`.
pub fn find_root(cores: &[Core], id: usize) -> Result<usize> {
    let mut cur = id;
    for _ in 0..=cores.len() {
        let core = cores
            .get(cur)
            .ok_or_else(|| Error::IndexCorruption(format!("core {cur} does not exist")))?;
        if core.is_root() {
            return Ok(cur);
        }
        cur = core.parent_core_id;
    }
    Err(Error::IndexCorruption(format!(
        "parent cycle reached from core {id}"
    )))
}

/// Points every core directly at its root.
pub fn compress_paths(cores: &mut [Core]) -> Result<()> {
    for id in 0..cores.len() {
        let root = find_root(cores, id)?;
        let mut cur = id;
        while cur != root {
            let next = cores[cur].parent_core_id;
            cores[cur].parent_core_id = root;
            cur = next;
        }
    }
    Ok(())
}

/// Statistics of the active cores after `step` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveStats {
    pub step: usize,
    pub ave_len: f64,
    pub r_c: f64,
    pub active: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsectionSummary {
    pub size: usize,
    pub roots: usize,
    pub iterations: usize,
    pub active_counts: Vec<usize>,
    pub root_mass: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SSyncReport {
    /// Original point id of `cores[k]`.
    pub point_ids: Vec<usize>,
    /// Final core forest, paths compressed; `cores[k].core_id == k`.
    pub cores: Vec<Core>,
    /// Indices into `cores` of the final roots, ascending.
    pub roots: Vec<usize>,
    /// Active cores at the start and after every iteration.
    pub active_counts: Vec<usize>,
    /// Points held by the active cores at the start and after every iteration.
    pub root_mass: Vec<usize>,
    pub per_iter: Vec<ActiveStats>,
    pub iterations: usize,
    pub converged: bool,
    pub distance_evals: u64,
    /// Cluster of every original point; centers are the root locations.
    pub labels: ClusterLabels,
    /// Per-subsection first-level runs; empty for a single-level run.
    pub subsections: Vec<SubsectionSummary>,
}

impl SSyncReport {
    pub fn root_cores(&self) -> impl Iterator<Item = &Core> {
        self.roots.iter().map(move |&r| &self.cores[r])
    }
}

pub fn active_counts(report: &SSyncReport) -> Vec<usize> {
    report.active_counts.clone()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkOptions {
    pub delta: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub conv_tol: f64,
}

impl ShrinkOptions {
    pub fn new(delta: f64, epsilon: f64, max_iters: usize) -> Result<Self> {
        let opts = Self {
            delta,
            epsilon,
            max_iters,
            conv_tol: DEFAULT_CONV_TOL,
        };
        opts.validate()?;
        Ok(opts)
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.conv_tol > 0.0) {
            return Err(Error::invalid("conv_tol must be positive"));
        }
        Ok(())
    }
}

/// Forest produced by one shrinking run over an arbitrary starting core set.
#[derive(Debug, Clone)]
pub(crate) struct Shrunk {
    pub point_ids: Vec<usize>,
    pub cores: Vec<Core>,
    pub roots: Vec<usize>,
    pub active_counts: Vec<usize>,
    pub root_mass: Vec<usize>,
    pub per_iter: Vec<ActiveStats>,
    pub iterations: usize,
    pub converged: bool,
    pub distance_evals: u64,
}

/// Runs the shrinking loop. `start` is re-indexed locally in ascending
/// `core_id` order; the original ids are kept in `point_ids`.
pub(crate) fn shrink(mut start: Vec<Core>, opts: &ShrinkOptions) -> Result<Shrunk> {
    opts.validate()?;
    let Some(first) = start.first() else {
        return Err(Error::invalid("no cores to synchronize"));
    };
    let dim = first.location.len();
    start.sort_by_key(|c| c.core_id);
    if start.windows(2).any(|w| w[0].core_id == w[1].core_id) {
        return Err(Error::invalid("duplicate core ids"));
    }
    let point_ids: Vec<usize> = start.iter().map(|c| c.core_id).collect();
    let mut cores: Vec<Core> = Vec::with_capacity(start.len());
    for (k, c) in start.into_iter().enumerate() {
        if c.location.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: c.location.len(),
            });
        }
        if c.containing_points == 0 {
            return Err(Error::invalid(format!(
                "core {} contains no points",
                c.core_id
            )));
        }
        cores.push(Core {
            core_id: k,
            parent_core_id: k,
            active: true,
            ..c
        });
    }

    let mut active: Vec<usize> = (0..cores.len()).collect();
    let mass = |cores: &[Core], active: &[usize]| {
        active
            .iter()
            .map(|&k| cores[k].containing_points)
            .sum::<usize>()
    };
    let mut active_counts = vec![active.len()];
    let mut root_mass = vec![mass(&cores, &active)];
    let mut per_iter = Vec::new();
    let mut distance_evals = 0u64;
    let mut changed = true;
    let mut converged = false;
    let mut t = 0;

    loop {
        let mut coords = Vec::with_capacity(active.len() * dim);
        let mut weights = Vec::with_capacity(active.len());
        for &k in &active {
            coords.extend_from_slice(&cores[k].location);
            weights.push(cores[k].containing_points as f64);
        }
        let pass = synchronous_pass(
            &coords,
            dim,
            opts.delta,
            Rule::Average {
                weights: Some(&weights),
            },
            Search::Naive,
        );
        distance_evals += pass.stats.distance_evals;
        if t > 0 {
            per_iter.push(ActiveStats {
                step: t,
                ave_len: pass.stats.ave_len(),
                r_c: pass.stats.r_c(),
                active: active.len(),
            });
        }
        // Stable active set and no δ-edges left: the cores are at rest.
        if t > 0 && !changed && pass.stats.ave_len() <= opts.conv_tol {
            converged = true;
            break;
        }
        if t == opts.max_iters {
            break;
        }

        for (slot, &k) in active.iter().enumerate() {
            cores[k]
                .location
                .copy_from_slice(&pass.next[slot * dim..(slot + 1) * dim]);
        }
        distance_evals += absorb_coincident(&mut cores, &active, opts.epsilon);
        let before = active.len();
        active.retain(|&k| cores[k].active);
        t += 1;
        changed = active.len() != before;
        active_counts.push(active.len());
        root_mass.push(mass(&cores, &active));
    }

    compress_paths(&mut cores)?;
    let roots = (0..cores.len()).filter(|&k| cores[k].is_root()).collect();
    Ok(Shrunk {
        point_ids,
        cores,
        roots,
        active_counts,
        root_mass,
        per_iter,
        iterations: t,
        converged,
        distance_evals,
    })
}

/// For each still-unabsorbed active core in ascending id, absorbs every
/// other unabsorbed active strictly closer than `epsilon`. Candidates are
/// found by a sweep along the first coordinate. Returns distances measured.
fn absorb_coincident(cores: &mut [Core], active: &[usize], epsilon: f64) -> u64 {
    let mut order: Vec<usize> = active.to_vec();
    order.sort_by(|&a, &b| {
        cores[a].location[0]
            .total_cmp(&cores[b].location[0])
            .then(a.cmp(&b))
    });
    let mut rank = vec![0usize; cores.len()];
    for (pos, &k) in order.iter().enumerate() {
        rank[k] = pos;
    }
    let mut evals = 0u64;
    let mut absorbed = Vec::new();
    for &y in active {
        if !cores[y].active {
            continue;
        }
        let pos = rank[y];
        let x0 = cores[y].location[0];
        absorbed.clear();
        for &z in order[..pos].iter().rev() {
            if x0 - cores[z].location[0] >= epsilon {
                break;
            }
            if cores[z].active {
                evals += 1;
                if dist(&cores[z].location, &cores[y].location) < epsilon {
                    absorbed.push(z);
                }
            }
        }
        for &z in &order[pos + 1..] {
            if cores[z].location[0] - x0 >= epsilon {
                break;
            }
            if cores[z].active {
                evals += 1;
                if dist(&cores[z].location, &cores[y].location) < epsilon {
                    absorbed.push(z);
                }
            }
        }
        for &z in &absorbed {
            cores[z].active = false;
            cores[z].parent_core_id = y;
            cores[y].containing_points += cores[z].containing_points;
        }
    }
    evals
}

/// Shrinking synchronization clustering of `data` with unit starting weights.
pub fn ssync_run(
    data: &StateVector,
    delta: f64,
    epsilon: f64,
    max_iters: usize,
) -> Result<SSyncReport> {
    ssync_run_with(data, &ShrinkOptions::new(delta, epsilon, max_iters)?)
}

pub fn ssync_run_with(data: &StateVector, opts: &ShrinkOptions) -> Result<SSyncReport> {
    if data.is_empty() {
        return Err(Error::invalid("data set is empty"));
    }
    let start = data
        .points()
        .map(|p| Core::new(p.index, p.coords.to_vec()))
        .collect();
    let shrunk = shrink(start, opts)?;
    let assignment: Vec<usize> = shrunk.cores.iter().map(|c| c.parent_core_id).collect();
    let labels = labels_from_roots(&assignment, &shrunk.cores);
    Ok(SSyncReport {
        point_ids: shrunk.point_ids,
        cores: shrunk.cores,
        roots: shrunk.roots,
        active_counts: shrunk.active_counts,
        root_mass: shrunk.root_mass,
        per_iter: shrunk.per_iter,
        iterations: shrunk.iterations,
        converged: shrunk.converged,
        distance_evals: shrunk.distance_evals,
        labels,
        subsections: Vec::new(),
    })
}

/// Labels points by root index (`root_of[i]` indexes `cores`), numbering
/// clusters in order of first appearance with root locations as centers.
pub(crate) fn labels_from_roots(root_of: &[usize], cores: &[Core]) -> ClusterLabels {
    let mut label_of_root = std::collections::HashMap::new();
    let mut centers = Vec::new();
    let labels = root_of
        .iter()
        .map(|&r| {
            *label_of_root.entry(r).or_insert_with(|| {
                centers.push(cores[r].location.clone());
                centers.len() - 1
            })
        })
        .collect();
    ClusterLabels { labels, centers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::DisjointSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn state(rows: &[&[f64]]) -> StateVector {
        StateVector::from_rows(rows).unwrap()
    }

    #[test]
    fn pair_merges_into_one_root() {
        let r = ssync_run(&state(&[&[0.0, 0.0], &[6.0, 0.0]]), 18.0, 1e-5, 50).unwrap();
        assert_eq!(r.roots, vec![0]);
        assert_eq!(r.cores[0].location, vec![3.0, 0.0]);
        assert_eq!(r.cores[0].containing_points, 2);
        assert_eq!(r.cores[1].parent_core_id, 0);
        assert_eq!(r.active_counts[..2], [2, 1]);
        assert_eq!(classify_core(&r.cores[0]), CoreClass::ClusterRoot);
        assert_eq!(classify_core(&r.cores[1]), CoreClass::Absorbed);
    }

    #[test]
    fn single_point_is_an_isolate() {
        let r = ssync_run(&state(&[&[1.0, 2.0]]), 18.0, 1e-5, 50).unwrap();
        assert_eq!(r.roots, vec![0]);
        assert_eq!(r.cores[0].containing_points, 1);
        assert_eq!(classify_core(&r.cores[0]), CoreClass::Isolate);
        assert!(r.converged);
    }

    #[test]
    fn classification_by_count() {
        let mut c = Core::new(4, vec![0.0]);
        assert_eq!(classify_core(&c), CoreClass::Isolate);
        c.containing_points = 200;
        assert_eq!(classify_core(&c), CoreClass::ClusterRoot);
        c.parent_core_id = 1;
        assert_eq!(classify_core(&c), CoreClass::Absorbed);
    }

    #[test]
    fn global_collapse_in_one_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<[f64; 2]> = (0..50)
            .map(|_| [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)])
            .collect();
        let r = ssync_run(&StateVector::from_rows(&pts).unwrap(), 100.0, 1e-5, 50).unwrap();
        assert_eq!(r.active_counts[0], 50);
        assert_eq!(r.active_counts[1], 1);
        assert_eq!(r.roots.len(), 1);
        assert_eq!(r.cores[r.roots[0]].containing_points, 50);
    }

    #[test]
    fn chains_compress_to_roots() {
        let mut cores: Vec<Core> = (0..3).map(|i| Core::new(i, vec![i as f64])).collect();
        cores[0].parent_core_id = 1;
        cores[1].parent_core_id = 2;
        assert_eq!(find_root(&cores, 0).unwrap(), 2);
        assert_eq!(find_root(&cores, 2).unwrap(), 2);
        compress_paths(&mut cores).unwrap();
        assert_eq!(cores[0].parent_core_id, 2);
    }

    #[test]
    fn cycles_are_detected() {
        let mut cores: Vec<Core> = (0..2).map(|i| Core::new(i, vec![0.0])).collect();
        cores[0].parent_core_id = 1;
        cores[1].parent_core_id = 0;
        assert!(matches!(
            find_root(&cores, 0),
            Err(Error::IndexCorruption(_))
        ));
        assert!(find_root(&cores, 7).is_err());
    }

    #[test]
    fn random_merges_match_union_find() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200;
        let mut cores: Vec<Core> = (0..n).map(|i| Core::new(i, vec![0.0])).collect();
        let mut reference = DisjointSet::new(n);
        for _ in 0..150 {
            let a = find_root(&cores, rng.gen_range(0..n)).unwrap();
            let b = find_root(&cores, rng.gen_range(0..n)).unwrap();
            if a != b {
                cores[b].parent_core_id = a;
            }
            reference.union(a, b);
        }
        for i in 0..n {
            for j in 0..n {
                let same = find_root(&cores, i).unwrap() == find_root(&cores, j).unwrap();
                assert_eq!(same, reference.find(i) == reference.find(j));
            }
        }
    }

    #[test]
    fn merge_groups_land_on_their_plain_mean() {
        // {-1, 0, 1} needs two steps to become a clique and then merges in one
        // absorption; {50, 51} collapses in the first step.
        let s = state(&[&[-1.0], &[0.0], &[1.0], &[50.0], &[51.0]]);
        let r = ssync_run(&s, 1.5, 1e-5, 50).unwrap();
        assert_eq!(r.roots.len(), 2);
        let mut roots: Vec<&Core> = r.root_cores().collect();
        roots.sort_by(|a, b| a.location[0].total_cmp(&b.location[0]));
        assert_eq!(roots[0].containing_points, 3);
        assert!(roots[0].location[0].abs() < 1e-12);
        assert_eq!(roots[1].containing_points, 2);
        assert_eq!(roots[1].location[0], 50.5);
        assert_eq!(r.active_counts[..3], [5, 4, 2]);
    }

    #[test]
    fn counts_and_monotonicity_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<[f64; 2]> = (0..120)
            .map(|_| [rng.gen_range(0.0..80.0), rng.gen_range(0.0..80.0)])
            .collect();
        let r = ssync_run(&StateVector::from_rows(&pts).unwrap(), 9.0, 1e-5, 50).unwrap();
        assert!(r.root_mass.iter().all(|&m| m == 120));
        assert!(r.active_counts.windows(2).all(|w| w[1] <= w[0]));
        let total: usize = r.root_cores().map(|c| c.containing_points).sum();
        assert_eq!(total, 120);
        assert!(r.cores.iter().all(|c| r.cores[c.parent_core_id].is_root()));
        if r.converged {
            let k = r.active_counts.len();
            assert_eq!(r.active_counts[k - 1], r.active_counts[k - 2]);
        }
    }

    #[test]
    fn parameters_are_validated() {
        let s = state(&[&[0.0]]);
        assert!(ssync_run(&s, 0.0, 1e-5, 50).is_err());
        assert!(ssync_run(&s, 1.0, 0.0, 50).is_err());
        assert!(ssync_run(&s, 1.0, 1e-5, 0).is_err());
    }
}
