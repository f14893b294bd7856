//! Two-level clustering for data sets processed in pieces: split the points
//! at random into `m` subsections, shrink each subsection on its own, then
//! run the weighted shrinking loop once more over every subsection root.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StateVector;
use crate::ssync::{
    labels_from_roots, shrink, ssync_run_with, Core, SSyncReport, ShrinkOptions, SubsectionSummary,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub m: usize,
    /// Subsection of every point.
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl PartitionPlan {
    /// Point indices of each subsection, ascending.
    pub fn subsections(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.m];
        for (i, &s) in self.assignment.iter().enumerate() {
            parts[s].push(i);
        }
        parts
    }
}

/// Assigns each of `n` points to one of `m` subsections uniformly at random.
/// Subsections left empty by the draw take one point from a subsection that
/// can spare it, so every subsection is non-empty.
pub fn partition_random(n: usize, m: usize, seed: u64) -> Result<PartitionPlan> {
    if m == 0 || m > n {
        return Err(Error::invalid(format!(
            "partition count must lie in 1..={n}, got {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
    let mut sizes = vec![0usize; m];
    for &s in &assignment {
        sizes[s] += 1;
    }
    for empty in 0..m {
        if sizes[empty] > 0 {
            continue;
        }
        loop {
            let i = rng.gen_range(0..n);
            let from = assignment[i];
            if sizes[from] > 1 {
                sizes[from] -= 1;
                sizes[empty] += 1;
                assignment[i] = empty;
                break;
            }
        }
    }
    Ok(PartitionPlan {
        m,
        assignment,
        seed,
    })
}

/// The root cores of every report, re-activated as fresh roots under their
/// original point ids.
pub fn collect_root_cores(reports: &[SSyncReport]) -> Vec<Core> {
    reports
        .iter()
        .flat_map(|r| {
            r.root_cores().map(move |c| {
                let id = r.point_ids[c.core_id];
                Core {
                    core_id: id,
                    location: c.location.clone(),
                    parent_core_id: id,
                    containing_points: c.containing_points,
                    active: true,
                }
            })
        })
        .collect()
}

/// Two-level shrinking synchronization. Subsections are processed one after
/// another. With `m == 1` this is exactly [`ssync_run_with`].
pub fn msync_run(
    data: &StateVector,
    m: usize,
    seed: u64,
    opts: &ShrinkOptions,
) -> Result<SSyncReport> {
    let n = data.len();
    let plan = partition_random(n, m, seed)?;
    if m == 1 {
        let mut report = ssync_run_with(data, opts)?;
        report.subsections = vec![summary(&report)];
        return Ok(report);
    }

    let mut reports = Vec::with_capacity(m);
    for part in plan.subsections() {
        let subset = data.subset(&part)?;
        let mut report = ssync_run_with(&subset, opts)?;
        report.point_ids = part;
        reports.push(report);
    }
    let collected = collect_root_cores(&reports);
    let upper = shrink(collected, opts)?;

    // Stitch the two forests into one over the original points.
    let mut cores: Vec<Core> = data
        .points()
        .map(|p| Core::new(p.index, p.coords.to_vec()))
        .collect();
    let mut first_root = vec![0usize; n];
    for report in &reports {
        for c in &report.cores {
            let id = report.point_ids[c.core_id];
            let root = report.point_ids[c.parent_core_id];
            first_root[id] = root;
            cores[id].parent_core_id = root;
            cores[id].containing_points = c.containing_points;
            cores[id].location = c.location.clone();
            cores[id].active = c.is_root();
        }
    }
    for c in &upper.cores {
        let id = upper.point_ids[c.core_id];
        cores[id].parent_core_id = upper.point_ids[c.parent_core_id];
        cores[id].containing_points = c.containing_points;
        cores[id].location = c.location.clone();
        cores[id].active = c.is_root();
    }
    let root_of: Vec<usize> = (0..n)
        .map(|i| cores[first_root[i]].parent_core_id)
        .collect();
    for (i, &r) in root_of.iter().enumerate() {
        cores[i].parent_core_id = r;
    }
    let labels = labels_from_roots(&root_of, &cores);
    let roots = upper
        .roots
        .iter()
        .map(|&r| upper.point_ids[r])
        .collect::<std::collections::BTreeSet<_>>();

    Ok(SSyncReport {
        point_ids: (0..n).collect(),
        cores,
        roots: roots.into_iter().collect(),
        active_counts: upper.active_counts,
        root_mass: upper.root_mass,
        per_iter: upper.per_iter,
        iterations: upper.iterations,
        converged: upper.converged,
        distance_evals: reports.iter().map(|r| r.distance_evals).sum::<u64>()
            + upper.distance_evals,
        labels,
        subsections: reports.iter().map(summary).collect(),
    })
}

fn summary(report: &SSyncReport) -> SubsectionSummary {
    SubsectionSummary {
        size: report.cores.len(),
        roots: report.roots.len(),
        iterations: report.iterations,
        active_counts: report.active_counts.clone(),
        root_mass: report.root_mass.clone(),
    }
}
