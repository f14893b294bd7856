//! The synchronization loop: apply the chosen rule to every point at once,
//! measure the new state's δ-graph, and stop once its mean edge length has
//! collapsed or the iteration cap is reached.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::metrics::{extract_clusters, ClusterLabels};
use crate::model::{synchronous_pass, Model, ModelParams, PassStats, Search, StateVector};

pub const DEFAULT_MAX_ITERS: usize = 50;
pub const DEFAULT_CONV_TOL: f64 = 1e-6;
pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub model: Model,
    pub max_iters: usize,
    /// The run counts as converged once the mean δ-edge length is at most this.
    pub conv_tol: f64,
    pub record_snapshots: bool,
    /// Points closer than this share a cluster in the final state.
    pub epsilon_cluster: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            model: Model::LinearVicsek,
            max_iters: DEFAULT_MAX_ITERS,
            conv_tol: DEFAULT_CONV_TOL,
            record_snapshots: false,
            epsilon_cluster: DEFAULT_EPSILON,
        }
    }
}

impl RunOptions {
    pub fn with_model(model: Model) -> Self {
        Self {
            model,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.conv_tol > 0.0) {
            return Err(Error::invalid("conv_tol must be positive"));
        }
        if !(self.epsilon_cluster > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        Ok(())
    }
}

/// Statistics of the state reached after `step` updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterStats {
    pub step: usize,
    pub ave_len: f64,
    pub r_c: f64,
    pub edges: u64,
    pub distinct_locations: usize,
    /// Distances measured while scanning this state's neighborhoods.
    pub distance_evals: u64,
}

impl IterStats {
    fn new(step: usize, stats: &PassStats, state: &StateVector) -> Self {
        Self {
            step,
            ave_len: stats.ave_len(),
            r_c: stats.r_c(),
            edges: stats.edges(),
            distinct_locations: state.distinct_locations(),
            distance_evals: stats.distance_evals,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegeneracyFlag {
    pub step: usize,
    pub point: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub distance_evals: u64,
    /// Neighborhood scans performed; one more than `iterations`, since the
    /// final state is scanned for the convergence test.
    pub passes: usize,
}

impl Counters {
    pub fn evals_per_pass(&self) -> f64 {
        if self.passes == 0 {
            0.0
        } else {
            self.distance_evals as f64 / self.passes as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: Model,
    pub final_state: StateVector,
    pub iterations: usize,
    /// Metrics of the input state.
    pub initial: IterStats,
    /// One entry per applied update, `per_iter[t - 1]` describing step `t`.
    pub per_iter: Vec<IterStats>,
    pub labels: ClusterLabels,
    pub converged: bool,
    pub degenerate: Vec<DegeneracyFlag>,
    pub flags: Vec<String>,
    pub counters: Counters,
    /// States at steps `0..=iterations` when snapshots were requested.
    pub snapshots: Vec<StateVector>,
}

impl RunReport {
    pub fn final_ave_len(&self) -> f64 {
        self.per_iter
            .last()
            .map_or(self.initial.ave_len, |s| s.ave_len)
    }

    /// Everything except the work counters, for comparing search strategies.
    pub fn same_outcome(&self, other: &RunReport) -> bool {
        self.final_state == other.final_state
            && self.iterations == other.iterations
            && self.labels == other.labels
            && self.converged == other.converged
            && self.degenerate == other.degenerate
            && self.snapshots == other.snapshots
            && strip_evals(&self.per_iter) == strip_evals(&other.per_iter)
            && strip_evals(&[self.initial]) == strip_evals(&[other.initial])
    }
}

fn strip_evals(stats: &[IterStats]) -> Vec<IterStats> {
    stats
        .iter()
        .map(|s| IterStats {
            distance_evals: 0,
            ..*s
        })
        .collect()
}

pub(crate) fn run_engine(
    data: &StateVector,
    params: &ModelParams,
    opts: &RunOptions,
    mut grid: Option<&mut Grid>,
) -> Result<RunReport> {
    opts.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("data set is empty"));
    }
    let dim = data.dim();
    let rule = opts.model.rule(params);
    let scan = |state: &StateVector, grid: Option<&Grid>| {
        let search = grid.map_or(Search::Naive, Grid::search);
        synchronous_pass(state.coords(), dim, params.delta, rule, search)
    };

    let mut state = StateVector::new(dim, data.coords().to_vec())?;
    let mut snapshots = Vec::new();
    if opts.record_snapshots {
        snapshots.push(state.clone());
    }
    let mut pass = scan(&state, grid.as_deref());
    let mut counters = Counters {
        distance_evals: pass.stats.distance_evals,
        passes: 1,
    };
    let initial = IterStats::new(0, &pass.stats, &state);
    let mut per_iter = Vec::new();
    let mut degenerate = Vec::new();
    let mut converged = false;

    for t in 1..=opts.max_iters {
        degenerate.extend(
            pass.degenerate
                .iter()
                .map(|&point| DegeneracyFlag { step: t, point }),
        );
        let next = state.successor(pass.next);
        if let Some(grid) = grid.as_deref_mut() {
            for i in 0..next.len() {
                if next.row(i) != state.row(i) {
                    grid.relocate(i, state.row(i), next.row(i))?;
                }
            }
        }
        state = next;
        if opts.record_snapshots {
            snapshots.push(state.clone());
        }
        pass = scan(&state, grid.as_deref());
        counters.distance_evals += pass.stats.distance_evals;
        counters.passes += 1;
        let stats = IterStats::new(t, &pass.stats, &state);
        per_iter.push(stats);
        if stats.ave_len <= opts.conv_tol {
            converged = true;
            break;
        }
    }

    let labels = extract_clusters(&state, opts.epsilon_cluster)?;
    Ok(RunReport {
        model: opts.model,
        iterations: per_iter.len(),
        final_state: state,
        initial,
        per_iter,
        labels,
        converged,
        degenerate,
        flags: Vec::new(),
        counters,
        snapshots,
    })
}

/// Runs the synchronization loop with exhaustive neighbor search.
pub fn esync_run(data: &StateVector, params: &ModelParams, opts: &RunOptions) -> Result<RunReport> {
    run_engine(data, params, opts, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub clusters: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// One [`esync_run`] per δ, for cluster-count versus δ curves.
pub fn delta_sweep(
    data: &StateVector,
    deltas: &[f64],
    opts: &RunOptions,
) -> Result<Vec<SweepPoint>> {
    validate_deltas(deltas)?;
    deltas
        .iter()
        .map(|&delta| {
            let report = esync_run(data, &ModelParams::new(delta)?, opts)?;
            Ok(SweepPoint {
                delta,
                clusters: report.labels.num_clusters(),
                iterations: report.iterations,
                converged: report.converged,
            })
        })
        .collect()
}

pub fn validate_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::invalid("sweep deltas must be positive"));
    }
    if deltas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("sweep deltas must be ascending"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(n: usize, seed: u64) -> StateVector {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)])
            .collect();
        StateVector::from_rows(&pts).unwrap()
    }

    #[test]
    fn tiny_delta_stops_at_once() {
        let s = StateVector::from_rows(&[[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]]).unwrap();
        let r = esync_run(&s, &ModelParams::new(0.5).unwrap(), &RunOptions::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert_eq!(r.final_state.coords(), s.coords());
        assert_eq!(r.labels.num_clusters(), 3);
    }

    #[test]
    fn huge_delta_gives_one_cluster() {
        let s = rows(40, 1);
        let r = esync_run(&s, &ModelParams::new(1e3).unwrap(), &RunOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 2);
        assert_eq!(r.labels.num_clusters(), 1);
    }

    #[test]
    fn snapshots_cover_every_step() {
        let s = rows(30, 2);
        let opts = RunOptions {
            record_snapshots: true,
            ..RunOptions::default()
        };
        let r = esync_run(&s, &ModelParams::new(15.0).unwrap(), &opts).unwrap();
        assert_eq!(r.snapshots.len(), r.iterations + 1);
        assert_eq!(r.snapshots[0].coords(), s.coords());
        assert_eq!(r.snapshots.last().unwrap(), &r.final_state);
        assert_eq!(r.counters.passes, r.iterations + 1);
    }

    #[test]
    fn runs_are_deterministic() {
        let s = rows(80, 3);
        let p = ModelParams::new(12.0).unwrap();
        for model in [
            Model::LinearVicsek,
            Model::ExtensiveKuramoto,
            Model::OriginalVicsek,
        ] {
            let opts = RunOptions::with_model(model);
            assert_eq!(
                esync_run(&s, &p, &opts).unwrap(),
                esync_run(&s, &p, &opts).unwrap()
            );
        }
    }

    #[test]
    fn capped_runs_report_non_convergence() {
        let s = rows(60, 4);
        let opts = RunOptions {
            model: Model::ExtensiveKuramoto,
            max_iters: 3,
            ..RunOptions::default()
        };
        let r = esync_run(&s, &ModelParams::new(18.0).unwrap(), &opts).unwrap();
        assert_eq!(r.iterations, 3);
        assert!(!r.converged);
    }

    #[test]
    fn sweep_endpoints() {
        let s = rows(25, 5);
        let pts = delta_sweep(&s, &[0.01, 1e3], &RunOptions::default()).unwrap();
        assert_eq!(pts[0].clusters, 25);
        assert_eq!(pts[1].clusters, 1);
        assert!(delta_sweep(&s, &[2.0, 1.0], &RunOptions::default()).is_err());
        assert!(delta_sweep(&s, &[0.0], &RunOptions::default()).is_err());
    }

    #[test]
    fn options_are_checked() {
        let s = rows(5, 6);
        let p = ModelParams::new(1.0).unwrap();
        let bad = RunOptions {
            max_iters: 0,
            ..RunOptions::default()
        };
        assert!(esync_run(&s, &p, &bad).is_err());
    }
}
