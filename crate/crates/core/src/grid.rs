//! Grid-cell index over point positions.
//!
//! The region is cut into axis-aligned cells of side `r_k` per dimension.
//! Each non-empty cell keeps its members in an ordered set so points can be
//! moved between cells in logarithmic time as the dynamics relocate them.
//! Cell ranges are half-open, `[low, low + r_k)`, so every position belongs
//! to exactly one cell.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esync::{run_engine, RunOptions, RunReport};
use crate::model::{dist, Model, ModelParams, Search, StateVector};

/// Upper bound on the number of cells a grid may address.
pub const DEFAULT_CELL_CAP: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub cell_lengths: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(origin: Vec<f64>, cell_lengths: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let dim = origin.len();
        if dim == 0 || cell_lengths.len() != dim || counts.len() != dim {
            return Err(Error::invalid(
                "grid origin, cell lengths and counts must share one non-zero dimension",
            ));
        }
        if let Some(r) = cell_lengths.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::invalid(format!(
                "cell length must be positive, got {r}"
            )));
        }
        if counts.contains(&0) {
            return Err(Error::invalid("every dimension needs at least one cell"));
        }
        Ok(Self {
            origin,
            cell_lengths,
            counts,
        })
    }

    /// Smallest grid anchored at the bounding-box minimum that covers `state`.
    pub fn covering(state: &StateVector, cell_lengths: &[f64]) -> Result<Self> {
        let dim = state.dim();
        if cell_lengths.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: cell_lengths.len(),
            });
        }
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in state.points() {
            for k in 0..dim {
                lo[k] = lo[k].min(p.coords[k]);
                hi[k] = hi[k].max(p.coords[k]);
            }
        }
        let mut counts = Vec::with_capacity(dim);
        for k in 0..dim {
            let r = cell_lengths[k];
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!(
                    "cell length must be positive, got {r}"
                )));
            }
            let span = ((hi[k] - lo[k]) / r).floor();
            if span >= u32::MAX as f64 {
                return Err(Error::GridCapExceeded {
                    cells: u128::MAX,
                    cap: DEFAULT_CELL_CAP,
                });
            }
            counts.push(span as usize + 1);
        }
        Self::new(lo, cell_lengths.to_vec(), counts)
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    /// Number of addressable cells, saturating.
    pub fn total_cells(&self) -> u128 {
        self.counts
            .iter()
            .fold(1u128, |acc, &c| acc.saturating_mul(c as u128))
    }

    /// Integer cell coordinate of a position, or `None` outside the region.
    pub fn coordinate_of(&self, p: &[f64]) -> Option<Vec<usize>> {
        let mut coord = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let c = ((p[k] - self.origin[k]) / self.cell_lengths[k]).floor();
            if !(c >= 0.0 && c < self.counts[k] as f64) {
                return None;
            }
            coord.push(c as usize);
        }
        Some(coord)
    }

    fn label_of(&self, coord: &[usize]) -> u64 {
        coord
            .iter()
            .zip(&self.counts)
            .fold(0u64, |acc, (&c, &n)| acc * n as u64 + c as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub label: u64,
    pub coordinate: Vec<usize>,
    pub center: Vec<f64>,
    /// Half-open `[low, high)` interval per dimension.
    pub range: Vec<(f64, f64)>,
    pub members: BTreeSet<usize>,
}

impl GridCell {
    fn new(spec: &GridSpec, coordinate: Vec<usize>) -> Self {
        let range: Vec<(f64, f64)> = (0..spec.dim())
            .map(|k| {
                let low = spec.origin[k] + coordinate[k] as f64 * spec.cell_lengths[k];
                (low, low + spec.cell_lengths[k])
            })
            .collect();
        Self {
            label: spec.label_of(&coordinate),
            center: range.iter().map(|(a, b)| 0.5 * (a + b)).collect(),
            coordinate,
            range,
            members: BTreeSet::new(),
        }
    }

    pub fn point_count(&self) -> usize {
        self.members.len()
    }

    fn gap_sq(&self, p: &[f64]) -> f64 {
        self.range
            .iter()
            .zip(p)
            .map(|(&(lo, hi), &x)| {
                let g = (lo - x).max(x - hi).max(0.0);
                g * g
            })
            .sum()
    }
}

/// Result of one counted grid query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridQuery {
    pub neighbors: Vec<usize>,
    pub distance_evals: u64,
    pub cells_scanned: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    spec: GridSpec,
    cells: BTreeMap<u64, GridCell>,
}

/// Assigns every point of `state` to its cell. Fails with
/// [`Error::GridCapExceeded`] when the spec addresses more than `cap` cells.
pub fn build_grid(state: &StateVector, spec: GridSpec, cap: u64) -> Result<Grid> {
    if spec.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            actual: spec.dim(),
        });
    }
    let cells = spec.total_cells();
    if cells > cap as u128 {
        return Err(Error::GridCapExceeded { cells, cap });
    }
    let mut grid = Grid {
        spec,
        cells: BTreeMap::new(),
    };
    for p in state.points() {
        grid.insert(p.index, p.coords)?;
    }
    Ok(grid)
}

impl Grid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cells(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.values()
    }

    pub fn cell_of(&self, p: &[f64]) -> Option<&GridCell> {
        let coord = self.spec.coordinate_of(p)?;
        self.cells.get(&self.spec.label_of(&coord))
    }

    pub fn total_points(&self) -> usize {
        self.cells.values().map(GridCell::point_count).sum()
    }

    fn insert(&mut self, i: usize, p: &[f64]) -> Result<()> {
        let coord = self
            .spec
            .coordinate_of(p)
            .ok_or_else(|| Error::invalid(format!("point {i} lies outside the grid region")))?;
        let label = self.spec.label_of(&coord);
        self.cells
            .entry(label)
            .or_insert_with(|| GridCell::new(&self.spec, coord))
            .members
            .insert(i);
        Ok(())
    }

    /// Moves point `i` from the cell of `old_pos` to the cell of `new_pos`.
    /// Returns whether the membership changed.
    pub fn relocate(&mut self, i: usize, old_pos: &[f64], new_pos: &[f64]) -> Result<bool> {
        let old = self
            .spec
            .coordinate_of(old_pos)
            .map(|c| self.spec.label_of(&c))
            .ok_or_else(|| Error::IndexCorruption(format!("old position of {i} is off-grid")))?;
        let new_coord = self
            .spec
            .coordinate_of(new_pos)
            .ok_or_else(|| Error::invalid(format!("point {i} moved outside the grid region")))?;
        let new = self.spec.label_of(&new_coord);
        let cell = self
            .cells
            .get_mut(&old)
            .filter(|c| c.members.contains(&i))
            .ok_or_else(|| Error::IndexCorruption(format!("point {i} missing from cell {old}")))?;
        if old == new {
            return Ok(false);
        }
        cell.members.remove(&i);
        if cell.members.is_empty() {
            self.cells.remove(&old);
        }
        self.cells
            .entry(new)
            .or_insert_with(|| GridCell::new(&self.spec, new_coord))
            .members
            .insert(i);
        Ok(true)
    }

    /// Pushes the members of every occupied cell whose range comes within
    /// `delta` of `p`. Returns the number of cells whose members were taken.
    pub(crate) fn candidates_into(&self, p: &[f64], delta: f64, out: &mut Vec<usize>) -> usize {
        let dim = self.spec.dim();
        let scale = p.iter().fold(delta, |m, x| m.max(x.abs()));
        let reach = delta + 1e-9 * (1.0 + scale);
        let reach_sq = reach * reach;

        // Cell window, padded by one cell against rounding at the edges.
        let mut lo = Vec::with_capacity(dim);
        let mut hi = Vec::with_capacity(dim);
        for k in 0..dim {
            let r = self.spec.cell_lengths[k];
            let o = self.spec.origin[k];
            let a = ((p[k] - delta - o) / r).floor() - 1.0;
            let b = ((p[k] + delta - o) / r).floor() + 1.0;
            let max = (self.spec.counts[k] - 1) as f64;
            if b < 0.0 || a > max {
                return 0;
            }
            lo.push(a.max(0.0) as usize);
            hi.push(b.min(max) as usize);
        }
        let window: u128 = lo
            .iter()
            .zip(&hi)
            .fold(1u128, |acc, (a, b)| acc.saturating_mul((b - a + 1) as u128));

        let mut scanned = 0;
        let mut take = |cell: &GridCell, out: &mut Vec<usize>| {
            if cell.gap_sq(p) <= reach_sq {
                out.extend(cell.members.iter().copied());
                scanned += 1;
            }
        };
        if window > self.cells.len() as u128 {
            for cell in self.cells.values() {
                let inside = cell
                    .coordinate
                    .iter()
                    .enumerate()
                    .all(|(k, &c)| c >= lo[k] && c <= hi[k]);
                if inside {
                    take(cell, out);
                }
            }
        } else {
            let mut coord = lo.clone();
            'odometer: loop {
                if let Some(cell) = self.cells.get(&self.spec.label_of(&coord)) {
                    take(cell, out);
                }
                for k in (0..dim).rev() {
                    if coord[k] < hi[k] {
                        coord[k] += 1;
                        continue 'odometer;
                    }
                    coord[k] = lo[k];
                }
                break;
            }
        }
        scanned
    }

    /// Counted δ-neighbor query for point `i` of `state`.
    pub fn query(&self, state: &StateVector, i: usize, delta: f64) -> GridQuery {
        let p = state.row(i);
        let mut candidates = Vec::new();
        let cells_scanned = self.candidates_into(p, delta, &mut candidates);
        candidates.sort_unstable();
        let mut distance_evals = 0;
        let neighbors = candidates
            .into_iter()
            .filter(|&j| j != i)
            .filter(|&j| {
                distance_evals += 1;
                dist(p, state.row(j)) <= delta
            })
            .collect();
        GridQuery {
            neighbors,
            distance_evals,
            cells_scanned,
        }
    }
}

/// δ-neighbors of point `i` found through the grid, ascending.
pub fn grid_delta_neighbors(
    grid: &Grid,
    state: &StateVector,
    i: usize,
    delta: f64,
) -> Result<Vec<usize>> {
    if i >= state.len() {
        return Err(Error::invalid(format!(
            "point index {i} out of range for {} points",
            state.len()
        )));
    }
    Ok(grid.query(state, i, delta).neighbors)
}

/// Linearized Vicsek clustering with grid-accelerated neighbor search.
///
/// Produces the same states, metrics and labels as
/// [`esync_run`](crate::esync::esync_run) with the linear model; only the
/// distance-evaluation counters differ. When the grid would exceed
/// [`DEFAULT_CELL_CAP`] cells the run falls back to exhaustive search and
/// records a `grid-fallback` flag.
pub fn iesync_run(
    data: &StateVector,
    params: &ModelParams,
    opts: &RunOptions,
    cell_lengths: &[f64],
) -> Result<RunReport> {
    iesync_run_with_cap(data, params, opts, cell_lengths, DEFAULT_CELL_CAP)
}

pub fn iesync_run_with_cap(
    data: &StateVector,
    params: &ModelParams,
    opts: &RunOptions,
    cell_lengths: &[f64],
    cap: u64,
) -> Result<RunReport> {
    let opts = RunOptions {
        model: Model::LinearVicsek,
        ..opts.clone()
    };
    let spec = GridSpec::covering(data, cell_lengths)?;
    let mut grid = match build_grid(data, spec, cap) {
        Ok(grid) => grid,
        Err(Error::GridCapExceeded { .. }) => {
            let mut report = run_engine(data, params, &opts, None)?;
            report.flags.push("grid-fallback".to_string());
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    run_engine(data, params, &opts, Some(&mut grid))
}

impl Grid {
    pub(crate) fn search(&self) -> Search<'_> {
        Search::Grid(self)
    }
}
