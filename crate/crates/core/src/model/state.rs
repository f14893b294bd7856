use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A borrowed view of one data object: its identity and current coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState<'a> {
    pub index: usize,
    pub coords: &'a [f64],
}

impl PointState<'_> {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Positions of all `n` points at one step of the dynamics.
///
/// Coordinates are stored row-major in a single buffer; point `i` occupies
/// `coords[i * dim..(i + 1) * dim]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    dim: usize,
    step: usize,
    coords: Vec<f64>,
}

impl StateVector {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not split into rows of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite coordinate at point {}",
                pos / dim
            )));
        }
        Ok(Self {
            dim,
            step: 0,
            coords,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::invalid("empty point list"))?;
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::new(dim, coords)
    }

    /// Builds the successor state; the step counter advances by one.
    pub(crate) fn successor(&self, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len(), self.coords.len());
        Self {
            dim: self.dim,
            step: self.step + 1,
            coords,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point(&self, i: usize) -> PointState<'_> {
        PointState {
            index: i,
            coords: self.row(i),
        }
    }

    pub fn points(&self) -> impl Iterator<Item = PointState<'_>> {
        self.coords
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(index, coords)| PointState { index, coords })
    }

    /// Rows selected by `indices`, in that order, as a fresh step-0 state.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.row(i));
        }
        Self::new(self.dim, coords)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for row in self.coords.chunks_exact(self.dim) {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
        let n = self.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// Number of bit-distinct point locations.
    pub fn distinct_locations(&self) -> usize {
        let mut seen = std::collections::HashSet::with_capacity(self.len());
        for row in self.coords.chunks_exact(self.dim) {
            let key: Vec<u64> = row.iter().map(|x| x.to_bits()).collect();
            seen.insert(key);
        }
        seen.len()
    }
}

/// Interaction radius and, for the original Vicsek rule, the step length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub delta: f64,
    pub v_dt: f64,
}

impl ModelParams {
    pub fn new(delta: f64) -> Result<Self> {
        Self::with_step(delta, 1.0)
    }

    pub fn with_step(delta: f64, v_dt: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if !(v_dt > 0.0 && v_dt.is_finite()) {
            return Err(Error::invalid(format!("v_dt must be positive, got {v_dt}")));
        }
        Ok(Self { delta, v_dt })
    }
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between two points of equal dimension.
pub fn euclidean_dis(a: &PointState<'_>, b: &PointState<'_>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(dist(a.coords, b.coords))
}

/// Indices `j != i` with `dis(X_j, X_i) <= delta`, ascending.
pub fn delta_neighbors(state: &StateVector, i: usize, delta: f64) -> Result<Vec<usize>> {
    if i >= state.len() {
        return Err(Error::invalid(format!(
            "point index {i} out of range for {} points",
            state.len()
        )));
    }
    let p = state.row(i);
    Ok((0..state.len())
        .filter(|&j| j != i && dist(p, state.row(j)) <= delta)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagorean_distance() {
        let s = StateVector::from_rows(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!(euclidean_dis(&s.point(0), &s.point(1)).unwrap(), 5.0);
        assert_eq!(euclidean_dis(&s.point(1), &s.point(1)).unwrap(), 0.0);
    }

    #[test]
    fn distance_matches_scalar_oracle_in_six_dims() {
        let a = [0.3, -1.7, 2.25, 8.0, -0.001, 4.5];
        let b = [1.1, 0.4, -3.5, 7.75, 2.0, -4.5];
        let mut sq = 0.0;
        for k in 0..6 {
            sq += (a[k] - b[k]) * (a[k] - b[k]);
        }
        let pa = PointState {
            index: 0,
            coords: &a,
        };
        let pb = PointState {
            index: 1,
            coords: &b,
        };
        let got = euclidean_dis(&pa, &pb).unwrap();
        assert!((got - sq.sqrt()).abs() < 1e-12);
        assert_eq!(got, euclidean_dis(&pb, &pa).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = [0.0, 1.0];
        let b = [0.0, 1.0, 2.0];
        let err = euclidean_dis(
            &PointState {
                index: 0,
                coords: &a,
            },
            &PointState {
                index: 1,
                coords: &b,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn one_dimensional_neighbors() {
        let s = StateVector::from_rows(&[[0.0], [10.0], [25.0]]).unwrap();
        assert_eq!(delta_neighbors(&s, 0, 12.0).unwrap(), vec![1]);
        assert_eq!(delta_neighbors(&s, 1, 12.0).unwrap(), vec![0]);
        assert!(delta_neighbors(&s, 2, 12.0).unwrap().is_empty());
        assert!(delta_neighbors(&s, 3, 12.0).is_err());
    }

    #[test]
    fn closed_ball_boundary() {
        let s = StateVector::from_rows(&[[0.0, 0.0], [6.0, 0.0]]).unwrap();
        assert_eq!(delta_neighbors(&s, 0, 6.0).unwrap(), vec![1]);
    }

    #[test]
    fn neighbor_extremes() {
        let s = StateVector::from_rows(&[[0.0, 0.0], [5.0, 1.0], [9.0, -3.0], [2.0, 7.0]]).unwrap();
        for i in 0..4 {
            assert!(delta_neighbors(&s, i, 0.5).unwrap().is_empty());
            let all: Vec<usize> = (0..4).filter(|&j| j != i).collect();
            assert_eq!(delta_neighbors(&s, i, 100.0).unwrap(), all);
        }
    }

    #[test]
    fn rejects_bad_states() {
        assert!(StateVector::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(StateVector::new(1, vec![f64::NAN]).is_err());
        assert!(StateVector::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(ModelParams::new(0.0).is_err());
        assert!(ModelParams::with_step(1.0, -1.0).is_err());
    }
}
