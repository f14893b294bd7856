use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dist, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    pub eps: f64,
    /// Neighborhood size, the point itself included, that makes a core point.
    pub min_pts: usize,
}

impl DbscanParams {
    pub fn new(eps: f64) -> Result<Self> {
        let p = Self { eps, min_pts: 4 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::invalid("eps must be positive"));
        }
        if self.min_pts == 0 {
            return Err(Error::invalid("min_pts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbscanLabels {
    /// Cluster per point, `-1` for noise.
    pub labels: Vec<i32>,
    pub num_clusters: usize,
    pub core: Vec<bool>,
}

impl DbscanLabels {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l < 0).count()
    }
}

/// Density clustering. Clusters are grown from core points in ascending
/// index order, so a border point reachable from two clusters joins the one
/// seeded first.
pub fn dbscan(data: &StateVector, params: &DbscanParams) -> Result<DbscanLabels> {
    params.validate()?;
    let n = data.len();
    let neighborhoods: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| dist(data.row(i), data.row(j)) <= params.eps)
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighborhoods
        .iter()
        .map(|nb| nb.len() >= params.min_pts)
        .collect();

    let mut labels = vec![-1i32; n];
    let mut clusters = 0;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if labels[seed] >= 0 || !core[seed] {
            continue;
        }
        let id = clusters as i32;
        clusters += 1;
        labels[seed] = id;
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for &q in &neighborhoods[p] {
                if labels[q] < 0 {
                    labels[q] = id;
                    if core[q] {
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    Ok(DbscanLabels {
        labels,
        num_clusters: clusters,
        core,
    })
}
