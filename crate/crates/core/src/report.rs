//! The JSON document written for every run, whatever the algorithm.

use serde::{Deserialize, Serialize};

use crate::baselines::{DbscanLabels, KMeansResult};
use crate::error::Result;
use crate::esync::RunReport;
use crate::metrics::ClusterLabels;
use crate::model::StateVector;
use crate::ssync::SSyncReport;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub m: Option<usize>,
    pub grid_r: Option<Vec<f64>>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEntry {
    pub label: usize,
    pub size: usize,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterEntry {
    pub t: usize,
    pub ave_len: f64,
    pub r_c: f64,
    /// Distinct locations for the plain engines, active cores for the
    /// shrinking ones.
    pub active: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportCounters {
    pub distance_evals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub algo: String,
    pub model: Option<String>,
    pub params: ReportParams,
    pub iterations: usize,
    pub converged: bool,
    pub clusters: Vec<ClusterEntry>,
    pub per_iter: Vec<IterEntry>,
    pub counters: ReportCounters,
    pub flags: Vec<String>,
    /// Cluster of every input point, `-1` for noise.
    pub labels: Vec<i64>,
    /// Active-core series of the shrinking engines.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub active_counts: Vec<usize>,
}

fn entries(labels: &ClusterLabels) -> Vec<ClusterEntry> {
    labels
        .sizes()
        .into_iter()
        .zip(&labels.centers)
        .enumerate()
        .map(|(label, (size, center))| ClusterEntry {
            label,
            size,
            center: center.clone(),
        })
        .collect()
}

impl Report {
    fn base(algo: &str, params: ReportParams) -> Self {
        Self {
            algo: algo.to_string(),
            model: None,
            params,
            iterations: 0,
            converged: true,
            clusters: Vec::new(),
            per_iter: Vec::new(),
            counters: ReportCounters::default(),
            flags: Vec::new(),
            labels: Vec::new(),
            active_counts: Vec::new(),
        }
    }

    pub fn from_run(algo: &str, run: &RunReport, params: ReportParams) -> Self {
        let mut flags = run.flags.clone();
        if !run.degenerate.is_empty() {
            flags.push(format!("degenerate-heading:{}", run.degenerate.len()));
        }
        Self {
            model: Some(run.model.short_name().to_string()),
            iterations: run.iterations,
            converged: run.converged,
            clusters: entries(&run.labels),
            per_iter: std::iter::once(&run.initial)
                .chain(&run.per_iter)
                .map(|s| IterEntry {
                    t: s.step,
                    ave_len: s.ave_len,
                    r_c: s.r_c,
                    active: s.distinct_locations,
                })
                .collect(),
            counters: ReportCounters {
                distance_evals: run.counters.distance_evals,
            },
            flags,
            labels: run.labels.labels.iter().map(|&l| l as i64).collect(),
            ..Self::base(algo, params)
        }
    }

    pub fn from_ssync(algo: &str, run: &SSyncReport, params: ReportParams) -> Self {
        Self {
            model: Some("lv".to_string()),
            iterations: run.iterations,
            converged: run.converged,
            clusters: entries(&run.labels),
            per_iter: run
                .per_iter
                .iter()
                .map(|s| IterEntry {
                    t: s.step,
                    ave_len: s.ave_len,
                    r_c: s.r_c,
                    active: s.active,
                })
                .collect(),
            counters: ReportCounters {
                distance_evals: run.distance_evals,
            },
            labels: run.labels.labels.iter().map(|&l| l as i64).collect(),
            active_counts: run.active_counts.clone(),
            ..Self::base(algo, params)
        }
    }

    pub fn from_dbscan(run: &DbscanLabels, data: &StateVector, params: ReportParams) -> Self {
        let dim = data.dim();
        let mut sums = vec![vec![0.0; dim]; run.num_clusters];
        let mut sizes = vec![0usize; run.num_clusters];
        for (i, &l) in run.labels.iter().enumerate() {
            if l >= 0 {
                sizes[l as usize] += 1;
                sums[l as usize]
                    .iter_mut()
                    .zip(data.row(i))
                    .for_each(|(s, x)| *s += x);
            }
        }
        let clusters = sums
            .into_iter()
            .zip(sizes)
            .enumerate()
            .map(|(label, (sum, size))| ClusterEntry {
                label,
                size,
                center: sum.into_iter().map(|s| s / size as f64).collect(),
            })
            .collect();
        let noise = run.noise_count();
        Self {
            clusters,
            flags: if noise > 0 {
                vec![format!("noise:{noise}")]
            } else {
                Vec::new()
            },
            labels: run.labels.iter().map(|&l| l as i64).collect(),
            ..Self::base("dbscan", params)
        }
    }

    pub fn from_kmeans(run: &KMeansResult, params: ReportParams) -> Self {
        Self {
            iterations: run.iterations,
            clusters: entries(&run.labels),
            labels: run.labels.labels.iter().map(|&l| l as i64).collect(),
            ..Self::base("kmeans", params)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
