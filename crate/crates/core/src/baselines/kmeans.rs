use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ClusterLabels;
use crate::model::StateVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub labels: ClusterLabels,
    /// Sum of squared distances to the assigned center after each
    /// assignment step.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansResult {
    pub fn cost(&self) -> f64 {
        self.cost_history.last().copied().unwrap_or(0.0)
    }
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd iterations from `k` distinct input points chosen by `seed`. A
/// center left without points moves onto the point farthest from its own
/// center.
pub fn kmeans(data: &StateVector, k: usize, seed: u64, max_iters: usize) -> Result<KMeansResult> {
    let n = data.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must lie in 1..={n}, got {k}")));
    }
    if max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    let dim = data.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = sample(&mut rng, n, k).into_vec();
    picks.sort_unstable();
    let mut centers: Vec<Vec<f64>> = picks.iter().map(|&i| data.row(i).to_vec()).collect();

    let mut assign = vec![usize::MAX; n];
    let mut cost_history = Vec::new();
    let mut iterations = 0;
    loop {
        let mut changed = false;
        let mut cost = 0.0;
        for i in 0..n {
            let p = data.row(i);
            let (best, d) = centers
                .iter()
                .enumerate()
                .map(|(c, ctr)| (c, sq(p, ctr)))
                .fold(
                    (0, f64::INFINITY),
                    |acc, x| if x.1 < acc.1 { x } else { acc },
                );
            changed |= assign[i] != best;
            assign[i] = best;
            cost += d;
        }
        cost_history.push(cost);
        if !changed || iterations == max_iters {
            break;
        }
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, &a) in assign.iter().enumerate() {
            counts[a] += 1;
            sums[a]
                .iter_mut()
                .zip(data.row(i))
                .for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq(data.row(a), &centers[assign[a]])
                            .total_cmp(&sq(data.row(b), &centers[assign[b]]))
                    })
                    .unwrap();
                centers[c] = data.row(far).to_vec();
                counts[assign[far]] -= 1;
                counts[c] = 1;
                assign[far] = c;
            }
        }
    }
    Ok(KMeansResult {
        labels: ClusterLabels::from_assignment(&assign, data),
        cost_history,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(seed: u64) -> (StateVector, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = [
            (50.0, 50.0),
            (300.0, 80.0),
            (150.0, 400.0),
            (500.0, 500.0),
            (520.0, 150.0),
        ];
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for (k, c) in centers.iter().enumerate() {
            for _ in 0..40 {
                rows.push([
                    c.0 + rng.gen_range(-20.0..20.0),
                    c.1 + rng.gen_range(-20.0..20.0),
                ]);
                truth.push(k);
            }
        }
        (StateVector::from_rows(&rows).unwrap(), truth)
    }

    #[test]
    fn one_cluster_is_the_mean() {
        let (s, _) = blobs(1);
        let r = kmeans(&s, 1, 0, 20).unwrap();
        assert!(r.labels.labels.iter().all(|&l| l == 0));
        let mean = s.mean();
        for (a, b) in r.labels.centers[0].iter().zip(&mean) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn one_cluster_per_point() {
        let s = StateVector::from_rows(&[[0.0, 0.0], [3.0, 1.0], [7.0, 7.0], [1.0, 9.0]]).unwrap();
        let r = kmeans(&s, 4, 3, 20).unwrap();
        assert_eq!(r.labels.num_clusters(), 4);
        assert_eq!(r.cost(), 0.0);
    }

    #[test]
    fn best_of_ten_recovers_blobs() {
        let (s, truth) = blobs(2);
        let best = (0..10)
            .map(|seed| kmeans(&s, 5, seed, 100).unwrap())
            .min_by(|a, b| a.cost().total_cmp(&b.cost()))
            .unwrap();
        assert!(crate::metrics::match_labels(&best.labels.labels, &truth));
    }

    #[test]
    fn cost_never_rises() {
        for seed in 0..10 {
            let (s, _) = blobs(seed);
            let r = kmeans(&s, 7, seed, 100).unwrap();
            assert!(r.cost_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
            assert_eq!(r, kmeans(&s, 7, seed, 100).unwrap());
        }
    }

    #[test]
    fn bad_k_is_rejected() {
        let (s, _) = blobs(0);
        assert!(kmeans(&s, 0, 0, 10).is_err());
        assert!(kmeans(&s, s.len() + 1, 0, 10).is_err());
    }
}
