//! Synthetic blob data and δ estimates derived from minimum spanning trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dist, StateVector};

/// Truth label given to noise points.
pub const NOISE: i32 = -1;

const PLACEMENT_ATTEMPTS: usize = 2_000;
const PLACEMENT_RESTARTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub num_clusters: usize,
    pub with_noise: bool,
    /// Radius of the ball every cluster is drawn from.
    pub semidiameter: f64,
    pub dim: usize,
    pub n: usize,
    /// Interval applied to every dimension.
    pub region: (f64, f64),
    pub noise_fraction: f64,
    pub min_center_gap: f64,
    pub seed: u64,
}

/// Named presets: (name, clusters, noise, semidiameter, dimension).
pub const PRESETS: [(&str, usize, bool, f64, usize); 12] = [
    ("ds1", 5, true, 40.0, 2),
    ("ds2", 5, false, 50.0, 2),
    ("ds3", 9, true, 30.0, 2),
    ("ds4", 9, false, 40.0, 2),
    ("ds5", 12, false, 30.0, 2),
    ("ds6", 12, false, 30.0, 4),
    ("ds7", 12, false, 30.0, 6),
    ("ds8", 12, false, 30.0, 8),
    ("ds9", 12, false, 30.0, 10),
    ("ds10", 12, false, 30.0, 12),
    ("ds11", 12, false, 30.0, 14),
    ("ds12", 12, false, 30.0, 16),
];

impl GenSpec {
    /// A spec with the default region, noise share and center gap.
    pub fn new(
        num_clusters: usize,
        with_noise: bool,
        semidiameter: f64,
        dim: usize,
        n: usize,
        seed: u64,
    ) -> Self {
        Self {
            num_clusters,
            with_noise,
            semidiameter,
            dim,
            n,
            region: (0.0, 600.0),
            noise_fraction: 0.1,
            min_center_gap: 2.0 * semidiameter + 40.0,
            seed,
        }
    }

    pub fn preset(name: &str, n: usize, seed: u64) -> Result<Self> {
        let key = name.to_ascii_lowercase();
        PRESETS
            .iter()
            .find(|p| p.0 == key)
            .map(|&(_, nc, noise, cs, d)| Self::new(nc, noise, cs, d, n, seed))
            .ok_or_else(|| Error::invalid(format!("unknown preset {name:?} (expected ds1..ds12)")))
    }

    pub fn noise_points(&self) -> usize {
        if self.with_noise {
            (self.noise_fraction * self.n as f64).floor() as usize
        } else {
            0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_clusters == 0 {
            return Err(Error::invalid("at least one cluster is required"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if !(self.semidiameter > 0.0) || !self.semidiameter.is_finite() {
            return Err(Error::invalid("semidiameter must be positive"));
        }
        let (lo, hi) = self.region;
        if !(lo.is_finite() && hi.is_finite()) || !(hi - lo > 2.0 * self.semidiameter) {
            return Err(Error::invalid(
                "region side must exceed twice the semidiameter",
            ));
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return Err(Error::invalid("noise fraction must lie in [0, 1)"));
        }
        if !(self.min_center_gap >= 0.0) {
            return Err(Error::invalid("center gap must be non-negative"));
        }
        if self.n - self.noise_points() < self.num_clusters {
            return Err(Error::invalid("too few points for the requested clusters"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataSet {
    pub points: StateVector,
    /// Cluster of every point, [`NOISE`] for noise.
    pub truth: Vec<i32>,
    pub centers: Vec<Vec<f64>>,
    pub spec: GenSpec,
}

impl LabeledDataSet {
    /// Indices of the non-noise points.
    pub fn clustered(&self) -> Vec<usize> {
        (0..self.truth.len())
            .filter(|&i| self.truth[i] != NOISE)
            .collect()
    }
}

pub fn generate_dataset(spec: &GenSpec) -> Result<LabeledDataSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = place_centers(spec, &mut rng)?;

    let noise = spec.noise_points();
    let clustered = spec.n - noise;
    let mut coords = Vec::with_capacity(spec.n * spec.dim);
    let mut truth = Vec::with_capacity(spec.n);
    for (k, center) in centers.iter().enumerate() {
        let size = clustered / spec.num_clusters + usize::from(k < clustered % spec.num_clusters);
        for _ in 0..size {
            coords.extend(ball_point(center, spec.semidiameter, &mut rng));
            truth.push(k as i32);
        }
    }
    let (lo, hi) = spec.region;
    for _ in 0..noise {
        coords.extend((0..spec.dim).map(|_| rng.gen_range(lo..hi)));
    }
    truth.resize(spec.n, NOISE);
    Ok(LabeledDataSet {
        points: StateVector::new(spec.dim, coords)?,
        truth,
        centers,
        spec: spec.clone(),
    })
}

// Centers stay a semidiameter away from the region walls so every ball fits.
fn place_centers(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let lo = spec.region.0 + spec.semidiameter;
    let hi = spec.region.1 - spec.semidiameter;
    for _ in 0..PLACEMENT_RESTARTS {
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(spec.num_clusters);
        'next: while centers.len() < spec.num_clusters {
            for _ in 0..PLACEMENT_ATTEMPTS {
                let c: Vec<f64> = (0..spec.dim).map(|_| rng.gen_range(lo..=hi)).collect();
                if centers.iter().all(|o| dist(o, &c) >= spec.min_center_gap) {
                    centers.push(c);
                    continue 'next;
                }
            }
            break;
        }
        if centers.len() == spec.num_clusters {
            return Ok(centers);
        }
    }
    Err(Error::InfeasibleSpec(format!(
        "could not place {} centers at gap {} in [{}, {}]^{}",
        spec.num_clusters, spec.min_center_gap, spec.region.0, spec.region.1, spec.dim
    )))
}

fn ball_point(center: &[f64], radius: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = center.len();
    loop {
        let dir: Vec<f64> = (0..d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            let r = radius * rng.gen::<f64>().powf(1.0 / d as f64);
            return center
                .iter()
                .zip(&dir)
                .map(|(c, u)| c + r * u / norm)
                .collect();
        }
    }
}

/// Edge weights of a minimum spanning tree of the complete Euclidean graph,
/// ascending.
pub fn mst_edge_weights(data: &StateVector) -> Result<Vec<f64>> {
    let n = data.len();
    if n < 2 {
        return Err(Error::invalid("a spanning tree needs at least two points"));
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut weights = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = dist(data.row(current), data.row(j));
            if w < best[j] {
                best[j] = w;
            }
            if best[j] < next_w || next == usize::MAX {
                next_w = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        weights.push(next_w);
        current = next;
    }
    weights.sort_by(f64::total_cmp);
    Ok(weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaBounds {
    /// Smallest pairwise distance; below it nothing ever moves.
    pub delta_min: f64,
    /// Longest spanning-tree edge; from here on everything can connect.
    pub e_max_mst: f64,
    /// Diameter of the data.
    pub max_pairwise: f64,
    /// Set when duplicate points push `delta_min` to zero.
    pub degenerate: bool,
}

pub fn delta_bounds(data: &StateVector) -> Result<DeltaBounds> {
    let weights = mst_edge_weights(data)?;
    let n = data.len();
    let mut max_pairwise = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            max_pairwise = max_pairwise.max(dist(data.row(i), data.row(j)));
        }
    }
    let delta_min = weights[0];
    Ok(DeltaBounds {
        delta_min,
        e_max_mst: weights[n - 2],
        max_pairwise,
        degenerate: delta_min == 0.0,
    })
}

/// The δ interval over which every truth cluster is internally connected
/// while no two clusters touch. `None` when the clusters are not separated
/// that well. With a single cluster the upper end is infinite.
pub fn property1_interval(data: &LabeledDataSet) -> Result<Option<(f64, f64)>> {
    separation_interval(&data.points, &data.truth)
}

/// [`property1_interval`] for arbitrary points and labels; negative labels
/// are ignored.
pub fn separation_interval(points: &StateVector, labels: &[i32]) -> Result<Option<(f64, f64)>> {
    if labels.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            actual: labels.len(),
        });
    }
    let mut groups: std::collections::BTreeMap<i32, Vec<usize>> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        if l >= 0 {
            groups.entry(l).or_default().push(i);
        }
    }
    if groups.is_empty() {
        return Err(Error::invalid("no labeled points"));
    }
    let mut lo = 0.0f64;
    for members in groups.values() {
        if members.len() > 1 {
            let weights = mst_edge_weights(&points.subset(members)?)?;
            lo = lo.max(*weights.last().unwrap());
        }
    }
    let groups: Vec<&Vec<usize>> = groups.values().collect();
    let mut hi = f64::INFINITY;
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            for &i in groups[a] {
                for &j in groups[b] {
                    hi = hi.min(dist(points.row(i), points.row(j)));
                }
            }
        }
    }
    Ok((lo < hi).then_some((lo, hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn line(xs: &[f64]) -> StateVector {
        StateVector::new(1, xs.to_vec()).unwrap()
    }

    fn random(n: usize, d: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        StateVector::new(d, (0..n * d).map(|_| rng.gen_range(0.0..100.0)).collect()).unwrap()
    }

    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }

    fn kruskal_total(s: &StateVector) -> f64 {
        let n = s.len();
        let mut edges: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let w: f64 = s
                    .row(i)
                    .iter()
                    .zip(s.row(j))
                    .map(|(a, b)| (a - b).powi(2))
                    .sum();
                edges.push((w.sqrt(), i, j));
            }
        }
        edges.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut p: Vec<usize> = (0..n).collect();
        let mut total = 0.0;
        for (w, i, j) in edges {
            let (a, b) = (find(&mut p, i), find(&mut p, j));
            if a != b {
                p[a] = b;
                total += w;
            }
        }
        total
    }

    // Every labeled tree on n vertices, decoded from its Prüfer sequence.
    fn brute_force_total(s: &StateVector) -> f64 {
        let n = s.len();
        let w = |i: usize, j: usize| -> f64 {
            s.row(i)
                .iter()
                .zip(s.row(j))
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let mut best = f64::INFINITY;
        let mut seq = vec![0usize; n - 2];
        loop {
            let mut degree = vec![1usize; n];
            seq.iter().for_each(|&v| degree[v] += 1);
            let mut total = 0.0;
            for &v in &seq {
                let leaf = (0..n).find(|&u| degree[u] == 1).unwrap();
                total += w(leaf, v);
                degree[leaf] -= 1;
                degree[v] -= 1;
            }
            let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
            total += w(rest[0], rest[1]);
            best = best.min(total);
            let mut k = 0;
            while k < seq.len() && seq[k] == n - 1 {
                seq[k] = 0;
                k += 1;
            }
            if k == seq.len() {
                return best;
            }
            seq[k] += 1;
        }
    }

    #[test]
    fn presets_follow_the_table() {
        let ds2 = GenSpec::preset("ds2", 400, 1).unwrap();
        assert_eq!(
            (ds2.num_clusters, ds2.with_noise, ds2.semidiameter, ds2.dim),
            (5, false, 50.0, 2)
        );
        let ds6 = GenSpec::preset("DS6", 400, 1).unwrap();
        assert_eq!(
            (ds6.num_clusters, ds6.with_noise, ds6.semidiameter, ds6.dim),
            (12, false, 30.0, 4)
        );
        assert_eq!(GenSpec::preset("ds8", 10, 0).unwrap().dim, 8);
        assert_eq!(ds2.min_center_gap, 140.0);
        assert!(GenSpec::preset("ds13", 10, 0).is_err());
    }

    #[test]
    fn generated_sets_respect_the_spec() {
        for name in ["ds1", "ds3", "ds5", "ds8"] {
            let spec = GenSpec::preset(name, 400, 11).unwrap();
            let set = generate_dataset(&spec).unwrap();
            assert_eq!(set.points.len(), 400);
            assert_eq!(
                set.truth.iter().filter(|&&l| l == NOISE).count(),
                spec.noise_points()
            );
            for (i, &l) in set.truth.iter().enumerate() {
                let p = set.points.row(i);
                assert!(p.iter().all(|x| (0.0..=600.0).contains(x)));
                if l >= 0 {
                    assert!(dist(p, &set.centers[l as usize]) <= spec.semidiameter + 1e-9);
                }
            }
            for a in 0..set.centers.len() {
                for b in a + 1..set.centers.len() {
                    assert!(dist(&set.centers[a], &set.centers[b]) >= spec.min_center_gap);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GenSpec::preset("ds1", 300, 5).unwrap();
        assert_eq!(
            generate_dataset(&spec).unwrap(),
            generate_dataset(&spec).unwrap()
        );
        let other = GenSpec {
            seed: 6,
            ..spec.clone()
        };
        assert_ne!(
            generate_dataset(&spec).unwrap().points,
            generate_dataset(&other).unwrap().points
        );
    }

    #[test]
    fn bad_specs_are_rejected() {
        let crowded = GenSpec::new(60, false, 50.0, 2, 600, 1);
        assert!(matches!(
            generate_dataset(&crowded),
            Err(Error::InfeasibleSpec(_))
        ));
        let empty = GenSpec::new(3, false, 30.0, 2, 0, 1);
        assert!(matches!(
            generate_dataset(&empty),
            Err(Error::InvalidInput(_))
        ));
        let tight = GenSpec::new(1, false, 300.0, 2, 10, 1);
        assert!(generate_dataset(&tight).is_err());
    }

    #[test]
    fn small_spanning_trees() {
        assert_eq!(
            mst_edge_weights(&line(&[0.0, 1.0, 10.0])).unwrap(),
            vec![1.0, 9.0]
        );
        assert!(mst_edge_weights(&line(&[0.0, 2.5, 5.0, 7.5, 10.0]))
            .unwrap()
            .iter()
            .all(|&w| w == 2.5));
        assert!(mst_edge_weights(&line(&[3.0])).is_err());
    }

    #[test]
    fn spanning_tree_matches_brute_force() {
        for seed in 0..6 {
            let s = random(7, 2, seed);
            let total: f64 = mst_edge_weights(&s).unwrap().iter().sum();
            assert!((total - brute_force_total(&s)).abs() < 1e-9);
        }
    }

    #[test]
    fn spanning_tree_matches_kruskal() {
        let s = random(60, 3, 9);
        let total: f64 = mst_edge_weights(&s).unwrap().iter().sum();
        assert!((total - kruskal_total(&s)).abs() < 1e-9);
    }

    #[test]
    fn bounds_of_small_sets() {
        let b = delta_bounds(&line(&[0.0, 1.0, 10.0])).unwrap();
        assert_eq!(
            (b.delta_min, b.e_max_mst, b.max_pairwise, b.degenerate),
            (1.0, 9.0, 10.0, false)
        );
        let pair = StateVector::from_rows(&[[0.0, 0.0], [7.0, 0.0]]).unwrap();
        let b = delta_bounds(&pair).unwrap();
        assert_eq!((b.delta_min, b.e_max_mst, b.max_pairwise), (7.0, 7.0, 7.0));
        let same = line(&[4.0, 4.0, 4.0]);
        let b = delta_bounds(&same).unwrap();
        assert_eq!(b.delta_min, 0.0);
        assert!(b.degenerate);
    }

    #[test]
    fn min_bound_is_closest_pair() {
        let s = random(50, 2, 3);
        let mut closest = f64::INFINITY;
        for i in 0..50 {
            for j in i + 1..50 {
                closest = closest.min(dist(s.row(i), s.row(j)));
            }
        }
        assert_eq!(delta_bounds(&s).unwrap().delta_min, closest);
    }

    #[test]
    fn separation_of_two_line_clusters() {
        let s = line(&[0.0, 1.0, 2.0, 10.0, 11.0]);
        assert_eq!(
            separation_interval(&s, &[0, 0, 0, 1, 1]).unwrap(),
            Some((1.0, 8.0))
        );
        let overlapping = line(&[0.0, 5.0, 2.0, 7.0]);
        assert_eq!(
            separation_interval(&overlapping, &[0, 0, 1, 1]).unwrap(),
            None
        );
        let single = line(&[0.0, 1.0, 50.0]);
        assert_eq!(
            separation_interval(&single, &[0, 0, NOISE]).unwrap(),
            Some((1.0, f64::INFINITY))
        );
    }

    proptest! {
        #[test]
        fn spanning_tree_weight_ignores_order_and_motion(
            pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 2..30),
            shift in (-100.0f64..100.0, -100.0f64..100.0),
            angle in 0.0f64..6.3,
        ) {
            let s = StateVector::from_rows(&pts.iter().map(|p| [p.0, p.1]).collect::<Vec<_>>()).unwrap();
            let (c, sn) = (angle.cos(), angle.sin());
            let moved: Vec<[f64; 2]> = pts
                .iter()
                .rev()
                .map(|p| [c * p.0 - sn * p.1 + shift.0, sn * p.0 + c * p.1 + shift.1])
                .collect();
            let m = StateVector::from_rows(&moved).unwrap();
            let a: f64 = mst_edge_weights(&s).unwrap().iter().sum();
            let b: f64 = mst_edge_weights(&m).unwrap().iter().sum();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        }
    }
}
