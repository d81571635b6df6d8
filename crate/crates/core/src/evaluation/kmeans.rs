//! Lloyd's k-means, used as the distance-based baseline.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clustering::argmin;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    /// Within-cluster sum of squared distances after each assignment step.
    pub inertia_history: Vec<f64>,
    pub converged: bool,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        self.inertia_history.last().copied().unwrap_or(0.0)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Seeds centroids with `k` distinct random samples, then alternates assignment and
/// mean updates until assignments stop changing or `max_iters` is reached.
///
/// A cluster that loses all its points keeps its previous centroid.
pub fn kmeans_baseline(data: &Dataset, k: usize, seed: u64, max_iters: usize) -> Result<KMeansFit> {
    let x = data.features();
    let n = x.rows();
    if k < 2 {
        return Err(Error::input(format!("k-means needs k >= 2, got {k}")));
    }
    if k > n {
        return Err(Error::input(format!("k = {k} exceeds the {n} samples")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = sample(&mut rng, n, k).into_vec();
    picks.sort_unstable();
    let mut centroids = x.select_rows(&picks);

    let mut assignments: Vec<usize> = Vec::new();
    let mut inertia_history = Vec::new();
    let mut converged = false;
    let mut distances = vec![0.0; k];

    for _ in 0..max_iters.max(1) {
        let mut inertia = 0.0;
        let next: Vec<usize> = x
            .iter_rows()
            .map(|row| {
                for (c, d) in distances.iter_mut().enumerate() {
                    *d = squared_distance(row, centroids.row(c));
                }
                let best = argmin(&distances);
                inertia += distances[best];
                best
            })
            .collect();
        inertia_history.push(inertia);
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;

        let d = x.cols();
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (row, &c) in x.iter_rows().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums.row_mut(c).iter_mut().zip(row) {
                *s += v;
            }
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let inv = 1.0 / count as f64;
                for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
    }

    Ok(KMeansFit {
        assignments,
        centroids,
        inertia_history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_blobs;
    use crate::evaluation::{purity, tabulate};

    #[test]
    fn separated_blobs_are_recovered() {
        let data = make_blobs(&[vec![0.0, 0.0], vec![5.0, 5.0]], 50, 0.5, 1).unwrap();
        let fit = kmeans_baseline(&data, 2, 3, 100).unwrap();
        let p = purity(&tabulate(&fit.assignments, data.labels().unwrap()).unwrap()).unwrap();
        assert!(p >= 0.95, "{p}");
        assert!(fit.converged);
    }

    #[test]
    fn one_cluster_per_point() {
        let data = make_blobs(&[vec![0.0], vec![3.0]], 4, 1.0, 9).unwrap();
        let fit = kmeans_baseline(&data, data.len(), 0, 10).unwrap();
        let p = purity(&tabulate(&fit.assignments, data.labels().unwrap()).unwrap()).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn duplicate_rows_share_a_cluster() {
        let rows = vec![vec![0.0, 1.0], vec![4.0, 4.0], vec![0.0, 1.0], vec![4.1, 3.9], vec![0.2, 0.8]];
        let data = Dataset::new(Matrix::from_rows(&rows), None).unwrap();
        let fit = kmeans_baseline(&data, 2, 5, 50).unwrap();
        assert_eq!(fit.assignments[0], fit.assignments[2]);
    }

    #[test]
    fn inertia_never_increases() {
        let data = make_blobs(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 2.0]], 30, 0.8, 2).unwrap();
        for seed in 0..10 {
            let fit = kmeans_baseline(&data, 3, seed, 100).unwrap();
            for w in fit.inertia_history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{w:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_k() {
        let data = make_blobs(&[vec![0.0]], 3, 1.0, 0).unwrap();
        assert!(kmeans_baseline(&data, 4, 0, 10).is_err());
        assert!(kmeans_baseline(&data, 1, 0, 10).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let data = make_blobs(&[vec![0.0, 0.0], vec![1.0, 1.0]], 20, 0.7, 6).unwrap();
        assert_eq!(
            kmeans_baseline(&data, 2, 11, 50).unwrap(),
            kmeans_baseline(&data, 2, 11, 50).unwrap()
        );
    }
}
