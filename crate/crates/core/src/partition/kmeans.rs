use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sq_dist, Partition, PartitionError};
use crate::data::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    /// Raw (non-canonical) assignments; may leave some of the k centers unused.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares.
    pub wcss: f64,
}

/// Lloyd's algorithm from k-means++ seeds; the best of `config.restarts` runs by WCSS.
pub fn kmeans_fit(data: &Dataset, k: usize, seed: u64, config: KMeansConfig) -> Result<KMeansFit, PartitionError> {
    let n = data.len();
    if k == 0 || k > n {
        return Err(PartitionError::BadClusterCount { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..config.restarts.max(1) {
        let centers = plus_plus_init(data, k, &mut rng);
        let fit = lloyd(data, centers, config.max_iter);
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

pub fn kmeans(data: &Dataset, k: usize, seed: u64) -> Result<Partition, PartitionError> {
    let fit = kmeans_fit(data, k, seed, KMeansConfig::default())?;
    Partition::new(&fit.labels, format!("kmeans_k{k}"))
}

pub(crate) fn plus_plus_init(data: &Dataset, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(data.point(rng.random_range(0..n)).to_vec());
    let mut d2: Vec<f64> = data.points().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = data.point(pick).to_vec();
        for (dist, p) in d2.iter_mut().zip(data.points()) {
            *dist = dist.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn lloyd(data: &Dataset, mut centers: Vec<Vec<f64>>, max_iter: usize) -> KMeansFit {
    let n = data.len();
    let dim = data.dim();
    let k = centers.len();
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];

    for _ in 0..max_iter {
        let mut changed = false;
        for (i, p) in data.points().enumerate() {
            let (j, d) = nearest(p, &centers);
            if labels[i] != j {
                labels[i] = j;
                changed = true;
            }
            dists[i] = d;
        }
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in data.points().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                for (c, s) in centers[j].iter_mut().zip(&sums[j]) {
                    *c = s / counts[j] as f64;
                }
                continue;
            }
            // Empty cluster: move its center onto the point farthest from its
            // own center, and take that point over.
            let (far, far_d) =
                dists.iter().enumerate().fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc },
                );
            if far_d > 0.0 {
                centers[j] = data.point(far).to_vec();
                dists[far] = 0.0;
            }
        }
    }

    let mut wcss = 0.0;
    for (p, &l) in data.points().zip(&labels) {
        wcss += sq_dist(p, &centers[l]);
    }
    KMeansFit {
        labels,
        centroids: centers,
        wcss,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_blobs;
    use crate::indices::adjusted_rand_index;

    #[test]
    fn recovers_separated_blobs() {
        let centers = vec![vec![0.0, 0.0], vec![20.0, 0.0], vec![0.0, 20.0], vec![20.0, 20.0]];
        let data = make_blobs(25, &centers, 0.5, 1).unwrap();
        let p = kmeans(&data, 4, 3).unwrap();
        let reference = Partition::new(data.labels().unwrap(), "ref").unwrap();
        assert_eq!(adjusted_rand_index(&p, &reference).unwrap(), 1.0);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let data = Dataset::from_rows("t", &[vec![0.0], vec![1.0], vec![5.0], vec![9.0]], None).unwrap();
        let fit = kmeans_fit(&data, 4, 0, KMeansConfig::default()).unwrap();
        assert_eq!(fit.wcss, 0.0);
        assert_eq!(Partition::new(&fit.labels, "").unwrap().k(), 4);
    }

    #[test]
    fn coincident_points_collapse_to_one_cluster() {
        let data = Dataset::from_rows("t", &vec![vec![1.0, 1.0]; 5], None).unwrap();
        let p = kmeans(&data, 2, 0).unwrap();
        assert_eq!(p.k(), 1);
        assert_eq!(p.labels(), &[0, 0, 0, 0, 0]);
    }

    #[test]
    fn rejects_k_above_n() {
        let data = Dataset::from_rows("t", &[vec![0.0], vec![1.0]], None).unwrap();
        assert!(matches!(
            kmeans(&data, 3, 0),
            Err(PartitionError::BadClusterCount { k: 3, n: 2 })
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let data = make_blobs(30, &[vec![0.0, 0.0], vec![3.0, 0.0], vec![1.5, 2.5]], 1.0, 2).unwrap();
        assert_eq!(kmeans(&data, 5, 9).unwrap(), kmeans(&data, 5, 9).unwrap());
    }
}
