use super::profile::ProfileSet;
use super::{Center, DispersionOptions, Metric};

fn finish(per_cluster: Vec<f64>, n_total: usize) -> (f64, Vec<f64>) {
    let s_omega: f64 = per_cluster.iter().sum();
    let value = if n_total == 0 {
        0.0
    } else {
        (1.0 - s_omega / n_total as f64).clamp(0.0, 1.0)
    };
    (value, per_cluster)
}

/// `1 - S / n`, where each cluster contributes the sum of its member
/// likelihoods divided by their maximum, and clusters smaller than
/// `min_cluster_size` contribute 0.
pub fn similarity_index(set: &ProfileSet, n_total: usize, min_cluster_size: usize) -> (f64, Vec<f64>) {
    let per_cluster = set
        .profiles()
        .iter()
        .map(|p| {
            if p.len() < min_cluster_size {
                return 0.0;
            }
            let max = p.likelihoods.iter().copied().fold(0.0, f64::max);
            if max > 0.0 {
                p.likelihoods.iter().map(|l| l / max).sum()
            } else {
                0.0
            }
        })
        .collect();
    finish(per_cluster, n_total)
}

/// Like [`similarity_index`] but with min-max normalized likelihoods.
/// A cluster whose likelihoods are all equal contributes 1 per member.
pub fn similarity_v1(set: &ProfileSet, n_total: usize, min_cluster_size: usize) -> (f64, Vec<f64>) {
    let per_cluster = set
        .profiles()
        .iter()
        .map(|p| {
            if p.len() < min_cluster_size {
                return 0.0;
            }
            let min = p.likelihoods.iter().copied().fold(f64::INFINITY, f64::min);
            let max = p.likelihoods.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max > min {
                p.likelihoods.iter().map(|l| (l - min) / (max - min)).sum()
            } else {
                p.len() as f64
            }
        })
        .collect();
    finish(per_cluster, n_total)
}

/// Like [`similarity_index`] but normalized by the largest member likelihood
/// over all clusters.
pub fn similarity_v2(set: &ProfileSet, n_total: usize, min_cluster_size: usize) -> (f64, Vec<f64>) {
    let global_max = set
        .profiles()
        .iter()
        .flat_map(|p| p.likelihoods.iter().copied())
        .fold(0.0, f64::max);
    let per_cluster = set
        .profiles()
        .iter()
        .map(|p| {
            if p.len() < min_cluster_size || !(global_max > 0.0) {
                return 0.0;
            }
            p.likelihoods.iter().map(|l| l / global_max).sum()
        })
        .collect();
    finish(per_cluster, n_total)
}

/// Mean distance of `values` from their mean or median.
///
/// With `normalize`, the distances are min-max scaled first (all-equal
/// distances scale to 0), which keeps the result in [0, 1].
pub fn cluster_dispersion(values: &[f64], center: Center, metric: Metric, normalize: bool) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let c = match center {
        Center::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Center::Median => {
            let mut v = values.to_vec();
            v.sort_by(f64::total_cmp);
            let mid = v.len() / 2;
            if v.len() % 2 == 1 {
                v[mid]
            } else {
                0.5 * (v[mid - 1] + v[mid])
            }
        }
    };
    let mut dists: Vec<f64> = values
        .iter()
        .map(|v| match metric {
            Metric::Abs => (v - c).abs(),
            Metric::Squared => (v - c) * (v - c),
        })
        .collect();
    if normalize {
        let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
        let max = dists.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max > min {
            dists.iter_mut().for_each(|d| *d = (*d - min) / (max - min));
        } else {
            dists.iter_mut().for_each(|d| *d = 0.0);
        }
    }
    dists.iter().sum::<f64>() / dists.len() as f64
}

/// Dispersion-based similarity: each cluster of at least `min_cluster_size`
/// members contributes `n_q * (1 - D_q)`, where `D_q` is its dispersion
/// (squashed as `D / (1 + D)` when not normalized), and the index is `1 - S / n`.
pub fn similarity_v3(
    set: &ProfileSet,
    n_total: usize,
    min_cluster_size: usize,
    options: DispersionOptions,
) -> (f64, Vec<f64>) {
    let per_cluster = set
        .profiles()
        .iter()
        .map(|p| {
            if p.len() < min_cluster_size {
                return 0.0;
            }
            let values = if options.use_likelihood {
                &p.likelihoods
            } else {
                &p.log_likelihoods
            };
            let d = cluster_dispersion(values, options.center, options.metric, options.normalize);
            let d = if options.normalize { d } else { d / (1.0 + d) };
            p.len() as f64 * (1.0 - d)
        })
        .collect();
    finish(per_cluster, n_total)
}

#[cfg(test)]
mod tests {
    use super::super::{ClusterDensities, KdiParams};
    use super::*;
    use crate::data::{make_blobs, Dataset};
    use crate::density::{BandwidthSearch, Kde};
    use crate::partition::Partition;

    fn fitted(data: &Dataset, labels: &[usize]) -> ProfileSet {
        let p = Partition::new(labels, "t").unwrap();
        ClusterDensities::fit(data, &p, &BandwidthSearch::default())
            .unwrap()
            .profiles(&KdiParams::default())
    }

    /// Equilateral triangle: every member has the same likelihood.
    fn triangle() -> (Dataset, ProfileSet) {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]];
        let data = Dataset::from_rows("tri", &rows, None).unwrap();
        let model = Kde::fit(data.coords().to_vec(), 2, 0.5).unwrap();
        let set =
            ClusterDensities::from_models(&data, vec![vec![0, 1, 2]], vec![model]).profiles(&KdiParams::default());
        (data, set)
    }

    #[test]
    fn small_clusters_contribute_zero() {
        let data = Dataset::from_rows("t", &[vec![0.0], vec![1.0], vec![9.0], vec![10.0], vec![11.0]], None).unwrap();
        let set = fitted(&data, &[0, 0, 1, 1, 1]);
        let (_, s) = similarity_index(&set, 5, 3);
        assert_eq!(s[0], 0.0);
        assert!(s[1] > 0.0);
        assert_eq!(similarity_v1(&set, 5, 3).1[0], 0.0);
        assert_eq!(similarity_v2(&set, 5, 3).1[0], 0.0);
        assert_eq!(similarity_v3(&set, 5, 3, DispersionOptions::default()).1[0], 0.0);
    }

    #[test]
    fn symmetric_cluster_is_maximally_similar() {
        let (_, set) = triangle();
        let (is, s) = similarity_index(&set, 3, 3);
        assert!((s[0] - 3.0).abs() < 1e-12);
        assert!(is.abs() < 1e-12);
    }

    #[test]
    fn min_max_degenerate_counts_as_one() {
        let rows = vec![vec![2.0, 2.0]; 4];
        let data = Dataset::from_rows("t", &rows, None).unwrap();
        let model = Kde::fit(data.coords().to_vec(), 2, 1.0).unwrap();
        let set =
            ClusterDensities::from_models(&data, vec![vec![0, 1, 2, 3]], vec![model]).profiles(&KdiParams::default());
        let (is, s) = similarity_v1(&set, 4, 3);
        assert_eq!(s, vec![4.0]);
        assert_eq!(is, 0.0);
    }

    #[test]
    fn outlier_raises_similarity_index() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let mut rows: Vec<Vec<f64>> = (0..100)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        // Fixed bandwidth: cross-validation would widen the kernel to cover the outlier.
        let fixed = |data: &Dataset| {
            let model = Kde::fit(data.coords().to_vec(), 2, 0.1).unwrap();
            ClusterDensities::from_models(data, vec![(0..data.len()).collect()], vec![model])
                .profiles(&KdiParams::default())
        };
        let base = fixed(&Dataset::from_rows("u", &rows, None).unwrap());
        rows.push(vec![8.0, 8.0]);
        let noisy = fixed(&Dataset::from_rows("o", &rows, None).unwrap());
        assert!(similarity_index(&noisy, 101, 3).0 > similarity_index(&base, 100, 3).0);
    }

    #[test]
    fn v2_equals_main_for_one_cluster() {
        let data = make_blobs(40, &[vec![0.0, 0.0]], 1.0, 3).unwrap();
        let set = fitted(&data, &vec![0; 40]);
        assert_eq!(similarity_v2(&set, 40, 3), similarity_index(&set, 40, 3));
    }

    #[test]
    fn v2_penalizes_sparse_cluster() {
        let data = crate::data::make_blobs_with_sigmas(50, &[vec![0.0, 0.0], vec![30.0, 0.0]], &[0.3, 3.0], 7).unwrap();
        let set = fitted(&data, data.labels().unwrap());
        let (main, main_s) = similarity_index(&set, 100, 3);
        let (v2, v2_s) = similarity_v2(&set, 100, 3);
        assert!(v2 > main);
        // the sparse cluster loses far more under the global maximum
        assert!(main_s[1] - v2_s[1] > main_s[0] - v2_s[0]);
    }

    #[test]
    fn dispersion_hand_values() {
        assert_eq!(cluster_dispersion(&[0.0, 2.0], Center::Mean, Metric::Abs, false), 1.0);
        assert_eq!(
            cluster_dispersion(&[0.0, 2.0], Center::Mean, Metric::Squared, false),
            1.0
        );
        assert_eq!(
            cluster_dispersion(&[3.0, 3.0, 3.0], Center::Median, Metric::Abs, false),
            0.0
        );
        // median 1, distances {1, 0, 4}
        assert_eq!(
            cluster_dispersion(&[0.0, 1.0, 5.0], Center::Median, Metric::Abs, false),
            5.0 / 3.0
        );
        // normalized distances {0.25, 0, 1}
        assert_eq!(
            cluster_dispersion(&[0.0, 1.0, 5.0], Center::Median, Metric::Abs, true),
            1.25 / 3.0
        );
    }

    #[test]
    fn v3_identical_members_score_zero() {
        let data = Dataset::from_rows("t", &vec![vec![-1.0, 4.0]; 5], None).unwrap();
        let set = fitted(&data, &[0; 5]);
        for normalize in [true, false] {
            let opts = DispersionOptions {
                normalize,
                ..Default::default()
            };
            assert_eq!(similarity_v3(&set, 5, 3, opts), (0.0, vec![5.0]));
        }
    }
}
