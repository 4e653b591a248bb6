use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::profile::{ClusterProfile, ProfileSet};
use super::PairScope;
use crate::data::Dataset;

/// Whether `y`'s log-density under the cluster's model falls inside its territory.
pub fn territory_contains(profile: &ClusterProfile, y: &[f64]) -> bool {
    profile.territory.contains(profile.model.log_density_unchecked(y))
}

/// Fraction of points inside at least two territories, and the per-point flags.
pub fn ambiguous_index(set: &ProfileSet) -> (f64, Vec<bool>) {
    let n = set.n_points();
    let k = set.n_clusters();
    let flags: Vec<bool> = (0..n)
        .map(|i| (0..k).filter(|&q| set.in_territory(q, i)).nth(1).is_some())
        .collect();
    let count = flags.iter().filter(|f| **f).count();
    let value = if n == 0 { 0.0 } else { count as f64 / n as f64 };
    (value, flags)
}

/// Pairwise ambiguous index `A_ij` for every `i < j`, in row-major pair order.
pub fn ambiguous_pairwise(set: &ProfileSet, scope: PairScope) -> Vec<f64> {
    let k = set.n_clusters();
    let profiles = set.profiles();
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let both = |p: usize| set.in_territory(i, p) && set.in_territory(j, p);
            let a = match scope {
                PairScope::Pair => {
                    let pts = profiles[i].members.iter().chain(&profiles[j].members);
                    let total = profiles[i].len() + profiles[j].len();
                    pts.filter(|&&p| both(p)).count() as f64 / total as f64
                }
                PairScope::Whole => {
                    let n = set.n_points();
                    (0..n).filter(|&p| both(p)).count() as f64 / n as f64
                }
            };
            out.push(a);
        }
    }
    out
}

/// Proportion of cluster pairs whose pairwise ambiguous index is positive.
pub fn ambiguous_v1(set: &ProfileSet, scope: PairScope) -> f64 {
    let pairs = ambiguous_pairwise(set, scope);
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().filter(|a| **a > 0.0).count() as f64 / pairs.len() as f64
}

/// Mean of the positive pairwise ambiguous indices, or 0 when none are positive.
pub fn ambiguous_v2(set: &ProfileSet, scope: PairScope) -> f64 {
    let positive: Vec<f64> = ambiguous_pairwise(set, scope)
        .into_iter()
        .filter(|a| *a > 0.0)
        .collect();
    if positive.is_empty() {
        return 0.0;
    }
    positive.iter().sum::<f64>() / positive.len() as f64
}

/// Monte Carlo estimate of the disputed share of territory area.
///
/// Samples uniformly from the data's bounding box, expanded by 10% of the
/// extent on every side (by the largest bandwidth where the extent is zero).
/// Returns the number of samples inside two or more territories over the
/// number inside at least one, or 0 when no sample lands in any territory.
pub fn ambiguous_v3(data: &Dataset, set: &ProfileSet, mc_samples: usize, seed: u64) -> f64 {
    let k = set.n_clusters();
    if k < 2 || mc_samples == 0 {
        return 0.0;
    }
    let dim = data.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in data.points() {
        for t in 0..dim {
            lo[t] = lo[t].min(p[t]);
            hi[t] = hi[t].max(p[t]);
        }
    }
    let max_h = set.profiles().iter().map(|p| p.model.bandwidth()).fold(0.0, f64::max);
    for t in 0..dim {
        let pad = if hi[t] > lo[t] { 0.1 * (hi[t] - lo[t]) } else { max_h };
        lo[t] -= pad;
        hi[t] += pad;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = vec![0.0; dim];
    let mut disputed = 0usize;
    let mut claimed = 0usize;
    for _ in 0..mc_samples {
        for t in 0..dim {
            sample[t] = rng.random_range(lo[t]..=hi[t]);
        }
        let hits = set
            .profiles()
            .iter()
            .filter(|p| territory_contains(p, &sample))
            .take(2)
            .count();
        if hits >= 1 {
            claimed += 1;
        }
        if hits >= 2 {
            disputed += 1;
        }
    }
    if claimed == 0 {
        0.0
    } else {
        disputed as f64 / claimed as f64
    }
}

#[cfg(test)]
mod tests {
    use super::super::{ClusterDensities, KdiParams};
    use super::*;
    use crate::data::make_blobs;
    use crate::density::{BandwidthSearch, Kde};
    use crate::partition::Partition;

    fn fitted(data: &Dataset, labels: &[usize], params: &KdiParams) -> ProfileSet {
        let p = Partition::new(labels, "t").unwrap();
        ClusterDensities::fit(data, &p, &BandwidthSearch::default())
            .unwrap()
            .profiles(params)
    }

    fn two_blobs() -> Dataset {
        make_blobs(30, &[vec![0.0, 0.0], vec![40.0, 0.0]], 0.5, 4).unwrap()
    }

    #[test]
    fn single_cluster_has_no_ambiguity() {
        let data = make_blobs(20, &[vec![0.0, 0.0]], 1.0, 1).unwrap();
        let set = fitted(&data, &[0; 20], &KdiParams::default());
        assert_eq!(ambiguous_index(&set).0, 0.0);
        assert_eq!(ambiguous_v1(&set, PairScope::Pair), 0.0);
        assert_eq!(ambiguous_v2(&set, PairScope::Pair), 0.0);
        assert_eq!(ambiguous_v3(&data, &set, 1000, 0), 0.0);
    }

    #[test]
    fn separated_blobs_are_unambiguous() {
        let data = two_blobs();
        let set = fitted(&data, data.labels().unwrap(), &KdiParams::default());
        assert_eq!(ambiguous_index(&set).0, 0.0);
        assert_eq!(ambiguous_v1(&set, PairScope::Pair), 0.0);
        assert_eq!(ambiguous_v2(&set, PairScope::Whole), 0.0);
        assert_eq!(ambiguous_v3(&data, &set, 20_000, 3), 0.0);
    }

    #[test]
    fn interleaved_halves_are_mostly_ambiguous() {
        let data = make_blobs(100, &[vec![0.0, 0.0]], 1.0, 8).unwrap();
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let set = fitted(&data, &labels, &KdiParams::default());
        let (ia, flags) = ambiguous_index(&set);
        assert!(ia > 0.8, "I_a = {ia}");
        assert_eq!(flags.iter().filter(|f| **f).count() as f64 / 100.0, ia);
    }

    #[test]
    fn far_point_is_outside_every_territory() {
        let data = two_blobs();
        let set = fitted(&data, data.labels().unwrap(), &KdiParams::default());
        for prof in set.profiles() {
            assert!(!territory_contains(prof, &[1e6, 1e6]));
            let lowest = prof.members[prof
                .log_likelihoods
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0];
            assert!(territory_contains(prof, data.point(lowest)));
        }
    }

    #[test]
    fn ring_center_is_too_dense_for_territory() {
        // A ring of points with a wide kernel peaks in the middle, above every member.
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 / 40.0 * std::f64::consts::TAU;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let data = Dataset::from_rows("ring", &rows, None).unwrap();
        let model = Kde::fit(data.coords().to_vec(), 2, 0.8).unwrap();
        let set = ClusterDensities::from_models(&data, vec![(0..40).collect()], vec![model]).profiles(&KdiParams {
            alpha2: 0.0,
            beta2: 0.0,
            ..Default::default()
        });
        let prof = &set.profiles()[0];
        assert!(prof.model.log_density_unchecked(&[0.0, 0.0]) > prof.territory.hi);
        assert!(!territory_contains(prof, &[0.0, 0.0]));
    }

    #[test]
    fn identical_twin_clusters_fully_disputed() {
        let data = make_blobs(30, &[vec![0.0, 0.0]], 1.0, 2).unwrap();
        let model = Kde::fit(data.coords().to_vec(), 2, 0.5).unwrap();
        let all: Vec<usize> = (0..30).collect();
        let set = ClusterDensities::from_models(&data, vec![all.clone(), all], vec![model.clone(), model])
            .profiles(&KdiParams::default());
        assert_eq!(ambiguous_v3(&data, &set, 5000, 1), 1.0);
    }

    #[test]
    fn one_overlapping_pair_of_three() {
        // blobs A and B overlap, C is far away
        let data = make_blobs(30, &[vec![0.0, 0.0], vec![1.0, 0.0], vec![60.0, 0.0]], 1.0, 5).unwrap();
        let set = fitted(&data, data.labels().unwrap(), &KdiParams::default());
        let pairs = ambiguous_pairwise(&set, PairScope::Pair);
        assert!(pairs[0] > 0.0);
        assert_eq!(&pairs[1..], &[0.0, 0.0]);
        assert!((ambiguous_v1(&set, PairScope::Pair) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(ambiguous_v2(&set, PairScope::Pair), pairs[0]);
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let data = make_blobs(30, &[vec![0.0, 0.0], vec![1.5, 0.0]], 1.0, 5).unwrap();
        let set = fitted(&data, data.labels().unwrap(), &KdiParams::default());
        let a = ambiguous_v3(&data, &set, 3000, 9);
        assert_eq!(a, ambiguous_v3(&data, &set, 3000, 9));
        assert!(a > 0.0 && a <= 1.0);
    }
}
