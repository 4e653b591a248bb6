use super::profile::ProfileSet;
use super::BoundaryScope;

/// Mean prevalence of boundary points: `sum_q N_q / (K * n)`, where `N_q`
/// counts points whose log-density under cluster `q` lies in
/// `[min G_q, min G_q + rho * spread_q]`.
///
/// The band is recomputed from `rho` so one profile set serves any band width.
pub fn boundary_index(set: &ProfileSet, rho: f64, scope: BoundaryScope) -> f64 {
    let k = set.n_clusters();
    let n = set.n_points();
    if k == 0 || n == 0 {
        return 0.0;
    }
    let mut total = 0usize;
    for (q, prof) in set.profiles().iter().enumerate() {
        let lo = prof.min_log_likelihood();
        let hi = lo + rho * prof.spread;
        let in_band = |i: usize| {
            let g = set.log_density(q, i);
            lo <= g && g <= hi
        };
        total += match scope {
            BoundaryScope::AllPoints => (0..n).filter(|&i| in_band(i)).count(),
            BoundaryScope::MembersOnly => prof.members.iter().filter(|&&i| in_band(i)).count(),
        };
    }
    total as f64 / (k * n) as f64
}

#[cfg(test)]
mod tests {
    use super::super::{ClusterDensities, KdiParams};
    use super::*;
    use crate::data::{make_blobs, Dataset};
    use crate::density::{BandwidthSearch, Kde};
    use crate::partition::Partition;

    fn fitted(data: &Dataset) -> ProfileSet {
        let p = Partition::new(data.labels().unwrap(), "ref").unwrap();
        ClusterDensities::fit(data, &p, &BandwidthSearch::default())
            .unwrap()
            .profiles(&KdiParams::default())
    }

    #[test]
    fn zero_width_band_holds_only_the_minimum() {
        let data = make_blobs(20, &[vec![0.0, 0.0], vec![50.0, 0.0]], 1.0, 2).unwrap();
        let set = fitted(&data);
        for scope in [BoundaryScope::AllPoints, BoundaryScope::MembersOnly] {
            assert_eq!(boundary_index(&set, 0.0, scope), 1.0 / 40.0);
        }
    }

    #[test]
    fn identical_points_fill_the_band() {
        let data = Dataset::from_rows("t", &vec![vec![1.0]; 5], None).unwrap();
        let model = Kde::fit(data.coords().to_vec(), 1, 1.0).unwrap();
        let set =
            ClusterDensities::from_models(&data, vec![(0..5).collect()], vec![model]).profiles(&KdiParams::default());
        assert_eq!(set.profiles()[0].spread, 0.0);
        assert_eq!(boundary_index(&set, 0.5, BoundaryScope::AllPoints), 1.0);
    }

    #[test]
    fn counts_non_members_unless_restricted() {
        // two overlapping clusters: some points of one sit in the other's low band
        let data = make_blobs(30, &[vec![0.0, 0.0], vec![2.0, 0.0]], 1.0, 4).unwrap();
        let set = fitted(&data);
        let all = boundary_index(&set, 0.5, BoundaryScope::AllPoints);
        let own = boundary_index(&set, 0.5, BoundaryScope::MembersOnly);
        assert!(all >= own);
        assert!((0.0..=1.0).contains(&all));

        let mut expected = 0usize;
        for (q, p) in set.profiles().iter().enumerate() {
            let lo = p.min_log_likelihood();
            expected += (0..60)
                .filter(|&i| {
                    let g = set.log_density(q, i);
                    g >= lo && g <= lo + 0.5 * p.spread
                })
                .count();
        }
        assert_eq!(all, expected as f64 / 120.0);
    }
}
