//! Gaussian kernel density estimation in log space, with bandwidth selection
//! by k-fold cross-validated grid search.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("no training points")]
    Empty,
    #[error("bandwidth must be positive and finite, got {0}")]
    BadBandwidth(f64),
    #[error("dimension mismatch: model has {expected}, query has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{points} points cannot be split into {folds} folds")]
    TooFewPoints { points: usize, folds: usize },
    #[error("invalid bandwidth grid: {0}")]
    BadGrid(String),
}

/// Held-out log-density substituted when a value is not finite.
const CV_FLOOR: f64 = -1e10;

/// Maximum number of points used to estimate the median pairwise distance.
const MEDIAN_SUBSAMPLE: usize = 500;

/// Log of the sum of exponentials, stable for arbitrarily negative inputs.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.into_iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A Gaussian KDE over a fixed set of training points.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    coords: Vec<f64>,
    dim: usize,
    bandwidth: f64,
    log_norm: f64,
}

impl Kde {
    /// Fit a KDE on row-major `coords` of dimension `dim`.
    pub fn fit(coords: Vec<f64>, dim: usize, bandwidth: f64) -> Result<Self, DensityError> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(DensityError::Empty);
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(DensityError::BadBandwidth(bandwidth));
        }
        let m = (coords.len() / dim) as f64;
        let d = dim as f64;
        let log_norm = -m.ln() - 0.5 * d * (2.0 * PI).ln() - d * bandwidth.ln();
        Ok(Self {
            coords,
            dim,
            bandwidth,
            log_norm,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    /// Log of the estimated density at `x`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64, DensityError> {
        if x.len() != self.dim {
            return Err(DensityError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.log_density_unchecked(x))
    }

    /// Log density without the dimension check; `x.len()` must equal `self.dim()`.
    pub fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        let scale = -0.5 / (self.bandwidth * self.bandwidth);
        let exps = self.points().map(move |p| squared_distance(x, p) * scale);
        self.log_norm + log_sum_exp(exps)
    }

    pub fn density(&self, x: &[f64]) -> Result<f64, DensityError> {
        self.log_density(x).map(f64::exp)
    }
}

/// How the candidate bandwidths for a cluster are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthGrid {
    /// A fixed, strictly increasing list of bandwidths.
    Explicit(Vec<f64>),
    /// `count` log-spaced values in `[lo * s, hi * s]`, where `s` is the
    /// median pairwise distance of the cluster.
    ScaleRelative { count: usize, lo: f64, hi: f64 },
}

impl Default for BandwidthGrid {
    fn default() -> Self {
        BandwidthGrid::ScaleRelative {
            count: 20,
            lo: 0.01,
            hi: 10.0,
        }
    }
}

impl BandwidthGrid {
    /// Concrete grid for a point set; `None` when the scale is degenerate.
    pub fn resolve(&self, coords: &[f64], dim: usize) -> Option<Vec<f64>> {
        match self {
            BandwidthGrid::Explicit(v) => Some(v.clone()),
            BandwidthGrid::ScaleRelative { count, lo, hi } => {
                let s = median_pairwise_distance(coords, dim);
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                Some(log_space(lo * s, hi * s, *count))
            }
        }
    }
}

/// Bandwidth search settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthSearch {
    pub grid: BandwidthGrid,
    pub folds: usize,
    pub seed: u64,
}

impl Default for BandwidthSearch {
    fn default() -> Self {
        Self {
            grid: BandwidthGrid::default(),
            folds: 5,
            seed: 0,
        }
    }
}

/// `count` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        hi
                    } else {
                        (a + step * i as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Median Euclidean distance over all pairs of an evenly strided subsample of at most 500 points.
pub fn median_pairwise_distance(coords: &[f64], dim: usize) -> f64 {
    let n = coords.len() / dim;
    if n < 2 {
        return 0.0;
    }
    let idx: Vec<usize> = if n <= MEDIAN_SUBSAMPLE {
        (0..n).collect()
    } else {
        (0..MEDIAN_SUBSAMPLE).map(|i| i * n / MEDIAN_SUBSAMPLE).collect()
    };
    let mut dists = Vec::with_capacity(idx.len() * (idx.len() - 1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        let p = &coords[i * dim..(i + 1) * dim];
        for &j in &idx[a + 1..] {
            dists.push(squared_distance(p, &coords[j * dim..(j + 1) * dim]).sqrt());
        }
    }
    let mid = dists.len() / 2;
    let (_, m, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if dists.len() % 2 == 1 {
        upper
    } else {
        let lower = dists[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Scott-style rule `sigma * m^(-1/(d+4))`, with `sigma` the mean per-dimension
/// standard deviation. Returns 1.0 when all points coincide.
pub fn fallback_bandwidth(coords: &[f64], dim: usize) -> f64 {
    let m = coords.len() / dim;
    if m == 0 {
        return 1.0;
    }
    let mut sigma = 0.0;
    for j in 0..dim {
        let col = coords.iter().skip(j).step_by(dim);
        let mean = col.clone().sum::<f64>() / m as f64;
        let var = col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
        sigma += var.sqrt();
    }
    sigma /= dim as f64;
    if !(sigma > 0.0) {
        return 1.0;
    }
    sigma * (m as f64).powf(-1.0 / (dim as f64 + 4.0))
}

/// Mean held-out total log-likelihood per grid value.
///
/// Folds come from a seeded shuffle; point `shuffled[i]` goes to fold `i % folds`.
pub fn cv_scores(coords: &[f64], dim: usize, grid: &[f64], folds: usize, seed: u64) -> Result<Vec<f64>, DensityError> {
    let m = coords.len() / dim;
    if folds < 2 || m < folds {
        return Err(DensityError::TooFewPoints { points: m, folds });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0usize; m];
    for (i, &p) in order.iter().enumerate() {
        fold_of[p] = i % folds;
    }

    let d = dim as f64;
    let mut totals = vec![0.0; grid.len()];
    let mut sq = Vec::with_capacity(m);
    for fold in 0..folds {
        let train: Vec<usize> = (0..m).filter(|&i| fold_of[i] != fold).collect();
        let log_m = (train.len() as f64).ln();
        let mut fold_sum = vec![0.0; grid.len()];
        for held in (0..m).filter(|&i| fold_of[i] == fold) {
            let x = &coords[held * dim..(held + 1) * dim];
            sq.clear();
            sq.extend(
                train
                    .iter()
                    .map(|&t| squared_distance(x, &coords[t * dim..(t + 1) * dim])),
            );
            for (g, &h) in grid.iter().enumerate() {
                let scale = -0.5 / (h * h);
                let log_norm = -log_m - 0.5 * d * (2.0 * PI).ln() - d * h.ln();
                let ll = log_norm + log_sum_exp(sq.iter().map(|s| s * scale));
                fold_sum[g] += if ll.is_finite() { ll } else { CV_FLOOR };
            }
        }
        for (t, f) in totals.iter_mut().zip(fold_sum) {
            *t += f;
        }
    }
    Ok(totals.into_iter().map(|t| t / folds as f64).collect())
}

/// Pick the grid value with the best cross-validated likelihood; ties go to the larger bandwidth.
pub fn select_bandwidth(
    coords: &[f64],
    dim: usize,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64, DensityError> {
    validate_grid(grid)?;
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let scores = cv_scores(coords, dim, grid, folds, seed)?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s >= scores[best] {
            best = i;
        }
    }
    Ok(grid[best])
}

fn validate_grid(grid: &[f64]) -> Result<(), DensityError> {
    if grid.is_empty() {
        return Err(DensityError::BadGrid("empty".into()));
    }
    if grid.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(DensityError::BadGrid("all values must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DensityError::BadGrid("values must be strictly increasing".into()));
    }
    Ok(())
}

/// How a cluster's bandwidth was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandwidthSource {
    CrossValidated,
    Fallback,
}

/// Bandwidth for one cluster: CV grid search when there are enough points and
/// the scale is non-degenerate, otherwise [`fallback_bandwidth`].
pub fn choose_bandwidth(
    coords: &[f64],
    dim: usize,
    search: &BandwidthSearch,
    seed: u64,
) -> Result<(f64, BandwidthSource), DensityError> {
    let m = coords.len() / dim;
    if m < search.folds.max(2) {
        return Ok((fallback_bandwidth(coords, dim), BandwidthSource::Fallback));
    }
    match search.grid.resolve(coords, dim) {
        Some(grid) => {
            let h = select_bandwidth(coords, dim, &grid, search.folds, seed)?;
            Ok((h, BandwidthSource::CrossValidated))
        }
        None => Ok((fallback_bandwidth(coords, dim), BandwidthSource::Fallback)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Direct product-form evaluation, independent of the log-space path.
    fn naive_density(coords: &[f64], dim: usize, h: f64, x: &[f64]) -> f64 {
        let m = coords.len() / dim;
        let norm = 1.0 / (m as f64 * (2.0 * PI).powf(dim as f64 / 2.0) * h.powi(dim as i32));
        let mut s = 0.0;
        for p in coords.chunks(dim) {
            let mut d2 = 0.0;
            for k in 0..dim {
                d2 += (x[k] - p[k]).powi(2);
            }
            s += (-d2 / (2.0 * h * h)).exp();
        }
        norm * s
    }

    #[test]
    fn single_kernel_at_center() {
        let kde = Kde::fit(vec![0.0], 1, 1.0).unwrap();
        assert_relative_eq!(kde.density(&[0.0]).unwrap(), 0.398942280401432_7, max_relative = 1e-12);
        assert_relative_eq!(kde.log_density(&[0.0]).unwrap(), -0.918938533204672_7, epsilon = 1e-12);
    }

    #[test]
    fn two_symmetric_kernels() {
        let kde = Kde::fit(vec![-1.0, 1.0], 1, 1.0).unwrap();
        assert_relative_eq!(kde.density(&[0.0]).unwrap(), 0.241970724519143_4, max_relative = 1e-12);
    }

    #[test]
    fn far_field_stays_finite() {
        let kde = Kde::fit(vec![0.0], 1, 1.0).unwrap();
        let v = kde.log_density(&[100.0]).unwrap();
        assert!(v.is_finite());
        assert_relative_eq!(v, -0.918938533204672_7 - 5000.0, epsilon = 1e-9);
    }

    #[test]
    fn matches_naive_sum_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let coords: Vec<f64> = (0..100).map(|_| rng.random_range(-3.0..3.0)).collect();
        let kde = Kde::fit(coords.clone(), 2, 0.7).unwrap();
        for _ in 0..10 {
            let x = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
            let direct = naive_density(&coords, 2, 0.7, &x);
            assert_relative_eq!(kde.density(&x).unwrap(), direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(Kde::fit(vec![], 1, 1.0).unwrap_err(), DensityError::Empty);
        assert!(matches!(
            Kde::fit(vec![0.0], 1, 0.0),
            Err(DensityError::BadBandwidth(_))
        ));
        assert!(matches!(
            Kde::fit(vec![0.0], 1, -1.0),
            Err(DensityError::BadBandwidth(_))
        ));
        let kde = Kde::fit(vec![0.0, 0.0], 2, 1.0).unwrap();
        assert!(matches!(
            kde.log_density(&[0.0]),
            Err(DensityError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn translation_equivariance() {
        let coords = vec![0.1, 0.4, -1.2, 0.3, 2.0, -0.7];
        let shift = [13.25, -7.5];
        let moved: Vec<f64> = coords
            .chunks(2)
            .flat_map(|p| [p[0] + shift[0], p[1] + shift[1]])
            .collect();
        let a = Kde::fit(coords, 2, 0.4).unwrap();
        let b = Kde::fit(moved, 2, 0.4).unwrap();
        let x = [0.5, 0.5];
        let y = [x[0] + shift[0], x[1] + shift[1]];
        assert!((a.log_density(&x).unwrap() - b.log_density(&y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn monotone_far_field_decay() {
        let kde = Kde::fit(vec![0.0, 0.0, 1.0, 0.5, -0.5, 1.0], 2, 0.3).unwrap();
        let mut prev = f64::INFINITY;
        for step in 0..50 {
            let t = 2.0 + step as f64;
            let v = kde.log_density(&[t, t]).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn fallback_rule() {
        assert_eq!(fallback_bandwidth(&[3.0, 4.0], 2), 1.0);
        assert_eq!(fallback_bandwidth(&[3.0, 4.0, 3.0, 4.0], 2), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coords: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        // oracle: sample SDs averaged, then the Scott factor
        let sd = |j: usize| {
            let col: Vec<f64> = coords.iter().skip(j).step_by(2).copied().collect();
            let mean = col.iter().sum::<f64>() / 100.0;
            (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 100.0).sqrt()
        };
        let expected = 0.5 * (sd(0) + sd(1)) * 100f64.powf(-1.0 / 6.0);
        assert_relative_eq!(fallback_bandwidth(&coords, 2), expected, max_relative = 1e-12);
        assert!((fallback_bandwidth(&coords, 2) - 0.464).abs() < 0.08);
    }

    #[test]
    fn cv_rejects_extreme_bandwidths() {
        let grid = [0.01, 0.1, 0.3, 1.0, 10.0];
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let coords: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
            let h = select_bandwidth(&coords, 1, &grid, 5, seed).unwrap();
            assert!([0.1, 0.3, 1.0].contains(&h), "seed {seed}: picked {h}");
        }
    }

    #[test]
    fn single_value_grid_skips_cv() {
        // two points with five folds would fail CV; a one-element grid never runs it
        assert_eq!(select_bandwidth(&[0.0, 1.0], 1, &[0.25], 5, 0).unwrap(), 0.25);
    }

    #[test]
    fn identical_points_pick_smallest_bandwidth() {
        // Held-out points sit exactly on the training points, so the likelihood
        // grows without bound as h shrinks and the smallest grid value wins.
        let coords = vec![2.0; 10];
        let h = select_bandwidth(&coords, 1, &[0.1, 1.0, 10.0], 5, 3).unwrap();
        assert_eq!(h, 0.1);
    }

    #[test]
    fn cv_is_seed_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let coords: Vec<f64> = (0..60).map(|_| StandardNormal.sample(&mut rng)).collect();
        let grid = log_space(0.05, 2.0, 8);
        assert_eq!(
            cv_scores(&coords, 1, &grid, 5, 1).unwrap(),
            cv_scores(&coords, 1, &grid, 5, 1).unwrap()
        );
    }

    #[test]
    fn too_few_points_for_folds() {
        assert!(matches!(
            select_bandwidth(&[0.0, 1.0, 2.0], 1, &[0.1, 1.0], 5, 0),
            Err(DensityError::TooFewPoints { points: 3, folds: 5 })
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(select_bandwidth(&[0.0; 10], 1, &[], 5, 0).is_err());
        assert!(select_bandwidth(&[0.0; 10], 1, &[1.0, 0.5], 5, 0).is_err());
        assert!(select_bandwidth(&[0.0; 10], 1, &[0.0, 0.5], 5, 0).is_err());
    }

    #[test]
    fn log_space_endpoints() {
        let g = log_space(0.01, 10.0, 20);
        assert_eq!(g.len(), 20);
        assert_relative_eq!(g[0], 0.01, max_relative = 1e-12);
        assert_eq!(g[19], 10.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn median_distance_small() {
        // pairs of {0, 1, 3}: 1, 3, 2 -> median 2
        assert_eq!(median_pairwise_distance(&[0.0, 1.0, 3.0], 1), 2.0);
        // pairs of {0, 1, 3, 7}: 1, 3, 7, 2, 6, 4 -> median (3 + 4) / 2
        assert_eq!(median_pairwise_distance(&[0.0, 1.0, 3.0, 7.0], 1), 3.5);
    }

    #[test]
    fn degenerate_scale_falls_back() {
        let search = BandwidthSearch::default();
        let (h, src) = choose_bandwidth(&[1.0; 12], 2, &search, 0).unwrap();
        assert_eq!((h, src), (1.0, BandwidthSource::Fallback));
        let (_, src) = choose_bandwidth(&[0.0, 1.0, 2.0], 1, &search, 0).unwrap();
        assert_eq!(src, BandwidthSource::Fallback);
    }
}
