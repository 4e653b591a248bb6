//! Classical internal validity indices (Calinski-Harabasz, silhouette,
//! Davies-Bouldin) and the adjusted Rand index for external agreement.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::data::Dataset;
use crate::partition::Partition;

#[derive(Debug, Error, PartialEq)]
pub enum IndexError {
    #[error("need at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("{k} clusters for {n} points leaves no within-cluster spread")]
    TooManyClusters { k: usize, n: usize },
    #[error("within-cluster dispersion is zero")]
    ZeroDispersion,
    #[error("clusters {0} and {1} share a centroid")]
    CoincidentCentroids(usize, usize),
    #[error("partition has {found} labels, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

fn check_len(partition: &Partition, n: usize) -> Result<(), IndexError> {
    if partition.len() != n {
        return Err(IndexError::LengthMismatch {
            expected: n,
            found: partition.len(),
        });
    }
    Ok(())
}

/// Whether larger or smaller values of an index indicate a better partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherBetter,
    SmallerBetter,
}

/// The indices the harness knows how to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexKind {
    CalinskiHarabasz,
    Silhouette,
    DaviesBouldin,
    /// The kernel-density index (mixture of ambiguous and similarity sub-indices).
    Kdi,
}

impl IndexKind {
    pub const ALL: [IndexKind; 4] = [
        IndexKind::CalinskiHarabasz,
        IndexKind::Silhouette,
        IndexKind::DaviesBouldin,
        IndexKind::Kdi,
    ];

    pub fn direction(self) -> Direction {
        match self {
            IndexKind::CalinskiHarabasz | IndexKind::Silhouette => Direction::HigherBetter,
            IndexKind::DaviesBouldin | IndexKind::Kdi => Direction::SmallerBetter,
        }
    }

    /// Short identifier used on the command line and in report headers.
    pub fn code(self) -> &'static str {
        match self {
            IndexKind::CalinskiHarabasz => "ch",
            IndexKind::Silhouette => "sc",
            IndexKind::DaviesBouldin => "db",
            IndexKind::Kdi => "new",
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for IndexKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IndexKind::ALL
            .into_iter()
            .find(|k| k.code() == s)
            .ok_or_else(|| format!("unknown index '{s}' (expected ch, sc, db or new)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexScore {
    pub kind: IndexKind,
    pub value: f64,
}

impl IndexScore {
    pub fn direction(&self) -> Direction {
        self.kind.direction()
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Centroid-based summary of a partition.
#[derive(Debug, Clone)]
pub struct ClusterStats {
    pub centroids: Vec<Vec<f64>>,
    pub global_centroid: Vec<f64>,
    pub sizes: Vec<usize>,
    /// Trace of the within-cluster dispersion matrix.
    pub within_trace: f64,
    /// Trace of the between-group dispersion matrix.
    pub between_trace: f64,
    /// Mean distance of each cluster's members to its centroid.
    pub mean_radius: Vec<f64>,
}

impl ClusterStats {
    pub fn compute(data: &Dataset, partition: &Partition) -> Result<Self, IndexError> {
        check_len(partition, data.len())?;
        let dim = data.dim();
        let k = partition.k();
        let sizes = partition.sizes();
        let mut centroids = vec![vec![0.0; dim]; k];
        let mut global_centroid = vec![0.0; dim];
        for (p, &l) in data.points().zip(partition.labels()) {
            for t in 0..dim {
                centroids[l][t] += p[t];
                global_centroid[t] += p[t];
            }
        }
        for (c, &s) in centroids.iter_mut().zip(&sizes) {
            c.iter_mut().for_each(|v| *v /= s as f64);
        }
        global_centroid.iter_mut().for_each(|v| *v /= data.len() as f64);

        let mut within_trace = 0.0;
        let mut radius_sum = vec![0.0; k];
        for (p, &l) in data.points().zip(partition.labels()) {
            let d = distance(p, &centroids[l]);
            within_trace += d * d;
            radius_sum[l] += d;
        }
        let between_trace = centroids
            .iter()
            .zip(&sizes)
            .map(|(c, &s)| {
                let d = distance(c, &global_centroid);
                s as f64 * d * d
            })
            .sum();
        let mean_radius = radius_sum.iter().zip(&sizes).map(|(r, &s)| r / s as f64).collect();
        Ok(Self {
            centroids,
            global_centroid,
            sizes,
            within_trace,
            between_trace,
            mean_radius,
        })
    }
}

/// `(tr(B) / tr(W)) * (n - k) / (k - 1)`; higher is better.
pub fn calinski_harabasz(data: &Dataset, partition: &Partition) -> Result<IndexScore, IndexError> {
    let (n, k) = (data.len(), partition.k());
    if k < 2 {
        return Err(IndexError::TooFewClusters(k));
    }
    if k >= n {
        return Err(IndexError::TooManyClusters { k, n });
    }
    let stats = ClusterStats::compute(data, partition)?;
    if !(stats.within_trace > 0.0) {
        return Err(IndexError::ZeroDispersion);
    }
    let value = (stats.between_trace / stats.within_trace) * ((n - k) as f64 / (k - 1) as f64);
    Ok(IndexScore {
        kind: IndexKind::CalinskiHarabasz,
        value,
    })
}

/// Per-sample silhouette values. Members of singleton clusters score 0.
pub fn silhouette_samples(data: &Dataset, partition: &Partition) -> Result<Vec<f64>, IndexError> {
    check_len(partition, data.len())?;
    let (n, k) = (data.len(), partition.k());
    if k < 2 {
        return Err(IndexError::TooFewClusters(k));
    }
    if k >= n {
        return Err(IndexError::TooManyClusters { k, n });
    }
    let labels = partition.labels();
    let sizes = partition.sizes();
    let mut sums = vec![0.0; k];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        let p = data.point(i);
        for (j, q) in data.points().enumerate() {
            if j != i {
                sums[labels[j]] += distance(p, q);
            }
        }
        let own = labels[i];
        if sizes[own] == 1 {
            out.push(0.0);
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        out.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    Ok(out)
}

/// Mean silhouette over all samples; higher is better.
pub fn silhouette(data: &Dataset, partition: &Partition) -> Result<IndexScore, IndexError> {
    let s = silhouette_samples(data, partition)?;
    Ok(IndexScore {
        kind: IndexKind::Silhouette,
        value: s.iter().sum::<f64>() / s.len() as f64,
    })
}

/// Mean over clusters of the worst `(sigma_i + sigma_j) / d(c_i, c_j)`; smaller is better.
pub fn davies_bouldin(data: &Dataset, partition: &Partition) -> Result<IndexScore, IndexError> {
    let k = partition.k();
    if k < 2 {
        return Err(IndexError::TooFewClusters(k));
    }
    let stats = ClusterStats::compute(data, partition)?;
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = distance(&stats.centroids[i], &stats.centroids[j]);
            if !(d > 0.0) {
                return Err(IndexError::CoincidentCentroids(i.min(j), i.max(j)));
            }
            worst = worst.max((stats.mean_radius[i] + stats.mean_radius[j]) / d);
        }
        total += worst;
    }
    Ok(IndexScore {
        kind: IndexKind::DaviesBouldin,
        value: total / k as f64,
    })
}

fn choose2(n: u64) -> f64 {
    (n as f64) * (n.saturating_sub(1) as f64) / 2.0
}

/// Sum of `choose2` over counts in sorted order, so the result does not
/// depend on hash iteration order.
fn sorted_pair_sum(counts: impl Iterator<Item = u64>) -> f64 {
    let mut v: Vec<u64> = counts.collect();
    v.sort_unstable();
    v.into_iter().map(choose2).sum()
}

/// Adjusted Rand index from the contingency table. Symmetric; 1.0 for identical groupings.
pub fn adjusted_rand_index(p: &Partition, q: &Partition) -> Result<f64, IndexError> {
    adjusted_rand_index_labels(p.labels(), q.labels())
}

/// [`adjusted_rand_index`] on raw label slices (any labeling).
pub fn adjusted_rand_index_labels(p: &[usize], q: &[usize]) -> Result<f64, IndexError> {
    if p.len() != q.len() {
        return Err(IndexError::LengthMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&a, &b) in p.iter().zip(q) {
        *table.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let index = sorted_pair_sum(table.into_values());
    let sum_rows = sorted_pair_sum(rows.into_values());
    let sum_cols = sorted_pair_sum(cols.into_values());
    let total = choose2(p.len() as u64);
    let expected = if total > 0.0 { sum_rows * sum_cols / total } else { 0.0 };
    let max_index = 0.5 * (sum_rows + sum_cols);
    let denom = max_index - expected;
    if denom == 0.0 {
        // both labelings are all-one-cluster or all-singletons, hence identical groupings
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}
