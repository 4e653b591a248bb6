use super::{sq_dist, Partition, PartitionError};
use crate::data::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Linkage {
    Ward,
    Complete,
    Average,
    Single,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [Linkage::Ward, Linkage::Complete, Linkage::Average, Linkage::Single];

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Ward => "ward",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
            Linkage::Single => "single",
        }
    }

    /// Lance–Williams update: distance from the merge of `a` and `b` to `x`.
    /// Ward operates on squared Euclidean distances, the others on plain distances.
    fn update(self, d_ax: f64, d_bx: f64, d_ab: f64, n_a: f64, n_b: f64, n_x: f64) -> f64 {
        match self {
            Linkage::Single => d_ax.min(d_bx),
            Linkage::Complete => d_ax.max(d_bx),
            Linkage::Average => (n_a * d_ax + n_b * d_bx) / (n_a + n_b),
            Linkage::Ward => ((n_a + n_x) * d_ax + (n_b + n_x) * d_bx - n_x * d_ab) / (n_a + n_b + n_x),
        }
    }
}

/// Merge history of a full agglomeration. Cluster slots are named by their
/// smallest member index; merge `(a, b, height)` folds slot `b` into slot `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<(usize, usize, f64)>,
}

/// Condensed upper-triangle storage for pairwise distances.
struct Condensed {
    n: usize,
    values: Vec<f64>,
}

impl Condensed {
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.index(i, j);
        self.values[idx] = v;
    }
}

impl Dendrogram {
    /// Agglomerate all points down to a single cluster.
    ///
    /// The closest pair is merged first; ties go to the lexicographically smallest
    /// slot pair. Each active slot caches its nearest higher-numbered neighbour, so
    /// a typical run costs O(n^2) distance updates.
    pub fn build(data: &Dataset, linkage: Linkage) -> Self {
        let n = data.len();
        let mut dist = Condensed {
            n,
            values: Vec::with_capacity(n * n.saturating_sub(1) / 2),
        };
        for i in 0..n {
            for j in i + 1..n {
                let d2 = sq_dist(data.point(i), data.point(j));
                dist.values.push(if linkage == Linkage::Ward { d2 } else { d2.sqrt() });
            }
        }

        let mut active = vec![true; n];
        let mut size = vec![1usize; n];
        let mut nn = vec![usize::MAX; n];
        let mut nn_d = vec![f64::INFINITY; n];

        let recompute = |i: usize, active: &[bool], dist: &Condensed, nn: &mut [usize], nn_d: &mut [f64]| {
            nn[i] = usize::MAX;
            nn_d[i] = f64::INFINITY;
            for (j, _) in active.iter().enumerate().skip(i + 1).filter(|(_, a)| **a) {
                let d = dist.get(i, j);
                if d < nn_d[i] {
                    nn_d[i] = d;
                    nn[i] = j;
                }
            }
        };
        for i in 0..n {
            recompute(i, &active, &dist, &mut nn, &mut nn_d);
        }

        let mut merges = Vec::with_capacity(n.saturating_sub(1));
        for _ in 1..n {
            let mut a = usize::MAX;
            let mut best = f64::INFINITY;
            for i in 0..n {
                if active[i] && nn[i] != usize::MAX && (a == usize::MAX || nn_d[i] < best) {
                    a = i;
                    best = nn_d[i];
                }
            }
            let b = nn[a];
            let d_ab = dist.get(a, b);
            let (n_a, n_b) = (size[a] as f64, size[b] as f64);
            active[b] = false;
            for x in 0..n {
                if active[x] && x != a {
                    let v = linkage.update(dist.get(a, x), dist.get(b, x), d_ab, n_a, n_b, size[x] as f64);
                    dist.set(a, x, v);
                }
            }
            size[a] += size[b];
            let height = if linkage == Linkage::Ward { d_ab.sqrt() } else { d_ab };
            merges.push((a, b, height));

            recompute(a, &active, &dist, &mut nn, &mut nn_d);
            for x in 0..b {
                if !active[x] || x == a {
                    continue;
                }
                if nn[x] == a || nn[x] == b {
                    recompute(x, &active, &dist, &mut nn, &mut nn_d);
                } else if x < a {
                    let d = dist.get(x, a);
                    if d < nn_d[x] || (d == nn_d[x] && a < nn[x]) {
                        nn_d[x] = d;
                        nn[x] = a;
                    }
                }
            }
        }
        Self { n, merges }
    }

    pub fn merges(&self) -> &[(usize, usize, f64)] {
        &self.merges
    }

    /// Labels after applying the first `n - k` merges.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>, PartitionError> {
        if k == 0 || k > self.n {
            return Err(PartitionError::BadClusterCount { k, n: self.n });
        }
        let mut parent: Vec<usize> = (0..self.n).collect();
        for &(a, b, _) in &self.merges[..self.n - k] {
            parent[b] = a;
        }
        // slots only ever fold into smaller slots, so one ascending pass resolves roots
        for i in 0..self.n {
            parent[i] = parent[parent[i]];
        }
        Ok(parent)
    }
}

/// Bottom-up clustering cut at `k` clusters.
pub fn agglomerative(data: &Dataset, k: usize, linkage: Linkage) -> Result<Partition, PartitionError> {
    if k == 0 || k > data.len() {
        return Err(PartitionError::BadClusterCount { k, n: data.len() });
    }
    let labels = Dendrogram::build(data, linkage).cut(k)?;
    Partition::new(&labels, format!("{}_k{k}", linkage.name()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indices::adjusted_rand_index;

    /// Brute-force agglomeration: recompute every inter-cluster distance from
    /// the member points at each step.
    fn brute_force(points: &[Vec<f64>], k: usize, linkage: Linkage) -> Vec<usize> {
        let dist = |a: &[f64], b: &[f64]| sq_dist(a, b).sqrt();
        let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
        while clusters.len() > k {
            let mut best = (0, 1, f64::INFINITY);
            for i in 0..clusters.len() {
                for j in i + 1..clusters.len() {
                    let pairs = clusters[i]
                        .iter()
                        .flat_map(|&p| clusters[j].iter().map(move |&q| (p, q)))
                        .map(|(p, q)| dist(&points[p], &points[q]));
                    let d = match linkage {
                        Linkage::Single => pairs.fold(f64::INFINITY, f64::min),
                        Linkage::Complete => pairs.fold(0.0, f64::max),
                        Linkage::Average => pairs.sum::<f64>() / (clusters[i].len() * clusters[j].len()) as f64,
                        Linkage::Ward => {
                            // increase in total within-cluster sum of squares
                            let sse = |members: &[usize]| {
                                let dim = points[0].len();
                                let mut c = vec![0.0; dim];
                                for &m in members {
                                    for t in 0..dim {
                                        c[t] += points[m][t] / members.len() as f64;
                                    }
                                }
                                members.iter().map(|&m| sq_dist(&points[m], &c)).sum::<f64>()
                            };
                            let merged: Vec<usize> = clusters[i].iter().chain(&clusters[j]).copied().collect();
                            sse(&merged) - sse(&clusters[i]) - sse(&clusters[j])
                        }
                    };
                    if d < best.2 {
                        best = (i, j, d);
                    }
                }
            }
            let moved = clusters.remove(best.1);
            clusters[best.0].extend(moved);
        }
        let mut labels = vec![0; points.len()];
        for (c, members) in clusters.iter().enumerate() {
            for &m in members {
                labels[m] = c;
            }
        }
        super::super::canonicalize(&labels)
    }

    fn six_points() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.2],
            vec![0.3, 1.4],
            vec![5.0, 5.0],
            vec![6.1, 5.2],
            vec![3.0, 2.6],
        ]
    }

    #[test]
    fn average_linkage_six_points_hand_trace() {
        // Hand trace: {0,1} at 1.0198, {3,4} at 1.1180, {0,1}+{2} at 1.4105,
        // then {5} joins {0,1,2} at 3.3495, leaving {0,1,2,5} vs {3,4} at k=2.
        let pts = six_points();
        let data = Dataset::from_rows("six", &pts, None).unwrap();
        let p = agglomerative(&data, 2, Linkage::Average).unwrap();
        assert_eq!(p.labels(), &[0, 0, 0, 1, 1, 0]);
        assert_eq!(p.labels(), brute_force(&pts, 2, Linkage::Average).as_slice());
    }

    #[test]
    fn matches_brute_force_all_linkages() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for trial in 0..20 {
            let n = 6 + trial % 10;
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
                .collect();
            let data = Dataset::from_rows("r", &pts, None).unwrap();
            for linkage in Linkage::ALL {
                let d = Dendrogram::build(&data, linkage);
                for k in 1..=n {
                    assert_eq!(
                        d.cut(k).map(|l| super::super::canonicalize(&l)).unwrap(),
                        brute_force(&pts, k, linkage),
                        "trial {trial} {linkage:?} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn single_linkage_follows_chains() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..30 {
            rows.push(vec![i as f64 * 0.5, 0.0]);
            labels.push(0);
            rows.push(vec![i as f64 * 0.5, 5.0]);
            labels.push(1);
        }
        let data = Dataset::from_rows("chains", &rows, Some(labels.clone())).unwrap();
        let p = agglomerative(&data, 2, Linkage::Single).unwrap();
        let reference = Partition::new(&labels, "ref").unwrap();
        assert_eq!(adjusted_rand_index(&p, &reference).unwrap(), 1.0);
    }

    #[test]
    fn k_equals_n_is_singletons() {
        let data = Dataset::from_rows("t", &[vec![0.0], vec![1.0], vec![3.0]], None).unwrap();
        for linkage in Linkage::ALL {
            assert_eq!(agglomerative(&data, 3, linkage).unwrap().labels(), &[0, 1, 2]);
        }
    }

    #[test]
    fn ties_merge_smallest_pair_first() {
        // equally spaced points: every adjacent pair ties at distance 1
        let data = Dataset::from_rows("t", &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], None).unwrap();
        let d = Dendrogram::build(&data, Linkage::Single);
        assert_eq!(d.merges()[0].0, 0);
        assert_eq!(d.merges()[0].1, 1);
        assert_eq!(d.cut(3).unwrap(), vec![0, 0, 2, 3]);
    }
}
