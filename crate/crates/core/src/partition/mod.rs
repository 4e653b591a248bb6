//! Candidate partitions: canonical labelings and the clustering algorithms
//! used to generate them.

mod agglomerative;
mod candidates;
mod gmm;
mod kmeans;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::hash::Hash;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use agglomerative::{agglomerative, Dendrogram, Linkage};
pub use candidates::{build_candidates, CandidateSet, Generator};
pub use gmm::{gmm_em, gmm_fit, GmmConfig, GmmFit};
pub use kmeans::{kmeans, kmeans_fit, KMeansConfig, KMeansFit};

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("empty label sequence")]
    Empty,
    #[error("cannot form {k} clusters from {n} points")]
    BadClusterCount { k: usize, n: usize },
    #[error("partition has {found} labels, dataset has {expected} points")]
    LengthMismatch { expected: usize, found: usize },
    #[error("covariance stayed singular after {0} restarts")]
    Singular(usize),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
}

/// Renumber labels by first occurrence: the first point's cluster becomes 0,
/// the next new cluster seen becomes 1, and so on.
pub fn canonicalize<T: Eq + Hash>(raw: &[T]) -> Vec<usize> {
    let mut ids: HashMap<&T, usize> = HashMap::new();
    raw.iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect()
}

/// A hard assignment of every point to one of `k` non-empty clusters, stored in canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
    source: String,
}

impl Partition {
    pub fn new<T: Eq + Hash>(raw: &[T], source: impl Into<String>) -> Result<Self, PartitionError> {
        if raw.is_empty() {
            return Err(PartitionError::Empty);
        }
        let labels = canonicalize(raw);
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        Ok(Self {
            labels,
            k,
            source: source.into(),
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Number of non-empty clusters.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn set_source(&mut self, source: impl Into<String>) {
        self.source = source.into();
    }

    /// Member indices of each cluster, in cluster-id order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &l in &self.labels {
            out[l] += 1;
        }
        out
    }

    pub fn check_len(&self, n: usize) -> Result<(), PartitionError> {
        if self.labels.len() != n {
            return Err(PartitionError::LengthMismatch {
                expected: n,
                found: self.labels.len(),
            });
        }
        Ok(())
    }

    /// One label per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.labels.len() * 3);
        for l in &self.labels {
            let _ = writeln!(out, "{l}");
        }
        out
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PartitionError + '_ {
    move |source| PartitionError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_partition(path: &Path, partition: &Partition) -> Result<(), PartitionError> {
    fs::write(path, partition.to_text()).map_err(io_err(path))
}

/// Read a one-label-per-line file. Labels may be arbitrary tokens.
pub fn read_partition(path: &Path) -> Result<Partition, PartitionError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let tokens: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let source = path.file_stem().and_then(|s| s.to_str()).unwrap_or("partition");
    Partition::new(&tokens, source)
}

const MANIFEST: &str = "manifest.csv";

/// Write each partition as `cand_NNNN.txt` plus a `manifest.csv` of `file,source,k`.
pub fn write_candidates(dir: &Path, partitions: &[Partition]) -> Result<(), PartitionError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = String::from("file,source,k\n");
    for (i, p) in partitions.iter().enumerate() {
        let name = format!("cand_{i:04}.txt");
        write_partition(&dir.join(&name), p)?;
        let _ = writeln!(manifest, "{name},{},{}", p.source(), p.k());
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, manifest).map_err(io_err(&path))
}

/// Read a candidate directory. Uses `manifest.csv` when present, otherwise
/// every `.txt` / `.labels` file in name order with the stem as source tag.
pub fn read_candidates(dir: &Path) -> Result<Vec<Partition>, PartitionError> {
    let manifest = dir.join(MANIFEST);
    if manifest.exists() {
        let text = fs::read_to_string(&manifest).map_err(io_err(&manifest))?;
        let mut out = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() < 2 {
                return Err(PartitionError::Format {
                    path: manifest.display().to_string(),
                    msg: format!("line {}: expected file,source,k", lineno + 1),
                });
            }
            let mut p = read_partition(&dir.join(cols[0]))?;
            p.set_source(cols[1]);
            out.push(p);
        }
        return Ok(out);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("txt") | Some("labels")))
        .collect();
    files.sort();
    files.iter().map(|p| read_partition(p)).collect()
}

/// Squared Euclidean distance.
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
