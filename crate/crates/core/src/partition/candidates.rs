use std::collections::HashMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;

use super::agglomerative::{Dendrogram, Linkage};
use super::{gmm_em, kmeans, Partition, PartitionError};
use crate::data::Dataset;
use crate::mix_seed;

/// The clustering algorithms used to produce candidates, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    KMeans,
    Gmm,
    Agglomerative(Linkage),
}

impl Generator {
    pub const ALL: [Generator; 6] = [
        Generator::KMeans,
        Generator::Gmm,
        Generator::Agglomerative(Linkage::Ward),
        Generator::Agglomerative(Linkage::Complete),
        Generator::Agglomerative(Linkage::Average),
        Generator::Agglomerative(Linkage::Single),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::KMeans => "kmeans",
            Generator::Gmm => "gmm",
            Generator::Agglomerative(l) => l.name(),
        }
    }

    fn salt(self) -> u64 {
        Generator::ALL.iter().position(|g| *g == self).unwrap_or(0) as u64
    }
}

impl std::str::FromStr for Generator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| format!("unknown generator '{s}'"))
    }
}

#[derive(Debug, Clone, Default)]
pub struct CandidateSet {
    pub partitions: Vec<Partition>,
    /// Generator failures for individual (algorithm, k) cells.
    pub warnings: Vec<String>,
    /// Number of generated partitions dropped as duplicates.
    pub duplicates: usize,
}

/// Run every generator for every k, dedupe by canonical labels and append the
/// dataset's reference partition (if any) last.
///
/// Order is by k, then generator order. A duplicate is dropped and its source
/// tag appended (`+`) to the first partition with the same labels.
pub fn build_candidates(
    data: &Dataset,
    k_range: RangeInclusive<usize>,
    seed: u64,
    generators: &[Generator],
) -> Result<CandidateSet, PartitionError> {
    let n = data.len();
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo == 0 || lo > hi {
        return Err(PartitionError::BadClusterCount { k: lo, n });
    }
    if hi > n {
        return Err(PartitionError::BadClusterCount { k: hi, n });
    }

    let dendrograms: HashMap<Linkage, Dendrogram> = generators
        .par_iter()
        .filter_map(|g| match g {
            Generator::Agglomerative(l) => Some(*l),
            _ => None,
        })
        .map(|l| (l, Dendrogram::build(data, l)))
        .collect();

    let cells: Vec<(usize, Generator)> = k_range.flat_map(|k| generators.iter().map(move |g| (k, *g))).collect();
    let results: Vec<Result<Partition, PartitionError>> = cells
        .par_iter()
        .map(|&(k, g)| {
            let cell_seed = mix_seed(mix_seed(seed, g.salt()), k as u64);
            let mut p = match g {
                Generator::KMeans => kmeans(data, k, cell_seed)?,
                Generator::Gmm => gmm_em(data, k, cell_seed)?,
                Generator::Agglomerative(l) => Partition::new(&dendrograms[&l].cut(k)?, "")?,
            };
            p.set_source(format!("{}_k{k}", g.name()));
            Ok(p)
        })
        .collect();

    let mut out = CandidateSet::default();
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut push = |out: &mut CandidateSet, p: Partition| match seen.get(p.labels()) {
        Some(&i) => {
            let tag = format!("{}+{}", out.partitions[i].source(), p.source());
            out.partitions[i].set_source(tag);
            out.duplicates += 1;
        }
        None => {
            seen.insert(p.labels().to_vec(), out.partitions.len());
            out.partitions.push(p);
        }
    };
    for ((k, g), r) in cells.iter().zip(results) {
        match r {
            Ok(p) => push(&mut out, p),
            Err(e) => {
                log::warn!("{}: {} k={k} failed: {e}", data.id(), g.name());
                out.warnings.push(format!("{}_k{k}: {e}", g.name()));
            }
        }
    }
    if let Some(labels) = data.labels() {
        push(&mut out, Partition::new(labels, "reference")?);
    }
    Ok(out)
}
