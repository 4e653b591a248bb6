use rayon::prelude::*;

use super::{KdiError, KdiParams};
use crate::data::Dataset;
use crate::density::{choose_bandwidth, BandwidthSearch, BandwidthSource, Kde};
use crate::mix_seed;
use crate::partition::Partition;

/// Likelihoods below this are clamped when leaving log space.
const LIKELIHOOD_FLOOR: f64 = 1e-300;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Per-cluster density models plus every point's log-density under every model.
///
/// Fitting is the expensive step; [`ClusterDensities::profiles`] derives
/// territories for any parameter set without refitting.
#[derive(Debug, Clone)]
pub struct ClusterDensities {
    members: Vec<Vec<usize>>,
    models: Vec<Kde>,
    sources: Vec<BandwidthSource>,
    /// `cross[q][i]` is the log-density of point `i` under cluster `q`.
    cross: Vec<Vec<f64>>,
}

impl ClusterDensities {
    /// One KDE per cluster with a cross-validated (or fallback) bandwidth.
    /// The fold shuffle for a cluster is seeded from `search.seed` and the
    /// cluster's smallest member index, so results do not depend on label ids.
    pub fn fit(data: &Dataset, partition: &Partition, search: &BandwidthSearch) -> Result<Self, KdiError> {
        if partition.len() != data.len() {
            return Err(KdiError::LengthMismatch {
                expected: data.len(),
                found: partition.len(),
            });
        }
        let members = partition.clusters();
        let fitted: Vec<(Kde, BandwidthSource)> = members
            .par_iter()
            .map(|m| {
                let coords = data.gather(m);
                let seed = mix_seed(search.seed, m[0] as u64);
                let (h, source) = choose_bandwidth(&coords, data.dim(), search, seed)?;
                Ok((Kde::fit(coords, data.dim(), h)?, source))
            })
            .collect::<Result<_, KdiError>>()?;
        let (models, sources) = fitted.into_iter().unzip();
        Ok(Self::from_parts(data, members, models, sources))
    }

    /// Assemble from explicit models. `members[q]` lists the points of cluster `q`.
    pub fn from_models(data: &Dataset, members: Vec<Vec<usize>>, models: Vec<Kde>) -> Self {
        let sources = vec![BandwidthSource::Fallback; models.len()];
        Self::from_parts(data, members, models, sources)
    }

    fn from_parts(data: &Dataset, members: Vec<Vec<usize>>, models: Vec<Kde>, sources: Vec<BandwidthSource>) -> Self {
        let cross = models
            .par_iter()
            .map(|m| data.points().map(|p| m.log_density_unchecked(p)).collect())
            .collect();
        Self {
            members,
            models,
            sources,
            cross,
        }
    }

    pub fn models(&self) -> &[Kde] {
        &self.models
    }

    pub fn bandwidth_sources(&self) -> &[BandwidthSource] {
        &self.sources
    }

    /// Territories, boundary bands and member likelihoods under `params`.
    pub fn profiles(&self, params: &KdiParams) -> ProfileSet {
        let profiles = self
            .members
            .iter()
            .zip(&self.models)
            .zip(&self.sources)
            .zip(&self.cross)
            .map(|(((members, model), source), row)| {
                ClusterProfile::new(members.clone(), model.clone(), *source, row, params)
            })
            .collect();
        ProfileSet {
            profiles,
            cross: self.cross.clone(),
        }
    }
}

/// Density summary of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterProfile {
    pub members: Vec<usize>,
    pub model: Kde,
    pub bandwidth_source: BandwidthSource,
    /// Log-density of each member under the cluster's own model, in member order.
    pub log_likelihoods: Vec<f64>,
    /// `exp` of the above, floored at 1e-300.
    pub likelihoods: Vec<f64>,
    /// Population standard deviation of `log_likelihoods`.
    pub spread: f64,
    pub territory: Interval,
    pub boundary_band: Interval,
}

impl ClusterProfile {
    fn new(members: Vec<usize>, model: Kde, source: BandwidthSource, cross_row: &[f64], params: &KdiParams) -> Self {
        let log_likelihoods: Vec<f64> = members.iter().map(|&i| cross_row[i]).collect();
        let likelihoods = log_likelihoods.iter().map(|g| g.exp().max(LIKELIHOOD_FLOOR)).collect();
        let m = log_likelihoods.len() as f64;
        let mean = log_likelihoods.iter().sum::<f64>() / m;
        let min = log_likelihoods.iter().copied().fold(f64::INFINITY, f64::min);
        let max = log_likelihoods.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // exactly zero for identical values, where the mean may round off them
        let spread = if max > min {
            (log_likelihoods.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / m).sqrt()
        } else {
            0.0
        };
        let (below, above) = if spread > 0.0 {
            (params.alpha1 * spread, params.alpha2 * spread)
        } else {
            (params.beta1, params.beta2)
        };
        Self {
            members,
            model,
            bandwidth_source: source,
            log_likelihoods,
            likelihoods,
            spread,
            territory: Interval {
                lo: min - below,
                hi: max + above,
            },
            boundary_band: Interval {
                lo: min,
                hi: min + params.rho * spread,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn min_log_likelihood(&self) -> f64 {
        self.log_likelihoods.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// All cluster profiles of one partition, with the cross log-density table.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    profiles: Vec<ClusterProfile>,
    cross: Vec<Vec<f64>>,
}

impl ProfileSet {
    pub fn profiles(&self) -> &[ClusterProfile] {
        &self.profiles
    }

    pub fn n_clusters(&self) -> usize {
        self.profiles.len()
    }

    pub fn n_points(&self) -> usize {
        self.cross.first().map_or(0, Vec::len)
    }

    /// Log-density of point `i` under cluster `q`.
    pub fn log_density(&self, q: usize, i: usize) -> f64 {
        self.cross[q][i]
    }

    /// Whether point `i` lies in the territory of cluster `q`.
    pub fn in_territory(&self, q: usize, i: usize) -> bool {
        self.profiles[q].territory.contains(self.cross[q][i])
    }
}

/// Fit densities for every cluster of `partition` and derive their profiles.
pub fn fit_profiles(
    data: &Dataset,
    partition: &Partition,
    params: &KdiParams,
    search: &BandwidthSearch,
) -> Result<ProfileSet, KdiError> {
    Ok(ClusterDensities::fit(data, partition, search)?.profiles(params))
}
