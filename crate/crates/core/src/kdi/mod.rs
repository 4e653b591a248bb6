//! The kernel-density internal validity index.
//!
//! Each cluster gets its own Gaussian KDE. A cluster's *territory* is the
//! closed interval of log-densities spanned by its own members, widened by
//! `alpha1`/`alpha2` standard deviations. Points that fall inside two or more
//! territories are ambiguous; the fraction of such points is the ambiguous
//! sub-index. The similarity sub-index measures how uniform each cluster's
//! member likelihoods are relative to its densest member. The index is the
//! convex mixture `delta * ambiguous + (1 - delta) * similarity`, and smaller
//! is better.
//!
//! Variants of both sub-indices and an optional boundary sub-index are
//! available through [`KdiParams`].

mod ambiguous;
mod boundary;
mod profile;
mod similarity;

use thiserror::Error;

use crate::data::Dataset;
use crate::density::{BandwidthSearch, DensityError};
use crate::partition::Partition;

pub use ambiguous::{
    ambiguous_index, ambiguous_pairwise, ambiguous_v1, ambiguous_v2, ambiguous_v3, territory_contains,
};
pub use boundary::boundary_index;
pub use profile::{fit_profiles, ClusterDensities, ClusterProfile, Interval, ProfileSet};
pub use similarity::{cluster_dispersion, similarity_index, similarity_v1, similarity_v2, similarity_v3};

#[derive(Debug, Error, PartialEq)]
pub enum KdiError {
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("partition has {found} labels, dataset has {expected} points")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Density(#[from] DensityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmbiguousVariant {
    /// Fraction of points inside at least two territories.
    Main,
    /// Proportion of cluster pairs with a positive pairwise ambiguous index.
    V1,
    /// Mean of the positive pairwise ambiguous indices (0 when none).
    V2,
    /// Monte Carlo estimate of disputed territory area over total territory area.
    V3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityVariant {
    /// Member likelihoods normalized by the cluster maximum.
    Main,
    /// Min-max normalized member likelihoods.
    V1,
    /// Member likelihoods normalized by the maximum over the whole dataset.
    V2,
    /// Dispersion of member log-likelihoods around their center.
    V3,
}

macro_rules! named_enum {
    ($ty:ty { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl std::str::FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(Self::$variant),)+
                    other => Err(format!("unknown {} '{other}'", stringify!($ty))),
                }
            }
        }

        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(match self {
                    $(Self::$variant => $name,)+
                })
            }
        }
    };
}

named_enum!(AmbiguousVariant { Main => "main", V1 => "v1", V2 => "v2", V3 => "v3" });
named_enum!(SimilarityVariant { Main => "main", V1 => "v1", V2 => "v2", V3 => "v3" });

/// Which points a pairwise ambiguous index A_ij is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairScope {
    /// Members of clusters i and j, normalized by n_i + n_j.
    Pair,
    /// All points, normalized by n.
    Whole,
}

/// Which points count towards a cluster's boundary total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryScope {
    AllPoints,
    MembersOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Center {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Abs,
    Squared,
}

named_enum!(PairScope { Pair => "pair", Whole => "whole" });
named_enum!(BoundaryScope { AllPoints => "all", MembersOnly => "members" });
named_enum!(Center { Mean => "mean", Median => "median" });
named_enum!(Metric { Abs => "abs", Squared => "squared" });

/// Settings for the dispersion-based similarity variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionOptions {
    pub center: Center,
    pub metric: Metric,
    /// Min-max normalize the distances within each cluster.
    pub normalize: bool,
    /// Use likelihoods instead of log-likelihoods.
    pub use_likelihood: bool,
}

impl Default for DispersionOptions {
    fn default() -> Self {
        Self {
            center: Center::Mean,
            metric: Metric::Abs,
            normalize: true,
            use_likelihood: false,
        }
    }
}

/// Hyper-parameters of the index family.
#[derive(Debug, Clone, PartialEq)]
pub struct KdiParams {
    /// Weight of the ambiguous sub-index, in [0, 1].
    pub delta: f64,
    /// Territory widening below the minimum member log-density, in standard deviations.
    pub alpha1: f64,
    /// Territory widening above the maximum member log-density, in standard deviations.
    pub alpha2: f64,
    /// Absolute widening below the minimum when the spread is zero.
    pub beta1: f64,
    /// Absolute widening above the maximum when the spread is zero.
    pub beta2: f64,
    /// Width of the boundary band above the minimum, in standard deviations.
    pub rho: f64,
    /// Clusters smaller than this contribute zero similarity.
    pub min_cluster_size: usize,
    pub ambiguous_variant: AmbiguousVariant,
    pub similarity_variant: SimilarityVariant,
    pub dispersion: DispersionOptions,
    pub pair_scope: PairScope,
    pub boundary_scope: BoundaryScope,
    /// Also compute the boundary sub-index (reported, not mixed in).
    pub with_boundary: bool,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for KdiParams {
    fn default() -> Self {
        Self {
            delta: 0.5,
            alpha1: 1.0,
            alpha2: 1.0,
            beta1: 1.0,
            beta2: 1.0,
            rho: 0.5,
            min_cluster_size: 3,
            ambiguous_variant: AmbiguousVariant::Main,
            similarity_variant: SimilarityVariant::Main,
            dispersion: DispersionOptions::default(),
            pair_scope: PairScope::Pair,
            boundary_scope: BoundaryScope::AllPoints,
            with_boundary: false,
            mc_samples: 20_000,
            seed: 0,
        }
    }
}

impl KdiParams {
    pub fn validate(&self) -> Result<(), KdiError> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(KdiError::BadParam(format!(
                "delta must lie in [0, 1], got {}",
                self.delta
            )));
        }
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("rho", self.rho),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(KdiError::BadParam(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.ambiguous_variant == AmbiguousVariant::V3 && self.mc_samples == 0 {
            return Err(KdiError::BadParam("mc_samples must be positive".into()));
        }
        Ok(())
    }
}

/// Result of scoring one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct KdiScore {
    /// The mixed index.
    pub index: f64,
    pub ambiguous: f64,
    pub similarity: f64,
    pub boundary: Option<f64>,
    /// Number of points inside at least two territories.
    pub ambiguous_count: usize,
    /// Per-cluster similarity contributions of the selected variant.
    pub per_cluster_s: Vec<f64>,
    pub s_omega: f64,
    /// Bandwidth chosen for each cluster.
    pub bandwidths: Vec<f64>,
}

/// Score a fitted profile set under `params`.
pub fn score_profiles(data: &Dataset, set: &ProfileSet, params: &KdiParams) -> KdiScore {
    let (main_ambiguous, flags) = ambiguous_index(set);
    let ambiguous_count = flags.iter().filter(|f| **f).count();
    let ambiguous = match params.ambiguous_variant {
        AmbiguousVariant::Main => main_ambiguous,
        AmbiguousVariant::V1 => ambiguous_v1(set, params.pair_scope),
        AmbiguousVariant::V2 => ambiguous_v2(set, params.pair_scope),
        AmbiguousVariant::V3 => ambiguous_v3(data, set, params.mc_samples, params.seed),
    };
    let n = set.n_points();
    let min_size = params.min_cluster_size;
    let (similarity, per_cluster_s) = match params.similarity_variant {
        SimilarityVariant::Main => similarity_index(set, n, min_size),
        SimilarityVariant::V1 => similarity_v1(set, n, min_size),
        SimilarityVariant::V2 => similarity_v2(set, n, min_size),
        SimilarityVariant::V3 => similarity_v3(set, n, min_size, params.dispersion),
    };
    let s_omega = per_cluster_s.iter().sum();
    let boundary = params
        .with_boundary
        .then(|| boundary_index(set, params.rho, params.boundary_scope));
    KdiScore {
        index: params.delta * ambiguous + (1.0 - params.delta) * similarity,
        ambiguous,
        similarity,
        boundary,
        ambiguous_count,
        per_cluster_s,
        s_omega,
        bandwidths: set.profiles().iter().map(|p| p.model.bandwidth()).collect(),
    }
}

/// Fit per-cluster densities for `partition` and compute the index.
pub fn kdi_index(
    data: &Dataset,
    partition: &Partition,
    params: &KdiParams,
    search: &BandwidthSearch,
) -> Result<KdiScore, KdiError> {
    params.validate()?;
    let set = fit_profiles(data, partition, params, search)?;
    Ok(score_profiles(data, &set, params))
}
