use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{io_err, HarnessError};
use crate::data::{load_dataset, Dataset, Format, LabelColumn};
use crate::density::{BandwidthGrid, BandwidthSearch};
use crate::indices::IndexKind;
use crate::kdi::{DispersionOptions, KdiParams};
use crate::mix_seed;
use crate::partition::Generator;

/// Environment variable naming a config file, consulted when none is given explicitly.
pub const CONFIG_ENV: &str = "KDIVAL_CONFIG";

/// Everything that determines an evaluation run.
///
/// The `seed` fields inside `kdi` and `bandwidth` are not used directly:
/// [`RunConfig::kdi_params`] and [`RunConfig::search`] derive them from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub datasets: Vec<PathBuf>,
    pub k_min: usize,
    pub k_max: usize,
    pub generators: Vec<Generator>,
    pub indices: Vec<IndexKind>,
    pub kdi: KdiParams,
    pub bandwidth: BandwidthSearch,
    pub seed: u64,
    pub emit_svg: bool,
    pub output_dir: PathBuf,
    /// Input format; inferred from the file extension when `None`.
    pub format: Option<Format>,
    pub label_column: LabelColumn,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            k_min: 2,
            k_max: 30,
            generators: Generator::ALL.to_vec(),
            indices: IndexKind::ALL.to_vec(),
            kdi: KdiParams::default(),
            bandwidth: BandwidthSearch::default(),
            seed: 0,
            emit_svg: false,
            output_dir: PathBuf::from("out"),
            format: None,
            label_column: LabelColumn::None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.k_min < 2 || self.k_min > self.k_max {
            return Err(HarnessError::Config(format!(
                "k range must satisfy 2 <= k_min <= k_max, got {}..={}",
                self.k_min, self.k_max
            )));
        }
        if self.generators.is_empty() {
            return Err(HarnessError::Config("no generators selected".into()));
        }
        if self.indices.is_empty() {
            return Err(HarnessError::Config("no indices selected".into()));
        }
        if self.bandwidth.folds < 2 {
            return Err(HarnessError::Config("bandwidth folds must be at least 2".into()));
        }
        self.kdi.validate().map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Index parameters with the Monte Carlo seed derived from the run seed.
    pub fn kdi_params(&self) -> KdiParams {
        KdiParams {
            seed: mix_seed(self.seed, 0x6b64),
            ..self.kdi.clone()
        }
    }

    /// Bandwidth search with the fold-shuffle seed derived from the run seed.
    pub fn search(&self) -> BandwidthSearch {
        BandwidthSearch {
            seed: mix_seed(self.seed, 0x6277),
            ..self.bandwidth.clone()
        }
    }

    pub fn load(&self, path: &Path) -> Result<Dataset, HarnessError> {
        let format = self.format.unwrap_or_else(|| Format::from_path(path));
        Ok(load_dataset(path, format, self.label_column)?)
    }

    /// Apply the settings of a config file on top of `self`.
    pub fn apply_toml(&mut self, text: &str) -> Result<(), HarnessError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        file.apply(self)?;
        self.validate()
    }

    /// Every setting as config file text; [`RunConfig::apply_toml`] reads it back unchanged.
    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(&ConfigFile::from_config(self)).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_toml()?).map_err(io_err(path))
    }
}

/// Defaults, overlaid by `path` if given, else by the file named in
/// `KDIVAL_CONFIG` if set.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig, HarnessError> {
    let mut config = RunConfig::default();
    let path = match path {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(CONFIG_ENV).map(PathBuf::from),
    };
    if let Some(path) = path {
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        config
            .apply_toml(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(config)
}

fn parse<T: FromStr<Err = String>>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .trim()
        .parse()
        .map_err(|e| HarnessError::Config(format!("{key}: {e}")))
}

fn parse_list<T: FromStr<Err = String>>(key: &str, value: &str) -> Result<Vec<T>, HarnessError> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generators: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    indices: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    emit_svg: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label_column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kdi: Option<KdiSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bandwidth: Option<BandwidthSection>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KdiSection {
    delta: Option<f64>,
    alpha1: Option<f64>,
    alpha2: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    rho: Option<f64>,
    min_cluster_size: Option<usize>,
    ambiguous_variant: Option<String>,
    similarity_variant: Option<String>,
    pair_scope: Option<String>,
    boundary_scope: Option<String>,
    with_boundary: Option<bool>,
    mc_samples: Option<usize>,
    dispersion_center: Option<String>,
    dispersion_metric: Option<String>,
    dispersion_normalize: Option<bool>,
    dispersion_use_likelihood: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandwidthSection {
    folds: Option<usize>,
    /// Explicit comma-separated bandwidths; overrides the relative grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_hi: Option<f64>,
}

impl ConfigFile {
    fn apply(self, c: &mut RunConfig) -> Result<(), HarnessError> {
        c.seed = self.seed.unwrap_or(c.seed);
        c.k_min = self.k_min.unwrap_or(c.k_min);
        c.k_max = self.k_max.unwrap_or(c.k_max);
        if let Some(v) = self.generators {
            c.generators = parse_list("generators", &v)?;
        }
        if let Some(v) = self.indices {
            c.indices = parse_list("indices", &v)?;
        }
        c.emit_svg = self.emit_svg.unwrap_or(c.emit_svg);
        if let Some(v) = self.output_dir {
            c.output_dir = PathBuf::from(v);
        }
        if let Some(v) = self.format {
            c.format = match v.as_str() {
                "auto" => None,
                other => Some(parse("format", other)?),
            };
        }
        if let Some(v) = self.label_column {
            c.label_column = parse("label_column", &v)?;
        }
        if let Some(k) = self.kdi {
            k.apply(&mut c.kdi)?;
        }
        if let Some(b) = self.bandwidth {
            b.apply(&mut c.bandwidth)?;
        }
        Ok(())
    }

    fn from_config(c: &RunConfig) -> Self {
        Self {
            seed: Some(c.seed),
            k_min: Some(c.k_min),
            k_max: Some(c.k_max),
            generators: Some(join(c.generators.iter().map(|g| g.name()))),
            indices: Some(join(&c.indices)),
            emit_svg: Some(c.emit_svg),
            output_dir: Some(c.output_dir.display().to_string()),
            format: Some(c.format.map_or_else(|| "auto".to_string(), |f| f.to_string())),
            label_column: Some(c.label_column.to_string()),
            kdi: Some(KdiSection::from_params(&c.kdi)),
            bandwidth: Some(BandwidthSection::from_search(&c.bandwidth)),
        }
    }
}

impl KdiSection {
    fn apply(self, p: &mut KdiParams) -> Result<(), HarnessError> {
        p.delta = self.delta.unwrap_or(p.delta);
        p.alpha1 = self.alpha1.unwrap_or(p.alpha1);
        p.alpha2 = self.alpha2.unwrap_or(p.alpha2);
        p.beta1 = self.beta1.unwrap_or(p.beta1);
        p.beta2 = self.beta2.unwrap_or(p.beta2);
        p.rho = self.rho.unwrap_or(p.rho);
        p.min_cluster_size = self.min_cluster_size.unwrap_or(p.min_cluster_size);
        if let Some(v) = self.ambiguous_variant {
            p.ambiguous_variant = parse("ambiguous_variant", &v)?;
        }
        if let Some(v) = self.similarity_variant {
            p.similarity_variant = parse("similarity_variant", &v)?;
        }
        if let Some(v) = self.pair_scope {
            p.pair_scope = parse("pair_scope", &v)?;
        }
        if let Some(v) = self.boundary_scope {
            p.boundary_scope = parse("boundary_scope", &v)?;
        }
        p.with_boundary = self.with_boundary.unwrap_or(p.with_boundary);
        p.mc_samples = self.mc_samples.unwrap_or(p.mc_samples);
        if let Some(v) = self.dispersion_center {
            p.dispersion.center = parse("dispersion_center", &v)?;
        }
        if let Some(v) = self.dispersion_metric {
            p.dispersion.metric = parse("dispersion_metric", &v)?;
        }
        p.dispersion.normalize = self.dispersion_normalize.unwrap_or(p.dispersion.normalize);
        p.dispersion.use_likelihood = self.dispersion_use_likelihood.unwrap_or(p.dispersion.use_likelihood);
        Ok(())
    }

    fn from_params(p: &KdiParams) -> Self {
        let DispersionOptions {
            center,
            metric,
            normalize,
            use_likelihood,
        } = p.dispersion;
        Self {
            delta: Some(p.delta),
            alpha1: Some(p.alpha1),
            alpha2: Some(p.alpha2),
            beta1: Some(p.beta1),
            beta2: Some(p.beta2),
            rho: Some(p.rho),
            min_cluster_size: Some(p.min_cluster_size),
            ambiguous_variant: Some(p.ambiguous_variant.to_string()),
            similarity_variant: Some(p.similarity_variant.to_string()),
            pair_scope: Some(p.pair_scope.to_string()),
            boundary_scope: Some(p.boundary_scope.to_string()),
            with_boundary: Some(p.with_boundary),
            mc_samples: Some(p.mc_samples),
            dispersion_center: Some(center.to_string()),
            dispersion_metric: Some(metric.to_string()),
            dispersion_normalize: Some(normalize),
            dispersion_use_likelihood: Some(use_likelihood),
        }
    }
}

impl BandwidthSection {
    fn apply(self, s: &mut BandwidthSearch) -> Result<(), HarnessError> {
        s.folds = self.folds.unwrap_or(s.folds);
        if let Some(v) = self.grid {
            let values: Vec<f64> = v
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| HarnessError::Config(format!("grid: {e}")))
                })
                .collect::<Result<_, _>>()?;
            s.grid = BandwidthGrid::Explicit(values);
        } else if self.grid_count.is_some() || self.grid_lo.is_some() || self.grid_hi.is_some() {
            let (count, lo, hi) = match BandwidthGrid::default() {
                BandwidthGrid::ScaleRelative { count, lo, hi } => (count, lo, hi),
                BandwidthGrid::Explicit(_) => unreachable!("default grid is relative"),
            };
            s.grid = BandwidthGrid::ScaleRelative {
                count: self.grid_count.unwrap_or(count),
                lo: self.grid_lo.unwrap_or(lo),
                hi: self.grid_hi.unwrap_or(hi),
            };
        }
        Ok(())
    }

    fn from_search(s: &BandwidthSearch) -> Self {
        match &s.grid {
            BandwidthGrid::Explicit(v) => Self {
                folds: Some(s.folds),
                grid: Some(join(v.iter().map(|h| format!("{h:?}")))),
                ..Default::default()
            },
            BandwidthGrid::ScaleRelative { count, lo, hi } => Self {
                folds: Some(s.folds),
                grid: None,
                grid_count: Some(*count),
                grid_lo: Some(*lo),
                grid_hi: Some(*hi),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kdi::{AmbiguousVariant, BoundaryScope, Center};
    use crate::partition::Linkage;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!((c.k_min, c.k_max), (2, 30));
        assert_eq!(c.generators.len(), 6);
    }

    #[test]
    fn file_overrides_defaults() {
        let mut c = RunConfig::default();
        c.apply_toml(
            r#"
seed = 11
k_max = 8
generators = "kmeans,single"
indices = "new,ch"

[kdi]
delta = 0.3
ambiguous_variant = "v2"
boundary_scope = "members"
dispersion_center = "median"

[bandwidth]
folds = 3
grid = "0.1, 0.5, 1.0"
"#,
        )
        .unwrap();
        assert_eq!(c.seed, 11);
        assert_eq!(c.k_max, 8);
        assert_eq!(
            c.generators,
            vec![Generator::KMeans, Generator::Agglomerative(Linkage::Single)]
        );
        assert_eq!(c.indices, vec![IndexKind::Kdi, IndexKind::CalinskiHarabasz]);
        assert_eq!(c.kdi.delta, 0.3);
        assert_eq!(c.kdi.alpha1, 1.0);
        assert_eq!(c.kdi.ambiguous_variant, AmbiguousVariant::V2);
        assert_eq!(c.kdi.boundary_scope, BoundaryScope::MembersOnly);
        assert_eq!(c.kdi.dispersion.center, Center::Median);
        assert_eq!(c.bandwidth.folds, 3);
        assert_eq!(c.bandwidth.grid, BandwidthGrid::Explicit(vec![0.1, 0.5, 1.0]));
    }

    #[test]
    fn rejects_bad_files() {
        for text in [
            "unknown_key = 1",
            "[kdi]\ndelta = 2.0",
            "k_min = 5\nk_max = 3",
            "generators = \"kmeans,spectral\"",
            "[kdi]\nsimilarity_variant = \"v9\"",
            "indices = \"\"",
        ] {
            let err = RunConfig::default().apply_toml(text).unwrap_err();
            assert!(err.is_usage(), "{text}: {err}");
        }
    }

    #[test]
    fn round_trip_through_text() {
        let mut c = RunConfig {
            seed: 99,
            k_min: 3,
            k_max: 12,
            emit_svg: true,
            format: Some(Format::Csv),
            label_column: LabelColumn::Index(2),
            output_dir: PathBuf::from("reports/x"),
            ..Default::default()
        };
        c.kdi.delta = 0.7;
        c.kdi.alpha2 = 2.5;
        c.kdi.with_boundary = true;
        for grid in [
            BandwidthGrid::Explicit(vec![0.1, 0.30000000000000004]),
            BandwidthGrid::default(),
        ] {
            c.bandwidth.grid = grid;
            let mut back = RunConfig::default();
            back.apply_toml(&c.to_toml().unwrap()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn derived_seeds_follow_run_seed() {
        let a = RunConfig {
            seed: 1,
            ..Default::default()
        };
        let b = RunConfig {
            seed: 2,
            ..Default::default()
        };
        assert_ne!(a.search().seed, b.search().seed);
        assert_ne!(a.kdi_params().seed, b.kdi_params().seed);
        assert_eq!(a.search().seed, a.clone().search().seed);
    }

    #[test]
    fn explicit_path_wins_and_missing_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 5\n").unwrap();
        assert_eq!(load_config(Some(&path)).unwrap().seed, 5);
        assert!(load_config(Some(&dir.path().join("missing.toml"))).is_err());
    }
}
