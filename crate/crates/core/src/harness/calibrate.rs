use rayon::prelude::*;

use super::config::RunConfig;
use super::evaluate::{rank_candidates, RankEntry, SUCCESS_THRESHOLD};
use super::HarnessError;
use crate::data::Dataset;
use crate::indices::{adjusted_rand_index_labels, IndexKind};
use crate::kdi::{score_profiles, ClusterDensities, KdiParams};
use crate::partition::{build_candidates, Partition};

/// Grid cells as `(delta, alpha)`, with `alpha1 = alpha2 = alpha`.
pub fn calibration_grid() -> Vec<(f64, f64)> {
    let deltas = (1..=9).map(|i| i as f64 / 10.0);
    deltas.flat_map(|d| [0.5, 1.0, 2.0, 3.0].map(|a| (d, a))).collect()
}

/// Outcome of a calibration search.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub params: KdiParams,
    pub successes: usize,
    /// Number of labeled training datasets.
    pub total: usize,
    /// `(delta, alpha, successes)` for every grid cell, in grid order.
    pub cells: Vec<(f64, f64, usize)>,
}

impl Calibration {
    /// `base` with the calibrated index parameters.
    pub fn apply(&self, base: &RunConfig) -> RunConfig {
        RunConfig {
            kdi: KdiParams {
                seed: base.kdi.seed,
                ..self.params.clone()
            },
            ..base.clone()
        }
    }
}

/// Fitted densities and ARI of every candidate of one training dataset.
struct Prepared<'a> {
    data: &'a Dataset,
    candidates: Vec<(Partition, Option<ClusterDensities>, f64)>,
}

fn prepare<'a>(config: &RunConfig, data: &'a Dataset, reference: &[usize]) -> Result<Prepared<'a>, HarnessError> {
    let k_max = config.k_max.min(data.len().saturating_sub(1));
    if k_max < config.k_min {
        return Err(HarnessError::Config(format!("dataset {} is too small", data.id())));
    }
    let set = build_candidates(data, config.k_min..=k_max, config.seed, &config.generators)?;
    let search = config.search();
    let candidates = set
        .partitions
        .into_par_iter()
        .map(|p| {
            let densities = ClusterDensities::fit(data, &p, &search)
                .map_err(|e| log::warn!("{} {}: {e}", data.id(), p.source()))
                .ok();
            let ari = adjusted_rand_index_labels(p.labels(), reference).expect("candidate length matches data");
            (p, densities, ari)
        })
        .collect();
    Ok(Prepared { data, candidates })
}

fn succeeds(prepared: &Prepared<'_>, params: &KdiParams) -> bool {
    let values: Vec<Option<f64>> = prepared
        .candidates
        .iter()
        .map(|(_, d, _)| {
            d.as_ref()
                .map(|d| score_profiles(prepared.data, &d.profiles(params), params).index)
        })
        .collect();
    let entries: Vec<RankEntry<'_>> = prepared
        .candidates
        .iter()
        .zip(&values)
        .map(|((p, _, _), &value)| RankEntry {
            value,
            k: p.k(),
            source: p.source(),
        })
        .collect();
    let champion = rank_candidates(&entries, IndexKind::Kdi.direction())[0];
    prepared.candidates[champion].2 > SUCCESS_THRESHOLD
}

/// Grid-search `delta` and `alpha1 = alpha2` over [`calibration_grid`],
/// maximizing the number of training datasets on which the new index's
/// champion succeeds. Ties go to the `delta` closest to 0.5, then the smaller
/// `alpha`. Other parameters come from `config`. Densities are fitted once
/// per candidate, since the grid only changes territories and the mixture.
pub fn calibrate(config: &RunConfig, training: &[Dataset]) -> Result<Calibration, HarnessError> {
    config.validate()?;
    if training.is_empty() {
        return Err(HarnessError::Empty("no training datasets".into()));
    }
    let labeled: Vec<(&Dataset, &[usize])> = training
        .iter()
        .filter_map(|d| {
            let labels = d.labels();
            if labels.is_none() {
                log::warn!("{}: no reference labels, skipped for calibration", d.id());
            }
            labels.map(|l| (d, l))
        })
        .collect();
    if labeled.is_empty() {
        return Err(HarnessError::Empty("no training dataset has reference labels".into()));
    }
    let prepared: Vec<Prepared<'_>> = labeled
        .par_iter()
        .map(|(d, l)| prepare(config, d, l))
        .collect::<Result<_, _>>()?;

    let base = config.kdi_params();
    let cells: Vec<(f64, f64, usize)> = calibration_grid()
        .into_par_iter()
        .map(|(delta, alpha)| {
            let params = KdiParams {
                delta,
                alpha1: alpha,
                alpha2: alpha,
                ..base.clone()
            };
            let count = prepared.iter().filter(|p| succeeds(p, &params)).count();
            (delta, alpha, count)
        })
        .collect();

    let &(delta, alpha, successes) = cells
        .iter()
        .min_by(|a, b| {
            b.2.cmp(&a.2)
                .then((a.0 - 0.5).abs().total_cmp(&(b.0 - 0.5).abs()))
                .then(a.1.total_cmp(&b.1))
        })
        .expect("grid is not empty");
    Ok(Calibration {
        params: KdiParams {
            delta,
            alpha1: alpha,
            alpha2: alpha,
            ..config.kdi.clone()
        },
        successes,
        total: prepared.len(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_blobs;
    use crate::partition::Generator;

    fn quick_config() -> RunConfig {
        RunConfig {
            k_min: 2,
            k_max: 4,
            generators: vec![Generator::KMeans, Generator::Gmm],
            ..Default::default()
        }
    }

    #[test]
    fn grid_shape() {
        let g = calibration_grid();
        assert_eq!(g.len(), 36);
        assert_eq!(g[0], (0.1, 0.5));
        assert_eq!(g[35], (0.9, 3.0));
        assert!(g.contains(&(0.3, 2.0)));
    }

    #[test]
    fn easy_dataset_prefers_middle_delta() {
        let centers = [vec![0.0, 0.0], vec![20.0, 0.0], vec![0.0, 20.0], vec![20.0, 20.0]];
        let data = make_blobs(100, &centers, 1.0, 42).unwrap();
        let cal = calibrate(&quick_config(), &[data]).unwrap();
        assert_eq!(cal.total, 1);
        assert_eq!(cal.successes, 1);
        let winners = cal.cells.iter().filter(|c| c.2 == 1).count();
        assert!(winners > 18, "{winners} winning cells");
        assert_eq!(cal.params.delta, 0.5);
        assert_eq!(cal.params.alpha1, 0.5);
    }

    #[test]
    fn needs_labeled_training_data() {
        assert!(matches!(calibrate(&quick_config(), &[]), Err(HarnessError::Empty(_))));
        let unlabeled = make_blobs(10, &[vec![0.0, 0.0]], 1.0, 1)
            .unwrap()
            .with_labels(None)
            .unwrap();
        assert!(matches!(
            calibrate(&quick_config(), &[unlabeled]),
            Err(HarnessError::Empty(_))
        ));
    }

    #[test]
    fn winner_survives_config_round_trip() {
        let data = make_blobs(15, &[vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 4.0]], 1.2, 9).unwrap();
        let config = quick_config();
        let cal = calibrate(&config, std::slice::from_ref(&data)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("calibrated.toml");
        cal.apply(&config).write(&path).unwrap();
        let reloaded = crate::harness::load_config(Some(&path)).unwrap();
        assert_eq!(reloaded.kdi.delta, cal.params.delta);
        assert_eq!(reloaded.kdi.alpha1, cal.params.alpha1);
        let again = calibrate(&reloaded, &[data]).unwrap();
        assert_eq!(again, cal);
    }
}
