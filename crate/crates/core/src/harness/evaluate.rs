use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::RunConfig;
use super::svg::emit_svg;
use super::{io_err, HarnessError};
use crate::data::Dataset;
use crate::indices::{adjusted_rand_index_labels, calinski_harabasz, davies_bouldin, silhouette, Direction, IndexKind};
use crate::kdi::{kdi_index, KdiScore};
use crate::partition::{build_candidates, CandidateSet, Partition};

/// A champion succeeds when its ARI against the reference is strictly greater than this.
pub const SUCCESS_THRESHOLD: f64 = 0.95;

/// Number of top-ranked candidates shown per index.
const TOP: usize = 5;

/// Scores of one candidate partition.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRow {
    pub source: String,
    pub k: usize,
    /// One entry per index in the run's index list; `None` when undefined.
    pub scores: Vec<Option<f64>>,
    /// Sub-index detail when the new index was requested and defined.
    pub kdi: Option<KdiScore>,
    /// ARI against the dataset's reference labels, when present.
    pub ari: Option<f64>,
}

/// Ranking and champion of one index.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexOutcome {
    pub kind: IndexKind,
    /// Every candidate exactly once, best first.
    pub ranking: Vec<usize>,
    pub champion_ari: Option<f64>,
    /// `None` when the dataset has no reference labels.
    pub success: Option<bool>,
}

impl IndexOutcome {
    pub fn champion(&self) -> usize {
        self.ranking[0]
    }

    pub fn top(&self) -> &[usize] {
        &self.ranking[..self.ranking.len().min(TOP)]
    }
}

#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub dataset: String,
    pub n_points: usize,
    pub dim: usize,
    pub has_reference: bool,
    pub candidates: Vec<Partition>,
    pub rows: Vec<CandidateRow>,
    pub outcomes: Vec<IndexOutcome>,
    /// Candidates dropped because another generator produced the same grouping.
    pub duplicates: usize,
    pub warnings: Vec<String>,
    pub elapsed: Duration,
    pub config: RunConfig,
}

/// One value to rank, with the fields used to break ties.
#[derive(Debug, Clone, Copy)]
pub struct RankEntry<'a> {
    pub value: Option<f64>,
    pub k: usize,
    pub source: &'a str,
}

/// Positions of `entries`, best first under `direction`. Ties go to the
/// smaller K, then the lexicographically smaller source tag. Undefined or
/// non-finite values come last.
pub fn rank_candidates(entries: &[RankEntry<'_>], direction: Direction) -> Vec<usize> {
    let defined = |e: &RankEntry<'_>| e.value.filter(|v| v.is_finite());
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (&entries[a], &entries[b]);
        let by_value = match (defined(ea), defined(eb)) {
            (Some(x), Some(y)) => match direction {
                Direction::HigherBetter => y.total_cmp(&x),
                Direction::SmallerBetter => x.total_cmp(&y),
            },
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        by_value.then(ea.k.cmp(&eb.k)).then_with(|| ea.source.cmp(eb.source))
    });
    order
}

/// Generate candidates for `data` and evaluate them.
pub fn evaluate_dataset(config: &RunConfig, data: &Dataset) -> Result<EvaluationReport, HarnessError> {
    config.validate()?;
    let mut warnings = Vec::new();
    let k_max = config.k_max.min(data.len().saturating_sub(1));
    if k_max < config.k_max {
        warnings.push(format!("k_max lowered to {k_max}: dataset has {} points", data.len()));
    }
    if k_max < config.k_min {
        return Err(HarnessError::Config(format!(
            "dataset {} has {} points, too few for k_min = {}",
            data.id(),
            data.len(),
            config.k_min
        )));
    }
    let set = build_candidates(data, config.k_min..=k_max, config.seed, &config.generators)?;
    let mut report = evaluate_candidates(config, data, set)?;
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    Ok(report)
}

/// Score, rank and judge an existing candidate set.
pub fn evaluate_candidates(
    config: &RunConfig,
    data: &Dataset,
    set: CandidateSet,
) -> Result<EvaluationReport, HarnessError> {
    config.validate()?;
    let start = Instant::now();
    if set.partitions.is_empty() {
        return Err(HarnessError::Empty(format!(
            "no candidate partitions for {}",
            data.id()
        )));
    }
    for p in &set.partitions {
        p.check_len(data.len())?;
    }
    let params = config.kdi_params();
    let search = config.search();
    let reference = data.labels();

    let scored: Vec<(CandidateRow, Vec<String>)> = set
        .partitions
        .par_iter()
        .map(|p| {
            let mut warnings = Vec::new();
            let mut kdi = None;
            let mut note = |kind: IndexKind, e: &dyn std::fmt::Display| {
                warnings.push(format!("{} {}: {e}", p.source(), kind.code()));
                None
            };
            let scores = config
                .indices
                .iter()
                .map(|&kind| {
                    let value = match kind {
                        IndexKind::CalinskiHarabasz => calinski_harabasz(data, p).map(|s| s.value),
                        IndexKind::Silhouette => silhouette(data, p).map(|s| s.value),
                        IndexKind::DaviesBouldin => davies_bouldin(data, p).map(|s| s.value),
                        IndexKind::Kdi => match kdi_index(data, p, &params, &search) {
                            Ok(score) => {
                                let v = score.index;
                                kdi = Some(score);
                                return Some(v);
                            }
                            Err(e) => return note(kind, &e),
                        },
                    };
                    value.map_or_else(|e| note(kind, &e), Some)
                })
                .collect();
            let ari = reference
                .map(|r| adjusted_rand_index_labels(p.labels(), r).expect("lengths checked against the dataset"));
            let row = CandidateRow {
                source: p.source().to_string(),
                k: p.k(),
                scores,
                kdi,
                ari,
            };
            (row, warnings)
        })
        .collect();

    let mut warnings = set.warnings;
    let mut rows = Vec::with_capacity(scored.len());
    for (row, mut w) in scored {
        warnings.append(&mut w);
        rows.push(row);
    }

    let outcomes = config
        .indices
        .iter()
        .enumerate()
        .map(|(col, &kind)| {
            let entries: Vec<RankEntry<'_>> = rows
                .iter()
                .map(|r| RankEntry {
                    value: r.scores[col],
                    k: r.k,
                    source: &r.source,
                })
                .collect();
            let ranking = rank_candidates(&entries, kind.direction());
            let champion_ari = rows[ranking[0]].ari;
            IndexOutcome {
                kind,
                ranking,
                champion_ari,
                success: champion_ari.map(|a| a > SUCCESS_THRESHOLD),
            }
        })
        .collect();

    let elapsed = start.elapsed();
    log::info!("{}: {} candidates scored in {:.2?}", data.id(), rows.len(), elapsed);
    Ok(EvaluationReport {
        dataset: data.id().to_string(),
        n_points: data.len(),
        dim: data.dim(),
        has_reference: reference.is_some(),
        candidates: set.partitions,
        rows,
        outcomes,
        duplicates: set.duplicates,
        warnings,
        elapsed,
        config: config.clone(),
    })
}

fn fmt_value(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite())
        .map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl EvaluationReport {
    pub fn outcome(&self, kind: IndexKind) -> Option<&IndexOutcome> {
        self.outcomes.iter().find(|o| o.kind == kind)
    }

    fn column(&self, kind: IndexKind) -> Option<usize> {
        self.config.indices.iter().position(|k| *k == kind)
    }

    /// One row per candidate, in candidate order.
    pub fn report_csv(&self) -> String {
        let with_kdi = self.column(IndexKind::Kdi).is_some();
        let with_boundary = with_kdi && self.config.kdi.with_boundary;
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["dataset".to_string(), "source".into(), "k".into()];
        header.extend(self.config.indices.iter().map(|k| k.code().to_string()));
        if with_kdi {
            header.extend(["ambiguous".into(), "similarity".into()]);
            if with_boundary {
                header.push("boundary".into());
            }
            header.push("bandwidths".into());
        }
        header.push("ari".into());
        w.write_record(&header).expect("writing to memory");
        for row in &self.rows {
            let mut rec = vec![self.dataset.clone(), row.source.clone(), row.k.to_string()];
            rec.extend(row.scores.iter().map(|v| fmt_value(*v)));
            if with_kdi {
                let kdi = row.kdi.as_ref();
                rec.push(fmt_value(kdi.map(|s| s.ambiguous)));
                rec.push(fmt_value(kdi.map(|s| s.similarity)));
                if with_boundary {
                    rec.push(fmt_value(kdi.and_then(|s| s.boundary)));
                }
                rec.push(kdi.map_or_else(
                    || "NA".to_string(),
                    |s| s.bandwidths.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(";"),
                ));
            }
            rec.push(fmt_value(row.ari));
            w.write_record(&rec).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
    }

    /// Human-readable summary: top candidates and champion verdict per index,
    /// warnings, and the configuration used.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset: {}", self.dataset);
        let _ = writeln!(s, "points: {}, dimensions: {}", self.n_points, self.dim);
        let _ = writeln!(
            s,
            "candidates: {} ({} duplicates removed)",
            self.rows.len(),
            self.duplicates
        );
        let _ = writeln!(s, "reference labels: {}", if self.has_reference { "yes" } else { "no" });
        for o in &self.outcomes {
            let col = self.column(o.kind).expect("outcome for a configured index");
            let better = match o.kind.direction() {
                Direction::HigherBetter => "higher is better",
                Direction::SmallerBetter => "smaller is better",
            };
            let _ = writeln!(s, "\n[{}] {better}", o.kind.code());
            let _ = writeln!(s, "  rank  k   value                 ari      source");
            for (rank, &i) in o.top().iter().enumerate() {
                let r = &self.rows[i];
                let _ = writeln!(
                    s,
                    "  {:<5} {:<3} {:<21} {:<8} {}",
                    rank + 1,
                    r.k,
                    fmt_value(r.scores[col]),
                    r.ari.map_or_else(|| "NA".to_string(), |a| format!("{a:.4}")),
                    r.source
                );
            }
            match o.success {
                Some(ok) => {
                    let _ = writeln!(
                        s,
                        "  champion ARI {:.4}: {}",
                        o.champion_ari.unwrap_or(f64::NAN),
                        if ok { "success" } else { "failure" }
                    );
                }
                None => {
                    let _ = writeln!(s, "  no reference labels, success not judged");
                }
            }
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(s, "\nwarnings:");
            for w in &self.warnings {
                let _ = writeln!(s, "  {w}");
            }
        }
        let _ = writeln!(s, "\nconfiguration:");
        match self.config.to_toml() {
            Ok(t) => s.push_str(&t),
            Err(e) => {
                let _ = writeln!(s, "  unavailable: {e}");
            }
        }
        s
    }

    /// Write `report.csv`, `summary.txt` and, when enabled, the top-5 plots into `dir`.
    pub fn write(&self, data: &Dataset, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let report = dir.join("report.csv");
        std::fs::write(&report, self.report_csv()).map_err(io_err(&report))?;
        let summary = dir.join("summary.txt");
        std::fs::write(&summary, self.summary()).map_err(io_err(&summary))?;
        if self.config.emit_svg {
            self.write_plots(data, dir)?;
        }
        Ok(())
    }

    fn write_plots(&self, data: &Dataset, dir: &Path) -> Result<(), HarnessError> {
        if !(2..=3).contains(&data.dim()) {
            log::warn!("{}: plots need 2 or 3 dimensions, skipping", self.dataset);
            return Ok(());
        }
        for o in &self.outcomes {
            let col = self.column(o.kind).expect("outcome for a configured index");
            for (rank, &i) in o.top().iter().enumerate() {
                let r = &self.rows[i];
                let value = r.scores[col].map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
                let ari = r.ari.map_or_else(|| "NA".to_string(), |a| format!("{a:.4}"));
                let title = format!("K={} {}={value} AR={ari}", r.k, o.kind.code());
                let path = dir.join(format!("top5_{}_{}.svg", o.kind.code(), rank + 1));
                emit_svg(data, &self.candidates[i], &title, &path)?;
            }
        }
        Ok(())
    }
}
