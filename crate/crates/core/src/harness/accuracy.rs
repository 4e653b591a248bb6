use std::path::Path;

use super::evaluate::EvaluationReport;
use super::{io_err, HarnessError};
use crate::indices::IndexKind;

/// Success counts per index over a set of datasets, with the per-dataset grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    pub indices: Vec<IndexKind>,
    /// `succeeded[j]` counts datasets where `indices[j]` succeeded.
    pub succeeded: Vec<usize>,
    /// `(dataset, flags)` with one flag per index, in input order.
    pub grid: Vec<(String, Vec<bool>)>,
    /// Datasets left out for lacking reference labels.
    pub excluded: Vec<String>,
}

impl AccuracyTable {
    pub fn total(&self) -> usize {
        self.grid.len()
    }

    /// `"succeeded/total"` for one index.
    pub fn fraction(&self, kind: IndexKind) -> Option<String> {
        let j = self.indices.iter().position(|k| *k == kind)?;
        Some(format!("{}/{}", self.succeeded[j], self.total()))
    }

    pub fn accuracy_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "succeeded", "total", "fraction"])
            .expect("writing to memory");
        for (kind, &ok) in self.indices.iter().zip(&self.succeeded) {
            let total = self.total();
            w.write_record([
                kind.code(),
                &ok.to_string(),
                &total.to_string(),
                &format!("{ok}/{total}"),
            ])
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
    }

    /// `S`/`F` per dataset and index.
    pub fn grid_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["dataset"];
        header.extend(self.indices.iter().map(|k| k.code()));
        w.write_record(&header).expect("writing to memory");
        for (id, flags) in &self.grid {
            let mut rec = vec![id.as_str()];
            rec.extend(flags.iter().map(|&ok| if ok { "S" } else { "F" }));
            w.write_record(&rec).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
    }

    /// Write `accuracy.csv` and `grid.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (name, text) in [("accuracy.csv", self.accuracy_csv()), ("grid.csv", self.grid_csv())] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(io_err(&path))?;
        }
        Ok(())
    }
}

/// Count champion successes per index. Reports without reference labels are
/// excluded with a warning; all reports must share one index list.
pub fn aggregate_accuracy(reports: &[EvaluationReport]) -> Result<AccuracyTable, HarnessError> {
    if reports.is_empty() {
        return Err(HarnessError::Empty("no evaluation reports".into()));
    }
    let mut excluded = Vec::new();
    let mut table: Option<AccuracyTable> = None;
    for r in reports {
        let flags: Option<Vec<bool>> = r.outcomes.iter().map(|o| o.success).collect();
        let Some(flags) = flags else {
            log::warn!("{}: no reference labels, excluded from accuracy", r.dataset);
            excluded.push(r.dataset.clone());
            continue;
        };
        let kinds: Vec<IndexKind> = r.outcomes.iter().map(|o| o.kind).collect();
        let t = table.get_or_insert_with(|| AccuracyTable {
            succeeded: vec![0; kinds.len()],
            indices: kinds.clone(),
            grid: Vec::new(),
            excluded: Vec::new(),
        });
        if t.indices != kinds {
            return Err(HarnessError::Config(format!(
                "{}: index list differs from other reports",
                r.dataset
            )));
        }
        for (count, &ok) in t.succeeded.iter_mut().zip(&flags) {
            *count += usize::from(ok);
        }
        t.grid.push((r.dataset.clone(), flags));
    }
    let mut table = table.ok_or_else(|| HarnessError::Empty("no report has reference labels".into()))?;
    table.excluded = excluded;
    Ok(table)
}
