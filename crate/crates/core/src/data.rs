//! Dataset ingestion: headerless CSV, whitespace-delimited text and a numeric
//! ARFF subset, plus a seeded Gaussian blob generator for fixtures.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no data rows found")]
    Empty,
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// Supported on-disk layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Whitespace,
    Arff,
}

impl Format {
    /// Guess from a file extension: `.arff` is ARFF, `.csv` is CSV, anything else whitespace.
    pub fn from_path(path: &Path) -> Format {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("arff") => Format::Arff,
            Some("csv") => Format::Csv,
            _ => Format::Whitespace,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "whitespace" | "ws" | "txt" => Ok(Format::Whitespace),
            "arff" => Ok(Format::Arff),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Whitespace => "whitespace",
            Format::Arff => "arff",
        })
    }
}

/// Which column of a delimited file holds the reference labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    None,
    Index(usize),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(LabelColumn::None),
            "last" => Ok(LabelColumn::Last),
            n => n
                .parse::<usize>()
                .map(LabelColumn::Index)
                .map_err(|_| format!("label column must be an index, 'last' or 'none', got '{n}'")),
        }
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::None => f.write_str("none"),
            LabelColumn::Last => f.write_str("last"),
            LabelColumn::Index(i) => write!(f, "{i}"),
        }
    }
}

/// `n` points of dimension `dim`, stored row-major, with optional reference labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    id: String,
    dim: usize,
    coords: Vec<f64>,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    /// Build from row-major coordinates. Checks shape, finiteness and label length.
    pub fn new(
        id: impl Into<String>,
        dim: usize,
        coords: Vec<f64>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self, DataError> {
        if dim == 0 {
            return Err(DataError::Invalid("dimension must be at least 1".into()));
        }
        if coords.is_empty() {
            return Err(DataError::Empty);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(DataError::Invalid(format!(
                "{} coordinates is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(DataError::Invalid(format!(
                "non-finite coordinate in point {}",
                pos / dim
            )));
        }
        let n = coords.len() / dim;
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(DataError::Invalid(format!("{} labels for {n} points", l.len())));
            }
        }
        Ok(Self {
            id: id.into(),
            dim,
            coords,
            labels,
        })
    }

    pub fn from_rows(id: impl Into<String>, rows: &[Vec<f64>], labels: Option<Vec<usize>>) -> Result<Self, DataError> {
        let dim = rows.first().map(Vec::len).ok_or(DataError::Empty)?;
        if let Some(i) = rows.iter().position(|r| r.len() != dim) {
            return Err(DataError::Invalid(format!(
                "row {i} has {} columns, expected {dim}",
                rows[i].len()
            )));
        }
        Self::new(id, dim, rows.concat(), labels)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self, DataError> {
        if let Some(l) = &labels {
            if l.len() != self.len() {
                return Err(DataError::Invalid(format!(
                    "{} labels for {} points",
                    l.len(),
                    self.len()
                )));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Gather the coordinates of the given rows into a new row-major buffer.
    pub fn gather(&self, rows: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            out.extend_from_slice(self.point(r));
        }
        out
    }

    /// Serialize as headerless CSV; labels (if any) go in a trailing column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.points().enumerate() {
            for (j, c) in p.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                // `{:?}` is the shortest representation that round-trips exactly.
                let _ = write!(out, "{c:?}");
            }
            if let Some(l) = &self.labels {
                let _ = write!(out, ",{}", l[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), DataError> {
        fs::write(path, self.to_csv()).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Read a dataset from `path`. The dataset id is the file stem.
pub fn load_dataset(path: &Path, format: Format, label_column: LabelColumn) -> Result<Dataset, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    Ok(parse_dataset(&text, format, label_column)?.with_id(id))
}

/// Parse dataset text in the given format. For ARFF the nominal attribute is
/// always the label and `label_column` is ignored.
pub fn parse_dataset(text: &str, format: Format, label_column: LabelColumn) -> Result<Dataset, DataError> {
    match format {
        Format::Csv => parse_delimited(text, label_column, |l| l.split(',').map(str::trim).collect()),
        Format::Whitespace => parse_delimited(text, label_column, |l| l.split_whitespace().collect()),
        Format::Arff => parse_arff(text),
    }
}

/// Remaps raw label tokens to 0..k-1 in order of first appearance.
#[derive(Default)]
struct LabelMap {
    ids: HashMap<String, usize>,
}

impl LabelMap {
    fn id(&mut self, raw: &str) -> usize {
        let next = self.ids.len();
        *self.ids.entry(raw.to_string()).or_insert(next)
    }
}

fn parse_number(tok: &str, line: usize) -> Result<f64, DataError> {
    if tok.is_empty() || tok == "?" || tok.eq_ignore_ascii_case("nan") || tok.eq_ignore_ascii_case("na") {
        return Err(DataError::Parse {
            line,
            msg: format!("missing value '{tok}'"),
        });
    }
    let v: f64 = tok.parse().map_err(|_| DataError::Parse {
        line,
        msg: format!("non-numeric value '{tok}'"),
    })?;
    if !v.is_finite() {
        return Err(DataError::Parse {
            line,
            msg: format!("non-finite value '{tok}'"),
        });
    }
    Ok(v)
}

fn parse_delimited<'a>(
    text: &'a str,
    label_column: LabelColumn,
    split: impl Fn(&'a str) -> Vec<&'a str>,
) -> Result<Dataset, DataError> {
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    let mut map = LabelMap::default();
    let mut width: Option<usize> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let toks = split(trimmed);
        match width {
            None => width = Some(toks.len()),
            Some(w) if w != toks.len() => {
                return Err(DataError::Parse {
                    line,
                    msg: format!("expected {w} columns, found {}", toks.len()),
                })
            }
            _ => {}
        }
        let label_idx = match label_column {
            LabelColumn::None => None,
            LabelColumn::Last => Some(toks.len() - 1),
            LabelColumn::Index(i) if i < toks.len() => Some(i),
            LabelColumn::Index(i) => {
                return Err(DataError::Parse {
                    line,
                    msg: format!("label column {i} out of range for {} columns", toks.len()),
                })
            }
        };
        if label_idx.is_some() && toks.len() < 2 {
            return Err(DataError::Parse {
                line,
                msg: "no feature columns besides the label".into(),
            });
        }
        for (j, tok) in toks.iter().enumerate() {
            if Some(j) == label_idx {
                if tok.is_empty() || *tok == "?" {
                    return Err(DataError::Parse {
                        line,
                        msg: "missing label".into(),
                    });
                }
                labels.push(map.id(tok));
            } else {
                coords.push(parse_number(tok, line)?);
            }
        }
    }

    let width = width.ok_or(DataError::Empty)?;
    let dim = if label_column == LabelColumn::None {
        width
    } else {
        width - 1
    };
    let labels = (label_column != LabelColumn::None).then_some(labels);
    Dataset::new("dataset", dim, coords, labels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ArffAttr {
    Numeric,
    Nominal,
}

fn parse_arff(text: &str) -> Result<Dataset, DataError> {
    let mut attrs = Vec::new();
    let mut in_data = false;
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    let mut map = LabelMap::default();
    let mut rows = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if !in_data {
            let lower = trimmed.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                continue;
            } else if lower.starts_with("@attribute") {
                attrs.push(parse_arff_attribute(trimmed, line)?);
            } else if lower.starts_with("@data") {
                in_data = true;
                let nominal = attrs.iter().filter(|a| **a == ArffAttr::Nominal).count();
                if nominal > 1 {
                    return Err(DataError::Parse {
                        line,
                        msg: format!("{nominal} nominal attributes; at most one class attribute is supported"),
                    });
                }
                if !attrs.contains(&ArffAttr::Numeric) {
                    return Err(DataError::Parse {
                        line,
                        msg: "no numeric attributes".into(),
                    });
                }
            } else {
                return Err(DataError::Parse {
                    line,
                    msg: format!("unexpected header line '{trimmed}'"),
                });
            }
            continue;
        }
        let toks: Vec<&str> = trimmed
            .split(',')
            .map(|t| t.trim().trim_matches(|c| c == '\'' || c == '"'))
            .collect();
        if toks.len() != attrs.len() {
            return Err(DataError::Parse {
                line,
                msg: format!("expected {} values, found {}", attrs.len(), toks.len()),
            });
        }
        for (tok, attr) in toks.iter().zip(&attrs) {
            match attr {
                ArffAttr::Numeric => coords.push(parse_number(tok, line)?),
                ArffAttr::Nominal => {
                    if tok.is_empty() || *tok == "?" {
                        return Err(DataError::Parse {
                            line,
                            msg: "missing class value".into(),
                        });
                    }
                    labels.push(map.id(tok));
                }
            }
        }
        rows += 1;
    }

    if !in_data {
        return Err(DataError::Parse {
            line: text.lines().count().max(1),
            msg: "missing @data section".into(),
        });
    }
    if rows == 0 {
        return Err(DataError::Empty);
    }
    let dim = attrs.iter().filter(|a| **a == ArffAttr::Numeric).count();
    let labels = attrs.contains(&ArffAttr::Nominal).then_some(labels);
    Dataset::new("dataset", dim, coords, labels)
}

fn parse_arff_attribute(line_text: &str, line: usize) -> Result<ArffAttr, DataError> {
    // "@attribute" <name> <type>; name may be quoted.
    let rest = line_text["@attribute".len()..].trim_start();
    let after_name = if let Some(q) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        let close = rest[1..].find(q).ok_or_else(|| DataError::Parse {
            line,
            msg: "unterminated quoted attribute name".into(),
        })?;
        &rest[close + 2..]
    } else {
        match rest.find(char::is_whitespace) {
            Some(i) => &rest[i..],
            None => "",
        }
    };
    let ty = after_name.trim();
    if ty.starts_with('{') {
        return Ok(ArffAttr::Nominal);
    }
    match ty.to_ascii_lowercase().as_str() {
        "numeric" | "real" => Ok(ArffAttr::Numeric),
        // integer-typed class columns are common in benchmark corpora
        "integer" => Ok(ArffAttr::Nominal),
        other => Err(DataError::Parse {
            line,
            msg: format!("unsupported attribute type '{other}'"),
        }),
    }
}

/// Read one label per line (blank lines ignored), remapped by first occurrence.
pub fn parse_labels(text: &str) -> Result<Vec<usize>, DataError> {
    let mut map = LabelMap::default();
    let labels: Vec<usize> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| map.id(l))
        .collect();
    if labels.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(labels)
}

/// Isotropic Gaussian samples around each center. Labels record the generating component.
pub fn make_blobs(per_cluster: usize, centers: &[Vec<f64>], sigma: f64, seed: u64) -> Result<Dataset, DataError> {
    let sigmas = vec![sigma; centers.len()];
    make_blobs_with_sigmas(per_cluster, centers, &sigmas, seed)
}

/// Like [`make_blobs`] with a separate standard deviation per center.
pub fn make_blobs_with_sigmas(
    per_cluster: usize,
    centers: &[Vec<f64>],
    sigmas: &[f64],
    seed: u64,
) -> Result<Dataset, DataError> {
    if centers.is_empty() || per_cluster == 0 {
        return Err(DataError::Invalid(
            "need at least one center and one point per cluster".into(),
        ));
    }
    if sigmas.len() != centers.len() {
        return Err(DataError::Invalid("one sigma per center required".into()));
    }
    let dim = centers[0].len();
    if centers.iter().any(|c| c.len() != dim) {
        return Err(DataError::Invalid("centers have mismatched dimensions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(centers.len() * per_cluster * dim);
    let mut labels = Vec::with_capacity(centers.len() * per_cluster);
    for (k, (center, &sigma)) in centers.iter().zip(sigmas).enumerate() {
        if !(sigma > 0.0) {
            return Err(DataError::Invalid(format!("sigma must be positive, got {sigma}")));
        }
        let normal = Normal::new(0.0, sigma).map_err(|e| DataError::Invalid(format!("sigma {sigma}: {e}")))?;
        for _ in 0..per_cluster {
            coords.extend(center.iter().map(|c| c + normal.sample(&mut rng)));
            labels.push(k);
        }
    }
    Dataset::new("blobs", dim, coords, Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_without_labels() {
        let d = parse_dataset("0,0\n1,1\n", Format::Csv, LabelColumn::None).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim(), 2);
        assert!(d.labels().is_none());
        assert_eq!(d.point(1), &[1.0, 1.0]);
    }

    #[test]
    fn csv_with_label_column() {
        let d = parse_dataset("0,0,0\n5,5,1\n", Format::Csv, LabelColumn::Index(2)).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.labels().unwrap(), &[0, 1]);
    }

    #[test]
    fn label_remap_is_first_occurrence() {
        let d = parse_dataset("1 7\n2 3\n3 7\n4 9\n", Format::Whitespace, LabelColumn::Last).unwrap();
        assert_eq!(d.labels().unwrap(), &[0, 1, 0, 2]);
    }

    #[test]
    fn whitespace_mixed_separators() {
        let d = parse_dataset("1.5\t 2\n  3    4.25\n", Format::Whitespace, LabelColumn::None).unwrap();
        assert_eq!(d.coords(), &[1.5, 2.0, 3.0, 4.25]);
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = parse_dataset("0,0\n1,1,1\n", Format::Csv, LabelColumn::None).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn non_numeric_reports_line() {
        let err = parse_dataset("0,0\n\n1,x\n", Format::Csv, LabelColumn::None).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn missing_value_is_an_error() {
        let err = parse_dataset("0,?\n", Format::Csv, LabelColumn::None).unwrap_err();
        assert!(err.to_string().contains("missing"));
    }

    #[test]
    fn empty_file_is_distinct_error() {
        for fmt in [Format::Csv, Format::Whitespace] {
            let err = parse_dataset("\n  \n", fmt, LabelColumn::None).unwrap_err();
            assert!(matches!(err, DataError::Empty));
        }
        let err = parse_dataset(
            "@relation r\n@attribute x numeric\n@data\n",
            Format::Arff,
            LabelColumn::None,
        )
        .unwrap_err();
        assert!(matches!(err, DataError::Empty));
    }

    const ARFF: &str = "% four points
@RELATION toy
@attribute x numeric
@attribute 'y coord' NUMERIC
@attribute class {1,2}
@data
0.0, 0.5, 2
1.0, 1.5, 2
% interleaved comment
10.0, 10.5, 1
11.0, 11.5, 1
";

    #[test]
    fn arff_fixture() {
        let d = parse_dataset(ARFF, Format::Arff, LabelColumn::None).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.coords(), &[0.0, 0.5, 1.0, 1.5, 10.0, 10.5, 11.0, 11.5]);
        assert_eq!(d.labels().unwrap(), &[0, 0, 1, 1]);
    }

    #[test]
    fn arff_rejects_string_attribute() {
        let text = "@relation r\n@attribute s string\n@data\nabc\n";
        let err = parse_dataset(text, Format::Arff, LabelColumn::None).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 2, .. }));
    }

    #[test]
    fn arff_row_width_mismatch() {
        let text = "@relation r\n@attribute x numeric\n@attribute y numeric\n@data\n1,2\n3\n";
        let err = parse_dataset(text, Format::Arff, LabelColumn::None).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 6, .. }));
    }

    #[test]
    fn blobs_shape_and_determinism() {
        let a = make_blobs(3, &[vec![0.0, 0.0]], 1.0, 7).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a.labels().unwrap(), &[0, 0, 0]);
        let b = make_blobs(3, &[vec![0.0, 0.0]], 1.0, 7).unwrap();
        assert_eq!(a.coords(), b.coords());
    }

    #[test]
    fn blobs_stay_near_centers() {
        let centers = vec![vec![0.0, 0.0], vec![100.0, 100.0]];
        let d = make_blobs(2, &centers, 0.1, 3).unwrap();
        for (p, &l) in d.points().zip(d.labels().unwrap()) {
            let dist: f64 = p
                .iter()
                .zip(&centers[l])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(dist < 10.0 * 0.1);
        }
    }

    #[test]
    fn blobs_reject_mismatched_centers() {
        assert!(make_blobs(2, &[vec![0.0], vec![1.0, 2.0]], 1.0, 0).is_err());
    }

    #[test]
    fn dataset_rejects_non_finite() {
        assert!(Dataset::new("x", 1, vec![f64::NAN], None).is_err());
    }
}
