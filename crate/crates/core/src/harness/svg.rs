use std::fmt::Write as _;
use std::path::Path;

use super::{io_err, HarnessError};
use crate::data::Dataset;
use crate::partition::Partition;

/// Cluster fill colors; cluster `c` uses `PALETTE[c % 30]`.
pub const PALETTE: [&str; 30] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5",
    "#393b79", "#637939", "#8c6d31", "#843c39", "#7b4173", "#3182bd", "#e6550d", "#31a354", "#756bb1", "#636363",
];

const SIZE: f64 = 480.0;
const MARGIN: f64 = 36.0;
const TITLE_Y: f64 = 22.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Standalone SVG scatter plot of `data` colored by `partition`.
/// Three-dimensional data is projected onto its first two axes.
pub fn render_svg(data: &Dataset, partition: &Partition, title: &str) -> Result<String, HarnessError> {
    if !(2..=3).contains(&data.dim()) {
        return Err(HarnessError::Plot(format!(
            "need 2 or 3 dimensions, got {}",
            data.dim()
        )));
    }
    partition.check_len(data.len())?;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in data.points() {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    // one scale for both axes keeps shapes undistorted
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let scale = if span > 0.0 { (SIZE - 2.0 * MARGIN) / span } else { 1.0 };
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let center = SIZE / 2.0 + TITLE_Y / 2.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{h}" viewBox="0 0 {SIZE} {h}">"#,
        h = SIZE + TITLE_Y
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{TITLE_Y}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        SIZE / 2.0,
        escape(title)
    );
    if data.dim() == 3 {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle" fill="gray">projected onto axes 1 and 2</text>"#,
            SIZE / 2.0,
            TITLE_Y + 14.0
        );
    }
    for (p, &c) in data.points().zip(partition.labels()) {
        let x = SIZE / 2.0 + (p[0] - mid[0]) * scale;
        let y = center - (p[1] - mid[1]) * scale;
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}"/>"#,
            PALETTE[c % PALETTE.len()]
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Write [`render_svg`] output to `path`.
pub fn emit_svg(data: &Dataset, partition: &Partition, title: &str, path: &Path) -> Result<(), HarnessError> {
    let svg = render_svg(data, partition, title)?;
    std::fs::write(path, svg).map_err(io_err(path))
}
