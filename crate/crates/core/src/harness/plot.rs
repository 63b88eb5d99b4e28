//! Self-contained SVG line charts: mean evaluation return per iteration with a
//! ±1 std band, one line per series.
//!
//! Each point is also emitted as a `<circle>` carrying `data-iteration`,
//! `data-mean` and `data-std`, and the plot group records its axis mapping in
//! `data-x-range`/`data-y-range`, so every number can be checked against the CSVs.

use std::fmt::Write as _;
use std::path::Path;

use super::AggregateRow;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<AggregateRow>,
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        let span = (self.x.1 - self.x.0).max(f64::MIN_POSITIVE);
        LEFT + (x - self.x.0) / span * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let span = (self.y.1 - self.y.0).max(f64::MIN_POSITIVE);
        HEIGHT - BOTTOM - (y - self.y.0) / span * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn axes_for(series: &[Series]) -> Axes {
    let pts = series.iter().flat_map(|s| &s.points);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in pts {
        x0 = x0.min(p.iteration as f64);
        x1 = x1.max(p.iteration as f64);
        y0 = y0.min(p.mean - p.std);
        y1 = y1.max(p.mean + p.std);
    }
    if x1 <= x0 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if y1 <= y0 {
        let pad = y0.abs().max(1.0) * 0.1;
        y0 -= pad;
        y1 += pad;
    } else {
        let pad = (y1 - y0) * 0.05;
        y0 -= pad;
        y1 += pad;
    }
    Axes { x: (x0, x1), y: (y0, y1) }
}

/// Renders the chart. Series keep the given order in the legend.
pub fn render_svg(title: &str, series: &[Series]) -> Result<String> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Contract("nothing to plot: no rows".into()));
    }
    let ax = axes_for(series);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0,
        escape(title)
    );
    let (bx0, bx1, by0, by1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r##"<g id="plot" data-x-range="{} {} {bx0} {bx1}" data-y-range="{} {} {by1} {by0}">"##,
        ax.x.0, ax.x.1, ax.y.0, ax.y.1
    );
    let _ = writeln!(
        out,
        r##"<rect x="{bx0}" y="{by0}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        bx1 - bx0,
        by1 - by0
    );
    for k in 0..=4 {
        let fx = ax.x.0 + (ax.x.1 - ax.x.0) * k as f64 / 4.0;
        let fy = ax.y.0 + (ax.y.1 - ax.y.0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.0}</text>"#,
            ax.px(fx),
            by1 + 18.0,
            fx
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            bx0 - 6.0,
            ax.py(fy) + 4.0,
            fy
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">iteration</text>"#,
        (bx0 + bx1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">mean evaluation return</text>"#,
        (by0 + by1) / 2.0
    );

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let label = escape(&s.label);
        if s.points.is_empty() {
            continue;
        }
        let mut band = String::new();
        for (k, p) in s.points.iter().enumerate() {
            let _ = write!(
                band,
                "{}{} {} ",
                if k == 0 { "M" } else { "L" },
                ax.px(p.iteration as f64),
                ax.py(p.mean + p.std)
            );
        }
        for p in s.points.iter().rev() {
            let _ = write!(band, "L{} {} ", ax.px(p.iteration as f64), ax.py(p.mean - p.std));
        }
        band.push('Z');
        let _ = writeln!(
            out,
            r#"<path class="band" data-series="{label}" d="{band}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#
        );
        if s.points.len() > 1 {
            let line: Vec<String> = s
                .points
                .iter()
                .map(|p| format!("{},{}", ax.px(p.iteration as f64), ax.py(p.mean)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline class="mean" data-series="{label}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                line.join(" ")
            );
        }
        for p in &s.points {
            let _ = writeln!(
                out,
                r#"<circle class="point" data-series="{label}" data-iteration="{}" data-mean="{}" data-std="{}" cx="{}" cy="{}" r="2.5" fill="{color}"/>"#,
                p.iteration,
                p.mean,
                p.std,
                ax.px(p.iteration as f64),
                ax.py(p.mean)
            );
        }
        let ly = by0 + 10.0 + 18.0 * si as f64;
        let _ = writeln!(
            out,
            r#"<g class="legend-entry" data-series="{label}"><rect x="{}" y="{}" width="14" height="4" fill="{color}"/><text x="{}" y="{}">{label}</text></g>"#,
            bx1 + 12.0,
            ly - 4.0,
            bx1 + 32.0,
            ly + 2.0
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

pub fn emit_plot(path: &Path, title: &str, series: &[Series]) -> Result<()> {
    let svg = render_svg(title, series)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
