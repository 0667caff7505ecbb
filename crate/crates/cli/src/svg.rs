//! Standalone SVG rendering of plot series on a fixed 800x600 canvas.
//! Output depends only on the series, so identical inputs give identical bytes.

use std::fmt::Write;

use pvaudit::diagnostics::{PlotKind, PlotSeries, RefKind};

use crate::numfmt::{fmt_exact, fmt_num};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn c(v: f64) -> String {
    format!("{v:.2}")
}

fn labels(kind: PlotKind) -> (&'static str, &'static str, &'static str) {
    match kind {
        PlotKind::PvalueRank => ("P-value plot", "Rank", "p-value"),
        PlotKind::Expectation => (
            "P-value expectation plot",
            "Expected -log10(p) under the null",
            "Observed -log10(p)",
        ),
        PlotKind::Volcano => ("Volcano plot", "Risk ratio", "-log10(p)"),
    }
}

fn frame(series: &PlotSeries) -> Frame {
    let xs = series.points.iter().map(|p| p.x);
    let ys = series.points.iter().map(|p| p.y);
    let (xmin, xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let mut ymax = ys.fold(0.0f64, f64::max);
    for line in &series.reference_lines {
        if line.kind == RefKind::SmallestPMarker {
            ymax = ymax.max(line.parameters[0]);
        }
    }
    match series.kind {
        PlotKind::PvalueRank => Frame {
            x0: 0.0,
            x1: (series.n.max(1)) as f64 + 1.0,
            y0: 0.0,
            y1: 1.0,
        },
        PlotKind::Expectation => {
            let top = if xmax.is_finite() { xmax.max(ymax) } else { ymax };
            let top = (top * 1.05).max(1.0);
            Frame {
                x0: 0.0,
                x1: top,
                y0: 0.0,
                y1: top,
            }
        }
        PlotKind::Volcano => {
            let (lo, hi) = if xmin.is_finite() { (xmin.min(1.0), xmax.max(1.0)) } else { (0.9, 1.1) };
            let pad = ((hi - lo) * 0.05).max(0.01);
            Frame {
                x0: lo - pad,
                x1: hi + pad,
                y0: 0.0,
                y1: (ymax * 1.05).max(1.0),
            }
        }
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

/// Renders the series as an SVG document.
pub fn render(series: &PlotSeries) -> String {
    let f = frame(series);
    let (title, xlabel, ylabel) = labels(series.kind);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" viewBox="0 0 800 600" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="800" height="600" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="400" y="28" text-anchor="middle" font-size="16">{title} (n = {})</text>"#,
        series.n
    );

    // axes
    let (bx, by) = (LEFT, HEIGHT - BOTTOM);
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{}" y1="{}" x2="{}" y2="{}"/><line x1="{}" y1="{}" x2="{}" y2="{}"/></g>"#,
        c(bx), c(by), c(WIDTH - RIGHT), c(by), c(bx), c(by), c(bx), c(TOP)
    );
    for t in ticks(f.x0, f.x1) {
        let x = f.px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"#,
            c(x), c(by), c(by + 5.0), c(by + 20.0), fmt_num(t)
        );
    }
    for t in ticks(f.y0, f.y1) {
        let y = f.py(t);
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"#,
            c(bx - 5.0), c(y), c(bx), c(bx - 8.0), c(y + 4.0), fmt_num(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#,
        c((LEFT + WIDTH - RIGHT) / 2.0),
        c(HEIGHT - 25.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{ylabel}</text>"#,
        c((TOP + HEIGHT - BOTTOM) / 2.0)
    );

    // reference lines
    for line in &series.reference_lines {
        match line.kind {
            RefKind::ExpectedOrder => {
                let (a, b) = (line.parameters[0], line.parameters[1]);
                let _ = writeln!(
                    s,
                    r#"<line class="ref expected_order" x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="6 4"/>"#,
                    c(f.px(f.x0)), c(f.py(a + b * f.x0)), c(f.px(f.x1)), c(f.py(a + b * f.x1))
                );
            }
            RefKind::SmallestPMarker => {
                let y = f.py(line.parameters[0]);
                let _ = writeln!(
                    s,
                    r#"<line class="ref smallest_p_marker" x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="red" stroke-dasharray="6 4"/>"#,
                    c(f.px(f.x0)), c(y), c(f.px(f.x1))
                );
            }
        }
    }

    let _ = writeln!(s, r#"<g class="points" fill="steelblue" stroke="black" stroke-width="0.5">"#);
    for p in &series.points {
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="4" data-row="{}"/>"#,
            c(f.px(p.x)),
            c(f.py(p.y)),
            p.row
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

/// `row,x,y` series CSV, full precision.
pub fn series_csv(series: &PlotSeries) -> String {
    let mut s = String::from("row,x,y\n");
    for p in &series.points {
        let _ = writeln!(s, "{},{},{}", p.row, fmt_exact(p.x), fmt_exact(p.y));
    }
    s
}

/// Reference-line sidecar: `kind,parameters` with parameters separated by `;`.
pub fn reference_csv(series: &PlotSeries) -> String {
    let mut s = String::from("kind,parameters\n");
    for line in &series.reference_lines {
        let kind = match line.kind {
            RefKind::ExpectedOrder => "expected_order",
            RefKind::SmallestPMarker => "smallest_p_marker",
        };
        let params: Vec<String> = line.parameters.iter().map(|&v| fmt_exact(v)).collect();
        let _ = writeln!(s, "{kind},{}", params.join(";"));
    }
    s
}
