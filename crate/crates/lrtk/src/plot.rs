//! Minimal, dependency-free SVG rendering of rank–recall curves.
//!
//! One polyline per curve, rank on the x axis, recall on the y axis. The
//! output is a pure function of the input curves, so identical inputs
//! produce byte-identical SVG.

use std::fmt::Write as _;

use crate::eval::RankRecallCurve;

/// One curve plus the name shown in the legend.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub curve: RankRecallCurve,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render the curves as a self-contained SVG document.
#[must_use]
pub fn render_rank_recall_svg(series: &[PlotSeries]) -> String {
    let max_rank = series
        .iter()
        .flat_map(|s| s.curve.points.iter().map(|p| p.rank))
        .max()
        .unwrap_or(1)
        .max(1);
    let x_span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let y_span = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x = |rank: usize| -> f64 {
        if max_rank == 1 {
            MARGIN_LEFT + x_span / 2.0
        } else {
            MARGIN_LEFT + (rank - 1) as f64 / (max_rank - 1) as f64 * x_span
        }
    };
    let y = |recall: f64| -> f64 { HEIGHT - MARGIN_BOTTOM - recall * y_span };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    // Axes.
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = writeln!(
        svg,
        "  <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{y1:.2}\" stroke=\"black\"/>"
    );
    // Axis labels.
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">rank</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\" transform=\"rotate(-90 16 {:.2})\">recall</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    // Tick labels: rank 1 and the maximum; recall 0, 0.5, 1.
    for (rank, anchor) in [(1usize, "start"), (max_rank, "end")] {
        let _ = writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"{anchor}\" \
             font-family=\"sans-serif\" font-size=\"11\">{rank}</text>",
            x(rank),
            y0 + 16.0
        );
    }
    for tick in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{tick}</text>",
            x0 - 6.0,
            y(tick) + 4.0
        );
    }
    // Curves.
    for (i, s) in series.iter().enumerate() {
        if s.curve.points.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for p in &s.curve.points {
            let _ = write!(points, "{:.2},{:.2} ", x(p.rank), y(p.recall));
        }
        let _ = writeln!(
            svg,
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
             points=\"{}\"/>",
            points.trim_end()
        );
    }
    // Legend.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ly = MARGIN_TOP + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{color}\"/>",
            x1 - 150.0,
            ly
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            x1 - 136.0,
            ly + 9.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
