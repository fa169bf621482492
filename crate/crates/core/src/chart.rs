//! Standalone SVG charts: score-vs-label scatter, absolute-error histogram,
//! and discard curves.
//!
//! Output depends only on the input data and [`ChartOptions`]; coordinates
//! are printed with two decimals so identical inputs give identical bytes.

use std::fmt::Write as _;

use crate::edc::EdcPoint;
use crate::error::EvalError;
use crate::metrics::ErrorHistogram;

const MARGIN_TOP: f64 = 50.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;
const MARGIN_LEFT: f64 = 70.0;

const COLOR_AXIS: &str = "#222222";
const COLOR_GRID: &str = "#e5e5e5";
const COLOR_BLUE: &str = "#1f77b4";
const COLOR_ORANGE: &str = "#ff7f0e";
const COLOR_RED: &str = "#d62728";
const FONT: &str = "font-family=\"DejaVu Sans, Arial, sans-serif\"";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartOptions {
    pub width: u32,
    pub height: u32,
}

impl Default for ChartOptions {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
        }
    }
}

/// Plot area mapping data coordinates onto the canvas.
struct Frame {
    svg: String,
    left: f64,
    top: f64,
    w: f64,
    h: f64,
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn new(opts: &ChartOptions, title: &str, x_max: f64, y_max: f64) -> Self {
        let (width, height) = (opts.width.max(200) as f64, opts.height.max(160) as f64);
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
        );
        let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"28\" text-anchor=\"middle\" {FONT} font-size=\"16\" fill=\"{COLOR_AXIS}\">{}</text>",
            width / 2.0,
            escape(title)
        );
        Self {
            svg,
            left: MARGIN_LEFT,
            top: MARGIN_TOP,
            w: width - MARGIN_LEFT - MARGIN_RIGHT,
            h: height - MARGIN_TOP - MARGIN_BOTTOM,
            x_max,
            y_max,
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + x / self.x_max * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.h - y / self.y_max * self.h
    }

    fn axes(&mut self, x_label: &str, y_label: &str, x_ticks: &[f64], y_ticks: &[f64]) {
        let bottom = self.top + self.h;
        for &t in y_ticks {
            let y = self.py(t);
            let _ = writeln!(
                self.svg,
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{COLOR_GRID}\"/>",
                self.left,
                self.left + self.w
            );
            let _ = writeln!(
                self.svg,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" {FONT} font-size=\"11\" fill=\"{COLOR_AXIS}\">{}</text>",
                self.left - 8.0,
                y + 4.0,
                tick_label(t)
            );
        }
        for &t in x_ticks {
            let x = self.px(t);
            let _ = writeln!(
                self.svg,
                "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {FONT} font-size=\"11\" fill=\"{COLOR_AXIS}\">{}</text>",
                bottom + 18.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            self.svg,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"{COLOR_AXIS}\"/>",
            self.left, self.top, self.w, self.h
        );
        let _ = writeln!(
            self.svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {FONT} font-size=\"13\" fill=\"{COLOR_AXIS}\">{}</text>",
            self.left + self.w / 2.0,
            bottom + 42.0,
            escape(x_label)
        );
        let (cx, cy) = (20.0, self.top + self.h / 2.0);
        let _ = writeln!(
            self.svg,
            "<text x=\"{cx:.2}\" y=\"{cy:.2}\" transform=\"rotate(-90 {cx:.2} {cy:.2})\" text-anchor=\"middle\" {FONT} font-size=\"13\" fill=\"{COLOR_AXIS}\">{}</text>",
            escape(y_label)
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &str, dashed: bool) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let dash = if dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        let _ = writeln!(
            self.svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>",
            coords.join(" ")
        );
    }

    fn legend(&mut self, entries: &[(&str, &str, bool)]) {
        let x = self.left + self.w - 170.0;
        for (i, (name, color, dashed)) in entries.iter().enumerate() {
            let y = self.top + 18.0 + i as f64 * 18.0;
            let dash = if *dashed {
                " stroke-dasharray=\"6 4\""
            } else {
                ""
            };
            let _ = writeln!(
                self.svg,
                "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>",
                x + 24.0
            );
            let _ = writeln!(
                self.svg,
                "<text x=\"{:.2}\" y=\"{:.2}\" {FONT} font-size=\"11\" fill=\"{COLOR_AXIS}\">{}</text>",
                x + 30.0,
                y + 4.0,
                escape(name)
            );
        }
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn ticks(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

/// Algorithm score against manual label, with the identity line dashed.
pub fn scatter_svg(points: &[(f64, f64)], opts: &ChartOptions) -> Result<String, EvalError> {
    if points.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut f = Frame::new(opts, "Algorithm score vs. manual label", 1.0, 1.0);
    let unit = ticks(1.0, 0.2);
    f.axes("Manual label", "Algorithm score", &unit, &unit);
    f.polyline(&[(0.0, 0.0), (1.0, 1.0)], COLOR_AXIS, true);
    for &(label, score) in points {
        let (x, y) = (f.px(label.clamp(0.0, 1.0)), f.py(score.clamp(0.0, 1.0)));
        let _ = writeln!(
            f.svg,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3.5\" fill=\"{COLOR_BLUE}\" fill-opacity=\"0.6\"/>"
        );
    }
    Ok(f.finish())
}

/// Bars of the absolute-error histogram with a dashed marker line.
pub fn histogram_svg(hist: &ErrorHistogram, opts: &ChartOptions) -> Result<String, EvalError> {
    if hist.n() == 0 {
        return Err(EvalError::Empty);
    }
    let peak = *hist.counts.iter().max().unwrap_or(&1) as f64;
    let step = nice_step(peak);
    let y_max = (peak / step).ceil() * step;
    let mut f = Frame::new(opts, "Distribution of absolute errors", 1.0, y_max);
    f.axes(
        "|manual label - score|",
        "Count",
        &ticks(1.0, 0.2),
        &ticks(y_max, step),
    );
    for (i, &c) in hist.counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let x0 = f.px(hist.lower_edge(i));
        let x1 = f.px((hist.lower_edge(i + 1)).min(1.0));
        let y = f.py(c as f64);
        let _ = writeln!(
            f.svg,
            "<rect x=\"{x0:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{COLOR_BLUE}\" stroke=\"white\"/>",
            x1 - x0,
            f.py(0.0) - y
        );
    }
    let mx = f.px(hist.threshold_marker);
    let _ = writeln!(
        f.svg,
        "<line x1=\"{mx:.2}\" y1=\"{:.2}\" x2=\"{mx:.2}\" y2=\"{:.2}\" stroke=\"{COLOR_RED}\" stroke-width=\"2\" stroke-dasharray=\"6 4\"/>",
        f.top,
        f.top + f.h
    );
    Ok(f.finish())
}

fn nice_step(peak: f64) -> f64 {
    let raw = (peak / 5.0).max(1.0);
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Contiguous runs of defined points; undefined FNR breaks the line.
fn segments(points: &[EdcPoint]) -> Vec<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for p in points {
        match p.fnr_remaining {
            Some(v) => cur.push((p.discard_fraction, v)),
            None if !cur.is_empty() => out.push(std::mem::take(&mut cur)),
            None => {}
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Empirical (solid blue) and oracle (dashed orange) discard curves.
pub fn edc_svg(
    empirical: &[EdcPoint],
    oracle: &[EdcPoint],
    opts: &ChartOptions,
) -> Result<String, EvalError> {
    if empirical.is_empty() {
        return Err(EvalError::Empty);
    }
    let peak = empirical
        .iter()
        .chain(oracle)
        .filter_map(|p| p.fnr_remaining)
        .fold(0.0, f64::max);
    let y_max = ((peak * 10.0 - 1e-9).ceil() / 10.0).max(0.1);
    let mut f = Frame::new(
        opts,
        "Error versus discard (classification FNR)",
        1.0,
        y_max,
    );
    let y_step = if y_max > 0.5 { 0.2 } else { 0.05 };
    f.axes(
        "Fraction of lowest-scored samples discarded",
        "FNR of remaining samples",
        &ticks(1.0, 0.2),
        &ticks(y_max, y_step),
    );
    for seg in segments(oracle) {
        f.polyline(&seg, COLOR_ORANGE, true);
    }
    for seg in segments(empirical) {
        f.polyline(&seg, COLOR_BLUE, false);
    }
    f.legend(&[
        ("Empirical", COLOR_BLUE, false),
        ("Oracle", COLOR_ORANGE, true),
    ]);
    Ok(f.finish())
}
