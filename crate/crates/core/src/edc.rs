//! Error-versus-discard analysis against human compliance labels.
//!
//! The "error" of a surviving population is its classification false
//! negative rate: compliant samples (`label >= tau`) that the algorithm
//! rejects (`score < tau`), divided by the compliant survivors. Samples are
//! discarded one at a time, lowest score first.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use crate::error::{DatasetError, EvalError};
use crate::metrics::{MetricKind, ScoredSample};

/// One step of a discard curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdcPoint {
    pub discard_fraction: f64,
    pub discarded_count: usize,
    /// `None` when no compliant sample survives.
    pub fnr_remaining: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Empirical,
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdcCurve {
    pub kind: CurveKind,
    pub tau: f64,
    pub metric_used: MetricKind,
    pub points: Vec<EdcPoint>,
}

impl EdcCurve {
    /// First discard count at which the surviving FNR is exactly zero.
    pub fn first_zero(&self) -> Option<usize> {
        self.points
            .iter()
            .find(|p| p.fnr_remaining == Some(0.0))
            .map(|p| p.discarded_count)
    }

    /// Writes `discarded_count,discard_fraction,fnr_remaining` rows, leaving
    /// the last column empty when undefined.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "discarded_count,discard_fraction,fnr_remaining")?;
        for p in &self.points {
            match p.fnr_remaining {
                Some(f) => writeln!(out, "{},{},{}", p.discarded_count, p.discard_fraction, f)?,
                None => writeln!(out, "{},{},", p.discarded_count, p.discard_fraction)?,
            }
        }
        Ok(())
    }
}

/// Reads back a curve written by [`EdcCurve::write_csv`].
pub fn read_curve_csv<R: BufRead>(reader: R) -> Result<Vec<EdcPoint>, DatasetError> {
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "discarded_count,discard_fraction,fnr_remaining" {
        return Err(DatasetError::Line {
            line: 1,
            message: format!("unexpected curve header `{header}`"),
        });
    }
    let mut points: Vec<EdcPoint> = Vec::new();
    for (i, text) in lines.enumerate() {
        let line = i + 2;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = text.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(DatasetError::Line {
                line,
                message: format!("expected 3 columns, got {}", cols.len()),
            });
        }
        let bad = |field: &str| DatasetError::Field {
            line,
            field: field.to_string(),
            message: format!("cannot parse `{text}`"),
        };
        let discarded_count: usize = cols[0].parse().map_err(|_| bad("discarded_count"))?;
        let discard_fraction: f64 = cols[1]
            .parse()
            .ok()
            .filter(|f: &f64| (0.0..1.0).contains(f))
            .ok_or_else(|| bad("discard_fraction"))?;
        let fnr_remaining = if cols[2].is_empty() {
            None
        } else {
            Some(
                cols[2]
                    .parse::<f64>()
                    .ok()
                    .filter(|f| (0.0..=1.0).contains(f))
                    .ok_or_else(|| bad("fnr_remaining"))?,
            )
        };
        if points
            .last()
            .is_some_and(|p| p.discarded_count >= discarded_count)
        {
            return Err(bad("discarded_count"));
        }
        points.push(EdcPoint {
            discard_fraction,
            discarded_count,
            fnr_remaining,
        });
    }
    Ok(points)
}

fn by_score_then_id(a: &ScoredSample, b: &ScoredSample) -> Ordering {
    a.score
        .total_cmp(&b.score)
        .then_with(|| a.image_id.cmp(&b.image_id))
}

fn validate(samples: &[ScoredSample], tau: f64) -> Result<(), EvalError> {
    if samples.is_empty() {
        return Err(EvalError::Empty);
    }
    if !(tau.is_finite() && (0.0..=1.0).contains(&tau)) {
        return Err(EvalError::InvalidThreshold(tau));
    }
    for s in samples {
        if !s.score.is_finite() || !s.label.is_finite() {
            return Err(EvalError::NonFinite {
                what: "score or label",
                image_id: s.image_id.clone(),
            });
        }
    }
    Ok(())
}

/// Walks a discard order, emitting the survivor FNR before each removal.
fn sweep(order: &[&ScoredSample], tau: f64) -> Vec<EdcPoint> {
    let n = order.len();
    let mut compliant = order.iter().filter(|s| s.label >= tau).count();
    let mut false_neg = order
        .iter()
        .filter(|s| s.label >= tau && s.score < tau)
        .count();
    let mut points = Vec::with_capacity(n);
    for (k, s) in order.iter().enumerate() {
        points.push(EdcPoint {
            discard_fraction: k as f64 / n as f64,
            discarded_count: k,
            fnr_remaining: (compliant > 0).then(|| false_neg as f64 / compliant as f64),
        });
        if s.label >= tau {
            compliant -= 1;
            if s.score < tau {
                false_neg -= 1;
            }
        }
    }
    points
}

/// Empirical curve: discard by score ascending, ties by image id.
pub fn edc_curve(
    samples: &[ScoredSample],
    tau: f64,
    metric_used: MetricKind,
) -> Result<EdcCurve, EvalError> {
    validate(samples, tau)?;
    let mut order: Vec<&ScoredSample> = samples.iter().collect();
    order.sort_by(|a, b| by_score_then_id(a, b));
    Ok(EdcCurve {
        kind: CurveKind::Empirical,
        tau,
        metric_used,
        points: sweep(&order, tau),
    })
}

/// Oracle curve: every false negative is discarded first (by image id), then
/// the rest by score ascending.
pub fn oracle_curve(
    samples: &[ScoredSample],
    tau: f64,
    metric_used: MetricKind,
) -> Result<EdcCurve, EvalError> {
    validate(samples, tau)?;
    let is_fn = |s: &ScoredSample| s.label >= tau && s.score < tau;
    let mut misses: Vec<&ScoredSample> = samples.iter().filter(|s| is_fn(s)).collect();
    misses.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    let mut rest: Vec<&ScoredSample> = samples.iter().filter(|s| !is_fn(s)).collect();
    rest.sort_by(|a, b| by_score_then_id(a, b));
    misses.extend(rest);
    Ok(EdcCurve {
        kind: CurveKind::Oracle,
        tau,
        metric_used,
        points: sweep(&misses, tau),
    })
}
