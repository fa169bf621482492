//! Agreement between algorithm scores and manual labels.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::score::SpeResult;

/// Which score is compared against the labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[default]
    Horizontal,
    Tilt,
    Combined,
}

impl MetricKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Horizontal => "horizontal",
            MetricKind::Tilt => "tilt",
            MetricKind::Combined => "combined",
        }
    }

    pub fn select(&self, result: &SpeResult) -> f64 {
        match self {
            MetricKind::Horizontal => result.horizontal_score,
            MetricKind::Tilt => result.tilt_score,
            MetricKind::Combined => result.combined_score,
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "horizontal" => Ok(MetricKind::Horizontal),
            "tilt" => Ok(MetricKind::Tilt),
            "combined" => Ok(MetricKind::Combined),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

/// A labeled sample reduced to the compared score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSample {
    pub image_id: String,
    pub label: f64,
    pub score: f64,
}

impl ScoredSample {
    pub fn new(image_id: impl Into<String>, label: f64, score: f64) -> Self {
        Self {
            image_id: image_id.into(),
            label,
            score,
        }
    }

    pub fn abs_error(&self) -> f64 {
        (self.label - self.score).abs()
    }
}

fn check_finite(samples: &[ScoredSample]) -> Result<(), EvalError> {
    for s in samples {
        if !s.label.is_finite() {
            return Err(EvalError::NonFinite {
                what: "label",
                image_id: s.image_id.clone(),
            });
        }
        if !s.score.is_finite() {
            return Err(EvalError::NonFinite {
                what: "score",
                image_id: s.image_id.clone(),
            });
        }
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<(), EvalError> {
    if tau.is_finite() && (0.0..=1.0).contains(&tau) {
        Ok(())
    } else {
        Err(EvalError::InvalidThreshold(tau))
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.add(other.sum);
        self.add(other.comp);
        self
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::default();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Pearson correlation, MAE and RMSE of scores against labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionReport {
    pub n: usize,
    /// `None` when either variable has zero variance.
    pub pearson_r: Option<f64>,
    pub mae: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    label: CompensatedSum,
    score: CompensatedSum,
    abs_err: CompensatedSum,
    sq_err: CompensatedSum,
}

impl Moments {
    fn push(mut self, s: &ScoredSample) -> Self {
        let e = s.label - s.score;
        self.label.add(s.label);
        self.score.add(s.score);
        self.abs_err.add(e.abs());
        self.sq_err.add(e * e);
        self
    }

    fn merge(self, o: Self) -> Self {
        Self {
            label: self.label.merge(o.label),
            score: self.score.merge(o.score),
            abs_err: self.abs_err.merge(o.abs_err),
            sq_err: self.sq_err.merge(o.sq_err),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Centered {
    xx: CompensatedSum,
    yy: CompensatedSum,
    xy: CompensatedSum,
}

impl Centered {
    fn push(mut self, s: &ScoredSample, mx: f64, my: f64) -> Self {
        let dx = s.label - mx;
        let dy = s.score - my;
        self.xx.add(dx * dx);
        self.yy.add(dy * dy);
        self.xy.add(dx * dy);
        self
    }

    fn merge(self, o: Self) -> Self {
        Self {
            xx: self.xx.merge(o.xx),
            yy: self.yy.merge(o.yy),
            xy: self.xy.merge(o.xy),
        }
    }
}

fn is_constant(values: impl Iterator<Item = f64>) -> bool {
    let mut it = values;
    match it.next() {
        Some(first) => it.all(|v| v == first),
        None => true,
    }
}

fn finish(
    samples: &[ScoredSample],
    m: Moments,
    c: impl FnOnce(f64, f64) -> Centered,
) -> RegressionReport {
    let n = samples.len() as f64;
    let mx = m.label.value() / n;
    let my = m.score.value() / n;
    let constant = is_constant(samples.iter().map(|s| s.label))
        || is_constant(samples.iter().map(|s| s.score));
    let pearson_r = if constant {
        None
    } else {
        let c = c(mx, my);
        // The n - 1 normalization cancels, so sample and population r agree.
        Some((c.xy.value() / (c.xx.value() * c.yy.value()).sqrt()).clamp(-1.0, 1.0))
    };
    RegressionReport {
        n: samples.len(),
        pearson_r,
        mae: m.abs_err.value() / n,
        rmse: (m.sq_err.value() / n).sqrt(),
    }
}

/// Serial regression statistics. Requires at least two samples.
pub fn regression_report(samples: &[ScoredSample]) -> Result<RegressionReport, EvalError> {
    if samples.len() < 2 {
        return Err(EvalError::TooFewSamples {
            required: 2,
            got: samples.len(),
        });
    }
    check_finite(samples)?;
    let m = samples.iter().fold(Moments::default(), Moments::push);
    Ok(finish(samples, m, |mx, my| {
        samples
            .iter()
            .fold(Centered::default(), |acc, s| acc.push(s, mx, my))
    }))
}

/// Same as [`regression_report`] with the reductions spread over rayon.
pub fn regression_report_par(samples: &[ScoredSample]) -> Result<RegressionReport, EvalError> {
    if samples.len() < 2 {
        return Err(EvalError::TooFewSamples {
            required: 2,
            got: samples.len(),
        });
    }
    check_finite(samples)?;
    let m = samples
        .par_iter()
        .fold(Moments::default, |acc, s| acc.push(s))
        .reduce(Moments::default, Moments::merge);
    Ok(finish(samples, m, |mx, my| {
        samples
            .par_iter()
            .fold(Centered::default, |acc, s| acc.push(s, mx, my))
            .reduce(Centered::default, Centered::merge)
    }))
}

/// Compliance confusion matrix with compliant as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Confusion matrix with the threshold and metric it was computed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub matrix: ConfusionMatrix,
    pub tau: f64,
    pub metric_used: MetricKind,
}

/// Counts the four cells. `label >= tau` is compliant, `score >= tau` is
/// accepted.
pub fn classify(
    samples: &[ScoredSample],
    tau: f64,
    metric_used: MetricKind,
) -> Result<Classification, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::Empty);
    }
    check_tau(tau)?;
    check_finite(samples)?;
    let mut m = ConfusionMatrix {
        tp: 0,
        tn: 0,
        fp: 0,
        fn_: 0,
    };
    for s in samples {
        match (s.label >= tau, s.score >= tau) {
            (true, true) => m.tp += 1,
            (true, false) => m.fn_ += 1,
            (false, true) => m.fp += 1,
            (false, false) => m.tn += 1,
        }
    }
    Ok(Classification {
        matrix: m,
        tau,
        metric_used,
    })
}

/// False positive and false negative rates; `None` for a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn rates(m: &ConfusionMatrix) -> Rates {
    Rates {
        fpr: ratio(m.fp, m.fp + m.tn),
        fnr: ratio(m.fn_, m.fn_ + m.tp),
    }
}

/// Counts of absolute errors over equal-width bins covering `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorHistogram {
    pub bin_width: f64,
    pub counts: Vec<usize>,
    pub threshold_marker: f64,
}

impl ErrorHistogram {
    pub const DEFAULT_BIN_WIDTH: f64 = 0.05;
    pub const DEFAULT_MARKER: f64 = 0.2;

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Lower edge of bin `bin`.
    pub fn lower_edge(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width
    }
}

/// Bins `|label - score|` into `[0, w), [w, 2w), ...`; errors at 1.0 land in
/// the last bin.
pub fn error_histogram(
    samples: &[ScoredSample],
    bin_width: f64,
) -> Result<ErrorHistogram, EvalError> {
    if !(bin_width.is_finite() && bin_width > 0.0 && bin_width <= 1.0) {
        return Err(EvalError::InvalidBinWidth(bin_width));
    }
    check_finite(samples)?;
    // Tolerance absorbs representation error, e.g. 1.0 / 0.1 or 0.3 / 0.1.
    let bins = ((1.0 / bin_width) - 1e-9).ceil().max(1.0) as usize;
    let mut counts = vec![0; bins];
    for s in samples {
        let idx = (s.abs_error() / bin_width + 1e-9).floor() as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    Ok(ErrorHistogram {
        bin_width,
        counts,
        threshold_marker: ErrorHistogram::DEFAULT_MARKER,
    })
}

/// The evaluation document written by `spe evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub n: usize,
    pub pearson_r: Option<f64>,
    pub mae: f64,
    pub rmse: f64,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub tau: f64,
    pub metric_used: MetricKind,
}

impl EvaluationReport {
    pub fn build(
        samples: &[ScoredSample],
        tau: f64,
        metric_used: MetricKind,
    ) -> Result<Self, EvalError> {
        let reg = regression_report(samples)?;
        let cls = classify(samples, tau, metric_used)?;
        let r = rates(&cls.matrix);
        Ok(Self {
            n: reg.n,
            pearson_r: reg.pearson_r,
            mae: reg.mae,
            rmse: reg.rmse,
            tp: cls.matrix.tp,
            tn: cls.matrix.tn,
            fp: cls.matrix.fp,
            fn_: cls.matrix.fn_,
            fpr: r.fpr,
            fnr: r.fnr,
            tau,
            metric_used,
        })
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
