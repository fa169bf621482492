//! The `spe` command line.
//!
//! Exit codes: 0 on success, 1 for environment or I/O failures, 2 for
//! validation or content failures (including bad flags).

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::chart::{self, ChartOptions};
use crate::dataset::{self, DatasetWarning, FixtureOptions, LabeledSample, SampleRecord};
use crate::edc::{self, EdcCurve};
use crate::error::{DatasetError, EvalError, SpeError};
use crate::metrics::{self, ErrorHistogram, EvaluationReport, MetricKind, ScoredSample};
use crate::score::{self, SpeConfig};
use crate::table::{self, ScoreRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Invalid(_) => 2,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn dataset(path: &Path, err: DatasetError) -> Self {
        match err {
            DatasetError::Io(source) => Self::io(path, source),
            other => CliError::Invalid(format!("{}: {other}", path.display())),
        }
    }
}

impl From<SpeError> for CliError {
    fn from(e: SpeError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spe",
    version,
    about = "Shoulder presentation scoring and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every record of a landmark file.
    Score(ScoreArgs),
    /// Compare scores with manual labels and write a metrics report.
    Evaluate(EvaluateArgs),
    /// Write the empirical and oracle error-versus-discard curves.
    Edc(EdcArgs),
    /// Generate a deterministic synthetic landmark file and label file.
    Synth(SynthArgs),
    /// Render a scatter, histogram, or discard-curve chart as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Horizontal,
    Tilt,
    Combined,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Horizontal => MetricKind::Horizontal,
            MetricArg::Tilt => MetricKind::Tilt,
            MetricArg::Combined => MetricKind::Combined,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoringArgs {
    /// Compliance threshold.
    #[arg(long, default_value_t = SpeConfig::DEFAULT_TAU)]
    pub tau: f64,
    /// Minimum separation treated as non-degenerate.
    #[arg(long, default_value_t = SpeConfig::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Per-landmark visibility floor.
    #[arg(long, default_value_t = SpeConfig::DEFAULT_MIN_VISIBILITY)]
    pub min_visibility: f64,
}

impl ScoringArgs {
    fn config(&self) -> Result<SpeConfig, CliError> {
        Ok(SpeConfig::new(self.epsilon, self.min_visibility, self.tau)?)
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Landmark records (JSON Lines).
    #[arg(long)]
    pub input: PathBuf,
    /// Scored table (CSV).
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub scoring: ScoringArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Label file with header `image_id,label`.
    #[arg(long)]
    pub labels: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "horizontal")]
    pub metric: MetricArg,
    #[command(flatten)]
    pub scoring: ScoringArgs,
}

#[derive(Debug, Args)]
pub struct EdcArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Empirical curve (CSV).
    #[arg(long)]
    pub output: PathBuf,
    /// Oracle curve (CSV).
    #[arg(long)]
    pub oracle_output: PathBuf,
    /// Optional SVG chart of both curves.
    #[arg(long)]
    pub chart: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "horizontal")]
    pub metric: MetricArg,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[command(flatten)]
    pub chart_size: ChartSizeArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 121)]
    pub count: usize,
    /// Fraction of labels shifted by one 0.1 step.
    #[arg(long, default_value_t = 0.2)]
    pub label_noise: f64,
    /// Fraction of records missing the right shoulder.
    #[arg(long, default_value_t = 0.02)]
    pub missing_fraction: f64,
    /// Landmark records to write (JSON Lines).
    #[arg(long)]
    pub output: PathBuf,
    /// Label file to write.
    #[arg(long)]
    pub labels: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChartKind {
    Scatter,
    Histogram,
    Edc,
}

#[derive(Debug, Args)]
pub struct ChartSizeArgs {
    #[arg(long, default_value_t = 640)]
    pub width: u32,
    #[arg(long, default_value_t = 480)]
    pub height: u32,
}

impl ChartSizeArgs {
    fn options(&self) -> ChartOptions {
        ChartOptions {
            width: self.width,
            height: self.height,
        }
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(value_enum)]
    pub chart: ChartKind,
    /// Scored table (scatter, histogram) or empirical curve (edc).
    #[arg(long)]
    pub input: PathBuf,
    /// Label file; required for scatter and histogram.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Oracle curve; required for edc.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "horizontal")]
    pub metric: MetricArg,
    #[arg(long, default_value_t = ErrorHistogram::DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
    /// Error threshold marked on the histogram.
    #[arg(long, default_value_t = ErrorHistogram::DEFAULT_MARKER)]
    pub marker: f64,
    #[command(flatten)]
    pub chart_size: ChartSizeArgs,
}

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.flush().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn warn(w: &DatasetWarning) {
    eprintln!("warning: {w}");
}

fn load_records(path: &Path) -> Result<Vec<SampleRecord>, CliError> {
    dataset::parse_landmark_records(open(path)?).map_err(|e| CliError::dataset(path, e))
}

fn load_labels(path: &Path) -> Result<std::collections::BTreeMap<String, f64>, CliError> {
    let set = dataset::parse_labels(open(path)?).map_err(|e| CliError::dataset(path, e))?;
    set.warnings.iter().for_each(warn);
    Ok(set.labels)
}

fn load_joined(input: &Path, labels: &Path) -> Result<Vec<LabeledSample>, CliError> {
    let records = load_records(input)?;
    let labels = load_labels(labels)?;
    let joined =
        dataset::join_samples(&records, &labels).map_err(|e| CliError::Invalid(e.to_string()))?;
    joined.warnings.iter().for_each(warn);
    Ok(joined.samples)
}

/// Scores labeled samples and keeps the selected metric. Order is preserved.
pub fn score_labeled(
    samples: &[LabeledSample],
    cfg: &SpeConfig,
    metric: MetricKind,
) -> Result<Vec<ScoredSample>, SpeError> {
    samples
        .par_iter()
        .map(|s| {
            let r = score::evaluate_pose(s.observation.as_ref(), cfg)?;
            Ok(ScoredSample::new(
                s.image_id.clone(),
                s.manual_label,
                metric.select(&r),
            ))
        })
        .collect()
}

/// Scores records in parallel; output order equals input order.
pub fn score_records(records: &[SampleRecord], cfg: &SpeConfig) -> Result<Vec<ScoreRow>, CliError> {
    records
        .par_iter()
        .map(|rec| {
            let obs = rec
                .shoulder_observation()
                .map_err(|e| CliError::Invalid(format!("{}: {e}", rec.image_id)))?;
            let result = score::evaluate_pose(obs.as_ref(), cfg)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", rec.image_id)))?;
            Ok(ScoreRow {
                image_id: rec.image_id.clone(),
                result,
            })
        })
        .collect()
}

fn cmd_score(args: &ScoreArgs) -> Result<(), CliError> {
    let cfg = args.scoring.config()?;
    let records = load_records(&args.input)?;
    let rows = score_records(&records, &cfg)?;
    let mut buf = Vec::new();
    table::write_score_table(&mut buf, &rows).expect("write to memory");
    write_atomic(&args.output, &buf)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let cfg = args.scoring.config()?;
    let samples = load_joined(&args.input, &args.labels)?;
    let metric = args.metric.into();
    let scored = score_labeled(&samples, &cfg, metric)?;
    let report = EvaluationReport::build(&scored, cfg.tau(), metric)?;
    let json = report.to_json();
    match &args.output {
        Some(path) => write_atomic(path, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn curve_bytes(curve: &EdcCurve) -> Vec<u8> {
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).expect("write to memory");
    buf
}

fn cmd_edc(args: &EdcArgs) -> Result<(), CliError> {
    let cfg = args.scoring.config()?;
    let samples = load_joined(&args.input, &args.labels)?;
    let metric = args.metric.into();
    let scored = score_labeled(&samples, &cfg, metric)?;
    let empirical = edc::edc_curve(&scored, cfg.tau(), metric)?;
    let oracle = edc::oracle_curve(&scored, cfg.tau(), metric)?;
    let svg = match &args.chart {
        Some(_) => Some(chart::edc_svg(
            &empirical.points,
            &oracle.points,
            &args.chart_size.options(),
        )?),
        None => None,
    };
    write_atomic(&args.output, &curve_bytes(&empirical))?;
    write_atomic(&args.oracle_output, &curve_bytes(&oracle))?;
    if let (Some(path), Some(svg)) = (&args.chart, svg) {
        write_atomic(path, svg.as_bytes())?;
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    for (name, v) in [
        ("--label-noise", args.label_noise),
        ("--missing-fraction", args.missing_fraction),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::Invalid(format!(
                "{name} must lie in [0, 1], got {v}"
            )));
        }
    }
    let opts = FixtureOptions {
        seed: args.seed,
        count: args.count,
        label_noise_fraction: args.label_noise,
        missing_fraction: args.missing_fraction,
    };
    let ds =
        dataset::generate_synthetic_dataset(&opts).map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut records = Vec::new();
    dataset::write_landmark_records(&mut records, &ds.records).expect("write to memory");
    let mut labels = Vec::new();
    dataset::write_labels(&mut labels, &ds.labels).expect("write to memory");
    write_atomic(&args.output, &records)?;
    write_atomic(&args.labels, &labels)
}

fn scored_from_table(
    path: &Path,
    labels: &Path,
    metric: MetricKind,
) -> Result<Vec<ScoredSample>, CliError> {
    let rows = table::read_score_table(open(path)?).map_err(|e| CliError::dataset(path, e))?;
    let labels = load_labels(labels)?;
    let mut unlabeled = Vec::new();
    let mut out = Vec::new();
    for row in &rows {
        match labels.get(&row.image_id) {
            Some(&label) => out.push(ScoredSample::new(
                row.image_id.clone(),
                label,
                metric.select(&row.result),
            )),
            None => unlabeled.push(row.image_id.clone()),
        }
    }
    if !unlabeled.is_empty() {
        warn(&DatasetWarning::UnlabeledRecords { ids: unlabeled });
    }
    if out.is_empty() {
        return Err(CliError::Invalid(format!(
            "{}: no scored rows match the label file",
            path.display()
        )));
    }
    out.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(out)
}

fn cmd_render(args: &RenderArgs) -> Result<(), CliError> {
    let opts = args.chart_size.options();
    let metric: MetricKind = args.metric.into();
    let svg = match args.chart {
        ChartKind::Scatter | ChartKind::Histogram => {
            let labels = args.labels.as_ref().ok_or_else(|| {
                CliError::Invalid("--labels is required for scatter and histogram charts".into())
            })?;
            if args.chart == ChartKind::Histogram {
                if !(0.0..=1.0).contains(&args.marker) {
                    return Err(CliError::Invalid(format!(
                        "--marker must lie in [0, 1], got {}",
                        args.marker
                    )));
                }
                metrics::error_histogram(&[], args.bin_width)?;
            }
            let scored = scored_from_table(&args.input, labels, metric)?;
            if args.chart == ChartKind::Scatter {
                let pts: Vec<(f64, f64)> = scored.iter().map(|s| (s.label, s.score)).collect();
                chart::scatter_svg(&pts, &opts)?
            } else {
                let mut hist = metrics::error_histogram(&scored, args.bin_width)?;
                hist.threshold_marker = args.marker;
                chart::histogram_svg(&hist, &opts)?
            }
        }
        ChartKind::Edc => {
            let oracle = args
                .oracle
                .as_ref()
                .ok_or_else(|| CliError::Invalid("--oracle is required for edc charts".into()))?;
            let empirical = edc::read_curve_csv(open(&args.input)?)
                .map_err(|e| CliError::dataset(&args.input, e))?;
            let oracle_pts =
                edc::read_curve_csv(open(oracle)?).map_err(|e| CliError::dataset(oracle, e))?;
            chart::edc_svg(&empirical, &oracle_pts, &opts)?
        }
    };
    write_atomic(&args.output, svg.as_bytes())
}

/// Runs one parsed command.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Score(a) => cmd_score(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Edc(a) => cmd_edc(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Render(a) => cmd_render(a),
    }
}
