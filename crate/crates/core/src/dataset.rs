//! Landmark record and label ingestion, joining, and synthetic fixtures.
//!
//! Landmark records are JSON Lines: one object per line with `image_id`, an
//! optional `source`, and a `landmarks` array of
//! `{index, x, y, z, visibility}` objects. Only indices 11 and 12 are read.
//! Labels are a two-column CSV with header `image_id,label`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{DatasetError, SpeError};
use crate::score::{Landmark, ShoulderObservation, LEFT_SHOULDER, RIGHT_SHOULDER};

/// One landmark as it appears on the wire.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandmarkPoint {
    pub index: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub visibility: f64,
}

impl LandmarkPoint {
    fn to_landmark(&self) -> Result<Landmark, SpeError> {
        Landmark::new(self.x, self.y, self.z, self.visibility)
    }
}

/// One line of a landmark record file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    pub image_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// `None` when the estimator produced no skeleton for the image.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<Vec<LandmarkPoint>>,
}

impl SampleRecord {
    /// The shoulder pair, or `None` when either index 11 or 12 is absent.
    pub fn shoulder_observation(&self) -> Result<Option<ShoulderObservation>, SpeError> {
        let Some(points) = &self.landmarks else {
            return Ok(None);
        };
        let find = |index| points.iter().find(|p| p.index == index);
        match (find(LEFT_SHOULDER), find(RIGHT_SHOULDER)) {
            (Some(l), Some(r)) => Ok(Some(ShoulderObservation::new(
                l.to_landmark()?,
                r.to_landmark()?,
            ))),
            _ => Ok(None),
        }
    }
}

/// Non-fatal findings surfaced while reading or joining data.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetWarning {
    /// A label that is not a multiple of 0.1.
    OffGridLabel {
        line: usize,
        image_id: String,
        label: f64,
    },
    /// Records that have no label and were left out of the join.
    UnlabeledRecords { ids: Vec<String> },
    /// Labels that have no record and were left out of the join.
    UnmatchedLabels { ids: Vec<String> },
}

impl fmt::Display for DatasetWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetWarning::OffGridLabel {
                line,
                image_id,
                label,
            } => write!(
                f,
                "line {line}: label {label} for `{image_id}` is off the 0.1 grid"
            ),
            DatasetWarning::UnlabeledRecords { ids } => {
                write!(
                    f,
                    "{} record(s) without a label: {}",
                    ids.len(),
                    ids.join(", ")
                )
            }
            DatasetWarning::UnmatchedLabels { ids } => {
                write!(
                    f,
                    "{} label(s) without a record: {}",
                    ids.len(),
                    ids.join(", ")
                )
            }
        }
    }
}

fn field_err(line: usize, field: &str, message: impl Into<String>) -> DatasetError {
    DatasetError::Field {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn number(
    obj: &Map<String, Value>,
    key: &str,
    line: usize,
    path: &str,
) -> Result<f64, DatasetError> {
    match obj.get(key) {
        Some(Value::Number(n)) => n
            .as_f64()
            .filter(|v| v.is_finite())
            .ok_or_else(|| field_err(line, path, "not a finite number")),
        Some(_) => Err(field_err(line, path, "expected a number")),
        None => Err(field_err(line, path, "missing")),
    }
}

fn parse_landmark(value: &Value, line: usize, pos: usize) -> Result<LandmarkPoint, DatasetError> {
    let path = |k: &str| format!("landmarks[{pos}].{k}");
    let obj = value
        .as_object()
        .ok_or_else(|| field_err(line, &format!("landmarks[{pos}]"), "expected an object"))?;
    let index = match obj.get("index") {
        Some(Value::Number(n)) => n
            .as_u64()
            .and_then(|i| u32::try_from(i).ok())
            .ok_or_else(|| field_err(line, &path("index"), "expected a non-negative integer"))?,
        Some(_) => return Err(field_err(line, &path("index"), "expected an integer")),
        None => return Err(field_err(line, &path("index"), "missing")),
    };
    Ok(LandmarkPoint {
        index,
        x: number(obj, "x", line, &path("x"))?,
        y: number(obj, "y", line, &path("y"))?,
        z: number(obj, "z", line, &path("z"))?,
        visibility: number(obj, "visibility", line, &path("visibility"))?,
    })
}

fn parse_record_line(text: &str, line: usize) -> Result<SampleRecord, DatasetError> {
    let value: Value = serde_json::from_str(text).map_err(|e| DatasetError::Line {
        line,
        message: format!("invalid JSON: {e}"),
    })?;
    let obj = value.as_object().ok_or_else(|| DatasetError::Line {
        line,
        message: "expected a JSON object".into(),
    })?;

    let image_id = match obj.get("image_id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::String(_)) => return Err(field_err(line, "image_id", "must not be empty")),
        Some(_) => return Err(field_err(line, "image_id", "expected a string")),
        None => return Err(field_err(line, "image_id", "missing")),
    };
    let source = match obj.get("source") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(field_err(line, "source", "expected a string")),
    };
    let landmarks = match obj.get("landmarks") {
        None | Some(Value::Null) => None,
        Some(Value::Array(items)) => {
            let mut seen = HashSet::new();
            let mut points = Vec::with_capacity(items.len());
            for (pos, item) in items.iter().enumerate() {
                let p = parse_landmark(item, line, pos)?;
                if !seen.insert(p.index) {
                    return Err(field_err(
                        line,
                        &format!("landmarks[{pos}].index"),
                        format!("duplicate landmark index {}", p.index),
                    ));
                }
                points.push(p);
            }
            Some(points)
        }
        Some(_) => return Err(field_err(line, "landmarks", "expected an array")),
    };

    Ok(SampleRecord {
        image_id,
        source,
        landmarks,
    })
}

/// Parses a JSON Lines landmark file. Blank lines are skipped; record order
/// is preserved.
pub fn parse_landmark_records<R: BufRead>(reader: R) -> Result<Vec<SampleRecord>, DatasetError> {
    let mut records = Vec::new();
    let mut ids = HashSet::new();
    for (i, text) in reader.lines().enumerate() {
        let line = i + 1;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let record = parse_record_line(&text, line)?;
        if !ids.insert(record.image_id.clone()) {
            return Err(DatasetError::DuplicateId {
                line,
                image_id: record.image_id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Writes records in canonical form: one compact JSON object per line.
pub fn write_landmark_records<W: Write>(
    mut out: W,
    records: &[SampleRecord],
) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parsed label file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelSet {
    pub labels: BTreeMap<String, f64>,
    pub warnings: Vec<DatasetWarning>,
}

fn on_label_grid(label: f64) -> bool {
    ((label * 10.0) - (label * 10.0).round()).abs() < 1e-9
}

/// Parses a `image_id,label` CSV file.
pub fn parse_labels<R: Read>(reader: R) -> Result<LabelSet, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let csv_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => DatasetError::Io(io),
            other => DatasetError::Line {
                line,
                message: format!("{other:?}"),
            },
        }
    };

    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.len() != 2 || &headers[0] != "image_id" || &headers[1] != "label" {
        return Err(DatasetError::BadHeader(
            headers.iter().collect::<Vec<_>>().join(","),
        ));
    }

    let mut set = LabelSet::default();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let image_id = row[0].to_string();
        if image_id.is_empty() {
            return Err(field_err(line, "image_id", "must not be empty"));
        }
        let label: f64 = row[1]
            .parse()
            .map_err(|_| field_err(line, "label", format!("`{}` is not a number", &row[1])))?;
        if !label.is_finite() || !(0.0..=1.0).contains(&label) {
            return Err(field_err(
                line,
                "label",
                format!("{label} is outside [0, 1]"),
            ));
        }
        if !on_label_grid(label) {
            set.warnings.push(DatasetWarning::OffGridLabel {
                line,
                image_id: image_id.clone(),
                label,
            });
        }
        if set.labels.insert(image_id.clone(), label).is_some() {
            return Err(DatasetError::DuplicateId { line, image_id });
        }
    }
    Ok(set)
}

/// Writes labels sorted by image id; on-grid values use one decimal.
pub fn write_labels<W: Write>(mut out: W, labels: &BTreeMap<String, f64>) -> std::io::Result<()> {
    writeln!(out, "image_id,label")?;
    for (id, label) in labels {
        if on_label_grid(*label) {
            writeln!(out, "{id},{label:.1}")?;
        } else {
            writeln!(out, "{id},{label}")?;
        }
    }
    Ok(())
}

/// A pose observation paired with its human compliance label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub image_id: String,
    pub observation: Option<ShoulderObservation>,
    pub manual_label: f64,
}

/// Result of [`join_samples`].
#[derive(Debug, Clone, PartialEq)]
pub struct Joined {
    /// Sorted by image id.
    pub samples: Vec<LabeledSample>,
    pub warnings: Vec<DatasetWarning>,
}

/// Inner join of records and labels on `image_id`.
pub fn join_samples(
    records: &[SampleRecord],
    labels: &BTreeMap<String, f64>,
) -> Result<Joined, DatasetError> {
    let mut samples = Vec::new();
    let mut unlabeled = Vec::new();
    let mut record_ids = HashSet::new();
    for record in records {
        record_ids.insert(record.image_id.as_str());
        match labels.get(&record.image_id) {
            Some(&manual_label) => samples.push(LabeledSample {
                image_id: record.image_id.clone(),
                observation: record.shoulder_observation()?,
                manual_label,
            }),
            None => unlabeled.push(record.image_id.clone()),
        }
    }
    let unmatched: Vec<String> = labels
        .keys()
        .filter(|id| !record_ids.contains(id.as_str()))
        .cloned()
        .collect();

    if samples.is_empty() {
        return Err(DatasetError::EmptyJoin);
    }
    samples.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    unlabeled.sort();

    let mut warnings = Vec::new();
    if !unlabeled.is_empty() {
        warnings.push(DatasetWarning::UnlabeledRecords { ids: unlabeled });
    }
    if !unmatched.is_empty() {
        warnings.push(DatasetWarning::UnmatchedLabels { ids: unmatched });
    }
    Ok(Joined { samples, warnings })
}

/// Parameters for [`generate_synthetic_dataset`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureOptions {
    pub seed: u64,
    pub count: usize,
    /// Fraction of labels shifted one grid step up or down.
    pub label_noise_fraction: f64,
    /// Fraction of records whose right shoulder is dropped.
    pub missing_fraction: f64,
}

impl FixtureOptions {
    pub fn new(seed: u64, count: usize) -> Self {
        Self {
            seed,
            count,
            label_noise_fraction: 0.2,
            missing_fraction: 0.02,
        }
    }
}

/// Synthetic landmark records together with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub records: Vec<SampleRecord>,
    pub labels: BTreeMap<String, f64>,
}

impl SyntheticDataset {
    pub fn samples(&self) -> Result<Vec<LabeledSample>, DatasetError> {
        join_samples(&self.records, &self.labels).map(|j| j.samples)
    }
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Generates shoulder pairs whose true yaw sweeps 0°..90° evenly over the
/// samples and whose roll is drawn from 0°..30° (skewed toward level).
///
/// The label is the true `cos(yaw)` rounded to the 0.1 grid, shifted by one
/// grid step on a seeded fraction of samples. The far shoulder loses
/// visibility as the yaw grows.
pub fn generate_synthetic_dataset(opts: &FixtureOptions) -> Result<SyntheticDataset, DatasetError> {
    if opts.count < 1 {
        return Err(DatasetError::InvalidCount(opts.count));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut records = Vec::with_capacity(opts.count);
    let mut labels = BTreeMap::new();
    let width = opts.count.to_string().len().max(4);

    for i in 0..opts.count {
        let yaw_deg = if opts.count == 1 {
            0.0
        } else {
            90.0 * i as f64 / (opts.count - 1) as f64
        };
        // Fixed draw order keeps the stream aligned regardless of branches.
        let roll_u: f64 = rng.gen();
        let roll_up: bool = rng.gen();
        let turn_left: bool = rng.gen();
        let span = 0.18 + 0.06 * rng.gen::<f64>();
        let cx = 0.5 + rng.gen_range(-0.05..0.05);
        let cy = 0.55 + rng.gen_range(-0.05..0.05);
        let cz = -0.2 + rng.gen_range(-0.05..0.05);
        let mut jitter = [0.0; 6];
        for j in jitter.iter_mut() {
            *j = rng.gen_range(-0.004..0.004);
        }
        let v_near = rng.gen_range(0.95..1.0);
        let v_far_base = rng.gen_range(0.95..1.0);
        let occlusion: f64 = rng.gen_range(0.0..0.6);
        let noisy = rng.gen::<f64>() < opts.label_noise_fraction;
        let noise_up: bool = rng.gen();
        let missing = rng.gen::<f64>() < opts.missing_fraction;

        let yaw = yaw_deg.to_radians();
        let roll = (30.0 * roll_u * roll_u).to_radians();
        let dx = span * yaw.cos();
        let dz = span * yaw.sin() * if turn_left { 1.0 } else { -1.0 };
        let dy = dx * roll.tan() * if roll_up { 1.0 } else { -1.0 };

        let far_penalty = (yaw_deg / 90.0).powi(2) * occlusion;
        let v_far = (v_far_base - far_penalty).clamp(0.0, 1.0);
        // Larger z is farther from the camera.
        let (v_left, v_right) = if dz > 0.0 {
            (v_far, v_near)
        } else {
            (v_near, v_far)
        };

        let left = LandmarkPoint {
            index: LEFT_SHOULDER,
            x: round6(cx + dx / 2.0 + jitter[0]),
            y: round6(cy + dy / 2.0 + jitter[1]),
            z: round6(cz + dz / 2.0 + jitter[2]),
            visibility: round6(v_left),
        };
        let right = LandmarkPoint {
            index: RIGHT_SHOULDER,
            x: round6(cx - dx / 2.0 + jitter[3]),
            y: round6(cy - dy / 2.0 + jitter[4]),
            z: round6(cz - dz / 2.0 + jitter[5]),
            visibility: round6(v_right),
        };

        let image_id = format!("synth{i:0width$}");
        let landmarks = if missing {
            vec![left]
        } else {
            vec![left, right]
        };
        records.push(SampleRecord {
            image_id: image_id.clone(),
            source: Some(format!("synthetic seed={}", opts.seed)),
            landmarks: Some(landmarks),
        });

        let mut step = (yaw.cos() * 10.0).round() as i64;
        if noisy {
            step += if noise_up { 1 } else { -1 };
        }
        labels.insert(image_id, step.clamp(0, 10) as f64 / 10.0);
    }
    Ok(SyntheticDataset { records, labels })
}

/// Labeled samples of a synthetic dataset, sorted by image id.
pub fn generate_synthetic_fixture(
    opts: &FixtureOptions,
) -> Result<Vec<LabeledSample>, DatasetError> {
    generate_synthetic_dataset(opts)?.samples()
}
