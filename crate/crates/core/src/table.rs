//! The scored table written by `spe score`.

use std::io::{BufRead, Write};

use crate::error::DatasetError;
use crate::score::{SpeResult, Status};

pub const HEADER: &str =
    "image_id,horizontal_score,tilt_score,combined_score,yaw_deg,roll_deg,status";

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub image_id: String,
    pub result: SpeResult,
}

pub fn write_score_table<W: Write>(mut out: W, rows: &[ScoreRow]) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for row in rows {
        let r = &row.result;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.image_id,
            r.horizontal_score,
            r.tilt_score,
            r.combined_score,
            r.yaw_angle_deg,
            r.roll_angle_deg,
            r.status
        )?;
    }
    Ok(())
}

pub fn read_score_table<R: BufRead>(reader: R) -> Result<Vec<ScoreRow>, DatasetError> {
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != HEADER {
        return Err(DatasetError::Line {
            line: 1,
            message: format!("unexpected score table header `{header}`"),
        });
    }
    let mut rows = Vec::new();
    for (i, text) in lines.enumerate() {
        let line = i + 2;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = text.split(',').map(str::trim).collect();
        if cols.len() != 7 {
            return Err(DatasetError::Line {
                line,
                message: format!("expected 7 columns, got {}", cols.len()),
            });
        }
        let num = |idx: usize, field: &str, max: f64| -> Result<f64, DatasetError> {
            cols[idx]
                .parse::<f64>()
                .ok()
                .filter(|v| (0.0..=max).contains(v))
                .ok_or_else(|| DatasetError::Field {
                    line,
                    field: field.to_string(),
                    message: format!("`{}` is not a number in [0, {max}]", cols[idx]),
                })
        };
        if cols[0].is_empty() {
            return Err(DatasetError::Field {
                line,
                field: "image_id".into(),
                message: "must not be empty".into(),
            });
        }
        let status: Status = cols[6].parse().map_err(|message| DatasetError::Field {
            line,
            field: "status".into(),
            message,
        })?;
        rows.push(ScoreRow {
            image_id: cols[0].to_string(),
            result: SpeResult {
                horizontal_score: num(1, "horizontal_score", 1.0)?,
                tilt_score: num(2, "tilt_score", 1.0)?,
                combined_score: num(3, "combined_score", 1.0)?,
                yaw_angle_deg: num(4, "yaw_deg", 90.0)?,
                roll_angle_deg: num(5, "roll_deg", 90.0)?,
                status,
            },
        });
    }
    Ok(rows)
}
