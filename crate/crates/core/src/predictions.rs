//! Prediction CSV shared by calibration and evaluation.
//!
//! Only `sample_id` is required. Screen-space columns (`pred_x_mm`,
//! `pred_y_mm`, `gt_x_mm`, `gt_y_mm`), angular columns (`pred_pitch`,
//! `pred_yaw`, `gt_pitch`, `gt_yaw`) and tags (`subject`, `session`, `view`,
//! `triplet`, `head_pitch`, `head_yaw`, `head_roll`) are read when present.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GazeAngles;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub sample_id: String,
    #[serde(default)]
    pub subject: Option<String>,
    #[serde(default)]
    pub session: Option<String>,
    #[serde(default)]
    pub pred_x_mm: Option<f64>,
    #[serde(default)]
    pub pred_y_mm: Option<f64>,
    #[serde(default)]
    pub gt_x_mm: Option<f64>,
    #[serde(default)]
    pub gt_y_mm: Option<f64>,
    #[serde(default)]
    pub pred_pitch: Option<f64>,
    #[serde(default)]
    pub pred_yaw: Option<f64>,
    #[serde(default)]
    pub gt_pitch: Option<f64>,
    #[serde(default)]
    pub gt_yaw: Option<f64>,
    #[serde(default)]
    pub view: Option<String>,
    #[serde(default)]
    pub triplet: Option<String>,
    #[serde(default)]
    pub head_pitch: Option<f64>,
    #[serde(default)]
    pub head_yaw: Option<f64>,
    #[serde(default)]
    pub head_roll: Option<f64>,
}

fn both(a: Option<f64>, b: Option<f64>) -> Option<[f64; 2]> {
    Some([a?, b?])
}

impl PredictionRow {
    pub fn pred_mm(&self) -> Option<[f64; 2]> {
        both(self.pred_x_mm, self.pred_y_mm)
    }

    pub fn gt_mm(&self) -> Option<[f64; 2]> {
        both(self.gt_x_mm, self.gt_y_mm)
    }

    pub fn pred_angles(&self) -> Option<GazeAngles> {
        both(self.pred_pitch, self.pred_yaw).map(|[p, y]| GazeAngles::new(p, y))
    }

    pub fn gt_angles(&self) -> Option<GazeAngles> {
        both(self.gt_pitch, self.gt_yaw).map(|[p, y]| GazeAngles::new(p, y))
    }

    /// `(pitch, yaw, roll)`, missing components read as 0.
    pub fn head_pose(&self) -> Option<[f64; 3]> {
        if self.head_pitch.is_none() && self.head_yaw.is_none() && self.head_roll.is_none() {
            return None;
        }
        Some([self.head_pitch.unwrap_or(0.0), self.head_yaw.unwrap_or(0.0), self.head_roll.unwrap_or(0.0)])
    }
}

pub fn read_predictions(reader: impl Read) -> Result<Vec<PredictionRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for (i, row) in rdr.deserialize::<PredictionRow>().enumerate() {
        let row = row.map_err(|e| Error::Schema(format!("prediction row {}: {e}", i + 1)))?;
        let values = [
            row.pred_x_mm,
            row.pred_y_mm,
            row.gt_x_mm,
            row.gt_y_mm,
            row.pred_pitch,
            row.pred_yaw,
            row.gt_pitch,
            row.gt_yaw,
        ];
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Schema(format!("prediction row {}: non-finite value", i + 1)));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optional_columns() {
        let text = "sample_id,subject,session,pred_x_mm,pred_y_mm,gt_x_mm,gt_y_mm\na,p1,a,1,2,3,4\nb,p1,c,,2,3,4\n";
        let rows = read_predictions(text.as_bytes()).unwrap();
        assert_eq!(rows[0].pred_mm(), Some([1.0, 2.0]));
        assert_eq!(rows[1].pred_mm(), None);
        assert_eq!(rows[0].pred_angles(), None);
        assert_eq!(rows[0].session.as_deref(), Some("a"));
    }

    #[test]
    fn bad_number_is_schema_error() {
        let text = "sample_id,pred_x_mm\na,abc\n";
        assert!(matches!(read_predictions(text.as_bytes()), Err(Error::Schema(_))));
    }
}
