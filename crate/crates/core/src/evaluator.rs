//! Pose error metrics and report tables.
//!
//! Three errors per sample: mean 2D distance over the 9 control points
//! (pixels), translation distance (centimeters) and geodesic rotation angle
//! (degrees). Means are taken over detected samples only; the detection
//! rate is reported separately.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Annotation;
use crate::geometry::{project_control_points, rotation_angle_deg, ControlPoints2D, GeometryError, Vec3};
use crate::{ControlPoints2D64, ControlPoints3D64, Pose64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("control point lists have {0} and {1} entries, expected 9")]
    LengthMismatch(usize, usize),
    #[error("prediction for unknown sample `{0}`")]
    UnknownSampleId(String),
    #[error("sample `{0}` appears more than once")]
    DuplicateId(String),
    #[error("no control points for object `{0}`")]
    UnknownObject(String),
    #[error("sample `{sample}`: {source}")]
    Geometry { sample: String, source: GeometryError },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Mean Euclidean distance between corresponding control points.
pub fn reprojection_error_px<T: Real>(pred: &ControlPoints2D<T>, gt: &ControlPoints2D<T>) -> T {
    let sum = pred.points.iter().zip(gt.points.iter()).fold(T::zero(), |acc, (p, g)| acc + p.distance(*g));
    sum / T::lit(9.0)
}

/// Same metric over unchecked slices, for externally supplied points.
pub fn reprojection_error_px_slice<T: Real>(pred: &[[T; 2]], gt: &[[T; 2]]) -> Result<T, EvalError> {
    if pred.len() != 9 || gt.len() != 9 {
        return Err(EvalError::LengthMismatch(pred.len(), gt.len()));
    }
    let sum = pred.iter().zip(gt).fold(T::zero(), |acc, (p, g)| acc + (p[0] - g[0]).hypot(p[1] - g[1]));
    Ok(sum / T::lit(9.0))
}

/// `‖t_pred − t_gt‖ · 100`, meters to centimeters.
pub fn translation_error_cm<T: Real>(t_pred: Vec3<T>, t_gt: Vec3<T>) -> T {
    (t_pred - t_gt).norm() * T::lit(100.0)
}

/// A model output. Absent pose and control points mean "not detected".
/// Extra fields (for instance those of a full annotation) are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Pose64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_points_2d: Option<ControlPoints2D64>,
}

impl Prediction {
    pub fn detected(&self) -> bool {
        self.pose.is_some() || self.control_points_2d.is_some()
    }
}

/// Parses JSON-lines predictions; blank lines are skipped.
pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| EvalError::Parse { line: i + 1, message: e.to_string() }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleErrors {
    pub sample_id: String,
    pub detected: bool,
    pub reprojection_px: Option<f64>,
    pub translation_cm: Option<f64>,
    pub angle_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mean_reprojection_px: Option<f64>,
    pub mean_translation_cm: Option<f64>,
    pub mean_angle_deg: Option<f64>,
    pub detection_rate: f64,
    pub sample_count: usize,
    pub rows: Vec<SampleErrors>,
}

impl MetricsReport {
    /// A report carrying only summary values, for tables of external results.
    pub fn summary(reprojection_px: f64, translation_cm: f64, angle_deg: f64) -> Self {
        Self {
            mean_reprojection_px: Some(reprojection_px),
            mean_translation_cm: Some(translation_cm),
            mean_angle_deg: Some(angle_deg),
            detection_rate: 1.0,
            sample_count: 0,
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("sample_id,detected,reprojection_px,translation_cm,angle_deg\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.sample_id,
                r.detected,
                opt(r.reprojection_px),
                opt(r.translation_cm),
                opt(r.angle_deg)
            );
        }
        s
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Scores `preds` against ground truth. Samples without a prediction count
/// as undetected; control points are re-projected from the predicted pose
/// when the prediction carries only a pose.
pub fn aggregate(
    preds: &[Prediction],
    gts: &[Annotation],
    objects: &BTreeMap<String, ControlPoints3D64>,
) -> Result<MetricsReport, EvalError> {
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(gts.len());
    for (i, g) in gts.iter().enumerate() {
        if index.insert(g.sample_id.as_str(), i).is_some() {
            return Err(EvalError::DuplicateId(g.sample_id.clone()));
        }
    }
    let mut by_gt: Vec<Option<&Prediction>> = vec![None; gts.len()];
    for p in preds {
        let i = *index.get(p.sample_id.as_str()).ok_or_else(|| EvalError::UnknownSampleId(p.sample_id.clone()))?;
        if by_gt[i].replace(p).is_some() {
            return Err(EvalError::DuplicateId(p.sample_id.clone()));
        }
    }

    let mut rows = Vec::with_capacity(gts.len());
    for (gt, pred) in gts.iter().zip(by_gt) {
        let geo = |e: GeometryError| EvalError::Geometry { sample: gt.sample_id.clone(), source: e };
        let mut row = SampleErrors {
            sample_id: gt.sample_id.clone(),
            detected: false,
            reprojection_px: None,
            translation_cm: None,
            angle_deg: None,
        };
        if let Some(p) = pred.filter(|p| p.detected()) {
            row.detected = true;
            let cps = match (&p.control_points_2d, &p.pose) {
                (Some(c), _) => *c,
                (None, Some(pose)) => {
                    let cp3d = objects.get(&gt.object_id).ok_or_else(|| EvalError::UnknownObject(gt.object_id.clone()))?;
                    project_control_points(cp3d, pose, &gt.intrinsics).map_err(geo)?
                }
                (None, None) => unreachable!("detected predictions carry a pose or points"),
            };
            row.reprojection_px = Some(reprojection_error_px(&cps, &gt.control_points_2d));
            if let Some(pose) = &p.pose {
                row.translation_cm = Some(translation_error_cm(pose.translation(), gt.pose.translation()));
                row.angle_deg = Some(rotation_angle_deg(pose.rotation(), gt.pose.rotation()).map_err(geo)?);
            }
        }
        rows.push(row);
    }

    let detected = rows.iter().filter(|r| r.detected).count();
    Ok(MetricsReport {
        mean_reprojection_px: mean(rows.iter().filter_map(|r| r.reprojection_px)),
        mean_translation_cm: mean(rows.iter().filter_map(|r| r.translation_cm)),
        mean_angle_deg: mean(rows.iter().filter_map(|r| r.angle_deg)),
        detection_rate: if gts.is_empty() { 0.0 } else { detected as f64 / gts.len() as f64 },
        sample_count: gts.len(),
        rows,
    })
}

/// At most one decimal, with a trailing `.0` dropped: `12`, `8.9`, `22.5`.
fn short_decimal(v: f64) -> String {
    let s = format!("{v:.1}");
    match s.strip_suffix(".0") {
        Some(int) => int.to_string(),
        None => s,
    }
}

pub fn format_px(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{} px", short_decimal(v)))
}

pub fn format_cm(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{} cm", short_decimal(v)))
}

pub fn format_deg(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.1}°"))
}

/// Fixed-width table with columns re-projection, translation and angle.
pub fn render_table(rows: &[(String, MetricsReport)]) -> String {
    let header = ["", "re-projection", "translation", "angle"];
    let cells: Vec<[String; 4]> = rows
        .iter()
        .map(|(label, r)| {
            let label = if label.trim().is_empty() { "-".to_string() } else { label.clone() };
            [label, format_px(r.mean_reprojection_px), format_cm(r.mean_translation_cm), format_deg(r.mean_angle_deg)]
        })
        .collect();
    let mut width = header.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |c: [&str; 4]| {
        format!("{:<w0$} | {:>w1$} | {:>w2$} | {:>w3$}\n", c[0], c[1], c[2], c[3], w0 = width[0], w1 = width[1], w2 = width[2], w3 = width[3])
    };
    let mut out = line(header);
    out.push_str(&format!("{}-+-{}-+-{}-+-{}\n", "-".repeat(width[0]), "-".repeat(width[1]), "-".repeat(width[2]), "-".repeat(width[3])));
    for row in &cells {
        out.push_str(&line([&row[0], &row[1], &row[2], &row[3]]));
    }
    out
}
