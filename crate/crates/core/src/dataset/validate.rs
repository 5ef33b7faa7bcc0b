use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::manifest::Manifest;
use super::{Annotation, DatasetError};
use crate::assets::decode_image;
use crate::intermediate::MIN_ALIGNMENT_IOU;

/// Largest accepted distance between stored and re-projected control points.
pub const REPROJECTION_TOLERANCE_PX: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MissingFile { record: String, path: PathBuf },
    UndecodableImage { record: String, path: PathBuf, message: String },
    ImageSizeMismatch { record: String, path: PathBuf, found: [u32; 2], expected: [u32; 2] },
    AnnotationInvalid { record: String, message: String },
    ReprojectionMismatch { record: String, residual_px: f64 },
    CountMismatch { declared: usize, found: usize },
    DuplicateId { record: String },
    Misaligned { record: String, iou: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingFile { record, path } => write!(f, "{record}: missing file {}", path.display()),
            Violation::UndecodableImage { record, path, message } => {
                write!(f, "{record}: cannot decode {}: {message}", path.display())
            }
            Violation::ImageSizeMismatch { record, path, found, expected } => write!(
                f,
                "{record}: {} is {}x{}, expected {}x{}",
                path.display(),
                found[0],
                found[1],
                expected[0],
                expected[1]
            ),
            Violation::AnnotationInvalid { record, message } => write!(f, "{record}: invalid annotation: {message}"),
            Violation::ReprojectionMismatch { record, residual_px } => {
                write!(f, "{record}: control points off by {residual_px:.4} px from re-projection")
            }
            Violation::CountMismatch { declared, found } => {
                write!(f, "manifest declares {declared} samples but lists {found}")
            }
            Violation::DuplicateId { record } => write!(f, "{record}: duplicate record id"),
            Violation::Misaligned { record, iou } => {
                write!(f, "{record}: source/target IoU {iou:.3} below {MIN_ALIGNMENT_IOU}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub records_checked: usize,
    pub files_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_record(root: &Path, manifest: &Manifest, index: usize) -> (usize, Vec<Violation>) {
    let rec = &manifest.records[index];
    let label = match &rec.domain {
        Some(d) => format!("{d}/{}", rec.id),
        None => rec.id.clone(),
    };
    let mut out = Vec::new();
    let mut annotation = rec.annotation.clone();
    for (role, rel) in &rec.files {
        let path = root.join(rel);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(_) => {
                out.push(Violation::MissingFile { record: label.clone(), path });
                continue;
            }
        };
        if role == "annotation" {
            match std::str::from_utf8(&bytes).map_err(|e| e.to_string()).and_then(|t| {
                serde_json::from_str::<Annotation>(t).map_err(|e| e.to_string())
            }) {
                Ok(a) => annotation = Some(a),
                Err(message) => out.push(Violation::AnnotationInvalid { record: label.clone(), message }),
            }
            continue;
        }
        match decode_image(&bytes, &path) {
            Ok(img) => {
                let found = [img.width(), img.height()];
                if found != manifest.image_size {
                    out.push(Violation::ImageSizeMismatch {
                        record: label.clone(),
                        path,
                        found,
                        expected: manifest.image_size,
                    });
                }
            }
            Err(e) => out.push(Violation::UndecodableImage { record: label.clone(), path, message: e.to_string() }),
        }
    }
    if let Some(iou) = rec.alignment_iou.filter(|iou| !(*iou >= MIN_ALIGNMENT_IOU)) {
        out.push(Violation::Misaligned { record: label.clone(), iou });
    }
    if let Some(ann) = annotation {
        match manifest.objects.get(&ann.object_id) {
            None => out.push(Violation::AnnotationInvalid {
                record: label.clone(),
                message: format!("unknown object id `{}`", ann.object_id),
            }),
            Some(cp3d) => match ann.reprojection_residual(cp3d) {
                Ok(r) if r <= REPROJECTION_TOLERANCE_PX => {}
                Ok(r) => out.push(Violation::ReprojectionMismatch { record: label.clone(), residual_px: r }),
                // NaN residuals land here too
                Err(e) => out.push(Violation::AnnotationInvalid { record: label.clone(), message: e.to_string() }),
            },
        }
        if ann.image_size != manifest.image_size {
            out.push(Violation::AnnotationInvalid {
                record: label,
                message: format!("image size {:?} differs from manifest {:?}", ann.image_size, manifest.image_size),
            });
        }
    }
    (rec.files.len(), out)
}

/// Checks an emitted dataset against its manifest.
pub fn validate(manifest_path: &Path) -> Result<ValidationReport, DatasetError> {
    let manifest = Manifest::read(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let mut report = ValidationReport { records_checked: manifest.records.len(), ..Default::default() };
    if manifest.sample_count != manifest.records.len() {
        report.violations.push(Violation::CountMismatch { declared: manifest.sample_count, found: manifest.records.len() });
    }
    let mut seen = HashSet::new();
    for r in &manifest.records {
        if !seen.insert((r.domain.as_deref(), r.id.as_str())) {
            report.violations.push(Violation::DuplicateId { record: r.id.clone() });
        }
    }
    let per_record: Vec<_> = (0..manifest.records.len()).into_par_iter().map(|i| check_record(root, &manifest, i)).collect();
    for (files, violations) in per_record {
        report.files_checked += files;
        report.violations.extend(violations);
    }
    Ok(report)
}
