//! Dataset emission, background harvesting and validation.
//!
//! On-disk layout, all paths relative to `manifest.json`:
//!
//! | kind       | directories                              |
//! |------------|------------------------------------------|
//! | paired     | `source/`, `target/`, `ann/`             |
//! | unpaired   | `trainA/`, `annA/`, `trainB/`            |
//! | composited | `images/`, `ann/`                        |
//!
//! Every image is an 8-bit PNG named `%06d.png`; every annotation is a single
//! line of JSON named `%06d.json` (see [`Annotation`]).

mod emit;
mod harvest;
mod manifest;
mod validate;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::{AssetError, Mesh};
use crate::compose::ComposeError;
use crate::config::ConfigError;
use crate::geometry::{project_control_points, GeometryError};
use crate::intermediate::IntermediateError;
use crate::render::RenderError;
use crate::{ControlPoints2D64, ControlPoints3D64, Intrinsics64, Pose64};

pub use emit::{
    emit_composited, emit_paired, emit_unpaired, render_single, EmitOptions, Progress, SingleRender, SurfaceKind,
    MAX_POSE_ATTEMPTS,
};
pub use harvest::{harvest_crops, CropSpec, HarvestOutput};
pub use manifest::{AugmentationEcho, DatasetKind, LaplaceEncoding, Manifest, Record, MANIFEST_FILE, MANIFEST_FORMAT};
pub use validate::{validate, ValidationReport, Violation, REPROJECTION_TOLERANCE_PX};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    ManifestParse { path: PathBuf, message: String },
    #[error("output directory {0} exists and is not empty")]
    OutputExists(PathBuf),
    #[error("no decodable image in {0}")]
    EmptySource(PathBuf),
    #[error("{0}")]
    Invalid(String),
    #[error("no pose with all control points inside the frame after {attempts} attempts")]
    DegeneratePose { attempts: usize },
    #[error("sample {sample}: {source}")]
    Sample { sample: String, source: Box<DatasetError> },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Intermediate(#[from] IntermediateError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io { path: path.to_path_buf(), source }
    }

    /// True for failures caused by the arguments or config rather than by
    /// the filesystem.
    pub fn is_usage_error(&self) -> bool {
        match self {
            DatasetError::Io { .. } | DatasetError::Asset(AssetError::Io { .. }) => false,
            DatasetError::Config(ConfigError::Read { .. }) => false,
            DatasetError::Config(ConfigError::Asset(AssetError::Io { .. })) => false,
            DatasetError::Compose(ComposeError::Asset(AssetError::Io { .. })) => false,
            DatasetError::Sample { source, .. } => source.is_usage_error(),
            _ => true,
        }
    }
}

/// A mesh with its id and model-frame control points.
#[derive(Debug, Clone)]
pub struct ObjectModel {
    pub id: String,
    pub mesh: Arc<Mesh>,
    pub control_points: ControlPoints3D64,
}

impl ObjectModel {
    pub fn new(id: impl Into<String>, mesh: Mesh) -> Result<Self, GeometryError> {
        let control_points = mesh.control_points()?;
        Ok(Self { id: id.into(), mesh: Arc::new(mesh), control_points })
    }
}

/// Ground truth of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub sample_id: String,
    pub object_id: String,
    pub pose: Pose64,
    pub intrinsics: Intrinsics64,
    /// Projections of the centroid and the 8 bounding-box corners.
    pub control_points_2d: ControlPoints2D64,
    pub image_size: [u32; 2],
    pub source_seed: u64,
}

impl Annotation {
    pub fn new(
        sample_id: impl Into<String>,
        object: &ObjectModel,
        pose: Pose64,
        intrinsics: Intrinsics64,
        source_seed: u64,
    ) -> Result<Self, GeometryError> {
        let control_points_2d = project_control_points(&object.control_points, &pose, &intrinsics)?;
        Ok(Self {
            sample_id: sample_id.into(),
            object_id: object.id.clone(),
            pose,
            intrinsics,
            control_points_2d,
            image_size: [intrinsics.width, intrinsics.height],
            source_seed,
        })
    }

    /// Largest distance between the stored control points and the
    /// re-projection of `cp3d` under the stored pose.
    pub fn reprojection_residual(&self, cp3d: &ControlPoints3D64) -> Result<f64, GeometryError> {
        let projected = project_control_points(cp3d, &self.pose, &self.intrinsics)?;
        Ok(projected.max_distance(&self.control_points_2d))
    }

    pub fn to_json_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("annotation serializes");
        s.push('\n');
        s
    }
}

pub fn sample_id(index: usize) -> String {
    format!("{index:06}")
}
