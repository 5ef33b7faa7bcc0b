use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::emit::SurfaceKind;
use super::{Annotation, DatasetError};
use crate::compose::AugmentParams;
use crate::config::{AugmentStage, RunConfig};
use crate::intermediate::{PairMethod, LAPLACE_ENCODING};
use crate::ControlPoints3D64;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "posegap-dataset/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetKind {
    Paired { method: PairMethod },
    Unpaired,
    Composited { surface: SurfaceKind },
}

/// How source images encode the signed Laplace response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEncoding {
    pub mapping: String,
    pub zero_level: u8,
    pub source_channels: u8,
}

impl Default for LaplaceEncoding {
    fn default() -> Self {
        Self { mapping: LAPLACE_ENCODING.to_string(), zero_level: 128, source_channels: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationEcho {
    pub enabled: bool,
    pub stage: AugmentStage,
    /// Whether the emitted images already carry the augmentation.
    pub applied_at_emission: bool,
    pub params: AugmentParams,
}

/// One sample: its files by role and, for rendered samples, the annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    /// `A` or `B` in unpaired datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    pub files: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<Annotation>,
    /// Source-silhouette IoU against the target mask, for paired samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment_iou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub generator_version: String,
    pub dataset_kind: DatasetKind,
    pub sample_count: usize,
    pub image_size: [u32; 2],
    pub root_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laplace_encoding: Option<LaplaceEncoding>,
    pub augmentation: AugmentationEcho,
    pub config: RunConfig,
    /// Model-frame control points per object id.
    pub objects: BTreeMap<String, ControlPoints3D64>,
    pub records: Vec<Record>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| DatasetError::ManifestParse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| DatasetError::io(path, e))
    }

    /// Annotations of all records that carry one, in record order.
    pub fn annotations(&self) -> impl Iterator<Item = &Annotation> {
        self.records.iter().filter_map(|r| r.annotation.as_ref())
    }
}
