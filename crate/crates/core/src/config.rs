//! Run configuration (TOML on disk) and asset loading.
//!
//! Every field has a default, so an empty file is a valid config. Relative
//! paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::{load_image, load_mesh, AssetError, MeshUnits};
use crate::compose::{AugmentParams, BackgroundKind, BackgroundPool, ComposeError};
use crate::dataset::ObjectModel;
use crate::geometry::{CameraIntrinsics, GeometryError};
use crate::intermediate::PairSettings;
use crate::render::{LightSampling, PoseSampling, SurfaceMode, TexturePool};
use crate::Intrinsics64;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("input path does not exist: {0}")]
    MissingInput(PathBuf),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: String,
    pub mesh: PathBuf,
    #[serde(default)]
    pub units: MeshUnits,
    /// Overrides the texture referenced by the mesh file, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub texture: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundDirs {
    /// Real photographs: paired/composited backgrounds, unpaired domain B.
    pub real: Option<PathBuf>,
    /// Synthetic (game) crops: unpaired domain A backgrounds.
    pub synthetic: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    /// Focal length as a multiple of the image width, used when
    /// `focal_px` is unset.
    pub focal_factor: f64,
    pub focal_px: Option<f64>,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self { focal_factor: 0.9, focal_px: None }
    }
}

impl CameraConfig {
    pub fn intrinsics(&self, width: u32, height: u32) -> Result<Intrinsics64, GeometryError> {
        let f = self.focal_px.unwrap_or(self.focal_factor * f64::from(width));
        CameraIntrinsics::centered(f, width, height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub uniform_color: [u8; 3],
    pub checker_cells: u32,
    pub checker_a: [u8; 3],
    pub checker_b: [u8; 3],
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self { uniform_color: SurfaceMode::DEFAULT_GRAY, checker_cells: 8, checker_a: [0, 0, 0], checker_b: [255, 255, 255] }
    }
}

impl SurfaceConfig {
    pub fn checkerboard(&self) -> SurfaceMode {
        SurfaceMode::Checkerboard { cells_per_uv: self.checker_cells, color_a: self.checker_a, color_b: self.checker_b }
    }
}

/// Whether augmentation is baked in at emission, ahead of image
/// translation, or left to be applied after translation downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentStage {
    #[default]
    BeforeTranslation,
    AfterTranslation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub enabled: bool,
    pub stage: AugmentStage,
    pub scale: [f64; 2],
    pub exposure: [f64; 2],
    pub saturation: [f64; 2],
}

impl Default for AugmentConfig {
    fn default() -> Self {
        let p = AugmentParams::default();
        Self { enabled: true, stage: AugmentStage::default(), scale: p.scale, exposure: p.exposure, saturation: p.saturation }
    }
}

impl AugmentConfig {
    pub fn params(&self) -> AugmentParams {
        AugmentParams { scale: self.scale, exposure: self.exposure, saturation: self.saturation }
    }

    /// True when emission itself applies the augmentation.
    pub fn applied_at_emission(&self) -> bool {
        self.enabled && self.stage == AugmentStage::BeforeTranslation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CropConfig {
    pub count: usize,
    pub size: u32,
    /// Crop side as a fraction of the frame's shorter side.
    pub side_fraction: [f64; 2],
}

impl Default for CropConfig {
    fn default() -> Self {
        Self { count: 500, size: 256, side_fraction: [0.5, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub root_seed: u64,
    /// Square image side; unset means 416 for paired/composited and 256
    /// for unpaired datasets.
    pub image_size: Option<u32>,
    pub objects: Vec<ObjectSpec>,
    pub backgrounds: BackgroundDirs,
    /// Texture images for random texturing; falls back to the real
    /// background photos.
    pub textures: Option<PathBuf>,
    pub camera: CameraConfig,
    pub pose: PoseSampling,
    pub lights: LightSampling,
    pub ambient_lit: f64,
    pub surface: SurfaceConfig,
    pub augment: AugmentConfig,
    pub crops: CropConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            root_seed: 0,
            image_size: None,
            objects: Vec::new(),
            backgrounds: BackgroundDirs::default(),
            textures: None,
            camera: CameraConfig::default(),
            pose: PoseSampling::default(),
            lights: LightSampling::default(),
            ambient_lit: 0.3,
            surface: SurfaceConfig::default(),
            augment: AugmentConfig::default(),
            crops: CropConfig::default(),
        }
    }
}

pub const PAIRED_DEFAULT_SIZE: u32 = 416;
pub const UNPAIRED_DEFAULT_SIZE: u32 = 256;

impl RunConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.to_path_buf(), source: e })?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Makes relative input paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for o in &mut self.objects {
            fix(&mut o.mesh);
            if let Some(t) = &mut o.texture {
                fix(t);
            }
        }
        for p in [&mut self.backgrounds.real, &mut self.backgrounds.synthetic, &mut self.textures].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn size_or(&self, default: u32) -> u32 {
        self.image_size.unwrap_or(default)
    }

    /// Checks ranges without touching the filesystem.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        self.pose.validate().map_err(|e| invalid(e.to_string()))?;
        self.lights.validate().map_err(|e| invalid(e.to_string()))?;
        self.augment.params().validate().map_err(|e| invalid(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.ambient_lit) {
            return Err(invalid(format!("ambient_lit {} outside [0, 1]", self.ambient_lit)));
        }
        if self.surface.checker_cells == 0 {
            return Err(invalid("surface.checker_cells must be at least 1".into()));
        }
        if let Some(s) = self.image_size {
            if s < crate::render::RenderConfig::MIN_SIZE {
                return Err(invalid(format!("image_size {s} below {}", crate::render::RenderConfig::MIN_SIZE)));
            }
        }
        if !(self.camera.focal_factor > 0.0) || self.camera.focal_px.is_some_and(|f| !(f > 0.0)) {
            return Err(invalid("camera focal length must be positive".into()));
        }
        let [a, b] = self.crops.side_fraction;
        if !(a > 0.0 && a <= b && b <= 1.0) {
            return Err(invalid(format!("crops.side_fraction [{a}, {b}] needs 0 < min <= max <= 1")));
        }
        let mut ids: Vec<&str> = self.objects.iter().map(|o| o.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid(format!("duplicate object id `{}`", w[0])));
        }
        Ok(())
    }

    /// Every configured input path that does not exist.
    pub fn missing_inputs(&self) -> Vec<PathBuf> {
        let mut all: Vec<&PathBuf> = Vec::new();
        for o in &self.objects {
            all.push(&o.mesh);
            all.extend(o.texture.as_ref());
        }
        all.extend([&self.backgrounds.real, &self.backgrounds.synthetic, &self.textures].into_iter().flatten());
        all.into_iter().filter(|p| !p.exists()).cloned().collect()
    }

    pub fn load_objects(&self) -> Result<Vec<ObjectModel>, ConfigError> {
        self.objects
            .iter()
            .map(|spec| {
                let mut mesh = load_mesh(&spec.mesh, spec.units)?;
                if let Some(t) = &spec.texture {
                    mesh.texture = Some(Arc::new(load_image(t)?));
                }
                Ok(ObjectModel::new(spec.id.clone(), mesh)?)
            })
            .collect()
    }

    pub fn pair_settings(&self, size: u32, textures: TexturePool) -> PairSettings {
        PairSettings {
            image_size: (size, size),
            uniform_color: self.surface.uniform_color,
            checker: self.surface.checkerboard(),
            lights: self.lights.clone(),
            ambient_lit: self.ambient_lit,
            textures,
        }
    }
}

/// Everything a run needs in memory.
#[derive(Debug, Clone)]
pub struct LoadedAssets {
    pub objects: Vec<ObjectModel>,
    pub real: Option<BackgroundPool>,
    pub synthetic: Option<BackgroundPool>,
    pub textures: TexturePool,
}

impl LoadedAssets {
    pub fn load(cfg: &RunConfig) -> Result<Self, ConfigError> {
        if let Some(p) = cfg.missing_inputs().into_iter().next() {
            return Err(ConfigError::MissingInput(p));
        }
        let objects = cfg.load_objects()?;
        let real = cfg.backgrounds.real.as_deref().map(|d| BackgroundPool::load(d, BackgroundKind::RealPhotos)).transpose()?;
        let synthetic =
            cfg.backgrounds.synthetic.as_deref().map(|d| BackgroundPool::load(d, BackgroundKind::SyntheticGame)).transpose()?;
        let textures = match (&cfg.textures, &real) {
            (Some(dir), _) => TexturePool::new(BackgroundPool::load(dir, BackgroundKind::RealPhotos)?.images().to_vec()),
            (None, Some(pool)) => TexturePool::new(pool.images().to_vec()),
            (None, None) => TexturePool::default(),
        };
        Ok(Self { objects, real, synthetic, textures })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let cfg = RunConfig::from_toml_str("", Path::new("run.toml")).unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig { root_seed: 42, image_size: Some(128), ..Default::default() };
        cfg.objects.push(ObjectSpec { id: "ape".into(), mesh: "/m/ape.ply".into(), units: MeshUnits::Millimeters, texture: None });
        let back = RunConfig::from_toml_str(&cfg.to_toml(), Path::new("x.toml")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let text = "[[objects]]\nid = \"cube\"\nmesh = \"meshes/cube.obj\"\n[backgrounds]\nreal = \"bg\"\n";
        let cfg = RunConfig::from_toml_str(text, Path::new("/data/run.toml")).unwrap();
        assert_eq!(cfg.objects[0].mesh, PathBuf::from("/data/meshes/cube.obj"));
        assert_eq!(cfg.backgrounds.real, Some(PathBuf::from("/data/bg")));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml_str("seed = 3\n", Path::new("r.toml")).is_err());
    }

    #[test]
    fn bad_ranges_rejected() {
        let mut cfg = RunConfig::default();
        cfg.augment.scale = [1.2, 0.8];
        assert!(cfg.validate().is_err());
    }
}
