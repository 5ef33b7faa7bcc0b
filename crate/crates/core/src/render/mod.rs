//! Software rasterizer for object renders.
//!
//! Renders are RGBA with a binary coverage alpha plus a per-pixel camera
//! depth buffer. Shading is Lambertian with inverse-square point lights.

mod raster;
mod sampling;
mod surface;

use std::sync::Arc;

use thiserror::Error;

use crate::assets::{ImageGray, ImageRgb, ImageRgba};
use crate::geometry::GeometryError;
use crate::Vec3d;

pub use raster::{rasterize, NEAR_PLANE};
pub use sampling::{central_box, sample_lights, sample_pose, LightSampling, PoseSampling};
pub use surface::{sample_surface, shade_factor, shade_lambert};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("no pixel is covered by the object")]
    NothingVisible,
    #[error("real-texture mode requires a mesh texture")]
    MissingTexture,
    #[error("invalid render configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Shared, read-only set of texture images for random texturing.
#[derive(Debug, Clone, Default)]
pub struct TexturePool(Arc<Vec<ImageRgb>>);

impl TexturePool {
    pub fn new(images: Vec<ImageRgb>) -> Self {
        Self(Arc::new(images))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&ImageRgb> {
        self.0.get(i)
    }

    /// Texture chosen uniformly by `seed`.
    pub fn pick(&self, seed: u64) -> Option<&ImageRgb> {
        use rand::Rng;
        if self.0.is_empty() {
            return None;
        }
        let i = crate::seed::rng(seed).random_range(0..self.0.len());
        self.0.get(i)
    }
}

/// How the object surface is colored.
#[derive(Debug, Clone)]
pub enum SurfaceMode {
    /// The mesh's own texture.
    RealTexture,
    /// A texture drawn from the pool by the render seed.
    RandomTexture { pool: TexturePool },
    UniformColor { rgb: [u8; 3] },
    /// `color_a` where `floor(u·n) + floor(v·n)` is even, else `color_b`.
    Checkerboard { cells_per_uv: u32, color_a: [u8; 3], color_b: [u8; 3] },
}

impl SurfaceMode {
    pub const DEFAULT_GRAY: [u8; 3] = [128, 128, 128];

    pub fn uniform_gray() -> Self {
        SurfaceMode::UniformColor { rgb: Self::DEFAULT_GRAY }
    }

    pub fn default_checkerboard() -> Self {
        SurfaceMode::Checkerboard { cells_per_uv: 8, color_a: [0, 0, 0], color_b: [255, 255, 255] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLight {
    /// Camera frame, meters.
    pub position: Vec3d,
    pub intensity: f64,
}

#[derive(Debug, Clone)]
pub struct RenderConfig {
    pub mode: SurfaceMode,
    /// Empty for an unlit (albedo times ambient) render.
    pub lights: Vec<PointLight>,
    pub ambient: f64,
    pub image_size: (u32, u32),
    pub seed: u64,
}

impl RenderConfig {
    pub const MIN_SIZE: u32 = 16;

    /// Unlit render at full ambient.
    pub fn unlit(mode: SurfaceMode, image_size: (u32, u32), seed: u64) -> Self {
        Self { mode, lights: Vec::new(), ambient: 1.0, image_size, seed }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let (w, h) = self.image_size;
        if w < Self::MIN_SIZE || h < Self::MIN_SIZE {
            return Err(RenderError::InvalidConfig(format!("image size {w}x{h} below {0}x{0}", Self::MIN_SIZE)));
        }
        if !(0.0..=1.0).contains(&self.ambient) {
            return Err(RenderError::InvalidConfig(format!("ambient {} outside [0, 1]", self.ambient)));
        }
        if let Some(l) = self.lights.iter().find(|l| !(l.intensity >= 0.0 && l.intensity.is_finite())) {
            return Err(RenderError::InvalidConfig(format!("light intensity {} must be finite and >= 0", l.intensity)));
        }
        if let SurfaceMode::Checkerboard { cells_per_uv: 0, .. } = self.mode {
            return Err(RenderError::InvalidConfig("checkerboard needs at least one cell per uv".into()));
        }
        if let SurfaceMode::RandomTexture { pool } = &self.mode {
            if pool.is_empty() {
                return Err(RenderError::InvalidConfig("random texture pool is empty".into()));
            }
        }
        Ok(())
    }
}

/// Color with coverage alpha, and camera depth (`+inf` where empty).
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub color: ImageRgba,
    pub depth: Vec<f32>,
}

impl RenderOutput {
    pub fn width(&self) -> u32 {
        self.color.width()
    }

    pub fn height(&self) -> u32 {
        self.color.height()
    }

    pub fn covered_pixels(&self) -> usize {
        self.color.pixels().filter(|p| p[3] > 0).count()
    }

    /// 255 on covered pixels, 0 elsewhere.
    pub fn mask(&self) -> ImageGray {
        ImageGray::from_fn(self.width(), self.height(), |x, y| image::Luma([self.color.get_pixel(x, y)[3]]))
    }

    pub fn depth_at(&self, x: u32, y: u32) -> f32 {
        self.depth[(y * self.width() + x) as usize]
    }
}
