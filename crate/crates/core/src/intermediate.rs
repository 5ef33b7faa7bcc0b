//! Laplace-filtered edge domain and aligned source/target pair recipes.
//!
//! Encoding of the signed filter response into 8 bits:
//! `clamp(128 + round(raw / 2), 0, 255)`, ties rounded away from zero, so a
//! zero response maps to exactly 128.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use image::{Luma, Rgb};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::{ImageGray, ImageGrayF, ImageRgb};
use crate::compose::{composite, AugmentSample, ComposeError};
use crate::dataset::ObjectModel;
use crate::render::{rasterize, sample_lights, LightSampling, RenderConfig, RenderError, RenderOutput, SurfaceMode, TexturePool};
use crate::seed;
use crate::{Intrinsics64, Pose64};

/// Human-readable form of the 8-bit encoding, echoed into manifests.
pub const LAPLACE_ENCODING: &str = "u8 = clamp(128 + round_half_away(raw / 2), 0, 255); raw = 4-neighbour Laplacian of Rec.601 gray, replicate border";

/// Minimum overlap between the silhouette recovered from a source image and
/// the target's render mask.
pub const MIN_ALIGNMENT_IOU: f64 = 0.5;

#[derive(Debug, Error)]
pub enum IntermediateError {
    #[error("image {0}x{1} is smaller than the 3x3 filter")]
    TooSmall(u32, u32),
    #[error("source/target silhouette IoU {iou:.3} below {MIN_ALIGNMENT_IOU}")]
    Misaligned { iou: f64 },
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

/// Laplace response in its 8-bit encoding plus the raw signed values.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceImage {
    pub encoded: ImageGray,
    pub raw: ImageGrayF,
}

impl LaplaceImage {
    /// Encoded form replicated to three channels.
    pub fn to_rgb(&self) -> ImageRgb {
        ImageRgb::from_fn(self.encoded.width(), self.encoded.height(), |x, y| {
            let v = self.encoded.get_pixel(x, y)[0];
            Rgb([v, v, v])
        })
    }
}

/// Rec.601 luma, `(299 R + 587 G + 114 B) / 1000` rounded half-up.
pub fn to_grayscale(img: &ImageRgb) -> ImageGray {
    ImageGray::from_fn(img.width(), img.height(), |x, y| {
        let [r, g, b] = img.get_pixel(x, y).0.map(u32::from);
        Luma([((299 * r + 587 * g + 114 * b + 500) / 1000) as u8])
    })
}

pub fn encode_response(raw: i32) -> u8 {
    // i32 division truncates toward zero; adding the sign of the remainder
    // rounds halves away from zero
    let half = raw / 2 + (raw % 2);
    (128 + half).clamp(0, 255) as u8
}

/// 4-neighbour Laplacian with replicated borders.
pub fn laplace(img: &ImageGray) -> Result<LaplaceImage, IntermediateError> {
    let (w, h) = img.dimensions();
    if w < 3 || h < 3 {
        return Err(IntermediateError::TooSmall(w, h));
    }
    let at = |x: i64, y: i64| i32::from(img.get_pixel(x.clamp(0, w as i64 - 1) as u32, y.clamp(0, h as i64 - 1) as u32)[0]);
    let mut raw = ImageGrayF::new(w, h);
    let mut encoded = ImageGray::new(w, h);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let r = at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4 * at(x, y);
            raw.put_pixel(x as u32, y as u32, Luma([r as f32]));
            encoded.put_pixel(x as u32, y as u32, Luma([encode_response(r)]));
        }
    }
    Ok(LaplaceImage { encoded, raw })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairMethod {
    #[serde(rename = "Method1_RealTex")]
    Method1RealTex,
    #[serde(rename = "Method2_RandomTex")]
    Method2RandomTex,
    #[serde(rename = "Method3_UniformToGray")]
    Method3UniformToGray,
    #[serde(rename = "Method4_UniformToChecker")]
    Method4UniformToChecker,
}

impl PairMethod {
    pub const ALL: [PairMethod; 4] =
        [Self::Method1RealTex, Self::Method2RandomTex, Self::Method3UniformToGray, Self::Method4UniformToChecker];

    pub fn name(self) -> &'static str {
        match self {
            Self::Method1RealTex => "Method1_RealTex",
            Self::Method2RandomTex => "Method2_RandomTex",
            Self::Method3UniformToGray => "Method3_UniformToGray",
            Self::Method4UniformToChecker => "Method4_UniformToChecker",
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::Method1RealTex => 1,
            Self::Method2RandomTex => 2,
            Self::Method3UniformToGray => 3,
            Self::Method4UniformToChecker => 4,
        }
    }
}

impl fmt::Display for PairMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PairMethod {
    type Err = String;

    /// Accepts `1`..`4`, the full names, or `realtex`, `randtex`, `gray`, `checker`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        PairMethod::ALL
            .into_iter()
            .find(|m| {
                let short = match m {
                    Self::Method1RealTex => "realtex",
                    Self::Method2RandomTex => "randtex",
                    Self::Method3UniformToGray => "gray",
                    Self::Method4UniformToChecker => "checker",
                };
                lower == m.number().to_string() || lower == m.name().to_ascii_lowercase() || lower == short
            })
            .ok_or_else(|| format!("unknown method `{s}` (expected 1-4, realtex, randtex, gray or checker)"))
    }
}

/// Surface and lighting parameters shared by every pair of a run.
#[derive(Debug, Clone)]
pub struct PairSettings {
    pub image_size: (u32, u32),
    pub uniform_color: [u8; 3],
    pub checker: SurfaceMode,
    pub lights: LightSampling,
    /// Ambient term of the lit gray target.
    pub ambient_lit: f64,
    pub textures: TexturePool,
}

impl PairSettings {
    pub fn new(image_size: (u32, u32)) -> Self {
        Self {
            image_size,
            uniform_color: SurfaceMode::DEFAULT_GRAY,
            checker: SurfaceMode::default_checkerboard(),
            lights: LightSampling::default(),
            ambient_lit: 0.3,
            textures: TexturePool::default(),
        }
    }
}

/// One aligned source/target pair.
#[derive(Debug, Clone)]
pub struct Pair {
    pub source: LaplaceImage,
    pub target: ImageRgb,
    /// Render coverage of the target after augmentation.
    pub target_mask: ImageGray,
    /// Silhouette recovered from the source against the bare background.
    pub source_silhouette: ImageGray,
    pub iou: f64,
}

/// Builds the pair for `method` over background `bg`.
///
/// `augment` is applied to every composite (and the bare background) before
/// the Laplace filter, so both sides stay pixel aligned.
#[allow(clippy::too_many_arguments)]
pub fn make_pair(
    object: &ObjectModel,
    pose: &Pose64,
    k: &Intrinsics64,
    method: PairMethod,
    bg: &ImageRgb,
    settings: &PairSettings,
    augment: &AugmentSample,
    sample_seed: u64,
) -> Result<Pair, IntermediateError> {
    let size = settings.image_size;
    let render = |mode: SurfaceMode, lit: bool| -> Result<RenderOutput, IntermediateError> {
        let mut cfg = RenderConfig::unlit(mode, size, seed::derive(sample_seed, seed::TAG_TEXTURE));
        if lit {
            let center = pose.transform_point(object.control_points.centroid);
            cfg.lights = sample_lights(seed::derive(sample_seed, seed::TAG_LIGHTS), &settings.lights, center)?;
            cfg.ambient = settings.ambient_lit;
        }
        Ok(rasterize(&object.mesh, pose, k, &cfg)?)
    };
    let gray = SurfaceMode::UniformColor { rgb: settings.uniform_color };

    let (source_render, target_render) = match method {
        PairMethod::Method1RealTex => (None, render(SurfaceMode::RealTexture, false)?),
        PairMethod::Method2RandomTex => {
            (None, render(SurfaceMode::RandomTexture { pool: settings.textures.clone() }, false)?)
        }
        PairMethod::Method3UniformToGray => (Some(render(gray.clone(), false)?), render(gray, true)?),
        PairMethod::Method4UniformToChecker => (Some(render(gray, false)?), render(settings.checker.clone(), false)?),
    };

    let target = augment.apply(&composite(&target_render.color, bg)?);
    let source_rgb = match &source_render {
        Some(r) => augment.apply(&composite(&r.color, bg)?),
        None => target.clone(),
    };
    let source = laplace(&to_grayscale(&source_rgb))?;
    let target_mask = augment.apply_mask(&target_render.mask());

    let background = laplace(&to_grayscale(&augment.apply(bg)))?;
    let source_silhouette = silhouette(&source, &background);
    let iou = mask_iou(&source_silhouette, &target_mask);
    Ok(Pair { source, target, target_mask, source_silhouette, iou })
}

/// Pixels where the source response differs from the bare background's,
/// closed by one pixel and with enclosed holes filled.
pub fn silhouette(source: &LaplaceImage, background: &LaplaceImage) -> ImageGray {
    let (w, h) = source.raw.dimensions();
    let changed = ImageGray::from_fn(w, h, |x, y| {
        let d = (source.raw.get_pixel(x, y)[0] - background.raw.get_pixel(x, y)[0]).abs();
        Luma([if d > 0.5 { 255 } else { 0 }])
    });
    erode(&fill_holes(&dilate(&changed)))
}

/// 3x3 cross dilation (`grow`) or erosion; out-of-image taps are ignored.
fn morph(mask: &ImageGray, grow: bool) -> ImageGray {
    let (w, h) = mask.dimensions();
    ImageGray::from_fn(w, h, |x, y| {
        let mut taps = [(0i64, 0i64), (-1, 0), (1, 0), (0, -1), (0, 1)]
            .into_iter()
            .map(|(dx, dy)| (x as i64 + dx, y as i64 + dy))
            .filter(|&(nx, ny)| nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64)
            .map(|(nx, ny)| mask.get_pixel(nx as u32, ny as u32)[0] > 0);
        let hit = if grow { taps.any(|s| s) } else { taps.all(|s| s) };
        Luma([if hit { 255 } else { 0 }])
    })
}

fn dilate(mask: &ImageGray) -> ImageGray {
    morph(mask, true)
}

fn erode(mask: &ImageGray) -> ImageGray {
    morph(mask, false)
}

/// Sets every unset pixel not 4-connected to the image border.
pub fn fill_holes(mask: &ImageGray) -> ImageGray {
    let (w, h) = mask.dimensions();
    let idx = |x: u32, y: u32| (y * w + x) as usize;
    let mut outside = vec![false; (w * h) as usize];
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            let border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
            if border && mask.get_pixel(x, y)[0] == 0 {
                outside[idx(x, y)] = true;
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        let neighbours = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
        for (nx, ny) in neighbours {
            if nx < w && ny < h && !outside[idx(nx, ny)] && mask.get_pixel(nx, ny)[0] == 0 {
                outside[idx(nx, ny)] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    ImageGray::from_fn(w, h, |x, y| Luma([if outside[idx(x, y)] { 0 } else { 255 }]))
}

/// Intersection over union of two binary masks; 1 when both are empty.
pub fn mask_iou(a: &ImageGray, b: &ImageGray) -> f64 {
    let (mut inter, mut union) = (0u64, 0u64);
    for (pa, pb) in a.pixels().zip(b.pixels()) {
        let (sa, sb) = (pa[0] > 0, pb[0] > 0);
        inter += u64::from(sa && sb);
        union += u64::from(sa || sb);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
