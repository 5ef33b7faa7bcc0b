//! Background compositing and photometric/geometric augmentation.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::imageops::{self, FilterType};
use image::{Luma, Rgb};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::{list_images, load_image, AssetError, ImageGray, ImageRgb, ImageRgba};
use crate::dataset::Annotation;
use crate::geometry::{CameraIntrinsics, ControlPoints2D, GeometryError, Vec2};
use crate::Intrinsics64;
use crate::seed;

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("background pool {0} contains no images")]
    EmptyPool(PathBuf),
    #[error("foreground is {fg:?} but background is {bg:?}")]
    SizeMismatch { fg: (u32, u32), bg: (u32, u32) },
    #[error("invalid augmentation parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Asset(#[from] AssetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackgroundKind {
    RealPhotos,
    SyntheticGame,
}

/// Decoded background images, in sorted path order.
#[derive(Debug, Clone)]
pub struct BackgroundPool {
    pub source_dir: PathBuf,
    pub kind: BackgroundKind,
    pub paths: Vec<PathBuf>,
    images: Arc<Vec<ImageRgb>>,
}

impl BackgroundPool {
    /// Loads every PNG/JPEG below `dir`.
    pub fn load(dir: &Path, kind: BackgroundKind) -> Result<Self, ComposeError> {
        let paths = list_images(dir)?;
        if paths.is_empty() {
            return Err(ComposeError::EmptyPool(dir.to_path_buf()));
        }
        let images = paths.iter().map(|p| load_image(p)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { source_dir: dir.to_path_buf(), kind, paths, images: Arc::new(images) })
    }

    pub fn from_images(kind: BackgroundKind, images: Vec<ImageRgb>) -> Self {
        let paths = (0..images.len()).map(|i| PathBuf::from(format!("<memory:{i}>"))).collect();
        Self { source_dir: PathBuf::new(), kind, paths, images: Arc::new(images) }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[ImageRgb] {
        &self.images
    }
}

/// Index of the pool image chosen by `seed`.
pub fn pick_index(pool_len: usize, seed: u64) -> usize {
    seed::rng(seed).random_range(0..pool_len)
}

/// Uniformly chosen image, randomly cropped to `size` (upscaled first when
/// smaller than the crop).
pub fn pick_background(pool: &BackgroundPool, size: (u32, u32), seed: u64) -> Result<ImageRgb, ComposeError> {
    if pool.is_empty() {
        return Err(ComposeError::EmptyPool(pool.source_dir.clone()));
    }
    let mut rng = seed::rng(seed);
    let img = &pool.images[rng.random_range(0..pool.len())];
    Ok(random_crop(img, size, &mut rng))
}

pub(crate) fn random_crop(img: &ImageRgb, (tw, th): (u32, u32), rng: &mut seed::Rng) -> ImageRgb {
    let (w, h) = img.dimensions();
    let resized;
    let src = if w < tw || h < th {
        let scale = (f64::from(tw) / f64::from(w)).max(f64::from(th) / f64::from(h));
        let nw = ((f64::from(w) * scale).ceil() as u32).max(tw);
        let nh = ((f64::from(h) * scale).ceil() as u32).max(th);
        resized = imageops::resize(img, nw, nh, FilterType::Triangle);
        &resized
    } else {
        img
    };
    let x = rng.random_range(0..=src.width() - tw);
    let y = rng.random_range(0..=src.height() - th);
    imageops::crop_imm(src, x, y, tw, th).to_image()
}

/// Alpha blend with half-up rounding: `(α·fg + (255−α)·bg) / 255`.
pub fn composite(fg: &ImageRgba, bg: &ImageRgb) -> Result<ImageRgb, ComposeError> {
    if fg.dimensions() != bg.dimensions() {
        return Err(ComposeError::SizeMismatch { fg: fg.dimensions(), bg: bg.dimensions() });
    }
    Ok(ImageRgb::from_fn(bg.width(), bg.height(), |x, y| {
        let f = fg.get_pixel(x, y).0;
        let b = bg.get_pixel(x, y).0;
        let a = u32::from(f[3]);
        Rgb(std::array::from_fn(|c| {
            let num = a * u32::from(f[c]) + (255 - a) * u32::from(b[c]);
            ((2 * num + 255) / 510) as u8
        }))
    }))
}

/// Ranges for the random augmentation; all factors are multiplicative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentParams {
    pub scale: [f64; 2],
    pub exposure: [f64; 2],
    pub saturation: [f64; 2],
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self { scale: [0.75, 1.25], exposure: [0.67, 1.5], saturation: [0.67, 1.5] }
    }
}

impl AugmentParams {
    pub fn identity() -> Self {
        Self { scale: [1.0, 1.0], exposure: [1.0, 1.0], saturation: [1.0, 1.0] }
    }

    pub fn validate(&self) -> Result<(), ComposeError> {
        for (name, [a, b]) in [("scale", self.scale), ("exposure", self.exposure), ("saturation", self.saturation)] {
            if !(a > 0.0 && a <= b && b.is_finite()) {
                return Err(ComposeError::InvalidParams(format!("{name} range [{a}, {b}] needs 0 < min <= max")));
            }
        }
        Ok(())
    }

    /// Draws one set of factors.
    pub fn sample(&self, seed: u64) -> Result<AugmentSample, ComposeError> {
        self.validate()?;
        let mut rng = seed::rng(seed);
        let mut draw = |[a, b]: [f64; 2]| if a == b { a } else { rng.random_range(a..=b) };
        let scale = draw(self.scale);
        let exposure = draw(self.exposure);
        let saturation = draw(self.saturation);
        Ok(AugmentSample { scale, exposure, saturation })
    }
}

/// One concrete augmentation, applied identically to every image of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSample {
    pub scale: f64,
    pub exposure: f64,
    pub saturation: f64,
}

impl AugmentSample {
    pub const IDENTITY: AugmentSample = AugmentSample { scale: 1.0, exposure: 1.0, saturation: 1.0 };

    pub fn apply(&self, img: &ImageRgb) -> ImageRgb {
        let scaled = if self.scale == 1.0 { img.clone() } else { scale_rgb(img, self.scale) };
        if self.exposure == 1.0 && self.saturation == 1.0 {
            scaled
        } else {
            adjust_hsv(&scaled, self.exposure, self.saturation)
        }
    }

    /// Geometric part only, for binary masks (threshold at half coverage).
    pub fn apply_mask(&self, mask: &ImageGray) -> ImageGray {
        if self.scale == 1.0 {
            return mask.clone();
        }
        let (w, h) = mask.dimensions();
        let c = center(w, h);
        ImageGray::from_fn(w, h, |x, y| {
            let v = bilinear_zero(w, h, |i, j| f64::from(mask.get_pixel(i, j)[0]), src_coord(x, y, c, self.scale));
            Luma([if v >= 127.5 { 255 } else { 0 }])
        })
    }

    /// Intrinsics under which the unchanged pose projects exactly onto the
    /// scaled image: zooming about the principal point is a focal change.
    /// Only exact when the principal point is the image center.
    pub fn scaled_intrinsics(&self, k: &Intrinsics64) -> Result<Intrinsics64, GeometryError> {
        CameraIntrinsics::new(k.fx * self.scale, k.fy * self.scale, k.cx, k.cy, k.width, k.height)
    }

    /// Similarity about the image center, `x' = c + s·(x − c)`.
    pub fn transform_points(&self, cps: &ControlPoints2D<f64>, size: (u32, u32)) -> ControlPoints2D<f64> {
        let c = center(size.0, size.1);
        ControlPoints2D::new(cps.points.map(|p| Vec2::new(c.0 + self.scale * (p.x - c.0), c.1 + self.scale * (p.y - c.1))))
    }
}

fn center(w: u32, h: u32) -> (f64, f64) {
    ((f64::from(w) - 1.0) / 2.0, (f64::from(h) - 1.0) / 2.0)
}

fn src_coord(x: u32, y: u32, c: (f64, f64), s: f64) -> (f64, f64) {
    (c.0 + (f64::from(x) - c.0) / s, c.1 + (f64::from(y) - c.1) / s)
}

/// Bilinear sample; taps outside the image read as zero.
fn bilinear_zero(w: u32, h: u32, get: impl Fn(u32, u32) -> f64, (x, y): (f64, f64)) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let mut acc = 0.0;
    for (dx, dy, wgt) in [(0.0, 0.0, (1.0 - fx) * (1.0 - fy)), (1.0, 0.0, fx * (1.0 - fy)), (0.0, 1.0, (1.0 - fx) * fy), (1.0, 1.0, fx * fy)] {
        let (xi, yi) = (x0 + dx, y0 + dy);
        if wgt == 0.0 || xi < 0.0 || yi < 0.0 || xi >= f64::from(w) || yi >= f64::from(h) {
            continue;
        }
        acc += wgt * get(xi as u32, yi as u32);
    }
    acc
}

fn round_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn scale_rgb(img: &ImageRgb, s: f64) -> ImageRgb {
    let (w, h) = img.dimensions();
    let c = center(w, h);
    ImageRgb::from_fn(w, h, |x, y| {
        let p = src_coord(x, y, c, s);
        Rgb(std::array::from_fn(|ch| round_u8(bilinear_zero(w, h, |i, j| f64::from(img.get_pixel(i, j)[ch]), p))))
    })
}

/// RGB in [0,1] to (hue in [0,6), saturation, value).
pub fn rgb_to_hsv([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let s = if max > 0.0 { d / max } else { 0.0 };
    let hue = if d == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        (b - r) / d + 2.0
    } else {
        (r - g) / d + 4.0
    };
    [hue, s, max]
}

pub fn hsv_to_rgb([hue, s, v]: [f64; 3]) -> [f64; 3] {
    let c = v * s;
    let x = c * (1.0 - ((hue % 2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match hue as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r + m, g + m, b + m]
}

/// Multiplies HSV value by `exposure` and saturation by `saturation`,
/// clamping both to [0, 1].
pub fn adjust_hsv(img: &ImageRgb, exposure: f64, saturation: f64) -> ImageRgb {
    let mut out = img.clone();
    for p in out.pixels_mut() {
        let [hue, s, v] = rgb_to_hsv(p.0.map(|c| f64::from(c) / 255.0));
        let rgb = hsv_to_rgb([hue, (s * saturation).clamp(0.0, 1.0), (v * exposure).clamp(0.0, 1.0)]);
        p.0 = rgb.map(|c| round_u8(c * 255.0));
    }
    out
}

/// Augments an image and its annotation with factors drawn from `params`.
///
/// Control points follow the scaling similarity; the pose's translation
/// depth is divided by the scale, which keeps re-projection consistent up
/// to the object's depth extent.
pub fn augment(img: &ImageRgb, ann: &Annotation, params: &AugmentParams, seed: u64) -> Result<(ImageRgb, Annotation), ComposeError> {
    let sample = params.sample(seed)?;
    Ok((sample.apply(img), augment_annotation(ann, &sample)))
}

pub fn augment_annotation(ann: &Annotation, sample: &AugmentSample) -> Annotation {
    if sample.scale == 1.0 {
        return ann.clone();
    }
    let mut out = ann.clone();
    let t = ann.pose.translation();
    let mut t2 = t;
    t2.z = t.z / sample.scale;
    // a positive depth divided by a positive scale keeps the pose valid
    out.pose = ann.pose.with_translation(t2).expect("scaled translation stays finite");
    out.control_points_2d = sample.transform_points(&ann.control_points_2d, (ann.image_size[0], ann.image_size[1]));
    out
}
