use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{AugmentationEcho, DatasetKind, LaplaceEncoding, Manifest, Record, MANIFEST_FILE, MANIFEST_FORMAT};
use super::{sample_id, Annotation, DatasetError, ObjectModel};
use crate::assets::{save_image, ImageRgb, ImageRgba};
use crate::compose::{composite, pick_background, AugmentSample, BackgroundPool};
use crate::config::{LoadedAssets, RunConfig};
use crate::geometry::{project_control_points, GeometryError};
use crate::intermediate::{make_pair, IntermediateError, PairMethod, MIN_ALIGNMENT_IOU};
use crate::render::{central_box, rasterize, sample_lights, sample_pose, RenderConfig, SurfaceMode, TexturePool};
use crate::seed::{self, derive, sample_seed};
use crate::{Intrinsics64, Pose64, GENERATOR_VERSION};

/// Pose draws per sample before giving up on framing the object.
pub const MAX_POSE_ATTEMPTS: usize = 64;

/// Called with (finished, total) after each sample.
pub type Progress = Arc<dyn Fn(usize, usize) + Send + Sync>;

#[derive(Clone)]
pub struct EmitOptions {
    pub count: usize,
    pub size: u32,
    pub progress: Option<Progress>,
}

impl EmitOptions {
    pub fn new(count: usize, size: u32) -> Self {
        Self { count, size, progress: None }
    }
}

/// Surface used for single renders and composited datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Realtex,
    Randtex,
    Gray,
    /// Uniform gray shaded by random point lights.
    LitGray,
    Checker,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 5] = [Self::Realtex, Self::Randtex, Self::Gray, Self::LitGray, Self::Checker];

    pub fn name(self) -> &'static str {
        match self {
            Self::Realtex => "realtex",
            Self::Randtex => "randtex",
            Self::Gray => "gray",
            Self::LitGray => "lit_gray",
            Self::Checker => "checker",
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurfaceKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| format!("unknown surface `{s}` (expected realtex, randtex, gray, lit_gray or checker)"))
    }
}

/// Output written to a staging directory next to the target and moved in
/// place only once everything succeeded.
struct Staging {
    dir: PathBuf,
    out: PathBuf,
    committed: bool,
}

impl Staging {
    fn create(out: &Path) -> Result<Self, DatasetError> {
        if out.exists() {
            let empty = out.is_dir() && fs::read_dir(out).map_err(|e| DatasetError::io(out, e))?.next().is_none();
            if !empty {
                return Err(DatasetError::OutputExists(out.to_path_buf()));
            }
        }
        let name = out
            .file_name()
            .ok_or_else(|| DatasetError::Invalid(format!("output path {} has no directory name", out.display())))?;
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| DatasetError::io(&parent, e))?;
        let dir = parent.join(format!(".{}.staging-{}", name.to_string_lossy(), std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| DatasetError::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| DatasetError::io(&dir, e))?;
        Ok(Self { dir, out: out.to_path_buf(), committed: false })
    }

    fn subdirs(&self, names: &[&str]) -> Result<(), DatasetError> {
        for n in names {
            let p = self.dir.join(n);
            fs::create_dir_all(&p).map_err(|e| DatasetError::io(&p, e))?;
        }
        Ok(())
    }

    fn write_png<P>(&self, rel: &str, img: &image::ImageBuffer<P, Vec<u8>>) -> Result<(), DatasetError>
    where
        P: image::PixelWithColorType<Subpixel = u8>,
    {
        Ok(save_image(img, &self.dir.join(rel))?)
    }

    fn write_annotation(&self, rel: &str, ann: &Annotation) -> Result<(), DatasetError> {
        let p = self.dir.join(rel);
        fs::write(&p, ann.to_json_line()).map_err(|e| DatasetError::io(&p, e))
    }

    fn commit(mut self, manifest: &Manifest) -> Result<(), DatasetError> {
        manifest.write(&self.dir.join(MANIFEST_FILE))?;
        if self.out.exists() {
            fs::remove_dir(&self.out).map_err(|e| DatasetError::io(&self.out, e))?;
        }
        fs::rename(&self.dir, &self.out).map_err(|e| DatasetError::io(&self.out, e))?;
        self.committed = true;
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

fn choose_object(objects: &[ObjectModel], sample_seed: u64) -> &ObjectModel {
    use rand::Rng as _;
    let i = if objects.len() == 1 { 0 } else { seed::rng(derive(sample_seed, seed::TAG_OBJECT)).random_range(0..objects.len()) };
    &objects[i]
}

/// Draws poses until all control points project into the central 80% of
/// the frame.
fn framed_pose(cfg: &RunConfig, k: &Intrinsics64, obj: &ObjectModel, sample_seed: u64) -> Result<Pose64, DatasetError> {
    let [x0, y0, x1, y1] = central_box(k.width, k.height, 0.8);
    let base = derive(sample_seed, seed::TAG_POSE);
    for attempt in 0..MAX_POSE_ATTEMPTS {
        let pose = sample_pose(derive(base, attempt as u64), &cfg.pose, k, obj.control_points.centroid)?;
        let cps = match project_control_points(&obj.control_points, &pose, k) {
            Ok(c) => c,
            Err(GeometryError::NonPositiveDepth { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        if cps.points.iter().all(|p| p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1) {
            return Ok(pose);
        }
    }
    Err(DatasetError::DegeneratePose { attempts: MAX_POSE_ATTEMPTS })
}

fn augment_for(cfg: &RunConfig, sample_seed: u64) -> Result<AugmentSample, DatasetError> {
    if cfg.augment.applied_at_emission() {
        Ok(cfg.augment.params().sample(derive(sample_seed, seed::TAG_AUGMENT))?)
    } else {
        Ok(AugmentSample::IDENTITY)
    }
}

/// Annotation of the augmented image: the pose depth follows the scale and
/// the control points are re-projected from that pose.
/// With scaling applied at emission the stored camera is the zoomed one:
/// control points then match both the image and the pose exactly, unlike
/// the depth-scaling shortcut of [`crate::compose::augment_annotation`].
fn annotate(id: &str, obj: &ObjectModel, pose: Pose64, k: &Intrinsics64, aug: &AugmentSample, sample_seed: u64) -> Result<Annotation, DatasetError> {
    let k = if aug.scale == 1.0 { *k } else { aug.scaled_intrinsics(k)? };
    Ok(Annotation::new(id, obj, pose, k, sample_seed)?)
}

fn tick(done: &AtomicUsize, total: usize, progress: &Option<Progress>) {
    let n = done.fetch_add(1, Ordering::Relaxed) + 1;
    if let Some(p) = progress {
        p(n, total);
    }
}

fn with_sample<T>(id: &str, r: Result<T, DatasetError>) -> Result<T, DatasetError> {
    r.map_err(|e| DatasetError::Sample { sample: id.to_string(), source: Box::new(e) })
}

fn require_count(count: usize) -> Result<(), DatasetError> {
    if count == 0 {
        return Err(DatasetError::Invalid("count must be at least 1".into()));
    }
    Ok(())
}

fn require_objects(assets: &LoadedAssets) -> Result<(), DatasetError> {
    if assets.objects.is_empty() {
        return Err(DatasetError::Invalid("no objects configured".into()));
    }
    Ok(())
}

fn require_pool<'a>(pool: &'a Option<BackgroundPool>, what: &str) -> Result<&'a BackgroundPool, DatasetError> {
    pool.as_ref().ok_or_else(|| DatasetError::Invalid(format!("{what} background directory is required")))
}

fn require_surface(kind: SurfaceKind, assets: &LoadedAssets) -> Result<(), DatasetError> {
    match kind {
        SurfaceKind::Realtex => {
            if let Some(o) = assets.objects.iter().find(|o| o.mesh.texture.is_none()) {
                return Err(DatasetError::Invalid(format!("object `{}` has no texture for real-texture rendering", o.id)));
            }
        }
        SurfaceKind::Randtex if assets.textures.is_empty() => {
            return Err(DatasetError::Invalid("random texturing needs a texture or real background directory".into()));
        }
        _ => {}
    }
    Ok(())
}

fn objects_map(assets: &LoadedAssets) -> BTreeMap<String, crate::ControlPoints3D64> {
    assets.objects.iter().map(|o| (o.id.clone(), o.control_points)).collect()
}

fn build_manifest(cfg: &RunConfig, assets: &LoadedAssets, kind: DatasetKind, size: u32, records: Vec<Record>) -> Manifest {
    Manifest {
        format: MANIFEST_FORMAT.to_string(),
        generator_version: GENERATOR_VERSION.to_string(),
        dataset_kind: kind,
        sample_count: records.len(),
        image_size: [size, size],
        root_seed: cfg.root_seed,
        laplace_encoding: matches!(kind, DatasetKind::Paired { .. }).then(LaplaceEncoding::default),
        augmentation: AugmentationEcho {
            enabled: cfg.augment.enabled,
            stage: cfg.augment.stage,
            applied_at_emission: cfg.augment.applied_at_emission(),
            params: cfg.augment.params(),
        },
        config: cfg.clone(),
        objects: objects_map(assets),
        records,
    }
}

fn files(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Emits `opts.count` aligned (source, target, annotation) triples.
pub fn emit_paired(
    cfg: &RunConfig,
    assets: &LoadedAssets,
    method: PairMethod,
    opts: &EmitOptions,
    out: &Path,
) -> Result<Manifest, DatasetError> {
    cfg.validate()?;
    require_count(opts.count)?;
    require_objects(assets)?;
    let pool = require_pool(&assets.real, "real")?;
    match method {
        PairMethod::Method1RealTex => require_surface(SurfaceKind::Realtex, assets)?,
        PairMethod::Method2RandomTex => require_surface(SurfaceKind::Randtex, assets)?,
        _ => {}
    }
    let size = opts.size;
    let k = cfg.camera.intrinsics(size, size)?;
    let settings = cfg.pair_settings(size, assets.textures.clone());
    let staging = Staging::create(out)?;
    staging.subdirs(&["source", "target", "ann"])?;
    let done = AtomicUsize::new(0);

    let records = (0..opts.count)
        .into_par_iter()
        .map(|i| {
            let id = sample_id(i);
            let r = (|| {
                let s = sample_seed(cfg.root_seed, i as u64);
                let obj = choose_object(&assets.objects, s);
                let pose = framed_pose(cfg, &k, obj, s)?;
                let bg = pick_background(pool, (size, size), derive(s, seed::TAG_BACKGROUND))?;
                let aug = augment_for(cfg, s)?;
                let pair = make_pair(obj, &pose, &k, method, &bg, &settings, &aug, s)?;
                if pair.iou < MIN_ALIGNMENT_IOU {
                    return Err(IntermediateError::Misaligned { iou: pair.iou }.into());
                }
                let ann = annotate(&id, obj, pose, &k, &aug, s)?;
                let (src, tgt, annp) = (format!("source/{id}.png"), format!("target/{id}.png"), format!("ann/{id}.json"));
                staging.write_png(&src, &pair.source.to_rgb())?;
                staging.write_png(&tgt, &pair.target)?;
                staging.write_annotation(&annp, &ann)?;
                Ok(Record {
                    id: id.clone(),
                    domain: None,
                    files: files(&[("source", src), ("target", tgt), ("annotation", annp)]),
                    annotation: Some(ann),
                    alignment_iou: Some(pair.iou),
                })
            })();
            tick(&done, opts.count, &opts.progress);
            with_sample(&id, r)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let manifest = build_manifest(cfg, assets, DatasetKind::Paired { method }, size, records);
    staging.commit(&manifest)?;
    Ok(manifest)
}

fn surface_config(
    kind: SurfaceKind,
    cfg: &RunConfig,
    textures: &TexturePool,
    size: u32,
    pose: &Pose64,
    obj: &ObjectModel,
    sample_seed: u64,
) -> Result<RenderConfig, DatasetError> {
    let mode = match kind {
        SurfaceKind::Realtex => SurfaceMode::RealTexture,
        SurfaceKind::Randtex => SurfaceMode::RandomTexture { pool: textures.clone() },
        SurfaceKind::Gray | SurfaceKind::LitGray => SurfaceMode::UniformColor { rgb: cfg.surface.uniform_color },
        SurfaceKind::Checker => cfg.surface.checkerboard(),
    };
    let mut rc = RenderConfig::unlit(mode, (size, size), derive(sample_seed, seed::TAG_TEXTURE));
    if kind == SurfaceKind::LitGray {
        let center = pose.transform_point(obj.control_points.centroid);
        rc.lights = sample_lights(derive(sample_seed, seed::TAG_LIGHTS), &cfg.lights, center)?;
        rc.ambient = cfg.ambient_lit;
    }
    Ok(rc)
}

/// Renders an object over a random background crop, augmented.
#[allow(clippy::too_many_arguments)]
fn composited_sample(
    cfg: &RunConfig,
    assets: &LoadedAssets,
    kind: SurfaceKind,
    pool: &BackgroundPool,
    k: &Intrinsics64,
    id: &str,
    s: u64,
) -> Result<(ImageRgb, Annotation), DatasetError> {
    let size = k.width;
    let obj = choose_object(&assets.objects, s);
    let pose = framed_pose(cfg, k, obj, s)?;
    let rc = surface_config(kind, cfg, &assets.textures, size, &pose, obj, s)?;
    let render = rasterize(&obj.mesh, &pose, k, &rc)?;
    let bg = pick_background(pool, (size, size), derive(s, seed::TAG_BACKGROUND))?;
    let aug = augment_for(cfg, s)?;
    let image = aug.apply(&composite(&render.color, &bg)?);
    let ann = annotate(id, obj, pose, k, &aug, s)?;
    Ok((image, ann))
}

/// Emits two unaligned domains: `trainA` holds random-textured renders over
/// synthetic backgrounds (annotated in `annA`), `trainB` holds crops of
/// real photographs.
pub fn emit_unpaired(cfg: &RunConfig, assets: &LoadedAssets, opts: &EmitOptions, out: &Path) -> Result<Manifest, DatasetError> {
    cfg.validate()?;
    require_count(opts.count)?;
    require_objects(assets)?;
    let synthetic = require_pool(&assets.synthetic, "synthetic")?;
    let real = require_pool(&assets.real, "real")?;
    require_surface(SurfaceKind::Randtex, assets)?;
    let size = opts.size;
    let k = cfg.camera.intrinsics(size, size)?;
    let staging = Staging::create(out)?;
    staging.subdirs(&["trainA", "annA", "trainB"])?;
    let done = AtomicUsize::new(0);
    let total = 2 * opts.count;

    let domain_a = (0..opts.count)
        .into_par_iter()
        .map(|i| {
            let id = sample_id(i);
            let r = (|| {
                let s = sample_seed(cfg.root_seed, i as u64);
                let (image, ann) = composited_sample(cfg, assets, SurfaceKind::Randtex, synthetic, &k, &id, s)?;
                let (img, annp) = (format!("trainA/{id}.png"), format!("annA/{id}.json"));
                staging.write_png(&img, &image)?;
                staging.write_annotation(&annp, &ann)?;
                Ok(Record {
                    id: id.clone(),
                    domain: Some("A".into()),
                    files: files(&[("image", img), ("annotation", annp)]),
                    annotation: Some(ann),
                    alignment_iou: None,
                })
            })();
            tick(&done, total, &opts.progress);
            with_sample(&id, r)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let domain_b = (0..opts.count)
        .into_par_iter()
        .map(|i| {
            let id = sample_id(i);
            let r = (|| {
                let s = sample_seed(cfg.root_seed, i as u64);
                let image = pick_background(real, (size, size), derive(s, seed::TAG_DOMAIN_B))?;
                let img = format!("trainB/{id}.png");
                staging.write_png(&img, &image)?;
                Ok(Record { id: id.clone(), domain: Some("B".into()), files: files(&[("image", img)]), annotation: None, alignment_iou: None })
            })();
            tick(&done, total, &opts.progress);
            with_sample(&id, r)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let records = domain_a.into_iter().chain(domain_b).collect();
    let manifest = build_manifest(cfg, assets, DatasetKind::Unpaired, size, records);
    staging.commit(&manifest)?;
    Ok(manifest)
}

/// Emits annotated renders composited over real backgrounds, the plain
/// training set without any image translation.
pub fn emit_composited(
    cfg: &RunConfig,
    assets: &LoadedAssets,
    kind: SurfaceKind,
    opts: &EmitOptions,
    out: &Path,
) -> Result<Manifest, DatasetError> {
    cfg.validate()?;
    require_count(opts.count)?;
    require_objects(assets)?;
    require_surface(kind, assets)?;
    let pool = require_pool(&assets.real, "real")?;
    let size = opts.size;
    let k = cfg.camera.intrinsics(size, size)?;
    let staging = Staging::create(out)?;
    staging.subdirs(&["images", "ann"])?;
    let done = AtomicUsize::new(0);

    let records = (0..opts.count)
        .into_par_iter()
        .map(|i| {
            let id = sample_id(i);
            let r = (|| {
                let s = sample_seed(cfg.root_seed, i as u64);
                let (image, ann) = composited_sample(cfg, assets, kind, pool, &k, &id, s)?;
                let (img, annp) = (format!("images/{id}.png"), format!("ann/{id}.json"));
                staging.write_png(&img, &image)?;
                staging.write_annotation(&annp, &ann)?;
                Ok(Record { id: id.clone(), domain: None, files: files(&[("image", img), ("annotation", annp)]), annotation: Some(ann), alignment_iou: None })
            })();
            tick(&done, opts.count, &opts.progress);
            with_sample(&id, r)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let manifest = build_manifest(cfg, assets, DatasetKind::Composited { surface: kind }, size, records);
    staging.commit(&manifest)?;
    Ok(manifest)
}

/// A single render: RGBA over transparency, or composited when a
/// background pool is given.
#[derive(Debug, Clone)]
pub struct SingleRender {
    pub rgba: ImageRgba,
    pub composited: Option<ImageRgb>,
    pub annotation: Annotation,
}

/// Renders object `obj` once, at `pose` or at a pose drawn from `seed`.
#[allow(clippy::too_many_arguments)]
pub fn render_single(
    cfg: &RunConfig,
    obj: &ObjectModel,
    kind: SurfaceKind,
    textures: &TexturePool,
    pose: Option<Pose64>,
    seed: u64,
    size: u32,
    background: Option<&BackgroundPool>,
) -> Result<SingleRender, DatasetError> {
    cfg.validate()?;
    let k = cfg.camera.intrinsics(size, size)?;
    if kind == SurfaceKind::Realtex && obj.mesh.texture.is_none() {
        return Err(DatasetError::Invalid(format!("object `{}` has no texture for real-texture rendering", obj.id)));
    }
    if kind == SurfaceKind::Randtex && textures.is_empty() {
        return Err(DatasetError::Invalid("random texturing needs a texture or real background directory".into()));
    }
    let id = sample_id(0);
    let pose = match pose {
        Some(p) => p,
        None => framed_pose(cfg, &k, obj, seed)?,
    };
    let rc = surface_config(kind, cfg, textures, size, &pose, obj, seed)?;
    let render = rasterize(&obj.mesh, &pose, &k, &rc)?;
    let composited = match background {
        Some(pool) => Some(composite(&render.color, &pick_background(pool, (size, size), derive(seed, seed::TAG_BACKGROUND))?)?),
        None => None,
    };
    let annotation = Annotation::new(id, obj, pose, k, seed)?;
    Ok(SingleRender { rgba: render.color, composited, annotation })
}
