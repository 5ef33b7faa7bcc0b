use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use posegap::assets::MeshUnits;
use posegap::dataset::SurfaceKind;
use posegap::intermediate::PairMethod;

/// Synthetic pose-estimation datasets: renders, paired edge-domain
/// translation sets, unpaired domain folders, and pose error reports.
#[derive(Debug, Parser)]
#[command(name = "posegap", version, propagate_version = true)]
pub struct Cli {
    /// Worker threads (0 uses one per core). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render one object to a PNG plus annotation, or a composited dataset
    /// with --count.
    Render(RenderArgs),
    /// Emit aligned Laplace-source / target pairs for one rendering method.
    Pairs(PairsArgs),
    /// Emit unpaired trainA (renders on synthetic backgrounds) and trainB
    /// (real photo crops) folders.
    Unpaired(UnpairedArgs),
    /// Cut random square crops from a directory of frames.
    Harvest(HarvestArgs),
    /// Check an emitted dataset against its manifest.
    Validate(ValidateArgs),
    /// Score predictions against a dataset's ground truth.
    Evaluate(EvaluateArgs),
}

/// Inputs shared by every generating subcommand; flags override the config
/// file.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run config; every field is optional.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Mesh file (.obj or .ply); repeatable, replaces the config's objects.
    #[arg(long, value_name = "FILE")]
    pub mesh: Vec<PathBuf>,
    /// Length unit of the --mesh files.
    #[arg(long, value_name = "m|cm|mm")]
    pub units: Option<MeshUnits>,
    /// Texture image applied to every --mesh.
    #[arg(long, value_name = "FILE")]
    pub texture: Option<PathBuf>,
    /// Directory of real background photographs.
    #[arg(long, value_name = "DIR")]
    pub backgrounds: Option<PathBuf>,
    /// Directory of synthetic background crops.
    #[arg(long, value_name = "DIR")]
    pub synthetic: Option<PathBuf>,
    /// Directory of texture images for random texturing.
    #[arg(long, value_name = "DIR")]
    pub textures: Option<PathBuf>,
    /// Root seed; sample i uses seed + i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Square image side in pixels.
    #[arg(long, value_name = "PX")]
    pub size: Option<u32>,
    /// Disable scale/exposure/saturation augmentation.
    #[arg(long)]
    pub no_augment: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Surface: realtex, randtex, gray, lit_gray or checker.
    #[arg(long, default_value = "gray")]
    pub surface: SurfaceKind,
    /// JSON pose file ({"rotation": 3x3 or "quaternion": [w,x,y,z], "translation": [x,y,z]}); drawn from the seed when absent.
    #[arg(long, value_name = "FILE")]
    pub pose: Option<PathBuf>,
    /// Object id to render when several are configured.
    #[arg(long, value_name = "ID")]
    pub object: Option<String>,
    /// Emit a composited dataset of this many samples into --out instead of a single image.
    #[arg(long, value_name = "N")]
    pub count: Option<usize>,
    /// Output PNG (single render; the annotation goes next to it as .json) or dataset directory.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Rendering method: 1-4, realtex, randtex, gray or checker.
    #[arg(long, value_name = "METHOD")]
    pub method: PairMethod,
    /// Number of pairs.
    #[arg(long, value_name = "N")]
    pub count: usize,
    /// Output dataset directory (must not exist or be empty).
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct UnpairedArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Images per domain.
    #[arg(long, value_name = "N")]
    pub count: usize,
    /// Output dataset directory (must not exist or be empty).
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HarvestArgs {
    /// TOML run config; its [crops] section supplies defaults.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory of extracted frames or photos.
    #[arg(long, value_name = "DIR")]
    pub src: PathBuf,
    /// Number of crops.
    #[arg(long, value_name = "N")]
    pub count: Option<usize>,
    /// Crop side in pixels after resizing (at least 64).
    #[arg(long, value_name = "PX")]
    pub size: Option<u32>,
    /// Seed; crop i uses seed + i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for crop_%06d.png files.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Dataset manifest.json, or the directory containing it.
    #[arg(value_name = "MANIFEST")]
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predictions as JSON lines: {"sample_id", "pose"?, "control_points_2d"?}.
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    /// Ground-truth dataset manifest.json, or its directory.
    #[arg(long, value_name = "MANIFEST")]
    pub gt: PathBuf,
    /// Row label in the printed table.
    #[arg(long, default_value = "predictions")]
    pub label: String,
    /// Also write per-sample errors as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// Also write the full report as JSON.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
}
