mod args;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use posegap::assets::save_image;
use posegap::config::{ConfigError, LoadedAssets, ObjectSpec, RunConfig, PAIRED_DEFAULT_SIZE, UNPAIRED_DEFAULT_SIZE};
use posegap::dataset::{
    emit_composited, emit_paired, emit_unpaired, harvest_crops, render_single, validate, CropSpec, DatasetError,
    EmitOptions, Manifest, Progress, MANIFEST_FILE,
};
use posegap::evaluator::{aggregate, parse_predictions, render_table};
use posegap::Pose64;

use args::{Cli, Command, EvaluateArgs, HarvestArgs, PairsArgs, RenderArgs, RunArgs, UnpairedArgs, ValidateArgs};

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Ok = 0,
    ValidationFailed = 1,
    Usage = 2,
    Io = 3,
}

struct Failure {
    exit: Exit,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { exit: Exit::Usage, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Self { exit: Exit::Io, message: message.into() }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        let exit = if e.is_usage_error() { Exit::Usage } else { Exit::Io };
        Self { exit, message: e.to_string() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        DatasetError::from(e).into()
    }
}

type CmdResult = Result<Exit, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(Exit::Io as u8);
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Render(a) => cmd_render(a),
        Command::Pairs(a) => cmd_pairs(a),
        Command::Unpaired(a) => cmd_unpaired(a),
        Command::Harvest(a) => cmd_harvest(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.exit as u8)
        }
    }
}

fn require_exists(path: &Path, what: &str) -> Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::usage(format!("{what} not found: {}", path.display())))
    }
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(MANIFEST_FILE)
    } else {
        p.to_path_buf()
    }
}

/// Config file plus flag overrides.
fn run_config(a: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => {
            require_exists(p, "config file")?;
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    if !a.mesh.is_empty() {
        cfg.objects = a
            .mesh
            .iter()
            .map(|m| ObjectSpec {
                id: m.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "object".into()),
                mesh: m.clone(),
                units: a.units.unwrap_or_default(),
                texture: a.texture.clone(),
            })
            .collect();
    } else if a.units.is_some() || a.texture.is_some() {
        for o in &mut cfg.objects {
            if let Some(u) = a.units {
                o.units = u;
            }
            if let Some(t) = &a.texture {
                o.texture = Some(t.clone());
            }
        }
    }
    if let Some(d) = &a.backgrounds {
        cfg.backgrounds.real = Some(d.clone());
    }
    if let Some(d) = &a.synthetic {
        cfg.backgrounds.synthetic = Some(d.clone());
    }
    if let Some(d) = &a.textures {
        cfg.textures = Some(d.clone());
    }
    if let Some(s) = a.seed {
        cfg.root_seed = s;
    }
    if let Some(s) = a.size {
        cfg.image_size = Some(s);
    }
    if a.no_augment {
        cfg.augment.enabled = false;
    }
    cfg.validate()?;
    if cfg.objects.is_empty() {
        return Err(Failure::usage("no objects: pass --mesh or list [[objects]] in --config"));
    }
    if let Some(p) = cfg.missing_inputs().first() {
        return Err(Failure::usage(format!("input path not found: {}", p.display())));
    }
    Ok(cfg)
}

fn progress(label: &'static str) -> Progress {
    Arc::new(move |done, total| {
        let step = (total / 20).max(1);
        if done % step == 0 || done == total {
            eprintln!("{label}: {done}/{total}");
        }
    })
}

fn emit_options(count: usize, size: u32, label: &'static str) -> EmitOptions {
    EmitOptions { count, size, progress: Some(progress(label)) }
}

fn cmd_render(a: RenderArgs) -> CmdResult {
    let cfg = run_config(&a.run)?;
    let assets = LoadedAssets::load(&cfg)?;
    let size = cfg.size_or(PAIRED_DEFAULT_SIZE);

    if let Some(count) = a.count {
        let m = emit_composited(&cfg, &assets, a.surface, &emit_options(count, size, "render"), &a.out)?;
        eprintln!("wrote {} samples to {}", m.sample_count, a.out.display());
        return Ok(Exit::Ok);
    }

    let obj = match &a.object {
        Some(id) => assets
            .objects
            .iter()
            .find(|o| &o.id == id)
            .ok_or_else(|| Failure::usage(format!("no object with id `{id}`")))?,
        None => &assets.objects[0],
    };
    let pose = match &a.pose {
        Some(p) => {
            require_exists(p, "pose file")?;
            let text = std::fs::read_to_string(p).map_err(|e| Failure::io(format!("{}: {e}", p.display())))?;
            let pose: Pose64 =
                serde_json::from_str(&text).map_err(|e| Failure::usage(format!("invalid pose {}: {e}", p.display())))?;
            Some(pose)
        }
        None => None,
    };
    let r = render_single(&cfg, obj, a.surface, &assets.textures, pose, cfg.root_seed, size, assets.real.as_ref())?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
    }
    match &r.composited {
        Some(img) => save_image(img, &a.out),
        None => save_image(&r.rgba, &a.out),
    }
    .map_err(DatasetError::from)?;
    let ann_path = a.out.with_extension("json");
    std::fs::write(&ann_path, r.annotation.to_json_line()).map_err(|e| Failure::io(format!("{}: {e}", ann_path.display())))?;
    eprintln!("wrote {} and {}", a.out.display(), ann_path.display());
    Ok(Exit::Ok)
}

fn cmd_pairs(a: PairsArgs) -> CmdResult {
    let cfg = run_config(&a.run)?;
    let assets = LoadedAssets::load(&cfg)?;
    let size = cfg.size_or(PAIRED_DEFAULT_SIZE);
    let m = emit_paired(&cfg, &assets, a.method, &emit_options(a.count, size, "pairs"), &a.out)?;
    eprintln!("wrote {} {} pairs to {}", m.sample_count, a.method, a.out.display());
    Ok(Exit::Ok)
}

fn cmd_unpaired(a: UnpairedArgs) -> CmdResult {
    let cfg = run_config(&a.run)?;
    let assets = LoadedAssets::load(&cfg)?;
    let size = cfg.size_or(UNPAIRED_DEFAULT_SIZE);
    let m = emit_unpaired(&cfg, &assets, &emit_options(a.count, size, "unpaired"), &a.out)?;
    eprintln!("wrote {} images per domain to {}", m.sample_count / 2, a.out.display());
    Ok(Exit::Ok)
}

fn cmd_harvest(a: HarvestArgs) -> CmdResult {
    let cfg = match &a.config {
        Some(p) => {
            require_exists(p, "config file")?;
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    require_exists(&a.src, "source directory")?;
    let spec = CropSpec {
        source_dir: a.src.clone(),
        count: a.count.unwrap_or(cfg.crops.count),
        crop_size: a.size.unwrap_or(cfg.crops.size),
        seed: a.seed.unwrap_or(cfg.root_seed),
        side_fraction: cfg.crops.side_fraction,
    };
    let out = harvest_crops(&spec, &a.out)?;
    eprintln!("wrote {} crops to {}", out.paths.len(), out.dir.display());
    Ok(Exit::Ok)
}

fn cmd_validate(a: ValidateArgs) -> CmdResult {
    let path = manifest_path(&a.manifest);
    require_exists(&path, "manifest")?;
    let report = validate(&path)?;
    if report.is_clean() {
        println!("ok: {} records, {} files", report.records_checked, report.files_checked);
        Ok(Exit::Ok)
    } else {
        for v in &report.violations {
            println!("{v}");
        }
        println!("{} violation(s) in {} records", report.violations.len(), report.records_checked);
        Ok(Exit::ValidationFailed)
    }
}

fn cmd_evaluate(a: EvaluateArgs) -> CmdResult {
    require_exists(&a.pred, "predictions file")?;
    let gt_path = manifest_path(&a.gt);
    require_exists(&gt_path, "manifest")?;
    let manifest = Manifest::read(&gt_path)?;
    let text = std::fs::read_to_string(&a.pred).map_err(|e| Failure::io(format!("{}: {e}", a.pred.display())))?;
    let preds = parse_predictions(&text).map_err(|e| Failure::usage(format!("{}: {e}", a.pred.display())))?;
    let gts: Vec<_> = manifest.annotations().cloned().collect();
    let report = aggregate(&preds, &gts, &manifest.objects).map_err(|e| Failure::usage(e.to_string()))?;
    print!("{}", render_table(&[(a.label.clone(), report.clone())]));
    println!("detection rate {:.3} over {} samples", report.detection_rate, report.sample_count);
    if let Some(p) = &a.csv {
        std::fs::write(p, report.to_csv()).map_err(|e| Failure::io(format!("{}: {e}", p.display())))?;
    }
    if let Some(p) = &a.json {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(p, text + "\n").map_err(|e| Failure::io(format!("{}: {e}", p.display())))?;
    }
    Ok(Exit::Ok)
}
