#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::imageops::{self, FilterType};
use image::{Rgb, RgbImage};
use posegap::assets::Mesh;
use posegap::dataset::{Manifest, MANIFEST_FILE};
use posegap::geometry::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use tempfile::TempDir;
use walkdir::WalkDir;

pub const BIN: &str = env!("CARGO_BIN_EXE_posegap");

/// Blotchy color noise: a coarse random grid upsampled bilinearly.
pub fn noise_image(w: u32, h: u32, cells: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse = RgbImage::from_fn(cells, cells, |_, _| Rgb(rng.random()));
    imageops::resize(&coarse, w, h, FilterType::Triangle)
}

/// OBJ text for a 16 × 11 × 19 cm box, written in centimeters.
fn box_obj() -> String {
    let mesh = Mesh::cuboid(Vec3::new(8.0, 5.5, 9.5));
    let mut s = String::from("# box\n");
    for v in &mesh.vertices {
        writeln!(s, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    for t in &mesh.uvs {
        writeln!(s, "vt {} {}", t.x, t.y).unwrap();
    }
    for n in &mesh.normals {
        writeln!(s, "vn {} {} {}", n.x, n.y, n.z).unwrap();
    }
    for f in &mesh.faces {
        s.push('f');
        for i in 0..3 {
            write!(s, " {}/{}/{}", f.vertices[i] + 1, f.uvs[i] + 1, f.normals[i] + 1).unwrap();
        }
        s.push('\n');
    }
    s
}

fn write_pngs(dir: &Path, prefix: &str, n: usize, (w, h): (u32, u32), seed: u64) {
    fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        noise_image(w, h, 24, seed + i as u64).save(dir.join(format!("{prefix}_{i:02}.png"))).unwrap();
    }
}

/// A throwaway asset tree: one textured mesh, real frames and synthetic
/// backgrounds.
pub struct Fixture {
    pub tmp: TempDir,
    pub mesh: PathBuf,
    pub texture: PathBuf,
    pub backgrounds: PathBuf,
    pub synthetic: PathBuf,
}

impl Fixture {
    pub fn new() -> Self {
        let tmp = TempDir::new().unwrap();
        let root = tmp.path().join("assets");
        fs::create_dir_all(&root).unwrap();
        let mesh = root.join("box.obj");
        fs::write(&mesh, box_obj()).unwrap();
        let texture = root.join("box_texture.png");
        noise_image(128, 128, 8, 99).save(&texture).unwrap();
        let backgrounds = root.join("frames");
        write_pngs(&backgrounds, "frame", 5, (480, 360), 1);
        let synthetic = root.join("synthetic");
        write_pngs(&synthetic, "game", 3, (320, 240), 50);
        Self { tmp, mesh, texture, backgrounds, synthetic }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.tmp.path().join(rel)
    }

    /// Asset flags shared by the generating subcommands.
    pub fn asset_args(&self) -> Vec<String> {
        let p = |p: &Path| p.display().to_string();
        vec![
            "--mesh".into(),
            p(&self.mesh),
            "--units".into(),
            "cm".into(),
            "--texture".into(),
            p(&self.texture),
            "--backgrounds".into(),
            p(&self.backgrounds),
            "--synthetic".into(),
            p(&self.synthetic),
        ]
    }

    /// Runs a subcommand with the asset flags appended.
    pub fn run(&self, sub: &str, extra: &[&str]) -> Output {
        let mut args: Vec<String> = vec![sub.into()];
        args.extend(extra.iter().map(|s| s.to_string()));
        args.extend(self.asset_args());
        posegap(&args)
    }
}

pub fn posegap<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// SHA-256 over every file's relative path and bytes, in path order.
pub fn tree_hash(dir: &Path) -> String {
    let mut entries: Vec<_> = WalkDir::new(dir).into_iter().map(Result::unwrap).filter(|e| e.file_type().is_file()).collect();
    entries.sort_by(|a, b| a.path().cmp(b.path()));
    let mut h = Sha256::new();
    for e in entries {
        let rel = e.path().strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
        h.update(rel.as_bytes());
        h.update([0]);
        h.update(fs::read(e.path()).unwrap());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_count(dir: &Path) -> usize {
    WalkDir::new(dir).into_iter().map(Result::unwrap).filter(|e| e.file_type().is_file()).count()
}

pub fn manifest(dir: &Path) -> Manifest {
    Manifest::read(&dir.join(MANIFEST_FILE)).unwrap()
}

/// Writes the dataset's own annotations as a predictions file.
pub fn self_predictions(dir: &Path, out: &Path) {
    let lines: Vec<String> = manifest(dir).annotations().map(|a| a.to_json_line()).collect();
    fs::write(out, lines.join("\n") + "\n").unwrap();
}
