#![allow(dead_code)]

use std::sync::Arc;

use image::imageops::{self, FilterType};
use image::Rgb;
use posegap::assets::{ImageRgb, Mesh};
use posegap::compose::{BackgroundKind, BackgroundPool};
use posegap::config::{LoadedAssets, RunConfig};
use posegap::dataset::ObjectModel;
use posegap::geometry::Vec3;
use posegap::render::TexturePool;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Blotchy color noise: a coarse random grid upsampled bilinearly.
pub fn noise_image(w: u32, h: u32, cells: u32, seed: u64) -> ImageRgb {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse = ImageRgb::from_fn(cells.max(2), cells.max(2), |_, _| Rgb([rng.random(), rng.random(), rng.random()]));
    imageops::resize(&coarse, w, h, FilterType::Triangle)
}

pub fn backgrounds(n: usize, seed: u64) -> Vec<ImageRgb> {
    (0..n).map(|i| noise_image(320, 240, 24, seed + i as u64)).collect()
}

/// Box of 16 × 11 × 19 cm with a noise texture.
pub fn textured_box() -> Mesh {
    Mesh::cuboid(Vec3::new(0.08, 0.055, 0.095)).with_texture(noise_image(64, 64, 8, 99))
}

pub fn object() -> ObjectModel {
    ObjectModel::new("box", textured_box()).unwrap()
}

pub fn assets() -> LoadedAssets {
    let real = BackgroundPool::from_images(BackgroundKind::RealPhotos, backgrounds(5, 1));
    let synthetic = BackgroundPool::from_images(BackgroundKind::SyntheticGame, backgrounds(3, 50));
    let textures = TexturePool::new(backgrounds(4, 100));
    LoadedAssets { objects: vec![object()], real: Some(real), synthetic: Some(synthetic), textures }
}

pub fn config(seed: u64) -> RunConfig {
    RunConfig { root_seed: seed, ..Default::default() }
}

pub fn arc_mesh() -> Arc<Mesh> {
    Arc::new(textured_box())
}
