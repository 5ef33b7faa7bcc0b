use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use rand::Rng as _;
use rayon::prelude::*;

use super::DatasetError;
use crate::assets::{list_images, load_image, save_image};
use crate::seed::{self, derive, sample_seed};

/// Random square crops from a directory of frames or photos.
#[derive(Debug, Clone, PartialEq)]
pub struct CropSpec {
    pub source_dir: PathBuf,
    pub count: usize,
    pub crop_size: u32,
    pub seed: u64,
    /// Crop side as a fraction of the frame's shorter side.
    pub side_fraction: [f64; 2],
}

impl CropSpec {
    pub const MIN_CROP_SIZE: u32 = 64;

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.crop_size < Self::MIN_CROP_SIZE {
            return Err(DatasetError::Invalid(format!("crop size {} below {}", self.crop_size, Self::MIN_CROP_SIZE)));
        }
        let [a, b] = self.side_fraction;
        if !(a > 0.0 && a <= b && b <= 1.0) {
            return Err(DatasetError::Invalid(format!("side fraction [{a}, {b}] needs 0 < min <= max <= 1")));
        }
        Ok(())
    }
}

/// Files written by [`harvest_crops`], in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestOutput {
    pub dir: PathBuf,
    pub paths: Vec<PathBuf>,
}

/// Writes `spec.count` crops named `crop_%06d.png` into `out`, a usable
/// synthetic background directory. Frame choice, crop side and position are
/// uniform and depend only on the seed and crop index.
pub fn harvest_crops(spec: &CropSpec, out: &Path) -> Result<HarvestOutput, DatasetError> {
    spec.validate()?;
    let sources = list_images(&spec.source_dir)?;
    if sources.is_empty() {
        return Err(DatasetError::EmptySource(spec.source_dir.clone()));
    }
    let frames = sources.iter().map(|p| load_image(p)).collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(out).map_err(|e| DatasetError::io(out, e))?;

    let paths = (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(derive(sample_seed(spec.seed, i as u64), seed::TAG_CROP));
            let frame = &frames[rng.random_range(0..frames.len())];
            let short = frame.width().min(frame.height());
            let [a, b] = spec.side_fraction;
            let frac = if a == b { a } else { rng.random_range(a..=b) };
            let side = ((frac * f64::from(short)).round() as u32).clamp(1, short);
            let x = rng.random_range(0..=frame.width() - side);
            let y = rng.random_range(0..=frame.height() - side);
            let crop = imageops::crop_imm(frame, x, y, side, side).to_image();
            let crop = if side == spec.crop_size {
                crop
            } else {
                imageops::resize(&crop, spec.crop_size, spec.crop_size, FilterType::Triangle)
            };
            let path = out.join(format!("crop_{i:06}.png"));
            save_image(&crop, &path)?;
            Ok(path)
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    Ok(HarvestOutput { dir: out.to_path_buf(), paths })
}
