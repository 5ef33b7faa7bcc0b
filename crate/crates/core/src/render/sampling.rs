use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{PointLight, RenderError};
use crate::geometry::{CameraIntrinsics, Mat3, Pose, Vec3};
use crate::seed::{self, Rng};
use crate::{Pose64, Vec3d};

/// Ranges for random point lights around the object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightSampling {
    pub count: [u32; 2],
    /// Distance from the object center, meters.
    pub radius: [f64; 2],
    pub intensity: [f64; 2],
}

impl Default for LightSampling {
    fn default() -> Self {
        Self { count: [2, 4], radius: [0.3, 1.0], intensity: [0.05, 0.3] }
    }
}

impl LightSampling {
    pub fn validate(&self) -> Result<(), RenderError> {
        let [cmin, cmax] = self.count;
        if cmin < 1 || cmin > cmax {
            return Err(bad(format!("light count range [{cmin}, {cmax}] needs 1 <= min <= max")));
        }
        let [rmin, rmax] = self.radius;
        if !(rmin > 0.0 && rmin <= rmax && rmax.is_finite()) {
            return Err(bad(format!("light radius range [{rmin}, {rmax}] needs 0 < min <= max")));
        }
        let [imin, imax] = self.intensity;
        if !(imin >= 0.0 && imin <= imax && imax.is_finite()) {
            return Err(bad(format!("light intensity range [{imin}, {imax}] needs 0 <= min <= max")));
        }
        Ok(())
    }
}

/// Ranges for random object poses. Angles in degrees, distance in meters,
/// offsets as fractions of the allowed image-plane shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseSampling {
    pub distance: [f64; 2],
    pub azimuth_deg: [f64; 2],
    pub elevation_deg: [f64; 2],
    pub in_plane_deg: [f64; 2],
    /// Horizontal and vertical shift of the object center, in units of
    /// 0.4 × image size; `[-1, 1]` spans the central 80% box.
    pub offset: [f64; 2],
}

impl Default for PoseSampling {
    fn default() -> Self {
        Self {
            distance: [0.5, 1.0],
            azimuth_deg: [-180.0, 180.0],
            elevation_deg: [-60.0, 60.0],
            in_plane_deg: [-45.0, 45.0],
            offset: [-0.5, 0.5],
        }
    }
}

impl PoseSampling {
    pub fn validate(&self) -> Result<(), RenderError> {
        let ranges = [
            ("distance", self.distance),
            ("azimuth_deg", self.azimuth_deg),
            ("elevation_deg", self.elevation_deg),
            ("in_plane_deg", self.in_plane_deg),
            ("offset", self.offset),
        ];
        for (name, [a, b]) in ranges {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(bad(format!("{name} range [{a}, {b}] is empty")));
            }
        }
        if self.distance[0] <= 0.0 {
            return Err(bad(format!("distance must be positive, got {}", self.distance[0])));
        }
        if self.offset[0] < -1.0 || self.offset[1] > 1.0 {
            return Err(bad(format!("offset range {:?} leaves [-1, 1]", self.offset)));
        }
        Ok(())
    }
}

fn bad(msg: String) -> RenderError {
    RenderError::InvalidConfig(msg)
}

fn uniform(rng: &mut Rng, [a, b]: [f64; 2]) -> f64 {
    if a == b {
        a
    } else {
        rng.random_range(a..=b)
    }
}

/// Axis-aligned box `[min_x, min_y, max_x, max_y]` covering `fraction` of
/// the frame around the image center.
pub fn central_box(width: u32, height: u32, fraction: f64) -> [f64; 4] {
    let (w, h) = (f64::from(width), f64::from(height));
    let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
    let (hx, hy) = (fraction * w / 2.0, fraction * h / 2.0);
    [cx - hx, cy - hy, cx + hx, cy + hy]
}

/// Random point lights on spherical shells around `object_center`
/// (camera frame).
pub fn sample_lights(seed: u64, cfg: &LightSampling, object_center: Vec3d) -> Result<Vec<PointLight>, RenderError> {
    cfg.validate()?;
    let mut rng = seed::rng(seed);
    let [cmin, cmax] = cfg.count;
    let count = rng.random_range(cmin..=cmax);
    let lights = (0..count)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).max(0.0).sqrt();
            let dir = Vec3::new(s * phi.cos(), s * phi.sin(), z);
            let r = uniform(&mut rng, cfg.radius);
            let intensity = uniform(&mut rng, cfg.intensity);
            PointLight { position: object_center + dir * r, intensity }
        })
        .collect();
    Ok(lights)
}

/// Random pose of an object whose model-frame center is `object_center`.
///
/// The rotation is `Rz(in_plane) · Rx(elevation) · Ry(azimuth)`; the
/// translation puts the rotated center at the sampled distance along the
/// ray through the offset pixel, so the projected center stays inside the
/// central 80% of the frame.
pub fn sample_pose(
    seed: u64,
    cfg: &PoseSampling,
    k: &CameraIntrinsics<f64>,
    object_center: Vec3d,
) -> Result<Pose64, RenderError> {
    cfg.validate()?;
    let mut rng = seed::rng(seed);
    let distance = uniform(&mut rng, cfg.distance);
    let az = uniform(&mut rng, cfg.azimuth_deg).to_radians();
    let el = uniform(&mut rng, cfg.elevation_deg).to_radians();
    let ip = uniform(&mut rng, cfg.in_plane_deg).to_radians();
    let ox = uniform(&mut rng, cfg.offset);
    let oy = uniform(&mut rng, cfg.offset);

    let rotation = Mat3::rot_z(ip).mul_mat(&Mat3::rot_x(el)).mul_mat(&Mat3::rot_y(az));
    let (w, h) = (f64::from(k.width), f64::from(k.height));
    let u = (w - 1.0) / 2.0 + ox * 0.4 * w;
    let v = (h - 1.0) / 2.0 + oy * 0.4 * h;
    let target = Vec3::new((u - k.cx) * distance / k.fx, (v - k.cy) * distance / k.fy, distance);
    let t = target - rotation.mul_vec(object_center);
    Ok(Pose::new(rotation, t)?)
}
