use super::{PointLight, RenderError, SurfaceMode};
use crate::assets::{ImageRgb, Mesh};
use crate::{Vec2d, Vec3d};

/// Surface with its texture resolved for one render.
pub(crate) enum Surface<'a> {
    Texture(&'a ImageRgb),
    Uniform([u8; 3]),
    Checker { cells: u32, a: [u8; 3], b: [u8; 3] },
}

impl<'a> Surface<'a> {
    pub(crate) fn resolve(mode: &'a SurfaceMode, mesh: Option<&'a Mesh>, seed: u64) -> Result<Self, RenderError> {
        Ok(match mode {
            SurfaceMode::RealTexture => {
                Surface::Texture(mesh.and_then(|m| m.texture.as_deref()).ok_or(RenderError::MissingTexture)?)
            }
            SurfaceMode::RandomTexture { pool } => Surface::Texture(
                pool.pick(seed).ok_or_else(|| RenderError::InvalidConfig("random texture pool is empty".into()))?,
            ),
            SurfaceMode::UniformColor { rgb } => Surface::Uniform(*rgb),
            SurfaceMode::Checkerboard { cells_per_uv, color_a, color_b } => {
                if *cells_per_uv == 0 {
                    return Err(RenderError::InvalidConfig("checkerboard needs at least one cell per uv".into()));
                }
                Surface::Checker { cells: *cells_per_uv, a: *color_a, b: *color_b }
            }
        })
    }

    /// Albedo in 8-bit units, unrounded.
    pub(crate) fn albedo(&self, uv: Vec2d) -> [f64; 3] {
        match self {
            Surface::Texture(img) => bilinear_repeat(img, wrap(uv.x), wrap(uv.y)),
            Surface::Uniform(c) => c.map(f64::from),
            Surface::Checker { cells, a, b } => {
                let n = f64::from(*cells);
                let parity = ((wrap(uv.x) * n).floor() as i64 + (wrap(uv.y) * n).floor() as i64).rem_euclid(2);
                if parity == 0 { a } else { b }.map(f64::from)
            }
        }
    }
}

fn wrap(t: f64) -> f64 {
    let w = t - t.floor();
    // t - floor(t) can round up to exactly 1.0 for tiny negative t
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Bilinear lookup with repeat addressing. `v = 0` is the bottom image row
/// (OBJ convention); texel `(i, j)` is centered at `((i + 0.5) / w, 1 - (j + 0.5) / h)`.
fn bilinear_repeat(img: &ImageRgb, u: f64, v: f64) -> [f64; 3] {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x = u * w as f64 - 0.5;
    let y = (1.0 - v) * h as f64 - 0.5;
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as i64, y0 as i64);
    let texel = |xi: i64, yi: i64| img.get_pixel(xi.rem_euclid(w) as u32, yi.rem_euclid(h) as u32).0;
    let mut out = [0.0; 3];
    for (dx, dy, wgt) in [(0, 0, (1.0 - fx) * (1.0 - fy)), (1, 0, fx * (1.0 - fy)), (0, 1, (1.0 - fx) * fy), (1, 1, fx * fy)]
    {
        if wgt == 0.0 {
            continue;
        }
        let t = texel(x0 + dx, y0 + dy);
        for c in 0..3 {
            out[c] += wgt * f64::from(t[c]);
        }
    }
    out
}

pub(crate) fn to_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Samples the surface color at `uv` (wrapped into `[0, 1)`).
pub fn sample_surface(mode: &SurfaceMode, mesh: Option<&Mesh>, uv: Vec2d, seed: u64) -> Result<[u8; 3], RenderError> {
    let surface = Surface::resolve(mode, mesh, seed)?;
    Ok(surface.albedo(uv).map(to_u8))
}

/// Lambert factor `clamp(ambient + Σ I·max(0, n·l)/d², 0, 1)`.
///
/// A light coinciding with the point contributes its full intensity.
pub fn shade_factor(point: Vec3d, normal: Vec3d, lights: &[PointLight], ambient: f64) -> f64 {
    let mut f = ambient;
    for light in lights {
        let to_light = light.position - point;
        let d2 = to_light.dot(to_light);
        if d2 <= 1e-12 {
            f += light.intensity;
            continue;
        }
        let cos = normal.dot(to_light) / d2.sqrt();
        f += light.intensity * cos.max(0.0) / d2;
    }
    f.clamp(0.0, 1.0)
}

/// Shades an albedo, rounding half-up to 8 bits.
pub fn shade_lambert(albedo: [u8; 3], point: Vec3d, normal: Vec3d, lights: &[PointLight], ambient: f64) -> [u8; 3] {
    let f = shade_factor(point, normal, lights, ambient);
    albedo.map(|c| to_u8(f64::from(c) * f))
}
