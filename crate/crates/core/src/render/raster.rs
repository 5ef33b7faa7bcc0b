use super::surface::{to_u8, Surface};
use super::{shade_factor, RenderConfig, RenderError, RenderOutput};
use crate::assets::{ImageRgba, Mesh};
use crate::geometry::{CameraIntrinsics, Pose, Vec3};
use crate::{Vec2d, Vec3d};

/// Camera-space near plane (meters); geometry closer than this is clipped.
pub const NEAR_PLANE: f64 = 0.01;

#[derive(Clone, Copy)]
struct ClipVertex {
    pos: Vec3d,
    uv: Vec2d,
    normal: Vec3d,
}

impl ClipVertex {
    fn lerp(&self, o: &Self, t: f64) -> Self {
        ClipVertex {
            pos: self.pos + (o.pos - self.pos) * t,
            uv: self.uv + (o.uv - self.uv) * t,
            normal: self.normal + (o.normal - self.normal) * t,
        }
    }
}

/// Sutherland-Hodgman against `z >= NEAR_PLANE`; yields at most 4 vertices.
fn clip_near(tri: [ClipVertex; 3]) -> ([ClipVertex; 4], usize) {
    let mut out = [tri[0]; 4];
    let mut n = 0;
    for i in 0..3 {
        let cur = &tri[i];
        let next = &tri[(i + 1) % 3];
        let cur_in = cur.pos.z >= NEAR_PLANE;
        let next_in = next.pos.z >= NEAR_PLANE;
        if cur_in {
            out[n] = *cur;
            n += 1;
        }
        if cur_in != next_in {
            let t = (NEAR_PLANE - cur.pos.z) / (next.pos.z - cur.pos.z);
            let mut v = cur.lerp(next, t);
            v.pos.z = NEAR_PLANE;
            out[n] = v;
            n += 1;
        }
    }
    (out, n)
}

/// Screen-space vertex with attributes pre-divided by depth.
#[derive(Clone, Copy)]
struct ScreenVertex {
    x: f64,
    y: f64,
    inv_z: f64,
    uv_z: Vec2d,
    normal_z: Vec3d,
    pos_z: Vec3d,
}

#[derive(Clone, Copy)]
struct Fragment {
    uv: Vec2d,
    normal: Vec3d,
    pos: Vec3d,
}

fn edge(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Top-left fill rule for a positively oriented triangle in y-down screen
/// space: top edges run exactly horizontal to the right, left edges upward.
fn is_top_left(a: &ScreenVertex, b: &ScreenVertex) -> bool {
    let dy = b.y - a.y;
    (dy == 0.0 && b.x > a.x) || dy < 0.0
}

struct Target {
    width: u32,
    height: u32,
    depth: Vec<f32>,
    fragments: Vec<Option<Fragment>>,
}

impl Target {
    fn raster_triangle(&mut self, v: [ScreenVertex; 3]) {
        let [a, mut b, mut c] = v;
        let mut area = edge(a.x, a.y, b.x, b.y, c.x, c.y);
        if !(area.abs() > 1e-12) || !area.is_finite() {
            return;
        }
        if area < 0.0 {
            std::mem::swap(&mut b, &mut c);
            area = -area;
        }
        let (w, h) = (self.width as f64, self.height as f64);
        let min_x = a.x.min(b.x).min(c.x).ceil().max(0.0);
        let max_x = a.x.max(b.x).max(c.x).floor().min(w - 1.0);
        let min_y = a.y.min(b.y).min(c.y).ceil().max(0.0);
        let max_y = a.y.max(b.y).max(c.y).floor().min(h - 1.0);
        if min_x > max_x || min_y > max_y {
            return;
        }
        let tl_bc = is_top_left(&b, &c);
        let tl_ca = is_top_left(&c, &a);
        let tl_ab = is_top_left(&a, &b);
        let inside = |e: f64, tl: bool| e > 0.0 || (e == 0.0 && tl);

        for py in min_y as u32..=max_y as u32 {
            let fy = py as f64;
            for px in min_x as u32..=max_x as u32 {
                let fx = px as f64;
                let w0 = edge(b.x, b.y, c.x, c.y, fx, fy);
                let w1 = edge(c.x, c.y, a.x, a.y, fx, fy);
                let w2 = edge(a.x, a.y, b.x, b.y, fx, fy);
                if !(inside(w0, tl_bc) && inside(w1, tl_ca) && inside(w2, tl_ab)) {
                    continue;
                }
                let (l0, l1, l2) = (w0 / area, w1 / area, w2 / area);
                let inv_z = l0 * a.inv_z + l1 * b.inv_z + l2 * c.inv_z;
                if !(inv_z > 0.0) {
                    continue;
                }
                let z = 1.0 / inv_z;
                let zf = z as f32;
                let idx = (py * self.width + px) as usize;
                if zf < self.depth[idx] {
                    self.depth[idx] = zf;
                    let interp3 = |p: Vec3d, q: Vec3d, r: Vec3d| (p * l0 + q * l1 + r * l2) * z;
                    let uv = (a.uv_z * l0 + b.uv_z * l1 + c.uv_z * l2) * z;
                    self.fragments[idx] = Some(Fragment {
                        uv,
                        normal: interp3(a.normal_z, b.normal_z, c.normal_z),
                        pos: interp3(a.pos_z, b.pos_z, c.pos_z),
                    });
                }
            }
        }
    }
}

/// Renders `mesh` under `pose` with a z-buffer.
///
/// Back faces are culled, triangles are clipped at [`NEAR_PLANE`], and uv,
/// normal and position are interpolated perspective-correctly. Pixels are
/// sampled at their centers (integer coordinates); shared edges follow a
/// top-left rule so each pixel is written once per surface.
pub fn rasterize(
    mesh: &Mesh,
    pose: &Pose<f64>,
    k: &CameraIntrinsics<f64>,
    cfg: &RenderConfig,
) -> Result<RenderOutput, RenderError> {
    if mesh.faces.is_empty() || mesh.vertices.is_empty() {
        return Err(RenderError::EmptyMesh);
    }
    cfg.validate()?;
    if (k.width, k.height) != cfg.image_size {
        return Err(RenderError::InvalidConfig(format!(
            "intrinsics are {}x{} but image size is {}x{}",
            k.width, k.height, cfg.image_size.0, cfg.image_size.1
        )));
    }
    let surface = Surface::resolve(&cfg.mode, Some(mesh), cfg.seed)?;
    let (width, height) = cfg.image_size;
    let n_px = (width * height) as usize;
    let mut target = Target { width, height, depth: vec![f32::INFINITY; n_px], fragments: vec![None; n_px] };

    let cam_pos: Vec<Vec3d> = mesh.vertices.iter().map(|v| pose.transform_point(*v)).collect();
    let cam_normals: Vec<Vec3d> = mesh.normals.iter().map(|n| pose.transform_vector(*n)).collect();

    for face in &mesh.faces {
        let [ia, ib, ic] = face.vertices.map(|i| i as usize);
        let (pa, pb, pc) = (cam_pos[ia], cam_pos[ib], cam_pos[ic]);
        let face_normal = (pb - pa).cross(pc - pa);
        // camera at the origin must lie on the front side of the plane
        if !(face_normal.dot(pa) < 0.0) {
            continue;
        }
        let tri: [ClipVertex; 3] = std::array::from_fn(|j| ClipVertex {
            pos: cam_pos[face.vertices[j] as usize],
            uv: mesh.uvs[face.uvs[j] as usize],
            normal: cam_normals[face.normals[j] as usize],
        });
        let (poly, count) = clip_near(tri);
        if count < 3 {
            continue;
        }
        let screen: [ScreenVertex; 4] = std::array::from_fn(|j| {
            let v = &poly[j.min(count - 1)];
            let inv_z = 1.0 / v.pos.z;
            ScreenVertex {
                x: k.fx * v.pos.x * inv_z + k.cx,
                y: k.fy * v.pos.y * inv_z + k.cy,
                inv_z,
                uv_z: v.uv * inv_z,
                normal_z: v.normal * inv_z,
                pos_z: v.pos * inv_z,
            }
        });
        for j in 1..count - 1 {
            target.raster_triangle([screen[0], screen[j], screen[j + 1]]);
        }
    }

    let mut color = ImageRgba::new(width, height);
    let mut covered = 0usize;
    for (idx, frag) in target.fragments.iter().enumerate() {
        let Some(f) = frag else { continue };
        covered += 1;
        let albedo = surface.albedo(f.uv);
        let normal = f.normal.normalized().unwrap_or(Vec3::new(0.0, 0.0, -1.0));
        let factor = if cfg.lights.is_empty() {
            cfg.ambient.clamp(0.0, 1.0)
        } else {
            shade_factor(f.pos, normal, &cfg.lights, cfg.ambient)
        };
        let rgb = albedo.map(|c| to_u8(c * factor));
        let (x, y) = (idx as u32 % width, idx as u32 / width);
        color.put_pixel(x, y, image::Rgba([rgb[0], rgb[1], rgb[2], 255]));
    }
    if covered == 0 {
        return Err(RenderError::NothingVisible);
    }
    Ok(RenderOutput { color, depth: target.depth })
}
