//! Loading of meshes, images and split files.

mod obj;
mod ply;
mod split;

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ImageBuffer, ImageEncoder, Luma, PixelWithColorType};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{control_points_from_vertices, ControlPoints3D, GeometryError, Vec2, Vec3};
use crate::{Vec2d, Vec3d};

pub use split::{load_split, parse_split, save_split, SplitFile};

pub type ImageRgb = image::RgbImage;
pub type ImageRgba = image::RgbaImage;
pub type ImageGray = image::GrayImage;
pub type ImageGrayF = ImageBuffer<Luma<f32>, Vec<f32>>;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("duplicate index {index} at line {line}")]
    DuplicateIndex { index: u64, line: usize },
    #[error("{path}: cannot decode image: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("{path}: cannot encode image: {message}")]
    Encode { path: PathBuf, message: String },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
}

impl AssetError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        AssetError::Io { path: path.to_path_buf(), source }
    }
}

/// Length unit of mesh coordinates on disk; everything in memory is meters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MeshUnits {
    #[default]
    #[serde(rename = "m")]
    Meters,
    #[serde(rename = "cm")]
    Centimeters,
    #[serde(rename = "mm")]
    Millimeters,
}

impl MeshUnits {
    pub fn to_meters(self) -> f64 {
        match self {
            MeshUnits::Meters => 1.0,
            MeshUnits::Centimeters => 0.01,
            MeshUnits::Millimeters => 0.001,
        }
    }
}

impl std::str::FromStr for MeshUnits {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "m" => Ok(MeshUnits::Meters),
            "cm" => Ok(MeshUnits::Centimeters),
            "mm" => Ok(MeshUnits::Millimeters),
            other => Err(format!("unknown unit '{other}', expected m, cm or mm")),
        }
    }
}

/// One triangle. Each corner indexes into the vertex, normal and uv lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub vertices: [u32; 3],
    pub normals: [u32; 3],
    pub uvs: [u32; 3],
}

/// Triangle mesh in meters, object frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3d>,
    pub normals: Vec<Vec3d>,
    pub uvs: Vec<Vec2d>,
    pub faces: Vec<Face>,
    pub texture: Option<Arc<ImageRgb>>,
}

impl Mesh {
    /// Checks index ranges and normal lengths.
    pub fn validate(&self) -> Result<(), AssetError> {
        let (nv, nn, nt) = (self.vertices.len(), self.normals.len(), self.uvs.len());
        for (i, f) in self.faces.iter().enumerate() {
            let ok = f.vertices.iter().all(|&v| (v as usize) < nv)
                && f.normals.iter().all(|&n| (n as usize) < nn)
                && f.uvs.iter().all(|&t| (t as usize) < nt);
            if !ok {
                return Err(AssetError::InvalidMesh(format!("face {i} has an out-of-range index")));
            }
        }
        if let Some(i) = self.normals.iter().position(|n| (n.norm() - 1.0).abs() > 1e-3) {
            return Err(AssetError::InvalidMesh(format!("normal {i} is not unit length")));
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.is_finite()) {
            return Err(AssetError::InvalidMesh(format!("vertex {i} is not finite")));
        }
        Ok(())
    }

    pub fn with_texture(mut self, texture: ImageRgb) -> Self {
        self.texture = Some(Arc::new(texture));
        self
    }

    pub fn control_points(&self) -> Result<ControlPoints3D<f64>, GeometryError> {
        control_points_from_vertices(self.vertices.iter().copied())
    }

    /// Axis-aligned box centered at the origin with outward counter-clockwise
    /// faces, per-face normals and a full uv square per face.
    pub fn cuboid(half_extents: Vec3d) -> Mesh {
        let h = half_extents;
        let vertices = (0..8)
            .map(|i| {
                let s = |bit: usize| if i & bit != 0 { 1.0 } else { -1.0 };
                Vec3::new(s(4) * h.x, s(2) * h.y, s(1) * h.z)
            })
            .collect::<Vec<_>>();
        let index_of = |p: Vec3d| -> u32 { ((p.x > 0.0) as u32) << 2 | ((p.y > 0.0) as u32) << 1 | (p.z > 0.0) as u32 };
        let uvs = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)];
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        let z = Vec3::new(0.0, 0.0, 1.0);
        // (normal, u, v) with u × v = normal
        let sides = [(x, y, z), (-x, z, y), (y, z, x), (-y, x, z), (z, x, y), (-z, y, x)];
        let mut normals = Vec::with_capacity(6);
        let mut faces = Vec::with_capacity(12);
        for (ni, (n, u, v)) in sides.into_iter().enumerate() {
            normals.push(n);
            // only the signs matter for picking the shared vertex
            let corner = |su: f64, sv: f64| index_of(n + u * su + v * sv);
            let q = [corner(-1.0, -1.0), corner(1.0, -1.0), corner(1.0, 1.0), corner(-1.0, 1.0)];
            let ni = ni as u32;
            faces.push(Face { vertices: [q[0], q[1], q[2]], normals: [ni; 3], uvs: [0, 1, 2] });
            faces.push(Face { vertices: [q[0], q[2], q[3]], normals: [ni; 3], uvs: [0, 2, 3] });
        }
        Mesh { vertices, normals, uvs, faces, texture: None }
    }
}

/// Loads an OBJ or ascii PLY mesh, scaling coordinates to meters.
///
/// Missing normals are replaced by flat per-face normals; missing uvs by a
/// planar projection (see [`planar_uvs`]).
pub fn load_mesh(path: &Path, units: MeshUnits) -> Result<Mesh, AssetError> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).unwrap_or_default();
    let bytes = fs::read(path).map_err(|e| AssetError::io(path, e))?;
    let mut mesh = match ext.as_str() {
        "obj" => obj::parse_obj(&bytes, path)?,
        "ply" => ply::parse_ply(&bytes, path)?,
        other => return Err(AssetError::UnsupportedFormat(format!("mesh extension '{other}'"))),
    };
    let scale = units.to_meters();
    if scale != 1.0 {
        for v in &mut mesh.vertices {
            *v = *v * scale;
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

/// Triangle as parsed, before missing attributes are generated.
pub(crate) struct RawFace {
    pub vertices: [u32; 3],
    pub normals: Option<[u32; 3]>,
    pub uvs: Option<[u32; 3]>,
}

/// Fills in missing normals (flat, per face) and uvs (planar, per vertex).
pub(crate) fn assemble(vertices: Vec<Vec3d>, mut normals: Vec<Vec3d>, mut uvs: Vec<Vec2d>, raw: Vec<RawFace>) -> Mesh {
    let uv_base = uvs.len() as u32;
    if raw.iter().any(|f| f.uvs.is_none()) {
        uvs.extend(planar_uvs(&vertices));
    }
    let faces = raw
        .into_iter()
        .map(|f| {
            let normals = f.normals.unwrap_or_else(|| {
                let [a, b, c] = f.vertices.map(|i| vertices[i as usize]);
                normals.push(flat_normal(a, b, c));
                [normals.len() as u32 - 1; 3]
            });
            let uvs = f.uvs.unwrap_or(f.vertices.map(|v| uv_base + v));
            Face { vertices: f.vertices, normals, uvs }
        })
        .collect();
    Mesh { vertices, normals, uvs, faces, texture: None }
}

/// Flat normal of a triangle from its winding; `+z` for degenerate input.
pub(crate) fn flat_normal(a: Vec3d, b: Vec3d, c: Vec3d) -> Vec3d {
    (b - a).cross(c - a).normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0))
}

/// Per-vertex planar uvs.
///
/// Vertices are projected along the axis of smallest bounding-box extent
/// onto the plane of the two larger axes, each normalized to `[0, 1]` over
/// the box. Axes of zero extent map to `0.5`.
pub fn planar_uvs(vertices: &[Vec3d]) -> Vec<Vec2d> {
    let Some(first) = vertices.first() else {
        return Vec::new();
    };
    let (lo, hi) = vertices.iter().fold((*first, *first), |(lo, hi), v| (lo.component_min(*v), hi.component_max(*v)));
    let ext = [hi.x - lo.x, hi.y - lo.y, hi.z - lo.z];
    let drop = (0..3).min_by(|&a, &b| ext[a].total_cmp(&ext[b]).then(b.cmp(&a))).unwrap_or(2);
    let axes: Vec<usize> = (0..3).filter(|&a| a != drop).collect();
    let comp = |v: &Vec3d, a: usize| [v.x, v.y, v.z][a];
    let low = [lo.x, lo.y, lo.z];
    vertices
        .iter()
        .map(|v| {
            let norm = |a: usize| if ext[a] > 0.0 { (comp(v, a) - low[a]) / ext[a] } else { 0.5 };
            Vec2::new(norm(axes[0]), norm(axes[1]))
        })
        .collect()
}

/// Reads any supported raster file as 8-bit RGB.
pub fn load_image(path: &Path) -> Result<ImageRgb, AssetError> {
    let bytes = fs::read(path).map_err(|e| AssetError::io(path, e))?;
    decode_image(&bytes, path)
}

pub fn decode_image(bytes: &[u8], path: &Path) -> Result<ImageRgb, AssetError> {
    image::load_from_memory(bytes)
        .map(|img| img.to_rgb8())
        .map_err(|e| AssetError::Decode { path: path.to_path_buf(), message: e.to_string() })
}

/// Encodes an 8-bit image as PNG bytes.
pub fn encode_png<P>(img: &ImageBuffer<P, Vec<u8>>, path: &Path) -> Result<Vec<u8>, AssetError>
where
    P: PixelWithColorType<Subpixel = u8>,
{
    let mut buf = Vec::new();
    PngEncoder::new_with_quality(Cursor::new(&mut buf), CompressionType::Fast, FilterType::Adaptive)
        .write_image(img.as_raw(), img.width(), img.height(), P::COLOR_TYPE)
        .map_err(|e| AssetError::Encode { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(buf)
}

/// Writes an 8-bit RGB, RGBA or gray image as PNG.
pub fn save_image<P>(img: &ImageBuffer<P, Vec<u8>>, path: &Path) -> Result<(), AssetError>
where
    P: PixelWithColorType<Subpixel = u8>,
{
    let bytes = encode_png(img, path)?;
    fs::write(path, bytes).map_err(|e| AssetError::io(path, e))
}

/// Image files below `dir`, recursively, sorted by path.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>, AssetError> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| {
            let io = e.into_io_error().unwrap_or_else(|| std::io::Error::other("directory walk failed"));
            AssetError::io(dir, io)
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let ext = entry.path().extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("png" | "jpg" | "jpeg")) {
            out.push(entry.into_path());
        }
    }
    out.sort();
    Ok(out)
}
