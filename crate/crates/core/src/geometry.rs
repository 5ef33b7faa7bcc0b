//! Pose, camera and projection math.
//!
//! Conventions used throughout the crate:
//!
//! * camera frame is right-handed with `x` right, `y` down and `z` forward;
//! * pixel `(i, j)` has its center at continuous image coordinate `(i, j)`;
//! * rotations are stored as 3×3 matrices, quaternions are only accepted at
//!   IO boundaries and converted immediately.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Depth at or below which a point counts as behind the camera.
pub const MIN_DEPTH: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point {index:?} has non-positive camera depth {depth}")]
    NonPositiveDepth { index: Option<usize>, depth: f64 },
    #[error("mesh has no vertices")]
    EmptyMesh,
    #[error("matrix is not a rotation (orthonormality deviation {deviation:.3e}, det {det:.6})")]
    NotARotation { deviation: f64, det: f64 },
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
pub struct Vec2<T: Copy> {
    pub x: T,
    pub y: T,
}

impl<T: Copy> From<[T; 2]> for Vec2<T> {
    fn from(a: [T; 2]) -> Self {
        Self { x: a[0], y: a[1] }
    }
}

impl<T: Copy> From<Vec2<T>> for [T; 2] {
    fn from(v: Vec2<T>) -> Self {
        [v.x, v.y]
    }
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
pub struct Vec3<T: Copy> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Copy> From<[T; 3]> for Vec3<T> {
    fn from(a: [T; 3]) -> Self {
        Self { x: a[0], y: a[1], z: a[2] }
    }
}

impl<T: Copy> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::epsilon() && n.is_finite() {
            Some(self * (T::one() / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn component_min(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn component_max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()), U::lit(self.z.as_f64()))
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[[T; 3]; 3]", into = "[[T; 3]; 3]")]
pub struct Mat3<T: Copy> {
    pub rows: [[T; 3]; 3],
}

impl<T: Copy> From<[[T; 3]; 3]> for Mat3<T> {
    fn from(rows: [[T; 3]; 3]) -> Self {
        Self { rows }
    }
}

impl<T: Copy> From<Mat3<T>> for [[T; 3]; 3] {
    fn from(m: Mat3<T>) -> Self {
        m.rows
    }
}

impl<T: Real> Mat3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self { rows: [[o, z, z], [z, o, z], [z, z, o]] }
    }

    pub fn transpose(&self) -> Self {
        let r = &self.rows;
        Self {
            rows: [[r[0][0], r[1][0], r[2][0]], [r[0][1], r[1][1], r[2][1]], [r[0][2], r[1][2], r[2][2]]],
        }
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        let r = &self.rows;
        Vec3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut rows = [[T::zero(); 3]; 3];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).fold(T::zero(), |acc, k| acc + self.rows[i][k] * o.rows[k][j]);
            }
        }
        Self { rows }
    }

    pub fn trace(&self) -> T {
        self.rows[0][0] + self.rows[1][1] + self.rows[2][2]
    }

    pub fn determinant(&self) -> T {
        let r = &self.rows;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().flatten().all(|v| v.is_finite())
    }

    /// Rotation by `angle` radians about the x axis.
    pub fn rot_x(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self { rows: [[o, z, z], [z, c, -s], [z, s, c]] }
    }

    pub fn rot_y(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self { rows: [[c, z, s], [z, o, z], [-s, z, c]] }
    }

    pub fn rot_z(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self { rows: [[c, -s, z], [s, c, z], [z, z, o]] }
    }

    /// Rotation matrix from a quaternion `[w, x, y, z]`; the quaternion is
    /// normalized first.
    pub fn from_quaternion(q: [T; 4]) -> Result<Self, GeometryError> {
        let n = q.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt();
        if !(n.is_finite() && n > T::epsilon()) {
            return Err(GeometryError::NonFinite("quaternion"));
        }
        let [w, x, y, z] = q.map(|v| v / n);
        let two = T::lit(2.0);
        let one = T::one();
        Ok(Self {
            rows: [
                [one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
                [two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)],
                [two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)],
            ],
        })
    }

    /// Largest absolute entry of `RᵀR − I`.
    pub fn orthonormality_deviation(&self) -> T {
        let p = self.transpose().mul_mat(self);
        let mut dev = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { T::one() } else { T::zero() };
                dev = dev.max((p.rows[i][j] - target).abs());
            }
        }
        dev
    }

    /// Checks orthonormality and a unit positive determinant.
    pub fn check_rotation(&self) -> Result<(), GeometryError> {
        let tol = T::lit(T::ORTHO_TOLERANCE);
        let deviation = self.orthonormality_deviation();
        let det = self.determinant();
        if !self.is_finite() || !(deviation <= tol) || !((det - T::one()).abs() <= tol) {
            return Err(GeometryError::NotARotation { deviation: deviation.as_f64(), det: det.as_f64() });
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> Mat3<U> {
        Mat3 { rows: self.rows.map(|r| r.map(|v| U::lit(v.as_f64()))) }
    }
}

/// Rigid object-to-camera transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr<T>", into = "PoseRepr<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Pose<T: Real> {
    rotation: Mat3<T>,
    translation: Vec3<T>,
}

impl<T: Real> Pose<T> {
    /// Builds a pose after checking the rotation and translation invariants.
    pub fn new(rotation: Mat3<T>, translation: Vec3<T>) -> Result<Self, GeometryError> {
        rotation.check_rotation()?;
        if !translation.is_finite() {
            return Err(GeometryError::NonFinite("translation"));
        }
        Ok(Self { rotation, translation })
    }

    pub fn from_translation(translation: Vec3<T>) -> Result<Self, GeometryError> {
        Self::new(Mat3::identity(), translation)
    }

    pub fn rotation(&self) -> &Mat3<T> {
        &self.rotation
    }

    pub fn translation(&self) -> Vec3<T> {
        self.translation
    }

    pub fn with_translation(&self, translation: Vec3<T>) -> Result<Self, GeometryError> {
        Self::new(self.rotation, translation)
    }

    /// Maps an object-frame point into the camera frame.
    pub fn transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(p) + self.translation
    }

    pub fn transform_vector(&self, v: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(v)
    }

    pub fn cast<U: Real>(&self) -> Pose<U> {
        Pose { rotation: self.rotation.cast(), translation: self.translation.cast() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct PoseRepr<T: Real> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation: Option<Mat3<T>>,
    /// `[w, x, y, z]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quaternion: Option<[T; 4]>,
    translation: Vec3<T>,
}

impl<T: Real> TryFrom<PoseRepr<T>> for Pose<T> {
    type Error = GeometryError;

    fn try_from(r: PoseRepr<T>) -> Result<Self, Self::Error> {
        let rotation = match (r.rotation, r.quaternion) {
            (Some(m), _) => m,
            (None, Some(q)) => Mat3::from_quaternion(q)?,
            (None, None) => return Err(GeometryError::NonFinite("pose: missing rotation")),
        };
        Pose::new(rotation, r.translation)
    }
}

impl<T: Real> From<Pose<T>> for PoseRepr<T> {
    fn from(p: Pose<T>) -> Self {
        Self { rotation: Some(p.rotation), quaternion: None, translation: p.translation }
    }
}

/// Pinhole intrinsics; no lens distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntrinsicsRepr<T>", into = "IntrinsicsRepr<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct CameraIntrinsics<T: Real> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: u32,
    pub height: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct IntrinsicsRepr<T: Real> {
    fx: T,
    fy: T,
    cx: T,
    cy: T,
    width: u32,
    height: u32,
}

impl<T: Real> TryFrom<IntrinsicsRepr<T>> for CameraIntrinsics<T> {
    type Error = GeometryError;
    fn try_from(r: IntrinsicsRepr<T>) -> Result<Self, Self::Error> {
        CameraIntrinsics::new(r.fx, r.fy, r.cx, r.cy, r.width, r.height)
    }
}

impl<T: Real> From<CameraIntrinsics<T>> for IntrinsicsRepr<T> {
    fn from(k: CameraIntrinsics<T>) -> Self {
        Self { fx: k.fx, fy: k.fy, cx: k.cx, cy: k.cy, width: k.width, height: k.height }
    }
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: u32, height: u32) -> Result<Self, GeometryError> {
        let w = T::lit(width as f64);
        let h = T::lit(height as f64);
        if !(fx > T::zero() && fy > T::zero() && fx.is_finite() && fy.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics(format!("focal lengths must be positive, got ({fx}, {fy})")));
        }
        if !(cx >= T::zero() && cx <= w && cy >= T::zero() && cy <= h) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point ({cx}, {cy}) outside {width}x{height}"
            )));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }

    /// Square pixels with the principal point at the image center.
    pub fn centered(focal: T, width: u32, height: u32) -> Result<Self, GeometryError> {
        let half = T::lit(0.5);
        let cx = T::lit(width.saturating_sub(1) as f64) * half;
        let cy = T::lit(height.saturating_sub(1) as f64) * half;
        Self::new(focal, focal, cx, cy, width, height)
    }

    /// Projects a camera-frame point.
    pub fn project_camera_point(&self, pc: Vec3<T>) -> Result<Vec2<T>, GeometryError> {
        if !(pc.z > T::lit(MIN_DEPTH)) {
            return Err(GeometryError::NonPositiveDepth { index: None, depth: pc.z.as_f64() });
        }
        Ok(Vec2::new(self.fx * pc.x / pc.z + self.cx, self.fy * pc.y / pc.z + self.cy))
    }

    pub fn cast<U: Real>(&self) -> CameraIntrinsics<U> {
        CameraIntrinsics {
            fx: U::lit(self.fx.as_f64()),
            fy: U::lit(self.fy.as_f64()),
            cx: U::lit(self.cx.as_f64()),
            cy: U::lit(self.cy.as_f64()),
            width: self.width,
            height: self.height,
        }
    }
}

/// Bounding-box centroid and its 8 corners in the object frame.
///
/// Corner `i` takes the min (`-`) or max (`+`) extent per axis from the bits
/// of `i`: bit 2 selects x, bit 1 y, bit 0 z, giving the lexicographic order
/// `(-,-,-), (-,-,+), (-,+,-), ... (+,+,+)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ControlPoints3D<T: Real> {
    pub centroid: Vec3<T>,
    pub corners: [Vec3<T>; 8],
}

impl<T: Real> ControlPoints3D<T> {
    /// Builds the control points of an axis-aligned box.
    pub fn from_bounds(min: Vec3<T>, max: Vec3<T>) -> Self {
        let pick = |bit: bool, lo: T, hi: T| if bit { hi } else { lo };
        let corners = std::array::from_fn(|i| {
            Vec3::new(pick(i & 4 != 0, min.x, max.x), pick(i & 2 != 0, min.y, max.y), pick(i & 1 != 0, min.z, max.z))
        });
        let half = T::lit(0.5);
        Self { centroid: (min + max) * half, corners }
    }

    /// Centroid followed by the 8 corners.
    pub fn points(&self) -> [Vec3<T>; 9] {
        std::array::from_fn(|i| if i == 0 { self.centroid } else { self.corners[i - 1] })
    }
}

/// Projected control points: `[centroid, corner0..corner7]`, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ControlPoints2D<T: Real> {
    pub points: [Vec2<T>; 9],
}

impl<T: Real> ControlPoints2D<T> {
    pub fn new(points: [Vec2<T>; 9]) -> Self {
        Self { points }
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p.is_finite())
    }

    /// Largest point-wise distance to `other`.
    pub fn max_distance(&self, other: &Self) -> T {
        self.points.iter().zip(&other.points).fold(T::zero(), |acc, (a, b)| acc.max(a.distance(*b)))
    }
}

/// Projects an object-frame point through `pose` and `k`.
pub fn project_point<T: Real>(p: Vec3<T>, pose: &Pose<T>, k: &CameraIntrinsics<T>) -> Result<Vec2<T>, GeometryError> {
    k.project_camera_point(pose.transform_point(p))
}

/// Axis-aligned bounding box control points of a vertex set.
pub fn control_points_from_vertices<T: Real>(
    vertices: impl IntoIterator<Item = Vec3<T>>,
) -> Result<ControlPoints3D<T>, GeometryError> {
    let mut it = vertices.into_iter();
    let first = it.next().ok_or(GeometryError::EmptyMesh)?;
    let (min, max) = it.fold((first, first), |(lo, hi), v| (lo.component_min(v), hi.component_max(v)));
    if !(min.is_finite() && max.is_finite()) {
        return Err(GeometryError::NonFinite("mesh vertices"));
    }
    Ok(ControlPoints3D::from_bounds(min, max))
}

/// Projects all 9 control points, preserving order.
pub fn project_control_points<T: Real>(
    cp: &ControlPoints3D<T>,
    pose: &Pose<T>,
    k: &CameraIntrinsics<T>,
) -> Result<ControlPoints2D<T>, GeometryError> {
    let pts = cp.points();
    let mut out = [Vec2::new(T::zero(), T::zero()); 9];
    for (i, (o, p)) in out.iter_mut().zip(pts).enumerate() {
        *o = project_point(p, pose, k).map_err(|e| match e {
            GeometryError::NonPositiveDepth { depth, .. } => GeometryError::NonPositiveDepth { index: Some(i), depth },
            other => other,
        })?;
    }
    Ok(ControlPoints2D::new(out))
}

/// Geodesic angle between two rotations in degrees, in `[0, 180]`.
///
/// Equals `acos(clamp((trace(r1ᵀ r2) - 1) / 2, -1, 1))`; evaluated through
/// `atan2(sin, cos)` of the relative rotation, which keeps full precision
/// near 0° and 180°.
pub fn rotation_angle_deg<T: Real>(r1: &Mat3<T>, r2: &Mat3<T>) -> Result<T, GeometryError> {
    r1.check_rotation()?;
    r2.check_rotation()?;
    let rel = r1.transpose().mul_mat(r2);
    let two = T::lit(2.0);
    let one = T::one();
    let cos = ((rel.trace() - one) / two).max(-one).min(one);
    let r = &rel.rows;
    let axis = Vec3::new(r[2][1] - r[1][2], r[0][2] - r[2][0], r[1][0] - r[0][1]);
    let sin = (axis.norm() / two).min(one);
    Ok(sin.atan2(cos).to_degrees())
}
