//! posegap: a synthetic training data factory and 6DoF pose evaluation
//! harness for studying the real/synthetic domain gap.
//!
//! The crate renders CAD meshes with a small software rasterizer under four
//! surface schemes (real texture, random texture, uniform gray, checkerboard),
//! composites and augments the renders over background crops, converts them
//! into a Laplace-filtered edge domain for paired image translation, emits
//! unpaired domain folders, and scores predicted poses with re-projection,
//! translation and rotation errors.
//!
//! Geometry and metric code is generic over the scalar type ([`Real`]);
//! the aliases below fix the double precision variants used by the data
//! pipeline.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assets;
pub mod compose;
pub mod config;
pub mod dataset;
pub mod evaluator;
pub mod geometry;
pub mod intermediate;
pub mod render;
pub mod scalar;
pub mod seed;

pub use scalar::Real;

pub type Vec2d = geometry::Vec2<f64>;
pub type Vec3d = geometry::Vec3<f64>;
pub type Mat3d = geometry::Mat3<f64>;
pub type Pose64 = geometry::Pose<f64>;
pub type Pose32 = geometry::Pose<f32>;
pub type Intrinsics64 = geometry::CameraIntrinsics<f64>;
pub type Intrinsics32 = geometry::CameraIntrinsics<f32>;
pub type ControlPoints3D64 = geometry::ControlPoints3D<f64>;
pub type ControlPoints2D64 = geometry::ControlPoints2D<f64>;

/// Version string written into every manifest.
pub const GENERATOR_VERSION: &str = concat!("posegap ", env!("CARGO_PKG_VERSION"));
