//! Paired source/target construction for the four rendering methods.

mod common;

use image::Rgb;
use posegap::assets::{ImageRgb, Mesh};
use posegap::compose::{AugmentParams, AugmentSample};
use posegap::dataset::ObjectModel;
use posegap::geometry::CameraIntrinsics;
use posegap::intermediate::{make_pair, mask_iou, PairMethod, PairSettings, MIN_ALIGNMENT_IOU};
use posegap::render::{rasterize, sample_lights, sample_pose, PoseSampling, RenderConfig, SurfaceMode, TexturePool};
use posegap::seed::{derive, TAG_AUGMENT, TAG_LIGHTS};
use posegap::{Intrinsics64, Pose64};

const SIZE: u32 = 160;

fn k() -> Intrinsics64 {
    CameraIntrinsics::centered(0.9 * f64::from(SIZE), SIZE, SIZE).unwrap()
}

fn settings() -> PairSettings {
    PairSettings { textures: TexturePool::new(common::backgrounds(3, 60)), ..PairSettings::new((SIZE, SIZE)) }
}

fn pose(obj: &ObjectModel, seed: u64) -> Pose64 {
    sample_pose(seed, &PoseSampling::default(), &k(), obj.control_points.centroid).unwrap()
}

fn background(seed: u64) -> ImageRgb {
    common::noise_image(SIZE, SIZE, 12, seed)
}

#[test]
fn gray_textured_method1_matches_method3_source() {
    let gray_tex = ImageRgb::from_pixel(8, 8, Rgb([128, 128, 128]));
    let obj = ObjectModel::new("gray", Mesh::cuboid(posegap::geometry::Vec3::new(0.06, 0.05, 0.07)).with_texture(gray_tex)).unwrap();
    let flat = ImageRgb::from_pixel(SIZE, SIZE, Rgb([40, 90, 160]));
    for s in 0..5 {
        let p = pose(&obj, s);
        for bg in [flat.clone(), background(s)] {
            let aug = AugmentSample::IDENTITY;
            let m1 = make_pair(&obj, &p, &k(), PairMethod::Method1RealTex, &bg, &settings(), &aug, s).unwrap();
            let m3 = make_pair(&obj, &p, &k(), PairMethod::Method3UniformToGray, &bg, &settings(), &aug, s).unwrap();
            assert_eq!(m1.source, m3.source);
        }
    }
}

#[test]
fn method3_source_and_target_share_the_footprint() {
    let obj = common::object();
    let st = settings();
    for s in 0..10 {
        let p = pose(&obj, s);
        let unlit = rasterize(&obj.mesh, &p, &k(), &RenderConfig::unlit(SurfaceMode::uniform_gray(), (SIZE, SIZE), s)).unwrap();
        let mut lit_cfg = RenderConfig::unlit(SurfaceMode::uniform_gray(), (SIZE, SIZE), s);
        lit_cfg.lights = sample_lights(derive(s, TAG_LIGHTS), &st.lights, p.transform_point(obj.control_points.centroid)).unwrap();
        lit_cfg.ambient = st.ambient_lit;
        let lit = rasterize(&obj.mesh, &p, &k(), &lit_cfg).unwrap();
        assert_eq!(unlit.mask(), lit.mask());
        // shading changes colors, not coverage
        assert_ne!(unlit.color, lit.color);

        let pair = make_pair(&obj, &p, &k(), PairMethod::Method3UniformToGray, &background(s), &st, &AugmentSample::IDENTITY, s).unwrap();
        assert_eq!(pair.target_mask, lit.mask());
        assert!(pair.iou >= MIN_ALIGNMENT_IOU);
    }
}

#[test]
fn method4_source_is_method3_source() {
    let obj = common::object();
    let st = settings();
    for s in 0..10 {
        let p = pose(&obj, s);
        let bg = background(100 + s);
        let aug = AugmentParams::default().sample(s).unwrap();
        let m3 = make_pair(&obj, &p, &k(), PairMethod::Method3UniformToGray, &bg, &st, &aug, s).unwrap();
        let m4 = make_pair(&obj, &p, &k(), PairMethod::Method4UniformToChecker, &bg, &st, &aug, s).unwrap();
        assert_eq!(m3.source.encoded.as_raw(), m4.source.encoded.as_raw());
        assert_eq!(m3.source_silhouette, m4.source_silhouette);
        assert_ne!(m3.target, m4.target);
    }
}

#[test]
fn uniform_methods_pass_the_alignment_gate() {
    let obj = common::object();
    let st = settings();
    for method in [PairMethod::Method3UniformToGray, PairMethod::Method4UniformToChecker] {
        let mut worst: f64 = 1.0;
        for s in 0..100 {
            let aug = AugmentParams::default().sample(derive(s, TAG_AUGMENT)).unwrap();
            let pair = make_pair(&obj, &pose(&obj, s), &k(), method, &background(s), &st, &aug, s).unwrap();
            assert_eq!(pair.iou, mask_iou(&pair.source_silhouette, &pair.target_mask));
            worst = worst.min(pair.iou);
        }
        assert!(worst >= MIN_ALIGNMENT_IOU, "{method}: worst IoU {worst}");
    }
}

#[test]
fn sources_are_three_channel_replicas() {
    let obj = common::object();
    let pair = make_pair(&obj, &pose(&obj, 3), &k(), PairMethod::Method2RandomTex, &background(3), &settings(), &AugmentSample::IDENTITY, 3).unwrap();
    let rgb = pair.source.to_rgb();
    assert_eq!(rgb.dimensions(), (SIZE, SIZE));
    for (p, g) in rgb.pixels().zip(pair.source.encoded.pixels()) {
        assert_eq!(p.0, [g[0]; 3]);
    }
    assert_eq!(pair.target.dimensions(), (SIZE, SIZE));
}

#[test]
fn method_names_round_trip() {
    for m in PairMethod::ALL {
        assert_eq!(m.name().parse::<PairMethod>().unwrap(), m);
        assert_eq!(m.number().to_string().parse::<PairMethod>().unwrap(), m);
        assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
    }
    assert_eq!(PairMethod::Method3UniformToGray.name(), "Method3_UniformToGray");
    assert_eq!("checker".parse::<PairMethod>().unwrap(), PairMethod::Method4UniformToChecker);
    assert!("5".parse::<PairMethod>().is_err());
}
