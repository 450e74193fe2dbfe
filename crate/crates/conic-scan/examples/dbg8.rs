use conic_scan::classify::PipelineConfig;
use conic_scan::geometry::{project_row, CameraIntrinsics, Ellipse};
use conic_scan::segmenter::{extract_ellipses, prefilter};
use conic_scan::synth::{render, SceneObject, SceneSpec, Shape};

fn ball_scene(seed: u64) -> SceneSpec {
    SceneSpec {
        seed,
        noise_sigma: 0.005,
        noise_sigma_per_meter: 0.0,
        objects: vec![SceneObject {
            name: "ball".into(),
            shape: Shape::Sphere {
                center: [0.0, 0.44, 2.2],
                radius: 0.36,
            },
            velocity: [0.0; 3],
        }],
        occluders: vec![],
    }
}

fn count_band(cfg: &PipelineConfig, label: &str) {
    let intr = CameraIntrinsics::default_for(320, 240);
    let mut band = 0;
    let mut total = 0;
    for seed in 0..10u64 {
        let frame = render(&ball_scene(seed + 2), intr, 0.0);
        let mut ellipses: Vec<Ellipse> = Vec::new();
        for row in 0..intr.height {
            let pts = project_row(&frame, row);
            ellipses.extend(extract_ellipses(&pts, row, &frame.intrinsics, &cfg.segmenter));
        }
        let ellipses = prefilter(ellipses, &cfg.segmenter);
        band += ellipses
            .iter()
            .filter(|e| (160..=184).contains(&e.row))
            .count();
        total += ellipses.len();
    }
    println!("{label:28} band rows kept {band:3}/250  total {total}");
}

fn main() {
    let mut base = PipelineConfig::default();
    base.segmenter.noise_sigma = 0.005;
    base.segmenter.error_threshold = 0.015;

    count_band(&base, "baseline");

    let mut c = base.clone();
    c.segmenter.error_threshold = 0.03;
    count_band(&c, "error_threshold 0.03");

    let mut c = base.clone();
    c.segmenter.elongation_min = 0.05;
    count_band(&c, "elongation_min 0.05");

    let mut c = base.clone();
    c.segmenter.radius_max = 2.0;
    count_band(&c, "radius_max 2.0");

    let mut c = base.clone();
    c.segmenter.min_support = 5;
    count_band(&c, "min_support 5");

    let mut c = base.clone();
    c.segmenter.max_point_spacing = 0.25;
    count_band(&c, "max_point_spacing 0.25");
}
