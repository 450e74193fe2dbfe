use conic_scan::chain::build_components;
use conic_scan::classify::{classify, PipelineConfig, PrimitiveShape};
use conic_scan::geometry::{project_row, CameraIntrinsics, Ellipse};
use conic_scan::segmenter::{extract_ellipses, prefilter};
use conic_scan::synth::{render, SceneObject, SceneSpec, Shape};

fn cyl(x: f64, z: f64, r: f64) -> SceneObject {
    SceneObject {
        name: "cyl".into(),
        shape: Shape::Cylinder {
            radius: r,
            center: [x, 0.5, z],
            axis: [0.0, 1.0, 0.0],
            half_length: 0.3,
        },
        velocity: [0.0; 3],
    }
}

fn run_case(label: &str, x: f64, z: f64, r: f64, sigma: f64, seeds: u64) {
    let intr = CameraIntrinsics::default_for(320, 240);
    let mut cfg = PipelineConfig::default();
    cfg.segmenter.noise_sigma = sigma;
    cfg.segmenter.error_threshold = if sigma > 0.0 { 3.0 * sigma } else { 0.01 };
    cfg.chain.k_neighbors = 5;
    cfg.chain.min_chain = 6;

    let mut radii = Vec::new();
    let mut row_r1 = Vec::new();
    for seed in 0..seeds {
        let scene = SceneSpec {
            seed: seed + 100,
            noise_sigma: sigma,
            noise_sigma_per_meter: 0.0,
            objects: vec![cyl(x, z, r)],
            occluders: vec![],
        };
        let frame = render(&scene, intr, 0.0);
        let mut ellipses: Vec<Ellipse> = Vec::new();
        for row in 0..intr.height {
            let pts = project_row(&frame, row);
            ellipses.extend(extract_ellipses(&pts, row, &frame.intrinsics, &cfg.segmenter));
        }
        let ellipses = prefilter(ellipses, &cfg.segmenter);
        for e in &ellipses {
            // Middle rows only: away from the rim transition bands.
            if (e.center.y - 0.5).abs() < 0.2 {
                row_r1.push(e.r1);
            }
        }
        let mut chains = build_components(&ellipses, &cfg.chain);
        for ch in &mut chains {
            if let Some(p) = classify(ch, &cfg.classifier) {
                if let PrimitiveShape::Cylinder { radius, .. } = p.shape {
                    radii.push(radius);
                }
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let std = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len().max(1) as f64).sqrt()
    };
    let m = mean(&radii);
    let rm = mean(&row_r1);
    println!(
        "{label:28} n={:3} radius mean {:.4} ({:+.2}%) std {:.4} | row r1 mean {:.4} ({:+.2}%) n={}",
        radii.len(),
        m,
        (m / r - 1.0) * 100.0,
        std(&radii),
        rm,
        (rm / r - 1.0) * 100.0,
        row_r1.len()
    );
}

fn main() {
    run_case("can offct  s0.34 sig=0", -0.55, 1.6, 0.18, 0.0, 3);
    run_case("can offct  s0.34 sig=5mm", -0.55, 1.6, 0.18, 0.005, 20);
    run_case("can center s=0   sig=0", 0.0, 1.6, 0.18, 0.0, 3);
    run_case("can center s=0   sig=5mm", 0.0, 1.6, 0.18, 0.005, 20);
    run_case("ped center s=0   sig=0", 0.0, 2.0, 0.15, 0.0, 3);
    run_case("ped center s=0   sig=5mm", 0.0, 2.0, 0.15, 0.005, 20);
}
