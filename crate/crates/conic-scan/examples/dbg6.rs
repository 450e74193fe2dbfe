use std::collections::HashMap;

use conic_scan::chain::build_components;
use conic_scan::classify::{classify, PipelineConfig, PrimitiveShape};
use conic_scan::geometry::{project_row, CameraIntrinsics, Ellipse};
use conic_scan::segmenter::{extract_ellipses, prefilter};
use conic_scan::synth::{render, SceneObject, SceneSpec, Shape};

fn scene(seed: u64, sigma: f64) -> SceneSpec {
    SceneSpec {
        seed,
        noise_sigma: sigma,
        noise_sigma_per_meter: 0.0,
        objects: vec![SceneObject {
            name: "cone".into(),
            shape: Shape::Cone {
                apex: [0.0, 0.25, 1.6],
                axis: [0.0, 1.0, 0.0],
                half_angle_deg: 16.0,
                length: 0.55,
                truncate: 0.1,
            },
            velocity: [0.0; 3],
        }],
        occluders: vec![],
    }
}

fn rows_of(frame: &conic_scan::geometry::DepthFrame, cfg: &PipelineConfig) -> Vec<Ellipse> {
    let mut ellipses = Vec::new();
    for row in 0..frame.intrinsics.height {
        let pts = project_row(frame, row);
        ellipses.extend(extract_ellipses(&pts, row, &frame.intrinsics, &cfg.segmenter));
    }
    prefilter(ellipses, &cfg.segmenter)
}

fn angle_of(ellipses: &[Ellipse], cfg: &PipelineConfig) -> Option<f64> {
    let mut chains = build_components(ellipses, &cfg.chain);
    for ch in &mut chains {
        if let Some(p) = classify(ch, &cfg.classifier) {
            if let PrimitiveShape::Cone { half_angle, .. } = p.shape {
                return Some(half_angle.to_degrees());
            }
        }
    }
    None
}

fn main() {
    let intr = CameraIntrinsics::default_for(320, 240);
    let mut cfg_deb = PipelineConfig::default();
    cfg_deb.segmenter.noise_sigma = 0.005;
    cfg_deb.segmenter.error_threshold = 0.015;
    cfg_deb.chain.k_neighbors = 5;
    cfg_deb.chain.min_chain = 6;
    let mut cfg_plain = cfg_deb.clone();
    cfg_plain.segmenter.noise_sigma = 0.0;
    let mut cfg0 = PipelineConfig::default();
    cfg0.chain.k_neighbors = 5;
    cfg0.chain.min_chain = 6;

    // Ground truth per row from the noiseless render.
    let clean = render(&scene(0, 0.0), intr, 0.0);
    let truth: HashMap<usize, (f64, usize)> = rows_of(&clean, &cfg0)
        .into_iter()
        .map(|e| (e.row, (e.r1, e.support)))
        .collect();

    let mut deb_ratio: HashMap<usize, (f64, usize)> = HashMap::new();
    let mut plain_ratio: HashMap<usize, (f64, usize)> = HashMap::new();
    let (mut ang_deb, mut ang_plain) = (Vec::new(), Vec::new());
    for seed in 0..20u64 {
        let frame = render(&scene(seed + 300, 0.005), intr, 0.0);
        let deb = rows_of(&frame, &cfg_deb);
        let plain = rows_of(&frame, &cfg_plain);
        for e in &deb {
            if let Some(&(rt, _)) = truth.get(&e.row) {
                let s = deb_ratio.entry(e.row).or_insert((0.0, 0));
                s.0 += e.r1 / rt;
                s.1 += 1;
            }
        }
        for e in &plain {
            if let Some(&(rt, _)) = truth.get(&e.row) {
                let s = plain_ratio.entry(e.row).or_insert((0.0, 0));
                s.0 += e.r1 / rt;
                s.1 += 1;
            }
        }
        if let Some(a) = angle_of(&deb, &cfg_deb) {
            ang_deb.push(a);
        }
        if let Some(a) = angle_of(&plain, &cfg_plain) {
            ang_plain.push(a);
        }
    }

    let mut rows: Vec<usize> = truth.keys().copied().collect();
    rows.sort();
    for &row in rows.iter().step_by(5) {
        let (rt, px) = truth[&row];
        let d = deb_ratio.get(&row).map(|&(s, n)| s / n as f64);
        let p = plain_ratio.get(&row).map(|&(s, n)| s / n as f64);
        println!(
            "row {row:3} true {rt:.4} px {px:3} plain {} debias {}",
            p.map(|v| format!("{:+.2}%", (v - 1.0) * 100.0))
                .unwrap_or_else(|| "--".into()),
            d.map(|v| format!("{:+.2}%", (v - 1.0) * 100.0))
                .unwrap_or_else(|| "--".into()),
        );
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    println!(
        "half-angle over {} seeds: plain {:.2}deg  debias {:.2}deg (true 16)",
        ang_deb.len(),
        mean(&ang_plain),
        mean(&ang_deb)
    );
}
