use conic_scan::chain::build_components;
use conic_scan::classify::{classify, PipelineConfig, PrimitiveKind, PrimitiveShape};
use conic_scan::geometry::{project_row, CameraIntrinsics, Ellipse};
use conic_scan::segmenter::{extract_ellipses, prefilter};
use conic_scan::synth::{render, SceneObject, SceneSpec, Shape};

fn obj(name: &str, shape: Shape) -> SceneObject {
    SceneObject {
        name: name.into(),
        shape,
        velocity: [0.0; 3],
    }
}

fn three(seed: u64) -> SceneSpec {
    SceneSpec {
        seed,
        noise_sigma: 0.005,
        objects: vec![
            obj(
                "trash_can",
                Shape::Cylinder {
                    center: [-0.55, 0.5, 1.6],
                    axis: [0.0, 1.0, 0.0],
                    radius: 0.18,
                    half_length: 0.3,
                },
            ),
            obj(
                "parking_cone",
                Shape::Cone {
                    apex: [0.55, 0.25, 1.6],
                    axis: [0.0, 1.0, 0.0],
                    half_angle_deg: 16.0,
                    length: 0.55,
                    truncate: 0.1,
                },
            ),
            obj(
                "ball",
                Shape::Sphere {
                    center: [0.0, 0.44, 2.2],
                    radius: 0.36,
                },
            ),
            obj(
                "floor",
                Shape::Plane {
                    point: [0.0, 0.8, 0.0],
                    normal: [0.0, -1.0, 0.0],
                    half_extents: None,
                },
            ),
        ],
        ..SceneSpec::empty()
    }
}

fn main() {
    let intr = CameraIntrinsics::default_for(320, 240);
    let mut cfg = PipelineConfig::default();
    cfg.segmenter.noise_sigma = 0.005;
    cfg.segmenter.error_threshold = 0.015;
    cfg.chain.k_neighbors = 5;
    cfg.chain.min_chain = 6;

    let (mut cyl_r, mut sph_r, mut cone_a) = (Vec::new(), Vec::new(), Vec::new());
    let mut bad = 0;
    for seed in 0..20u64 {
        let frame = render(&three(seed + 1), intr, 0.0);
        let mut ellipses: Vec<Ellipse> = Vec::new();
        for row in 0..intr.height {
            let pts = project_row(&frame, row);
            ellipses.extend(extract_ellipses(&pts, row, &frame.intrinsics, &cfg.segmenter));
        }
        let ellipses = prefilter(ellipses, &cfg.segmenter);
        let mut chains = build_components(&ellipses, &cfg.chain);
        let mut found: Vec<(PrimitiveKind, f64)> = Vec::new();
        for ch in &mut chains {
            if let Some(p) = classify(ch, &cfg.classifier) {
                let v = match p.shape {
                    PrimitiveShape::Cylinder { radius, .. } => radius,
                    PrimitiveShape::Sphere { radius, .. } => radius,
                    PrimitiveShape::Cone { half_angle, .. } => half_angle.to_degrees(),
                };
                found.push((p.kind(), v));
            }
        }
        let kinds: Vec<PrimitiveKind> = found.iter().map(|f| f.0).collect();
        let ok = found.len() == 3
            && kinds.contains(&PrimitiveKind::Cylinder)
            && kinds.contains(&PrimitiveKind::Sphere)
            && kinds.contains(&PrimitiveKind::Cone);
        if !ok {
            bad += 1;
            println!("seed {:2}: BAD {:?}", seed + 1, found);
            for ch in &chains {
                if ch.len() < 4 {
                    continue;
                }
                let rows: Vec<usize> = ch.ellipses.iter().map(|e| e.row).collect();
                let r1s: Vec<f64> = ch.ellipses.iter().map(|e| e.r1).collect();
                if ch.ellipses[0].center.x.abs() < 0.3 {
                    println!(
                        "  ball-ish chain rows {}..{} len {} r1 {:.3}->{:.3}",
                        rows[0],
                        rows[rows.len() - 1],
                        ch.len(),
                        r1s[0],
                        r1s[r1s.len() - 1]
                    );
                    for w in ch.ellipses.windows(2) {
                        if w[1].row > w[0].row + 1 {
                            println!(
                                "    gap {}..{} r1 {:.3}->{:.3}",
                                w[0].row, w[1].row, w[0].r1, w[1].r1
                            );
                        }
                    }
                }
            }
            continue;
        }
        for (k, v) in found {
            match k {
                PrimitiveKind::Cylinder => cyl_r.push(v),
                PrimitiveKind::Sphere => sph_r.push(v),
                PrimitiveKind::Cone => cone_a.push(v),
            }
        }
    }
    let stat = |v: &[f64], truth: f64| {
        let m = v.iter().sum::<f64>() / v.len().max(1) as f64;
        let sd = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len().max(1) as f64).sqrt();
        let worst = v
            .iter()
            .map(|x| ((x / truth - 1.0) * 100.0).abs())
            .fold(0.0, f64::max);
        format!(
            "mean {m:.4} ({:+.2}%) std {sd:.4} worst |{:.2}|%",
            (m / truth - 1.0) * 100.0,
            worst
        )
    };
    println!("bad seeds: {bad}/20");
    println!("cylinder r: {}", stat(&cyl_r, 0.18));
    println!("sphere   r: {}", stat(&sph_r, 0.36));
    println!("cone   deg: {}", stat(&cone_a, 16.0));
}
