use conic_scan::chain::build_components;
use conic_scan::classify::{classify, PipelineConfig};
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

fn dump(name: &str, scene: &SceneSpec, cfg: &PipelineConfig) {
    let intr = CameraIntrinsics::default_for(320, 240);
    let frame = render(scene, intr, 0.0);
    let mut ellipses: Vec<Ellipse> = Vec::new();
    for row in 0..intr.height {
        let pts = project_row(&frame, row);
        ellipses.extend(extract_ellipses(&pts, row, &frame.intrinsics, &cfg.segmenter));
    }
    let ellipses = prefilter(ellipses, &cfg.segmenter);
    println!("== {name}: {} row ellipses", ellipses.len());
    if name == "three" {
        for e in &ellipses {
            if (168..=186).contains(&e.row) && e.center.x.abs() < 0.25 {
                println!(
                    "  row {} ctr ({:.3},{:.3},{:.3}) r1 {:.3} r2 {:.3} sup {} res {:.4}",
                    e.row, e.center.x, e.center.y, e.center.z, e.r1, e.r2, e.support, e.residual
                );
            }
        }
    }
    if name == "stacked" {
        // Replicate the sphere branch numbers for the ball chain rows.
        let ball: Vec<&Ellipse> = ellipses
            .iter()
            .filter(|e| (95..=144).contains(&e.row))
            .collect();
        let zr: Vec<(f64, f64)> = ball
            .iter()
            .map(|e| (e.center.y, e.r1))
            .collect();
        if let Ok(c) = conic_scan::ellipse::fit_circle(&zr) {
            let rms = (zr
                .iter()
                .map(|&(z, r)| {
                    let d = (z - c.center_x).hypot(r - c.center_y) - c.radius;
                    d * d
                })
                .sum::<f64>()
                / zr.len() as f64)
                .sqrt();
            println!(
                "  ball zr circle: R {:.4} z0 {:.4} r0 {:+.4} rms {:.4}",
                c.radius, c.center_x, c.center_y, rms
            );
        }
        for e in ball.iter().step_by(6) {
            println!(
                "  row {} ctr ({:.3},{:.3},{:.3}) r1 {:.3} sup {} res {:.4}",
                e.row, e.center.x, e.center.y, e.center.z, e.r1, e.support, e.residual
            );
        }
    }
    let mut chains = build_components(&ellipses, &cfg.chain);
    chains.sort_by_key(|c| c.ellipses.first().map(|e| e.row).unwrap_or(0));
    for ch in &mut chains {
        let rows: Vec<usize> = ch.ellipses.iter().map(|e| e.row).collect();
        let first = ch.ellipses.first().unwrap().center;
        let last = ch.ellipses.last().unwrap().center;
        let r_first = ch.ellipses.first().unwrap().r1;
        let r_last = ch.ellipses.last().unwrap().r1;
        let out = classify(ch, &cfg.classifier);
        println!(
            "chain len {:3} rows {}..{} ctr ({:.2},{:.2},{:.2})->({:.2},{:.2},{:.2}) r1 {:.3}->{:.3} => {}",
            ch.len(),
            rows.first().unwrap(),
            rows.last().unwrap(),
            first.x,
            first.y,
            first.z,
            last.x,
            last.y,
            last.z,
            r_first,
            r_last,
            match &out {
                Some(p) => {
                    use conic_scan::classify::PrimitiveShape;
                    let detail = match &p.shape {
                        PrimitiveShape::Cone {
                            apex, half_angle, ..
                        } => format!(
                            " half_angle={:.2}deg apex=({:.3},{:.3},{:.3})",
                            half_angle.to_degrees(),
                            apex.x,
                            apex.y,
                            apex.z
                        ),
                        PrimitiveShape::Sphere { center, .. } => {
                            format!(" center=({:.3},{:.3},{:.3})", center.x, center.y, center.z)
                        }
                        _ => String::new(),
                    };
                    format!(
                        "{:?} r={:.4} resid={:.4}{}",
                        p.kind(),
                        p.radius(),
                        p.residual,
                        detail
                    )
                }
                None => format!("None (resid {:.4})", ch.residual),
            }
        );
    }
}

fn main() {
    let mut cfg = PipelineConfig::default();
    cfg.segmenter.noise_sigma = 0.005;
    cfg.segmenter.error_threshold = 0.015;
    cfg.chain.k_neighbors = 5;
    cfg.chain.min_chain = 6;

    let three = SceneSpec {
        seed: 1,
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
    };
    dump("three", &three, &cfg);

    let mut three0 = three.clone();
    three0.noise_sigma = 0.0;
    let mut cfg0 = PipelineConfig::default();
    cfg0.chain.k_neighbors = 5;
    cfg0.chain.min_chain = 6;
    dump("three0", &three0, &cfg0);

    let stacked = SceneSpec {
        seed: 2,
        noise_sigma: 0.005,
        objects: vec![
            obj(
                "pedestal",
                Shape::Cylinder {
                    center: [0.0, 0.55, 2.0],
                    axis: [0.0, 1.0, 0.0],
                    radius: 0.15,
                    half_length: 0.35,
                },
            ),
            obj(
                "ball",
                Shape::Sphere {
                    center: [0.0, 0.0, 2.0],
                    radius: 0.2,
                },
            ),
        ],
        ..SceneSpec::empty()
    };
    dump("stacked", &stacked, &cfg);
}
