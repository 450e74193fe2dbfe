use conic_scan::ellipse::ScatterAccumulator;
use conic_scan::geometry::{project_row, CameraIntrinsics};
use conic_scan::synth::{render, SceneObject, SceneSpec, Shape};

fn main() {
    let intr = CameraIntrinsics::default_for(320, 240);
    let scene = SceneSpec {
        seed: 2,
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
    };
    let frame = render(&scene, intr, 0.0);
    for row in [168usize, 170, 172] {
        let pts = project_row(&frame, row);
        println!("row {row}: {} points", pts.len());
        let mut acc = ScatterAccumulator::new();
        for (i, p) in pts.iter().enumerate() {
            acc.add(p.x, p.d);
            if acc.len() < 9 {
                continue;
            }
            match acc.fit() {
                Ok(conic) => {
                    let e = conic.point_distance(p.x, p.d);
                    let geo = conic.to_geometric();
                    let gs = geo
                        .map(|g| format!("maj {:.3} min {:.3}", g.semi_major, g.semi_minor))
                        .unwrap_or_else(|_| "geo-fail".into());
                    if e > 0.02 || i % 12 == 0 || i + 1 == pts.len() {
                        println!("  i {i:3} x {:+.3} d {:.3} err {e:.4} {gs}", p.x, p.d);
                    }
                }
                Err(_) => {
                    if i % 12 == 0 {
                        println!("  i {i:3} x {:+.3} d {:.3} fit degenerate", p.x, p.d);
                    }
                }
            }
        }
    }
}
