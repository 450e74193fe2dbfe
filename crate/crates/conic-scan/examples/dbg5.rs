use conic_scan::ellipse::ScatterAccumulator;
use conic_scan::geometry::{project_row, CameraIntrinsics};
use conic_scan::synth::{render, SceneObject, SceneSpec, Shape};

fn split_r1(geo: &conic_scan::ellipse::GeometricEllipse2D) -> f64 {
    // Semi-axis closer to the x direction, same rule as the segmenter.
    let c = geo.theta.cos().abs();
    let s = geo.theta.sin().abs();
    if c >= s {
        geo.semi_major
    } else {
        geo.semi_minor
    }
}

fn run(r: f64, z0: f64, y0: f64, sigma: f64, trim_edges: usize) {
    let intr = CameraIntrinsics::default_for(320, 240);
    const LAMBDAS: [f64; 5] = [0.6, 0.7, 0.8, 0.9, 1.0];
    let (mut p_sum, mut n) = (0.0, 0usize);
    let mut lam_sum = [0.0f64; 5];
    let mut lam_n = [0usize; 5];
    for seed in 0..20u64 {
        let scene = SceneSpec {
            seed: seed + 100,
            noise_sigma: sigma,
            noise_sigma_per_meter: 0.0,
            objects: vec![SceneObject {
                name: "cyl".into(),
                shape: Shape::Cylinder {
                    radius: r,
                    center: [0.0, y0, z0],
                    axis: [0.0, 1.0, 0.0],
                    half_length: 0.3,
                },
                velocity: [0.0; 3],
            }],
            occluders: vec![],
        };
        let frame = render(&scene, intr, 0.0);
        for row in 0..intr.height {
            let pts = project_row(&frame, row);
            let valid: Vec<(f64, f64)> = pts.iter().map(|p| (p.x, p.d)).collect();
            if valid.len() < 15 {
                continue;
            }
            // Middle band only.
            let y = pts.first().map(|p| p.p3d.y).unwrap_or(99.0);
            if (y - y0).abs() > 0.2 {
                continue;
            }
            let mut acc = ScatterAccumulator::new();
            let trim = trim_edges;
            for &(x, z) in &valid[trim..valid.len() - trim] {
                acc.add(x, z);
            }
            let plain = acc.fit().and_then(|c| c.to_geometric()).ok();
            if let Some(p) = plain {
                p_sum += split_r1(&p);
                n += 1;
                for (k, lam) in LAMBDAS.iter().enumerate() {
                    if let Ok(d) = acc
                        .debiased_y(lam * sigma * sigma)
                        .fit()
                        .and_then(|c| c.to_geometric())
                    {
                        lam_sum[k] += split_r1(&d);
                        lam_n[k] += 1;
                    }
                }
            }
        }
    }
    let pm = p_sum / n as f64;
    print!(
        "r={r} z={z0} s={sigma} n={n}: plain {:+.2}% |",
        (pm / r - 1.0) * 100.0
    );
    for (k, lam) in LAMBDAS.iter().enumerate() {
        let m = lam_sum[k] / lam_n[k] as f64;
        print!(" L{lam}: {:+.2}%", (m / r - 1.0) * 100.0);
    }
    println!();
}

fn main() {
    for sigma in [0.002, 0.005, 0.008] {
        run(0.18, 1.6, 0.5, sigma, 0);
        run(0.15, 2.0, 0.55, sigma, 0);
        run(0.08, 1.6, 0.5, sigma, 0);
    }
}
