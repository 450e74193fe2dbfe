use conic_scan::ellipse::ScatterAccumulator;
use conic_scan::geometry::project_row;
use conic_scan::segmenter::{extract_ellipses_with_stats, SegmenterConfig};
use conic_scan::synth::{render, SceneObject, SceneSpec, Shape};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn gauss(rng: &mut StdRng, sigma: f64) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn taubin_fit(pts: &[(f64, f64)]) -> Option<conic_scan::ellipse::ConicCoefficients> {
    use nalgebra::{Matrix5, Matrix6, Vector5, Vector6};
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut m = Matrix6::<f64>::zeros();
    let mut nn = Matrix6::<f64>::zeros();
    for &(px, py) in pts {
        let (x, y) = (px - mx, py - my);
        let xi = Vector6::new(x * x, x * y, y * y, x, y, 1.0);
        let jx = Vector6::new(2.0 * x, y, 0.0, 1.0, 0.0, 0.0);
        let jy = Vector6::new(0.0, x, 2.0 * y, 0.0, 1.0, 0.0);
        m += xi * xi.transpose();
        nn += jx * jx.transpose() + jy * jy.transpose();
    }
    // Reduce out f: (M theta)_6 = 0 -> f = -M6P u / M66.
    let m66 = m[(5, 5)];
    if m66 <= 0.0 {
        return None;
    }
    let mp = m.fixed_view::<5, 5>(0, 0).into_owned();
    let m6 = m.fixed_view::<5, 1>(0, 5).into_owned();
    let mred: Matrix5<f64> = mp - (m6 * m6.transpose()) / m66;
    let np = nn.fixed_view::<5, 5>(0, 0).into_owned();
    let chol = np.cholesky()?;
    let li = chol.l().try_inverse()?;
    let sym = li * mred * li.transpose();
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut best = 0;
    for i in 1..5 {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let u: Vector5<f64> = li.transpose() * eig.eigenvectors.column(best).into_owned();
    let f = -(m6.transpose() * u)[(0, 0)] / m66;
    // De-offset: substitute x -> x - mx, y -> y - my.
    let (a, b, c, d, e, ff) = (u[0], u[1], u[2], u[3], u[4], f);
    let d2 = d - 2.0 * a * mx - b * my;
    let e2 = e - 2.0 * c * my - b * mx;
    let f2 = ff + a * mx * mx + b * mx * my + c * my * my - d * mx - e * my;
    Some(
        conic_scan::ellipse::ConicCoefficients {
            a,
            b,
            c,
            d: d2,
            e: e2,
            f: f2,
        }
        .positive_definite(),
    )
}

fn quantiles(v: &mut Vec<f64>) -> (f64, f64, f64) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
    (q(0.1), q(0.5), q(0.9))
}

fn main() {
    // Batch fit bias on a synthetic cylinder-row arc: circle R at depth d,
    // points at pixel-uniform x spacing, z noise only.
    let fx = 262.5;
    for (r, d, sigma) in [
        (0.15, 2.0, 0.005),
        (0.2, 1.0, 0.005),
        (0.36, 2.2, 0.005),
        (0.15, 2.0, 0.002),
        (0.18, 1.6, 0.005),
        (0.08, 1.6, 0.005),
    ] {
        let mut by_est: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut by_est_r1: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for seed in 0..50u64 {
            let mut rng = StdRng::seed_from_u64(seed);
            let mut acc = ScatterAccumulator::new();
            let mut pts = Vec::new();
            // pixel columns covering the arc
            let umax = (r / d * fx) as i32;
            for ui in -umax..=umax {
                let x = ui as f64 * d / fx;
                if x.abs() >= r * 0.999 {
                    continue;
                }
                let z = d - (r * r - x * x).sqrt() + gauss(&mut rng, sigma);
                acc.add(x, z);
                pts.push((x, z));
            }
            let fits = [
                acc.fit().ok(),
                acc.debiased_y(sigma * sigma).fit().ok(),
                taubin_fit(&pts),
            ];
            for (i, conic) in fits.iter().enumerate() {
                let Some(conic) = conic else { continue };
                if let Ok(geo) = conic.to_geometric() {
                    let along = geo.theta.cos().abs() >= std::f64::consts::FRAC_1_SQRT_2;
                    let (r1v, r2v) = if along {
                        (geo.semi_major, geo.semi_minor)
                    } else {
                        (geo.semi_minor, geo.semi_major)
                    };
                    by_est[i].push(r2v);
                    by_est_r1[i].push(r1v);
                }
            }
        }
        for (axis, group) in [("r2", &mut by_est), ("r1", &mut by_est_r1)] {
            for (name, r2s) in ["plain ", "debias", "taubin"].iter().zip(group.iter_mut()) {
                let n = r2s.len();
                let nf = n as f64;
                let mean = r2s.iter().sum::<f64>() / nf;
                let var = r2s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
                let (q10, q50, q90) = quantiles(r2s);
                println!(
                    "R={r} d={d} s={sigma} {axis} {name}: f={n} mean={mean:.4} ({:+.1}%) std={:.4} q10={q10:.4} med={q50:.4} ({:+.1}%) q90={q90:.4}",
                    100.0 * (mean - r) / r,
                    var.sqrt(),
                    100.0 * (q50 - r) / r,
                );
            }
        }
        println!();
    }

    // Same geometry but through the sweep on a real rendered row.
    let scene = SceneSpec {
        seed: 3,
        noise_sigma: 0.005,
        objects: vec![SceneObject {
            name: "post".into(),
            shape: Shape::Cylinder {
                center: [0.0, 0.0, 2.0],
                axis: [0.0, 1.0, 0.0],
                radius: 0.15,
                half_length: 0.5,
            },
            velocity: [0.0; 3],
        }],
        ..SceneSpec::empty()
    };
    let frame = render(
        &scene,
        conic_scan::geometry::CameraIntrinsics::default_for(320, 240),
        0.0,
    );
    let cfg = SegmenterConfig::default();
    for row in [100, 119, 140] {
        let pts = project_row(&frame, row);
        let (es, stats) = extract_ellipses_with_stats(&pts, row, &frame.intrinsics, &cfg);
        println!("row {row}: {} pts, stats {stats:?}", pts.len());
        for e in es {
            println!(
                "  r1={:.4} r2={:.4} support={} resid={:.4} z={:.3}",
                e.r1, e.r2, e.support, e.residual, e.center.z
            );
        }
    }
}
