//! Synthetic range-scene generation.
//!
//! Renders depth frames of parameterized primitives (spheres, cylinders,
//! cones, planes) by per-pixel ray casting under the pinhole model, with
//! seeded Gaussian range noise, angular occluders and linear motion
//! scripts. Every experiment in this crate measures against frames from
//! here, so the renderer is deliberately boring: exact quadric
//! intersections, no acceleration structures, bitwise deterministic for
//! a given spec and time.

use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthFrame};

/// Scene description, serializable as TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    /// Base seed for the per-frame noise stream.
    #[serde(default)]
    pub seed: u64,
    /// Range-noise standard deviation in meters, applied along each ray.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Optional linear growth of sigma with range (per meter), loosely
    /// modeling depth cameras whose error grows with distance.
    #[serde(default)]
    pub noise_sigma_per_meter: f64,
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub occluders: Vec<Occluder>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneObject {
    /// Identifier referenced by occluders; may be empty when unused.
    #[serde(default)]
    pub name: String,
    #[serde(flatten)]
    pub shape: Shape,
    /// Linear velocity in m/s; the object translates by `velocity * t`.
    #[serde(default)]
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    /// Finite open tube (no end caps); `axis` need not be unit length.
    Cylinder {
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        half_length: f64,
    },
    /// Single-nappe cone opening along `axis` from the apex. `length`
    /// bounds the axial extent; `truncate` removes the tip below that
    /// axial distance.
    Cone {
        apex: [f64; 3],
        axis: [f64; 3],
        half_angle_deg: f64,
        length: f64,
        #[serde(default)]
        truncate: f64,
    },
    /// Infinite plane, or a rectangle when `half_extents` is given.
    Plane {
        point: [f64; 3],
        normal: [f64; 3],
        #[serde(default)]
        half_extents: Option<[f64; 2]>,
    },
}

/// Hides an angular fraction of one object behind a foreground mask.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Occluder {
    /// `name` of the object to occlude.
    pub target: String,
    /// Fraction of the object's visible image width hidden, from the
    /// left edge; in `[0, 1)`.
    pub fraction: f64,
}

impl SceneSpec {
    pub fn empty() -> Self {
        Self {
            seed: 0,
            noise_sigma: 0.0,
            noise_sigma_per_meter: 0.0,
            objects: Vec::new(),
            occluders: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scene(msg));
        if self.noise_sigma < 0.0 || self.noise_sigma_per_meter < 0.0 {
            return bad("noise sigma must be nonnegative".into());
        }
        for (i, obj) in self.objects.iter().enumerate() {
            let label = if obj.name.is_empty() {
                format!("object #{i}")
            } else {
                format!("object '{}'", obj.name)
            };
            match &obj.shape {
                Shape::Sphere { radius, .. } => {
                    if *radius <= 0.0 {
                        return bad(format!("{label}: sphere radius must be positive"));
                    }
                }
                Shape::Cylinder {
                    axis,
                    radius,
                    half_length,
                    ..
                } => {
                    if *radius <= 0.0 || *half_length <= 0.0 {
                        return bad(format!("{label}: cylinder dimensions must be positive"));
                    }
                    if Vector3::from(*axis).norm() == 0.0 {
                        return bad(format!("{label}: cylinder axis must be nonzero"));
                    }
                }
                Shape::Cone {
                    axis,
                    half_angle_deg,
                    length,
                    truncate,
                    ..
                } => {
                    if !(0.0..90.0).contains(half_angle_deg) || *half_angle_deg == 0.0 {
                        return bad(format!("{label}: cone half angle must be in (0, 90) deg"));
                    }
                    if *length <= 0.0 || *truncate < 0.0 || *truncate >= *length {
                        return bad(format!("{label}: cone extent invalid"));
                    }
                    if Vector3::from(*axis).norm() == 0.0 {
                        return bad(format!("{label}: cone axis must be nonzero"));
                    }
                }
                Shape::Plane { normal, .. } => {
                    if Vector3::from(*normal).norm() == 0.0 {
                        return bad(format!("{label}: plane normal must be nonzero"));
                    }
                }
            }
        }
        for occ in &self.occluders {
            if !(0.0..1.0).contains(&occ.fraction) {
                return bad(format!(
                    "occluder of '{}': fraction {} outside [0, 1)",
                    occ.target, occ.fraction
                ));
            }
            if !self.objects.iter().any(|o| o.name == occ.target) {
                return bad(format!("occluder targets unknown object '{}'", occ.target));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Scene(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Scene(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Shape translated to its pose at render time.
enum Solid {
    Sphere {
        center: Point3<f64>,
        radius: f64,
    },
    Cylinder {
        center: Point3<f64>,
        axis: Vector3<f64>,
        radius: f64,
        half_length: f64,
    },
    Cone {
        apex: Point3<f64>,
        axis: Vector3<f64>,
        cos2: f64,
        smin: f64,
        smax: f64,
    },
    Plane {
        point: Point3<f64>,
        normal: Vector3<f64>,
        e1: Vector3<f64>,
        e2: Vector3<f64>,
        half_extents: Option<[f64; 2]>,
    },
}

impl Solid {
    fn at_time(obj: &SceneObject, t: f64) -> Self {
        let shift = Vector3::from(obj.velocity) * t;
        match &obj.shape {
            Shape::Sphere { center, radius } => Solid::Sphere {
                center: Point3::from(Vector3::from(*center) + shift),
                radius: *radius,
            },
            Shape::Cylinder {
                center,
                axis,
                radius,
                half_length,
            } => Solid::Cylinder {
                center: Point3::from(Vector3::from(*center) + shift),
                axis: Vector3::from(*axis).normalize(),
                radius: *radius,
                half_length: *half_length,
            },
            Shape::Cone {
                apex,
                axis,
                half_angle_deg,
                length,
                truncate,
            } => {
                let c = half_angle_deg.to_radians().cos();
                Solid::Cone {
                    apex: Point3::from(Vector3::from(*apex) + shift),
                    axis: Vector3::from(*axis).normalize(),
                    cos2: c * c,
                    smin: *truncate,
                    smax: *length,
                }
            }
            Shape::Plane {
                point,
                normal,
                half_extents,
            } => {
                let n = Vector3::from(*normal).normalize();
                // Deterministic in-plane frame for bounded rectangles.
                let up = if n.y.abs() < 0.9 {
                    Vector3::new(0.0, 1.0, 0.0)
                } else {
                    Vector3::new(1.0, 0.0, 0.0)
                };
                let e1 = n.cross(&up).normalize();
                let e2 = n.cross(&e1);
                Solid::Plane {
                    point: Point3::from(Vector3::from(*point) + shift),
                    normal: n,
                    e1,
                    e2,
                    half_extents: *half_extents,
                }
            }
        }
    }

    /// Nearest positive ray parameter for the ray `t * dir` from the
    /// origin, if any.
    fn intersect(&self, dir: &Vector3<f64>) -> Option<f64> {
        const T_MIN: f64 = 1e-9;
        match self {
            Solid::Sphere { center, radius } => {
                let c = center.coords;
                let a = dir.dot(dir);
                let b = -2.0 * dir.dot(&c);
                let k = c.dot(&c) - radius * radius;
                smallest_root(a, b, k, T_MIN)
            }
            Solid::Cylinder {
                center,
                axis,
                radius,
                half_length,
            } => {
                let dp = dir - axis * dir.dot(axis);
                let cp = center.coords - axis * center.coords.dot(axis);
                let a = dp.dot(&dp);
                if a < 1e-18 {
                    return None;
                }
                let b = -2.0 * dp.dot(&cp);
                let k = cp.dot(&cp) - radius * radius;
                let valid = |t: f64| {
                    let h = (dir * t - center.coords).dot(axis);
                    h.abs() <= *half_length
                };
                both_roots(a, b, k, T_MIN).into_iter().flatten().find(|&t| valid(t))
            }
            Solid::Cone {
                apex,
                axis,
                cos2,
                smin,
                smax,
            } => {
                let v = apex.coords;
                let du = dir.dot(axis);
                let vu = v.dot(axis);
                let a = du * du - dir.dot(dir) * cos2;
                let b = -2.0 * du * vu + 2.0 * dir.dot(&v) * cos2;
                let k = vu * vu - v.dot(&v) * cos2;
                let valid = |t: f64| {
                    let s = t * du - vu;
                    s >= *smin && s <= *smax
                };
                if a.abs() < 1e-15 {
                    // Ray parallel to the cone surface: linear equation.
                    if b.abs() < 1e-15 {
                        return None;
                    }
                    let t = -k / b;
                    return (t > T_MIN && valid(t)).then_some(t);
                }
                both_roots(a, b, k, T_MIN).into_iter().flatten().find(|&t| valid(t))
            }
            Solid::Plane {
                point,
                normal,
                e1,
                e2,
                half_extents,
            } => {
                let denom = normal.dot(dir);
                if denom.abs() < 1e-15 {
                    return None;
                }
                let t = normal.dot(&point.coords) / denom;
                if t <= T_MIN {
                    return None;
                }
                if let Some([h1, h2]) = half_extents {
                    let q = dir * t - point.coords;
                    if q.dot(e1).abs() > *h1 || q.dot(e2).abs() > *h2 {
                        return None;
                    }
                }
                Some(t)
            }
        }
    }
}

/// Positive roots of `a t^2 + b t + k = 0` in ascending order.
fn both_roots(a: f64, b: f64, k: f64, t_min: f64) -> [Option<f64>; 2] {
    let disc = b * b - 4.0 * a * k;
    if disc < 0.0 {
        return [None, None];
    }
    let sq = disc.sqrt();
    // Citardauq ordering to keep precision for small roots.
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = [q / a, if q.abs() > 0.0 { k / q } else { q / a }];
    if roots[0] > roots[1] {
        roots.swap(0, 1);
    }
    [
        (roots[0] > t_min && roots[0].is_finite()).then_some(roots[0]),
        (roots[1] > t_min && roots[1].is_finite()).then_some(roots[1]),
    ]
}

fn smallest_root(a: f64, b: f64, k: f64, t_min: f64) -> Option<f64> {
    let [r0, r1] = both_roots(a, b, k, t_min);
    r0.or(r1)
}

/// Renders the scene at time `t` into a depth frame.
///
/// Per pixel, the nearest object intersection along the viewing ray
/// determines depth; pixels hitting nothing are invalid. Occluders then
/// replace the stated left fraction of their target's visible image
/// width with a foreground mask at half the original range, and finally
/// seeded Gaussian range noise is added to every valid pixel. The result
/// is a pure function of `(scene, intrinsics, t)`.
pub fn render(scene: &SceneSpec, intrinsics: CameraIntrinsics, t: f64) -> DepthFrame {
    let solids: Vec<Solid> = scene
        .objects
        .iter()
        .map(|o| Solid::at_time(o, t))
        .collect();
    let mut frame = DepthFrame::empty(intrinsics);
    frame.timestamp = t;
    let w = intrinsics.width;
    let h = intrinsics.height;
    // Which object owns each pixel, for the occlusion pass.
    let mut owner: Vec<i32> = vec![-1; w * h];

    for v in 0..h {
        for u in 0..w {
            let dir = Vector3::new(
                (u as f64 - intrinsics.cx) / intrinsics.fx,
                (v as f64 - intrinsics.cy) / intrinsics.fy,
                1.0,
            );
            let mut best = f64::INFINITY;
            let mut hit = -1i32;
            for (i, solid) in solids.iter().enumerate() {
                if let Some(tr) = solid.intersect(&dir) {
                    if tr < best {
                        best = tr;
                        hit = i as i32;
                    }
                }
            }
            if hit >= 0 {
                // Ray direction has unit z, so the parameter is depth.
                frame.set_depth(u, v, best);
                owner[v * w + u] = hit;
            }
        }
    }

    for occ in &scene.occluders {
        let Some(target) = scene.objects.iter().position(|o| o.name == occ.target) else {
            continue;
        };
        let target = target as i32;
        let mut umin = usize::MAX;
        let mut umax = 0usize;
        for v in 0..h {
            for u in 0..w {
                if owner[v * w + u] == target {
                    umin = umin.min(u);
                    umax = umax.max(u);
                }
            }
        }
        if umin > umax {
            continue;
        }
        let cut = umin as f64 + occ.fraction * (umax - umin + 1) as f64;
        for v in 0..h {
            for u in umin..=umax {
                if (u as f64) < cut && owner[v * w + u] == target {
                    let d = frame.depth(u, v);
                    frame.set_depth(u, v, 0.5 * d);
                }
            }
        }
    }

    if scene.noise_sigma > 0.0 || scene.noise_sigma_per_meter > 0.0 {
        let mut rng = frame_rng(scene.seed, t);
        for v in 0..h {
            for u in 0..w {
                let d = frame.depth(u, v);
                if d <= 0.0 {
                    continue;
                }
                let dir_norm = Vector3::new(
                    (u as f64 - intrinsics.cx) / intrinsics.fx,
                    (v as f64 - intrinsics.cy) / intrinsics.fy,
                    1.0,
                )
                .norm();
                let range = d * dir_norm;
                let sigma = scene.noise_sigma + scene.noise_sigma_per_meter * range;
                let noisy = d + gaussian(&mut rng, sigma) / dir_norm;
                frame.set_depth(u, v, if noisy > 0.0 { noisy } else { 0.0 });
            }
        }
    }

    frame
}

/// Noise stream seeded from the scene seed and the frame time, so a
/// frame is reproducible in isolation and distinct across times.
fn frame_rng(seed: u64, t: f64) -> ChaCha8Rng {
    let mixed = seed ^ t.to_bits().wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Standard Box-Muller draw; two uniforms per sample keeps the stream
/// layout obvious for reproducibility.
pub(crate) fn gaussian<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Samples `count` noisy points from an ellipse arc in dimensionless 2D
/// units. The arc is centered on the ellipse's topmost point, mimicking
/// the camera-facing part of a cross-section; `arc_degrees = 360` gives
/// the full boundary. Noise is independent per coordinate.
pub fn sample_ellipse_2d(
    r_major: f64,
    r_minor: f64,
    arc_degrees: f64,
    sigma: f64,
    count: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arc = arc_degrees.to_radians();
    let start = 0.5 * std::f64::consts::PI - 0.5 * arc;
    (0..count)
        .map(|i| {
            let frac = if count > 1 {
                i as f64 / (count - 1) as f64
            } else {
                0.5
            };
            let a = start + frac * arc;
            (
                r_major * a.cos() + gaussian(&mut rng, sigma),
                r_minor * a.sin() + gaussian(&mut rng, sigma),
            )
        })
        .collect()
}

/// 2D slice of a cylinder cross-section in front of a wall, the classic
/// stress case for sample-consensus ellipse search: the wall contributes
/// a majority of points that are perfectly structured yet belong to no
/// ellipse. Returns `(points, wall_flags)` in column order with
/// `wall_flags[i]` true for wall points.
pub fn cylinder_wall_slice(
    circle_radius: f64,
    circle_depth: f64,
    wall_depth: f64,
    sigma: f64,
    seed: u64,
) -> (Vec<(f64, f64)>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    let mut flags = Vec::new();
    // The circle shadows the wall for |x| < its radius (camera near the
    // axis direction at typical depths; adequate for a test slice).
    let wall_half_width = 4.0 * circle_radius;
    let wall_step = wall_half_width * 2.0 / 139.0;
    for i in 0..140 {
        let x = -wall_half_width + i as f64 * wall_step;
        if x.abs() < circle_radius * 1.3 {
            continue;
        }
        points.push((
            x + gaussian(&mut rng, sigma),
            wall_depth + gaussian(&mut rng, sigma),
        ));
        flags.push(true);
    }
    // Camera-facing arc of the cross-section: 60 points over the front
    // half, inserted in column order at the shadow gap.
    let arc_points: Vec<(f64, f64)> = (0..60)
        .map(|i| {
            let a = std::f64::consts::PI + std::f64::consts::PI * i as f64 / 59.0;
            (
                circle_radius * a.cos() + gaussian(&mut rng, sigma),
                circle_depth + circle_radius * a.sin() + gaussian(&mut rng, sigma),
            )
        })
        .collect();
    let insert_at = points
        .iter()
        .position(|&(x, _)| x > -circle_radius)
        .unwrap_or(points.len());
    for (j, p) in arc_points.into_iter().enumerate() {
        points.insert(insert_at + j, p);
        flags.insert(insert_at + j, false);
    }
    (points, flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ellipse::ScatterAccumulator;
    use crate::geometry::project_row;
    use approx::assert_relative_eq;

    fn qvga() -> CameraIntrinsics {
        CameraIntrinsics::default_for(320, 240)
    }

    fn sphere_scene(radius: f64, depth: f64) -> SceneSpec {
        SceneSpec {
            objects: vec![SceneObject {
                name: "ball".into(),
                shape: Shape::Sphere {
                    center: [0.0, 0.0, depth],
                    radius,
                },
                velocity: [0.0; 3],
            }],
            ..SceneSpec::empty()
        }
    }

    #[test]
    fn sphere_center_pixel_depth_is_range_minus_radius() {
        let scene = sphere_scene(0.36, 2.0);
        let frame = render(&scene, qvga(), 0.0);
        // The principal point is between pixels; both straddling pixels
        // are within a fraction of a millimeter of the analytic value.
        let d = frame.depth(159, 119);
        let dir = Vector3::new((159.0 - 159.5) / 262.5, (119.0 - 119.5) / 262.5, 1.0);
        // Solve |t dir - c|^2 = r^2 analytically for the oracle.
        let c = Vector3::new(0.0, 0.0, 2.0);
        let a: f64 = dir.dot(&dir);
        let b = -2.0 * dir.dot(&c);
        let k = c.dot(&c) - 0.36_f64 * 0.36;
        let t = (-b - (b * b - 4.0 * a * k).sqrt()) / (2.0 * a);
        assert_relative_eq!(d, t, epsilon = 1e-12);
        assert_relative_eq!(d, 2.0 - 0.36, epsilon = 1e-3);
    }

    #[test]
    fn empty_scene_renders_all_invalid() {
        let frame = render(&SceneSpec::empty(), qvga(), 0.0);
        assert_eq!(frame.valid_count(), 0);
    }

    #[test]
    fn render_is_deterministic() {
        let mut scene = sphere_scene(0.3, 1.5);
        scene.noise_sigma = 0.01;
        scene.seed = 99;
        let a = render(&scene, qvga(), 0.25);
        let b = render(&scene, qvga(), 0.25);
        for v in 0..240 {
            for u in 0..320 {
                assert_eq!(a.depth(u, v), b.depth(u, v));
            }
        }
        // A different time draws a different noise stream.
        let c = render(&scene, qvga(), 0.5);
        let differs = (0..240).any(|v| (0..320).any(|u| a.depth(u, v) != c.depth(u, v)));
        assert!(differs);
    }

    #[test]
    fn vertical_cylinder_rows_match_analytic_cross_section() {
        // A vertical cylinder cut by the scan plane of row v gives scan
        // plane points exactly on the circle (x - x0)^2 + (d - z0)^2 =
        // R^2: the plane contains the cylinder axis direction scaled
        // into the row, so the lateral coordinate x and depth d obey the
        // cross-section equation independently of the row.
        let scene = SceneSpec {
            objects: vec![SceneObject {
                name: "post".into(),
                shape: Shape::Cylinder {
                    center: [0.1, 0.0, 1.5],
                    axis: [0.0, 1.0, 0.0],
                    radius: 0.25,
                    half_length: 2.0,
                },
                velocity: [0.0; 3],
            }],
            ..SceneSpec::empty()
        };
        let frame = render(&scene, qvga(), 0.0);
        let mut checked = 0;
        for row in [40, 119, 200] {
            let pts = project_row(&frame, row);
            assert!(pts.len() > 30, "row {row} has {} points", pts.len());
            for p in pts {
                let resid = ((p.x - 0.1).powi(2) + (p.d - 1.5).powi(2)).sqrt() - 0.25;
                assert!(
                    resid.abs() < 1e-9,
                    "row {row} point off circle by {resid}"
                );
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn cylinder_row_arc_fits_to_the_true_radius() {
        let scene = SceneSpec {
            objects: vec![SceneObject {
                name: "post".into(),
                shape: Shape::Cylinder {
                    center: [0.0, 0.0, 1.0],
                    axis: [0.0, 1.0, 0.0],
                    radius: 0.2,
                    half_length: 1.0,
                },
                velocity: [0.0; 3],
            }],
            ..SceneSpec::empty()
        };
        let frame = render(&scene, qvga(), 0.0);
        let pts = project_row(&frame, 119);
        let mut acc = ScatterAccumulator::new();
        for p in &pts {
            acc.add(p.x, p.d);
        }
        let geo = acc.fit().unwrap().to_geometric().unwrap();
        assert_relative_eq!(geo.semi_major, 0.2, epsilon = 1e-6);
        assert_relative_eq!(geo.semi_minor, 0.2, epsilon = 1e-6);
        assert_relative_eq!(geo.center_x, 0.0, epsilon = 1e-6);
        assert_relative_eq!(geo.center_y, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn cone_surface_points_satisfy_cone_equation() {
        let apex = Vector3::new(0.0, -0.5, 1.2);
        let axis = Vector3::new(0.0, 1.0, 0.0);
        let half_angle: f64 = 12.0_f64.to_radians();
        let scene = SceneSpec {
            objects: vec![SceneObject {
                name: "cone".into(),
                shape: Shape::Cone {
                    apex: [apex.x, apex.y, apex.z],
                    axis: [axis.x, axis.y, axis.z],
                    half_angle_deg: 12.0,
                    length: 0.8,
                    truncate: 0.05,
                },
                velocity: [0.0; 3],
            }],
            ..SceneSpec::empty()
        };
        let frame = render(&scene, qvga(), 0.0);
        let mut n = 0;
        for row in 0..240 {
            for p in project_row(&frame, row) {
                let w = p.p3d.coords - apex;
                let s = w.dot(&axis);
                assert!(s >= 0.05 - 1e-9 && s <= 0.8 + 1e-9);
                let angle = (w.norm_squared() - s * s).max(0.0).sqrt().atan2(s);
                assert_relative_eq!(angle, half_angle, epsilon = 1e-9);
                n += 1;
            }
        }
        assert!(n > 500, "cone covered {n} pixels");
    }

    #[test]
    fn bounded_plane_clips_to_rectangle() {
        let scene = SceneSpec {
            objects: vec![SceneObject {
                name: "board".into(),
                shape: Shape::Plane {
                    point: [0.0, 0.0, 2.0],
                    normal: [0.0, 0.0, -1.0],
                    half_extents: Some([0.5, 0.25]),
                },
                velocity: [0.0; 3],
            }],
            ..SceneSpec::empty()
        };
        let frame = render(&scene, qvga(), 0.0);
        for v in 0..240 {
            for u in 0..320 {
                if frame.is_valid(u, v) {
                    let p = frame.intrinsics.unproject(u as f64, v as f64, frame.depth(u, v));
                    assert!(p.x.abs() <= 0.5 + 1e-9);
                    assert!(p.y.abs() <= 0.25 + 1e-9);
                    assert_relative_eq!(p.z, 2.0, epsilon = 1e-12);
                }
            }
        }
        assert!(frame.valid_count() > 1000);
    }

    #[test]
    fn occluder_hides_left_fraction_with_foreground_mask() {
        let mut scene = sphere_scene(0.3, 1.5);
        let clean = render(&scene, qvga(), 0.0);
        scene.occluders.push(Occluder {
            target: "ball".into(),
            fraction: 0.4,
        });
        let occluded = render(&scene, qvga(), 0.0);
        let mut masked = 0;
        let mut untouched = 0;
        for v in 0..240 {
            for u in 0..320 {
                let before = clean.depth(u, v);
                let after = occluded.depth(u, v);
                if before > 0.0 && (after - 0.5 * before).abs() < 1e-12 {
                    masked += 1;
                } else if before == after {
                    untouched += 1;
                }
            }
        }
        assert!(masked > 0);
        let total_obj = clean.valid_count();
        let frac = masked as f64 / total_obj as f64;
        assert!(
            (frac - 0.4).abs() < 0.12,
            "masked fraction {frac} far from 0.4"
        );
        assert_eq!(masked + untouched, 320 * 240);
    }

    #[test]
    fn moving_object_translates_with_time() {
        let mut scene = sphere_scene(0.3, 2.0);
        scene.objects[0].velocity = [0.5, 0.0, 0.0];
        let f0 = render(&scene, qvga(), 0.0);
        let f1 = render(&scene, qvga(), 1.0);
        // Center of mass of valid pixels shifts right by roughly
        // fx * dx / depth pixels.
        let centroid = |f: &DepthFrame| {
            let mut su = 0.0;
            let mut n = 0.0;
            for v in 0..240 {
                for u in 0..320 {
                    if f.is_valid(u, v) {
                        su += u as f64;
                        n += 1.0;
                    }
                }
            }
            su / n
        };
        let shift = centroid(&f1) - centroid(&f0);
        let expect = 262.5 * 0.5 / 2.0;
        assert!((shift - expect).abs() < 3.0, "shift {shift} vs {expect}");
    }

    #[test]
    fn full_arc_sample_recovers_radii() {
        let pts = sample_ellipse_2d(40.0, 20.0, 360.0, 0.0, 24, 5);
        let mut acc = ScatterAccumulator::new();
        for &(x, y) in &pts {
            acc.add(x, y);
        }
        let geo = acc.fit().unwrap().to_geometric().unwrap();
        assert_relative_eq!(geo.semi_major, 40.0, max_relative = 1e-6);
        assert_relative_eq!(geo.semi_minor, 20.0, max_relative = 1e-6);
    }

    #[test]
    fn sampler_is_seed_deterministic() {
        let a = sample_ellipse_2d(40.0, 20.0, 180.0, 1.0, 30, 11);
        let b = sample_ellipse_2d(40.0, 20.0, 180.0, 1.0, 30, 11);
        let c = sample_ellipse_2d(40.0, 20.0, 180.0, 1.0, 30, 12);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn wall_slice_has_expected_composition() {
        let (pts, flags) = cylinder_wall_slice(0.2, 1.0, 1.3, 0.005, 3);
        assert_eq!(pts.len(), flags.len());
        let wall = flags.iter().filter(|&&f| f).count();
        let arc = flags.len() - wall;
        assert_eq!(arc, 60);
        // Roughly the advertised 0.3 inlier ratio.
        let ratio = arc as f64 / pts.len() as f64;
        assert!((0.25..0.4).contains(&ratio), "ratio {ratio}");
        // Column order was preserved by the shadow-gap insertion.
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        for (a, b) in xs.iter().zip(&sorted) {
            assert!((a - b).abs() < 0.1, "columns roughly ordered");
        }
    }

    #[test]
    fn scene_spec_toml_round_trip() {
        let scene = SceneSpec {
            seed: 7,
            noise_sigma: 0.005,
            noise_sigma_per_meter: 0.001,
            objects: vec![
                SceneObject {
                    name: "can".into(),
                    shape: Shape::Cylinder {
                        center: [0.0, 0.0, 1.0],
                        axis: [0.0, 1.0, 0.0],
                        radius: 0.2,
                        half_length: 0.4,
                    },
                    velocity: [0.21, 0.0, 0.0],
                },
                SceneObject {
                    name: "wall".into(),
                    shape: Shape::Plane {
                        point: [0.0, 0.0, 3.0],
                        normal: [0.0, 0.0, -1.0],
                        half_extents: None,
                    },
                    velocity: [0.0; 3],
                },
            ],
            occluders: vec![Occluder {
                target: "can".into(),
                fraction: 0.25,
            }],
        };
        let text = scene.to_toml().unwrap();
        let back = SceneSpec::from_toml(&text).unwrap();
        assert_eq!(back.seed, 7);
        assert_eq!(back.objects.len(), 2);
        assert_eq!(back.occluders[0].fraction, 0.25);
        match &back.objects[0].shape {
            Shape::Cylinder { radius, .. } => assert_eq!(*radius, 0.2),
            other => panic!("wrong shape {other:?}"),
        }
    }

    #[test]
    fn invalid_scenes_are_rejected() {
        let mut scene = sphere_scene(-0.1, 1.0);
        assert!(scene.validate().is_err());
        scene = sphere_scene(0.3, 1.0);
        scene.occluders.push(Occluder {
            target: "nobody".into(),
            fraction: 0.2,
        });
        assert!(scene.validate().is_err());
        scene.occluders[0].target = "ball".into();
        scene.occluders[0].fraction = 1.0;
        assert!(scene.validate().is_err());
    }
}
