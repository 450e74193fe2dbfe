//! Chain classification in (z, r) space and the whole-frame pipeline.
//!
//! Each chain is reduced to points (z, r): z is the arc-length position
//! of an ellipse center along the chain's fitted center line, r the
//! radius orthogonal to scan rows. Cylinders become horizontal lines
//! there, cones slanted lines, spheres half circles. A line and a circle
//! compete by residual, gated by tolerance, and the winner determines
//! the primitive and its parameters.

use crate::chain::{
    build_components, fit_center_circle, fit_center_line, CenterModel, ChainConfig, Circle3D,
    EllipseChain, Line3D,
};
use crate::ellipse::{fit_circle_on_axis_weighted, Circle2D};
use crate::error::{Error, Result};
use crate::geometry::{project_row, DepthFrame, Ellipse};
use crate::segmenter::{extract_ellipses, prefilter, SegmenterConfig};
use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use std::time::Instant;

/// Decision thresholds for (z, r) classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    /// Largest |dr/dz| angle still read as a constant radius, radians.
    pub cylinder_slope_tol: f64,
    /// Smallest |dr/dz| angle read as a cone, radians.
    pub cone_slope_min: f64,
    /// Acceptable RMS residual of the winning (z, r) model, meters; also
    /// bounds how far a sphere's (z, r) circle center may sit from the
    /// r = 0 axis.
    pub zr_residual_tol: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            cylinder_slope_tol: 5.0_f64.to_radians(),
            cone_slope_min: 5.0_f64.to_radians(),
            zr_residual_tol: 0.015,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.cylinder_slope_tol > 0.0
            && self.cylinder_slope_tol <= self.cone_slope_min
            && self.cone_slope_min < std::f64::consts::FRAC_PI_2
            && self.zr_residual_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Format(format!("invalid classifier config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimitiveKind {
    Cylinder,
    Cone,
    Sphere,
}

impl std::fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PrimitiveKind::Cylinder => "cylinder",
            PrimitiveKind::Cone => "cone",
            PrimitiveKind::Sphere => "sphere",
        })
    }
}

/// Geometry of a detected primitive. Extents are intervals of the axis
/// coordinate (arc length along `axis` from its anchor).
#[derive(Debug, Clone, Copy)]
pub enum PrimitiveShape {
    Cylinder {
        axis: Line3D,
        radius: f64,
        extent: (f64, f64),
    },
    Cone {
        axis: Line3D,
        apex: Point3<f64>,
        half_angle: f64,
        extent: (f64, f64),
        /// False when the apex extrapolates far beyond the observed
        /// rows; near-cylindrical cones put it anywhere.
        apex_reliable: bool,
    },
    Sphere {
        center: Point3<f64>,
        radius: f64,
    },
}

/// A classified object with its supporting evidence.
#[derive(Debug, Clone, Copy)]
pub struct Primitive {
    pub shape: PrimitiveShape,
    /// Number of supporting ellipses.
    pub support: usize,
    /// RMS residual of the winning (z, r) model, meters.
    pub residual: f64,
}

impl Primitive {
    pub fn kind(&self) -> PrimitiveKind {
        match self.shape {
            PrimitiveShape::Cylinder { .. } => PrimitiveKind::Cylinder,
            PrimitiveShape::Cone { .. } => PrimitiveKind::Cone,
            PrimitiveShape::Sphere { .. } => PrimitiveKind::Sphere,
        }
    }

    /// Representative point for association and tracking: the sphere
    /// center, or the axis point at the middle of the observed extent.
    pub fn position(&self) -> Point3<f64> {
        match &self.shape {
            PrimitiveShape::Cylinder { axis, extent, .. }
            | PrimitiveShape::Cone { axis, extent, .. } => {
                axis.point_at(0.5 * (extent.0 + extent.1))
            }
            PrimitiveShape::Sphere { center, .. } => *center,
        }
    }

    /// Representative radius: cylinder/sphere radius, or the cone's
    /// radius at the middle of its observed extent.
    pub fn radius(&self) -> f64 {
        match &self.shape {
            PrimitiveShape::Cylinder { radius, .. } | PrimitiveShape::Sphere { radius, .. } => {
                *radius
            }
            PrimitiveShape::Cone {
                axis,
                apex,
                half_angle,
                extent,
                ..
            } => {
                let mid = axis.point_at(0.5 * (extent.0 + extent.1));
                (mid - apex).norm() * half_angle.tan()
            }
        }
    }

    /// The same primitive with camera x and y axes exchanged, undoing a
    /// transposed-frame detection.
    pub fn swapped_xy(&self) -> Primitive {
        let sp = |p: &Point3<f64>| Point3::new(p.y, p.x, p.z);
        let sv = |v: &Vector3<f64>| Vector3::new(v.y, v.x, v.z);
        let sl = |l: &Line3D| Line3D {
            anchor: sp(&l.anchor),
            direction: sv(&l.direction),
        };
        let shape = match &self.shape {
            PrimitiveShape::Cylinder {
                axis,
                radius,
                extent,
            } => PrimitiveShape::Cylinder {
                axis: sl(axis),
                radius: *radius,
                extent: *extent,
            },
            PrimitiveShape::Cone {
                axis,
                apex,
                half_angle,
                extent,
                apex_reliable,
            } => PrimitiveShape::Cone {
                axis: sl(axis),
                apex: sp(apex),
                half_angle: *half_angle,
                extent: *extent,
                apex_reliable: *apex_reliable,
            },
            PrimitiveShape::Sphere { center, radius } => PrimitiveShape::Sphere {
                center: sp(center),
                radius: *radius,
            },
        };
        Primitive { shape, ..*self }
    }
}

/// Weighted least-squares line r = slope * z + intercept, with the
/// weighted residual RMS. Weights are the member support counts: a
/// radius measured over a longer arc carries proportionally less
/// variance, and the short-arc rows near a sphere's poles or a cone's
/// tip would otherwise dominate the residual.
fn zr_line(points: &[(f64, f64)], weights: &[f64]) -> Option<(f64, f64, f64)> {
    let (mut sw, mut sz, mut sr, mut szz, mut szr) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&(z, r), &w) in points.iter().zip(weights) {
        sw += w;
        sz += w * z;
        sr += w * r;
        szz += w * z * z;
        szr += w * z * r;
    }
    let denom = sw * szz - sz * sz;
    if denom <= 1e-12 * (1.0 + sw * szz) {
        return None;
    }
    let slope = (sw * szr - sz * sr) / denom;
    let intercept = (sr - slope * sz) / sw;
    let mut sq = 0.0;
    for (&(z, r), &w) in points.iter().zip(weights) {
        let d = r - (slope * z + intercept);
        sq += w * d * d;
    }
    Some((slope, intercept, (sq / sw).sqrt()))
}

/// Weighted RMS of radial deviations from a circle.
fn circle_rms(points: &[(f64, f64)], weights: &[f64], c: &Circle2D) -> f64 {
    let (mut sw, mut sq) = (0.0, 0.0);
    for (&(z, r), &w) in points.iter().zip(weights) {
        let d = (z - c.center_x).hypot(r - c.center_y) - c.radius;
        sw += w;
        sq += w * d * d;
    }
    (sq / sw).sqrt()
}

/// Points farther than this many residual RMS units from the first
/// model are dropped once and the model refit. Single scan rows over
/// short arcs occasionally estimate a radius tens of percent off; one
/// clipping pass keeps such rows from steering the whole model.
const ZR_CLIP_FACTOR: f64 = 2.5;

/// Deviations below this are measurement dust, not outliers; clipping
/// is skipped so exact synthetic data is never thinned.
const ZR_CLIP_FLOOR: f64 = 1e-6;

fn zr_line_clipped(points: &[(f64, f64)], weights: &[f64]) -> Option<(f64, f64, f64)> {
    let (slope, intercept, rms) = zr_line(points, weights)?;
    if rms <= ZR_CLIP_FLOOR {
        return Some((slope, intercept, rms));
    }
    let (mut pts, mut w) = (Vec::new(), Vec::new());
    for (&(z, r), &wi) in points.iter().zip(weights) {
        if (r - (slope * z + intercept)).abs() <= ZR_CLIP_FACTOR * rms {
            pts.push((z, r));
            w.push(wi);
        }
    }
    if pts.len() < 3 || pts.len() * 2 < points.len() {
        return Some((slope, intercept, rms));
    }
    zr_line(&pts, &w).or(Some((slope, intercept, rms)))
}

fn zr_circle_clipped(points: &[(f64, f64)], weights: &[f64]) -> Option<(Circle2D, f64)> {
    let c = fit_circle_on_axis_weighted(points, weights).ok()?;
    let rms = circle_rms(points, weights, &c);
    if rms <= ZR_CLIP_FLOOR {
        return Some((c, rms));
    }
    let (mut pts, mut w) = (Vec::new(), Vec::new());
    for (&(z, r), &wi) in points.iter().zip(weights) {
        let d = ((z - c.center_x).hypot(r - c.center_y) - c.radius).abs();
        if d <= ZR_CLIP_FACTOR * rms {
            pts.push((z, r));
            w.push(wi);
        }
    }
    if pts.len() < 3 || pts.len() * 2 < points.len() {
        return Some((c, rms));
    }
    match fit_circle_on_axis_weighted(&pts, &w) {
        Ok(c2) => {
            let rms2 = circle_rms(&pts, &w, &c2);
            Some((c2, rms2))
        }
        Err(_) => Some((c, rms)),
    }
}

/// Cumulative arc length of the chain's centers along a fitted center
/// circle, anchored at the first member. `None` when a center projects
/// onto the circle's center.
fn arc_length_coordinates(chain: &EllipseChain, circle: &Circle3D) -> Option<Vec<f64>> {
    let n = circle.normal;
    let radial = |p: &Point3<f64>| -> Option<Vector3<f64>> {
        let q = p - circle.center;
        let q = q - n * q.dot(&n);
        let norm = q.norm();
        if norm < 1e-12 {
            None
        } else {
            Some(q / norm)
        }
    };
    let mut out = Vec::with_capacity(chain.len());
    let mut prev = radial(&chain.ellipses[0].center)?;
    let mut acc = 0.0;
    out.push(0.0);
    for e in &chain.ellipses[1..] {
        let cur = radial(&e.center)?;
        let sin = prev.cross(&cur).dot(&n);
        let cos = prev.dot(&cur);
        acc += sin.atan2(cos) * circle.radius;
        out.push(acc);
        prev = cur;
    }
    Some(out)
}

/// Point on the center circle at arc coordinate `s`, with the same
/// anchor as [`arc_length_coordinates`] (the first chain member).
fn center_circle_point(chain: &EllipseChain, circle: &Circle3D, s: f64) -> Option<Point3<f64>> {
    let n = circle.normal;
    let q = chain.ellipses[0].center - circle.center;
    let q = q - n * q.dot(&n);
    let norm = q.norm();
    if norm < 1e-12 || circle.radius < 1e-12 {
        return None;
    }
    let r0 = q / norm;
    let ang = s / circle.radius;
    let dir = r0 * ang.cos() + n.cross(&r0) * ang.sin();
    Some(circle.center + dir * circle.radius)
}

/// Classifies one chain. Returns `None` when neither a line nor a circle
/// explains the (z, r) points within tolerance. On success the chain's
/// `center_model` and `residual` are filled in.
pub fn classify(chain: &mut EllipseChain, cfg: &ClassifierConfig) -> Option<Primitive> {
    let (line3d, line3d_residual) = fit_center_line(chain).ok()?;
    let zr: Vec<(f64, f64)> = chain
        .ellipses
        .iter()
        .map(|e| (line3d.coordinate_of(&e.center), e.r1))
        .collect();
    let weights: Vec<f64> = chain.ellipses.iter().map(|e| e.support as f64).collect();

    let line = zr_line_clipped(&zr, &weights).filter(|&(_, _, res)| res <= cfg.zr_residual_tol);
    let circle = zr_circle_clipped(&zr, &weights).filter(|&(_, rms)| rms <= cfg.zr_residual_tol);

    let circle_wins = match (&line, &circle) {
        (Some((_, _, lr)), Some((_, cr))) => cr < lr,
        (None, Some(_)) => true,
        _ => false,
    };

    if circle_wins {
        let (c, rms) = circle.unwrap();
        let (mut radius, mut z0, mut rms) = (c.radius, c.center_x, rms);
        let mut zs: Vec<f64> = zr.iter().map(|&(z, _)| z).collect();
        let mut interpolated = None;
        match fit_center_circle(chain) {
            Ok((cc, ccr)) => {
                // Straight-line z compresses toward the ends of the
                // center arc (projection shortens chords by cos of the
                // pivot angle), biasing the radius low. Re-measure z as
                // arc length along the center circle and refit.
                if let Some(arc) = arc_length_coordinates(chain, &cc) {
                    let rezr: Vec<(f64, f64)> =
                        arc.iter().zip(&zr).map(|(&z, &(_, r))| (z, r)).collect();
                    if let Some((rc, rerms)) = zr_circle_clipped(&rezr, &weights) {
                        if rerms <= cfg.zr_residual_tol {
                            radius = rc.radius;
                            z0 = rc.center_x;
                            rms = rerms;
                            zs = arc;
                            // The equator cut (largest radius, at z0) is
                            // centered on the sphere center exactly.
                            interpolated = center_circle_point(chain, &cc, z0);
                        }
                    }
                }
                chain.center_model = Some(CenterModel::Circle(cc));
                chain.residual = ccr;
            }
            Err(_) => {
                chain.center_model = Some(CenterModel::Line(line3d));
                chain.residual = line3d_residual;
            }
        }
        let center = match interpolated {
            Some(p) => p,
            None => {
                // Fall back to the member ellipse center nearest z0.
                let nearest = zs
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| (*a - z0).abs().total_cmp(&(*b - z0).abs()))
                    .map(|(i, _)| i)?;
                chain.ellipses[nearest].center
            }
        };
        return Some(Primitive {
            shape: PrimitiveShape::Sphere { center, radius },
            support: chain.len(),
            residual: rms,
        });
    }

    let (slope, intercept, rms) = line?;
    chain.center_model = Some(CenterModel::Line(line3d));
    chain.residual = line3d_residual;
    let (mut z_min, mut z_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(z, _) in &zr {
        z_min = z_min.min(z);
        z_max = z_max.max(z);
    }
    let support = chain.len();

    if slope.abs() <= cfg.cylinder_slope_tol.tan() {
        let sw: f64 = weights.iter().sum();
        let radius = zr
            .iter()
            .zip(&weights)
            .map(|(&(_, r), &w)| w * r)
            .sum::<f64>()
            / sw;
        return Some(Primitive {
            shape: PrimitiveShape::Cylinder {
                axis: line3d,
                radius,
                extent: (z_min, z_max),
            },
            support,
            residual: rms,
        });
    }
    if slope.abs() > cfg.cone_slope_min.tan() {
        // The opening angle comes from the radius growth rate, where
        // the unadjusted radii are the better estimator: under noise
        // each row's direct fit shrinks by a near-constant offset,
        // which drops out of the slope, while the noise adjustment is
        // stronger on long arcs than short ones and would tilt the
        // line. The offset does shift the apex along the axis; the
        // extent and kind are unaffected.
        let zr_raw: Vec<(f64, f64)> = chain
            .ellipses
            .iter()
            .map(|e| (line3d.coordinate_of(&e.center), e.r1_raw))
            .collect();
        let (slope, intercept, rms) = zr_line_clipped(&zr_raw, &weights)
            .filter(|&(s, _, _)| s.abs() > cfg.cylinder_slope_tol.tan())
            .unwrap_or((slope, intercept, rms));
        let apex_z = -intercept / slope;
        let span = z_max - z_min;
        let beyond = if apex_z < z_min {
            z_min - apex_z
        } else if apex_z > z_max {
            apex_z - z_max
        } else {
            0.0
        };
        return Some(Primitive {
            shape: PrimitiveShape::Cone {
                axis: line3d,
                apex: line3d.point_at(apex_z),
                half_angle: slope.abs().atan(),
                extent: (z_min, z_max),
                apex_reliable: beyond <= 3.0 * span,
            },
            support,
            residual: rms,
        });
    }
    None
}

/// Everything the frame pipeline needs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineConfig {
    pub segmenter: SegmenterConfig,
    pub chain: ChainConfig,
    pub classifier: ClassifierConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.segmenter.validate()?;
        self.chain.validate()?;
        self.classifier.validate()
    }
}

/// Wall-clock cost of each pipeline stage, microseconds.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTiming {
    /// Row projection plus ellipse extraction.
    pub extract_us: u64,
    pub chain_us: u64,
    pub classify_us: u64,
}

impl StageTiming {
    pub fn total_us(&self) -> u64 {
        self.extract_us + self.chain_us + self.classify_us
    }
}

/// Full pipeline over one frame: project each row, extract ellipses,
/// link chains, classify. Rows are processed in parallel; output order
/// follows chain discovery order (top row first).
pub fn detect_frame(frame: &DepthFrame, cfg: &PipelineConfig) -> Vec<Primitive> {
    detect_frame_timed(frame, cfg).0
}

pub fn detect_frame_timed(frame: &DepthFrame, cfg: &PipelineConfig) -> (Vec<Primitive>, StageTiming) {
    let mut timing = StageTiming::default();
    let start = Instant::now();
    let per_row: Vec<Vec<Ellipse>> = (0..frame.intrinsics.height)
        .into_par_iter()
        .map(|row| {
            let pts = project_row(frame, row);
            extract_ellipses(&pts, row, &frame.intrinsics, &cfg.segmenter)
        })
        .collect();
    let ellipses = prefilter(per_row.into_iter().flatten().collect(), &cfg.segmenter);
    timing.extract_us = start.elapsed().as_micros() as u64;

    let start = Instant::now();
    let chains = build_components(&ellipses, &cfg.chain);
    timing.chain_us = start.elapsed().as_micros() as u64;

    let start = Instant::now();
    let primitives = chains
        .into_iter()
        .filter_map(|mut c| classify(&mut c, &cfg.classifier))
        .collect();
    timing.classify_us = start.elapsed().as_micros() as u64;
    (primitives, timing)
}
