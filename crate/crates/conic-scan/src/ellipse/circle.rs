//! Algebraic circle fit.

use super::fit::Lu3;
use crate::error::{Error, Result};

/// Circle in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle2D {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
}

impl Circle2D {
    /// Exact unsigned distance from a point to the circle boundary.
    pub fn point_distance(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center_x;
        let dy = y - self.center_y;
        ((dx * dx + dy * dy).sqrt() - self.radius).abs()
    }

    /// Mean boundary distance over a point set.
    pub fn mean_distance(&self, points: &[(f64, f64)]) -> f64 {
        if points.is_empty() {
            return 0.0;
        }
        points
            .iter()
            .map(|&(x, y)| self.point_distance(x, y))
            .sum::<f64>()
            / points.len() as f64
    }
}

/// Least-squares circle through a point set (Kasa's algebraic fit).
///
/// Minimizes the algebraic residual of `x^2 + y^2 + Dx + Ey + F`, which
/// is linear in the unknowns and exact for noise-free circular data.
/// Needs at least three points; collinear input has no finite circle and
/// returns `DegenerateFit`.
pub fn fit_circle(points: &[(f64, f64)]) -> Result<Circle2D> {
    fit_circle_with(points, |_| 1.0)
}

/// Weighted [`fit_circle`]. `weight(i)` scales the i-th point's vote;
/// weights must be positive. Observations averaged from longer arcs
/// carry several times less variance and deserve more pull.
pub fn fit_circle_weighted(points: &[(f64, f64)], weights: &[f64]) -> Result<Circle2D> {
    debug_assert_eq!(points.len(), weights.len());
    fit_circle_with(points, |i| weights[i])
}

fn fit_circle_with(points: &[(f64, f64)], weight: impl Fn(usize) -> f64) -> Result<Circle2D> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    // Center on the centroid to keep the normal equations conditioned.
    let mut sw = 0.0;
    let (mut mx, mut my) = (0.0, 0.0);
    for (i, &(x, y)) in points.iter().enumerate() {
        let w = weight(i);
        sw += w;
        mx += w * x;
        my += w * y;
    }
    if sw <= 0.0 {
        return Err(Error::DegenerateFit);
    }
    let (mx, my) = (mx / sw, my / sw);

    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut rx = 0.0;
    let mut ry = 0.0;
    let mut rc = 0.0;
    for (i, &(px, py)) in points.iter().enumerate() {
        let w = weight(i);
        let x = px - mx;
        let y = py - my;
        let z = x * x + y * y;
        sxx += w * x * x;
        sxy += w * x * y;
        syy += w * y * y;
        sx += w * x;
        sy += w * y;
        rx += w * z * x;
        ry += w * z * y;
        rc += w * z;
    }
    let m = [[sxx, sxy, sx], [sxy, syy, sy], [sx, sy, sw]];
    let lu = Lu3::factor(&m).ok_or(Error::DegenerateFit)?;
    let [d, e, f] = lu.solve(&[-rx, -ry, -rc]);

    let cx = -0.5 * d;
    let cy = -0.5 * e;
    let r2 = cx * cx + cy * cy - f;
    if r2 <= 0.0 || !r2.is_finite() {
        return Err(Error::DegenerateFit);
    }
    Ok(Circle2D {
        center_x: cx + mx,
        center_y: cy + my,
        radius: r2.sqrt(),
    })
}

/// Weighted circle fit with the center constrained to the x axis.
///
/// Substituting `center_y = 0` into the algebraic residual leaves
/// `x^2 + y^2 = 2*cx*x + (r^2 - cx^2)`, a straight line in `x`, so the
/// fit is a weighted linear regression. Useful when the model demands
/// an on-axis center: the unconstrained fit happily drifts the center
/// off axis to absorb structured errors, paying for it with a badly
/// biased radius. Needs at least two distinct x values.
pub fn fit_circle_on_axis_weighted(points: &[(f64, f64)], weights: &[f64]) -> Result<Circle2D> {
    debug_assert_eq!(points.len(), weights.len());
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let mut sw = 0.0;
    let mut mx = 0.0;
    for (&(x, _), &w) in points.iter().zip(weights) {
        sw += w;
        mx += w * x;
    }
    if sw <= 0.0 {
        return Err(Error::DegenerateFit);
    }
    let mx = mx / sw;

    let (mut sxx, mut sxu, mut su) = (0.0, 0.0, 0.0);
    for (&(px, y), &w) in points.iter().zip(weights) {
        let x = px - mx;
        let u = x * x + y * y;
        sxx += w * x * x;
        sxu += w * x * u;
        su += w * u;
    }
    if sxx <= 1e-12 * (1.0 + su) {
        return Err(Error::DegenerateFit);
    }
    // Centering makes the weighted mean of x zero, so the regression
    // intercept is just the weighted mean of u, giving r^2 - cx^2.
    let cx = 0.5 * sxu / sxx;
    let r2 = su / sw + cx * cx;
    if r2 <= 0.0 || !r2.is_finite() {
        return Err(Error::DegenerateFit);
    }
    Ok(Circle2D {
        center_x: cx + mx,
        center_y: 0.0,
        radius: r2.sqrt(),
    })
}
