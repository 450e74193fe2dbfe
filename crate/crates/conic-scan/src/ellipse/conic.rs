//! Conic and geometric ellipse representations.

use crate::error::{Error, Result};

/// Implicit conic `a x^2 + b xy + c y^2 + d x + e y + f = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

/// Center-angle form of an ellipse. `theta` is the direction of the major
/// axis in radians, normalized to `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricEllipse2D {
    pub center_x: f64,
    pub center_y: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub theta: f64,
}

impl ConicCoefficients {
    /// True when the quadratic part has an elliptical discriminant,
    /// `b^2 - 4ac < 0`.
    pub fn is_ellipse(&self) -> bool {
        self.b * self.b - 4.0 * self.a * self.c < 0.0
    }

    /// Evaluates the implicit polynomial at a point.
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        (self.a * x + self.b * y + self.d) * x + (self.c * y + self.e) * y + self.f
    }

    /// Gradient of the implicit polynomial.
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        (
            2.0 * self.a * x + self.b * y + self.d,
            self.b * x + 2.0 * self.c * y + self.e,
        )
    }

    /// Flips the overall sign so the quadratic part is positive definite
    /// (`a + c > 0`). All coefficient vectors are equivalent up to scale,
    /// so this is a pure normalization; it makes `evaluate` negative
    /// inside the ellipse and positive outside, which the distance
    /// routine relies on.
    pub fn positive_definite(mut self) -> Self {
        if self.a + self.c < 0.0 {
            self.a = -self.a;
            self.b = -self.b;
            self.c = -self.c;
            self.d = -self.d;
            self.e = -self.e;
            self.f = -self.f;
        }
        self
    }

    /// Approximate Euclidean distance from a point to the conic.
    ///
    /// Walks along the gradient direction and solves the exact quadratic
    /// restriction of the conic to that line, taking the intersection
    /// closer to the query point. For circles this is the exact radial
    /// distance; for moderately eccentric ellipses the error is second
    /// order in the distance, which is far tighter than the plain
    /// algebraic residual for the near-threshold decisions the segmenter
    /// makes. Points deep inside the far field, where the gradient line
    /// misses the conic entirely, get a conservative overestimate.
    pub fn point_distance(&self, x: f64, y: f64) -> f64 {
        let q = self.positive_definite();
        let value = q.evaluate(x, y);
        let (gx, gy) = q.gradient(x, y);
        let grad_norm = (gx * gx + gy * gy).sqrt();
        if grad_norm < f64::EPSILON {
            // Query sits at the center; fall back to the pure quadratic.
            let curv = 0.5 * (q.a + q.c);
            if curv <= 0.0 {
                return f64::INFINITY;
            }
            return (value.abs() / curv).sqrt();
        }
        let nx = gx / grad_norm;
        let ny = gy / grad_norm;
        // Restriction along the gradient line: alpha t^2 + beta t + value.
        let alpha = q.a * nx * nx + q.b * nx * ny + q.c * ny * ny;
        let beta = grad_norm;
        let disc = beta * beta - 4.0 * alpha * value;
        if disc >= 0.0 {
            // Root of smaller magnitude, in a cancellation-free form.
            (2.0 * value / (beta + disc.sqrt())).abs()
        } else {
            // No crossing along this line. Distance to the vertex of the
            // parabola plus the climb a pure quadratic would need to
            // cover the remaining gap.
            (beta + (-disc).sqrt()) / (2.0 * alpha.max(f64::EPSILON))
        }
    }

    /// Converts to center-angle form.
    ///
    /// Fails when the coefficients do not describe a real ellipse
    /// (hyperbolic or parabolic discriminant, or an imaginary locus).
    pub fn to_geometric(&self) -> Result<GeometricEllipse2D> {
        let q = self.positive_definite();
        if !q.is_ellipse() {
            return Err(Error::NotAnEllipse);
        }
        // Center from grad Q = 0.
        let det = 4.0 * q.a * q.c - q.b * q.b;
        let cx = (q.b * q.e - 2.0 * q.c * q.d) / det;
        let cy = (q.b * q.d - 2.0 * q.a * q.e) / det;
        // Constant term after recentering; must be negative for a real locus.
        let f0 = q.evaluate(cx, cy);
        if f0 >= 0.0 {
            return Err(Error::NotAnEllipse);
        }
        // Eigendecomposition of [[a, b/2], [b/2, c]].
        let b2 = 0.5 * q.b;
        let mean = 0.5 * (q.a + q.c);
        let spread = (0.25 * (q.a - q.c) * (q.a - q.c) + b2 * b2).sqrt();
        let lam_max = mean + spread;
        let lam_min = mean - spread;
        if lam_min <= 0.0 {
            return Err(Error::NotAnEllipse);
        }
        let semi_major = (-f0 / lam_min).sqrt();
        let semi_minor = (-f0 / lam_max).sqrt();
        // Major axis is the eigenvector of the smaller eigenvalue.
        let theta = if spread < f64::EPSILON * mean {
            0.0
        } else {
            // Two algebraic forms of the eigenvector; take the better
            // conditioned one.
            let v1 = (b2, lam_min - q.a);
            let v2 = (lam_min - q.c, b2);
            let pick = if v1.0 * v1.0 + v1.1 * v1.1 >= v2.0 * v2.0 + v2.1 * v2.1 {
                v1
            } else {
                v2
            };
            let mut t = pick.1.atan2(pick.0);
            if t < 0.0 {
                t += std::f64::consts::PI;
            }
            if t >= std::f64::consts::PI {
                t -= std::f64::consts::PI;
            }
            t
        };
        Ok(GeometricEllipse2D {
            center_x: cx,
            center_y: cy,
            semi_major,
            semi_minor,
            theta,
        })
    }
}

impl GeometricEllipse2D {
    /// Point on the ellipse at parametric angle `t`.
    pub fn point_at(&self, t: f64) -> (f64, f64) {
        let (st, ct) = self.theta.sin_cos();
        let px = self.semi_major * t.cos();
        let py = self.semi_minor * t.sin();
        (
            self.center_x + ct * px - st * py,
            self.center_y + st * px + ct * py,
        )
    }

    /// `n` points evenly spaced in parametric angle.
    pub fn sample_points(&self, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| self.point_at(2.0 * std::f64::consts::PI * i as f64 / n as f64))
            .collect()
    }

    /// Ratio of minor to major semi-axis, in `(0, 1]` for a valid ellipse.
    pub fn axis_ratio(&self) -> f64 {
        self.semi_minor / self.semi_major
    }

    /// Implicit form with the quadratic part positive definite.
    pub fn to_conic(&self) -> ConicCoefficients {
        let (st, ct) = self.theta.sin_cos();
        let ia = 1.0 / (self.semi_major * self.semi_major);
        let ib = 1.0 / (self.semi_minor * self.semi_minor);
        let a = ct * ct * ia + st * st * ib;
        let b = 2.0 * ct * st * (ia - ib);
        let c = st * st * ia + ct * ct * ib;
        let d = -(2.0 * a * self.center_x + b * self.center_y);
        let e = -(b * self.center_x + 2.0 * c * self.center_y);
        let f = a * self.center_x * self.center_x
            + b * self.center_x * self.center_y
            + c * self.center_y * self.center_y
            - 1.0;
        ConicCoefficients { a, b, c, d, e, f }
    }

    /// Approximate Euclidean distance from a point to the ellipse
    /// boundary. See [`ConicCoefficients::point_distance`].
    pub fn point_error(&self, x: f64, y: f64) -> f64 {
        self.to_conic().point_distance(x, y)
    }
}
