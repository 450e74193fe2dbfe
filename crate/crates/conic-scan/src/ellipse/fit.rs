//! Direct least-squares ellipse fit on accumulated power sums.
//!
//! This is the ellipse-specific fit of Fitzgibbon's constrained problem
//! in the numerically stable split form: the 6x6 generalized
//! eigenproblem is reduced to a 3x3 one by block elimination, and the
//! ellipse constraint `4ac - b^2 > 0` picks the eigenvector. The whole
//! solve touches nothing but the 3x3 scatter blocks, so with the
//! accumulator it runs in constant time per call regardless of segment
//! length. The eigensolver is hand rolled: the matrices are tiny, the
//! call sits in the innermost loop of the segmenter, and a general
//! purpose decomposition would dominate the per-point budget.

use super::accumulator::ScatterAccumulator;
use super::conic::ConicCoefficients;
use crate::error::{Error, Result};

/// Fewest points that pin down a conic.
pub const MIN_FIT_POINTS: usize = 5;

impl ScatterAccumulator {
    /// Fits an ellipse to the accumulated points.
    ///
    /// Returns `DegenerateFit` when the points do not determine an
    /// ellipse: fewer than [`MIN_FIT_POINTS`] raises `TooFewPoints`,
    /// collinear or coincident configurations make the scatter blocks
    /// singular, and data that is best explained by a hyperbola or
    /// parabola leaves no eigenvector satisfying the constraint.
    pub fn fit(&self) -> Result<ConicCoefficients> {
        if self.len() < MIN_FIT_POINTS {
            return Err(Error::TooFewPoints {
                needed: MIN_FIT_POINTS,
                got: self.len(),
            });
        }
        let (s1, s2, s3) = self.scatter();

        // T = -S3^-1 S2^T, column by column. Column `col` of S2^T is row
        // `col` of S2; the two differ because S2 is not symmetric.
        let lu = Lu3::factor(&s3).ok_or(Error::DegenerateFit)?;
        let mut t = [[0.0; 3]; 3];
        for col in 0..3 {
            let rhs = [-s2[col][0], -s2[col][1], -s2[col][2]];
            let x = lu.solve(&rhs);
            for row in 0..3 {
                t[row][col] = x[row];
            }
        }

        // Reduced matrix M = C1^-1 (S1 + S2 T) where C1^-1 reorders and
        // scales rows: [row2/2, -row1, row0/2].
        let mut m0 = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = s1[i][j];
                for k in 0..3 {
                    acc += s2[i][k] * t[k][j];
                }
                m0[i][j] = acc;
            }
        }
        let m = [
            [0.5 * m0[2][0], 0.5 * m0[2][1], 0.5 * m0[2][2]],
            [-m0[1][0], -m0[1][1], -m0[1][2]],
            [0.5 * m0[0][0], 0.5 * m0[0][1], 0.5 * m0[0][2]],
        ];

        let a1 = constrained_eigenvector(&m).ok_or(Error::DegenerateFit)?;
        let a2 = [
            t[0][0] * a1[0] + t[0][1] * a1[1] + t[0][2] * a1[2],
            t[1][0] * a1[0] + t[1][1] * a1[1] + t[1][2] * a1[2],
            t[2][0] * a1[0] + t[2][1] * a1[1] + t[2][2] * a1[2],
        ];

        let (ox, oy) = self.offset();
        Ok(denormalize(
            ConicCoefficients {
                a: a1[0],
                b: a1[1],
                c: a1[2],
                d: a2[0],
                e: a2[1],
                f: a2[2],
            },
            ox,
            oy,
        )
        .positive_definite())
    }
}

/// Rewrites a conic fitted in offset coordinates `(x - ox, y - oy)` as a
/// conic in the original coordinates.
fn denormalize(q: ConicCoefficients, ox: f64, oy: f64) -> ConicCoefficients {
    ConicCoefficients {
        a: q.a,
        b: q.b,
        c: q.c,
        d: q.d - 2.0 * q.a * ox - q.b * oy,
        e: q.e - q.b * ox - 2.0 * q.c * oy,
        f: q.f + q.a * ox * ox + q.b * ox * oy + q.c * oy * oy - q.d * ox - q.e * oy,
    }
}

/// LU factorization with partial pivoting of a 3x3 matrix.
pub(crate) struct Lu3 {
    lu: [[f64; 3]; 3],
    perm: [usize; 3],
}

impl Lu3 {
    pub(crate) fn factor(m: &[[f64; 3]; 3]) -> Option<Self> {
        let mut lu = *m;
        let mut perm = [0usize, 1, 2];
        let scale = m
            .iter()
            .flatten()
            .fold(0.0f64, |s, &v| s.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for col in 0..3 {
            let mut pivot_row = col;
            for row in col + 1..3 {
                if lu[row][col].abs() > lu[pivot_row][col].abs() {
                    pivot_row = row;
                }
            }
            if lu[pivot_row][col].abs() < 1e-13 * scale {
                return None;
            }
            if pivot_row != col {
                lu.swap(col, pivot_row);
                perm.swap(col, pivot_row);
            }
            for row in col + 1..3 {
                let factor = lu[row][col] / lu[col][col];
                lu[row][col] = factor;
                for k in col + 1..3 {
                    lu[row][k] -= factor * lu[col][k];
                }
            }
        }
        Some(Self { lu, perm })
    }

    pub(crate) fn solve(&self, b: &[f64; 3]) -> [f64; 3] {
        let mut y = [b[self.perm[0]], b[self.perm[1]], b[self.perm[2]]];
        y[1] -= self.lu[1][0] * y[0];
        y[2] -= self.lu[2][0] * y[0] + self.lu[2][1] * y[1];
        let mut x = [0.0; 3];
        x[2] = y[2] / self.lu[2][2];
        x[1] = (y[1] - self.lu[1][2] * x[2]) / self.lu[1][1];
        x[0] = (y[0] - self.lu[0][1] * x[1] - self.lu[0][2] * x[2]) / self.lu[0][0];
        x
    }
}

/// Real roots of `t^3 + c2 t^2 + c1 t + c0`, appended to `out`.
fn cubic_roots(c2: f64, c1: f64, c0: f64, out: &mut [f64; 3]) -> usize {
    // Depressed form t = s - c2/3: s^3 + p s + q.
    let shift = -c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = (2.0 * c2 * c2 * c2 - 9.0 * c2 * c1) / 27.0 + c0;
    let half_q = 0.5 * q;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;

    let count = if disc > 0.0 {
        // One real root via Cardano.
        let root = disc.sqrt();
        let u = (-half_q + root).cbrt();
        let v = (-half_q - root).cbrt();
        out[0] = u + v + shift;
        1
    } else if third_p.abs() < f64::EPSILON {
        // Triple root.
        out[0] = shift;
        1
    } else {
        // Three real roots via the trigonometric form.
        let rho = (-third_p).sqrt();
        let cos_arg = (-half_q / (rho * rho * rho)).clamp(-1.0, 1.0);
        let phi = cos_arg.acos() / 3.0;
        for (k, slot) in out.iter_mut().enumerate() {
            let angle = phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            *slot = 2.0 * rho * angle.cos() + shift;
        }
        3
    };

    // A couple of Newton steps take the trig/cbrt roots to full
    // precision.
    for root in out.iter_mut().take(count) {
        for _ in 0..2 {
            let val = ((*root + c2) * *root + c1) * *root + c0;
            let deriv = (3.0 * *root + 2.0 * c2) * *root + c1;
            if deriv.abs() > f64::EPSILON {
                *root -= val / deriv;
            }
        }
    }
    count
}

/// Finds the eigenvector of `m` whose components satisfy the ellipse
/// constraint `4 v0 v2 - v1^2 > 0`. Exactly one eigenvector of the
/// reduced matrix can satisfy it; returns `None` when none does.
fn constrained_eigenvector(m: &[[f64; 3]; 3]) -> Option<[f64; 3]> {
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |s, &v| s.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let inv = 1.0 / scale;
    let ms = [
        [m[0][0] * inv, m[0][1] * inv, m[0][2] * inv],
        [m[1][0] * inv, m[1][1] * inv, m[1][2] * inv],
        [m[2][0] * inv, m[2][1] * inv, m[2][2] * inv],
    ];

    let tr = ms[0][0] + ms[1][1] + ms[2][2];
    let minors = ms[0][0] * ms[1][1] - ms[0][1] * ms[1][0]
        + ms[0][0] * ms[2][2]
        - ms[0][2] * ms[2][0]
        + ms[1][1] * ms[2][2]
        - ms[1][2] * ms[2][1];
    let det = ms[0][0] * (ms[1][1] * ms[2][2] - ms[1][2] * ms[2][1])
        - ms[0][1] * (ms[1][0] * ms[2][2] - ms[1][2] * ms[2][0])
        + ms[0][2] * (ms[1][0] * ms[2][1] - ms[1][1] * ms[2][0]);

    let mut roots = [0.0; 3];
    let count = cubic_roots(-tr, minors, -det, &mut roots);

    let mut best: Option<([f64; 3], f64)> = None;
    for &lam in roots.iter().take(count) {
        let Some(v) = null_vector(&ms, lam) else {
            continue;
        };
        let constraint = 4.0 * v[0] * v[2] - v[1] * v[1];
        if constraint <= 0.0 {
            continue;
        }
        // Defect of the eigen equation, to rank candidates when rounding
        // lets more than one vector pass the constraint.
        let mut defect = 0.0;
        for row in 0..3 {
            let r = ms[row][0] * v[0] + ms[row][1] * v[1] + ms[row][2] * v[2] - lam * v[row];
            defect += r * r;
        }
        if best.as_ref().is_none_or(|(_, d)| defect < *d) {
            best = Some((v, defect));
        }
    }
    best.map(|(v, _)| v)
}

/// Unit vector spanning the (numerical) null space of `m - lam I`.
fn null_vector(m: &[[f64; 3]; 3], lam: f64) -> Option<[f64; 3]> {
    let a = [
        [m[0][0] - lam, m[0][1], m[0][2]],
        [m[1][0], m[1][1] - lam, m[1][2]],
        [m[2][0], m[2][1], m[2][2] - lam],
    ];
    // Cross products of row pairs are orthogonal to both rows; the
    // largest one is the best conditioned basis for the null space.
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut best = [0.0; 3];
    let mut best_norm2 = 0.0;
    for (i, j) in pairs {
        let v = [
            a[i][1] * a[j][2] - a[i][2] * a[j][1],
            a[i][2] * a[j][0] - a[i][0] * a[j][2],
            a[i][0] * a[j][1] - a[i][1] * a[j][0],
        ];
        let norm2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if norm2 > best_norm2 {
            best_norm2 = norm2;
            best = v;
        }
    }
    if best_norm2 <= f64::MIN_POSITIVE {
        // Rank-deficient beyond a simple eigenvalue; any vector
        // orthogonal to the largest row spans part of the eigenspace.
        let row = a
            .iter()
            .max_by(|p, q| {
                let np: f64 = p.iter().map(|x| x * x).sum();
                let nq: f64 = q.iter().map(|x| x * x).sum();
                np.total_cmp(&nq)
            })
            .unwrap();
        let norm2: f64 = row.iter().map(|x| x * x).sum();
        if norm2 <= f64::MIN_POSITIVE {
            return None;
        }
        // Cross with the axis least aligned with the row.
        let axis = if row[0].abs() <= row[1].abs() && row[0].abs() <= row[2].abs() {
            [1.0, 0.0, 0.0]
        } else if row[1].abs() <= row[2].abs() {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        best = [
            row[1] * axis[2] - row[2] * axis[1],
            row[2] * axis[0] - row[0] * axis[2],
            row[0] * axis[1] - row[1] * axis[0],
        ];
        best_norm2 = best.iter().map(|x| x * x).sum();
        if best_norm2 <= f64::MIN_POSITIVE {
            return None;
        }
    }
    let inv = best_norm2.sqrt().recip();
    Some([best[0] * inv, best[1] * inv, best[2] * inv])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ellipse::GeometricEllipse2D;
    use approx::assert_relative_eq;

    fn fit_points(points: &[(f64, f64)]) -> Result<ConicCoefficients> {
        let mut acc = ScatterAccumulator::new();
        for &(x, y) in points {
            acc.add(x, y);
        }
        acc.fit()
    }

    #[test]
    fn cubic_three_known_roots() {
        // (t - 1)(t - 2)(t - 4) = t^3 - 7t^2 + 14t - 8.
        let mut roots = [0.0; 3];
        let n = cubic_roots(-7.0, 14.0, -8.0, &mut roots);
        assert_eq!(n, 3);
        roots.sort_by(f64::total_cmp);
        assert_relative_eq!(roots[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(roots[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(roots[2], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn cubic_single_real_root() {
        // (t - 3)(t^2 + 1) = t^3 - 3t^2 + t - 3.
        let mut roots = [0.0; 3];
        let n = cubic_roots(-3.0, 1.0, -3.0, &mut roots);
        assert_eq!(n, 1);
        assert_relative_eq!(roots[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn cubic_triple_root() {
        // (t + 2)^3 = t^3 + 6t^2 + 12t + 8.
        let mut roots = [0.0; 3];
        let n = cubic_roots(6.0, 12.0, 8.0, &mut roots);
        assert_eq!(n, 1);
        assert_relative_eq!(roots[0], -2.0, epsilon = 1e-9);
    }

    #[test]
    fn recovers_exact_circle() {
        // Six exact points on a circle of radius 0.75 at (2, -1): the
        // fit must return that circle to near machine precision.
        let truth = GeometricEllipse2D {
            center_x: 2.0,
            center_y: -1.0,
            semi_major: 0.75,
            semi_minor: 0.75,
            theta: 0.0,
        };
        let conic = fit_points(&truth.sample_points(6)).unwrap();
        let got = conic.to_geometric().unwrap();
        assert_relative_eq!(got.center_x, 2.0, epsilon = 1e-9);
        assert_relative_eq!(got.center_y, -1.0, epsilon = 1e-9);
        assert_relative_eq!(got.semi_major, 0.75, epsilon = 1e-9);
        assert_relative_eq!(got.semi_minor, 0.75, epsilon = 1e-9);
    }

    #[test]
    fn unit_circle_conic_is_proportional_to_canonical_form() {
        let truth = GeometricEllipse2D {
            center_x: 0.0,
            center_y: 0.0,
            semi_major: 1.0,
            semi_minor: 1.0,
            theta: 0.0,
        };
        let conic = fit_points(&truth.sample_points(8)).unwrap();
        // Scale so a = 1 and compare with x^2 + y^2 - 1.
        let s = 1.0 / conic.a;
        assert_relative_eq!(conic.a * s, 1.0, epsilon = 1e-9);
        assert_relative_eq!(conic.b * s, 0.0, epsilon = 1e-9);
        assert_relative_eq!(conic.c * s, 1.0, epsilon = 1e-9);
        assert_relative_eq!(conic.d * s, 0.0, epsilon = 1e-9);
        assert_relative_eq!(conic.e * s, 0.0, epsilon = 1e-9);
        assert_relative_eq!(conic.f * s, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn recovers_wide_axis_aligned_ellipse() {
        let truth = GeometricEllipse2D {
            center_x: 0.0,
            center_y: 0.0,
            semi_major: 40.0,
            semi_minor: 20.0,
            theta: 0.0,
        };
        let got = fit_points(&truth.sample_points(12))
            .unwrap()
            .to_geometric()
            .unwrap();
        assert_relative_eq!(got.semi_major, 40.0, max_relative = 1e-6);
        assert_relative_eq!(got.semi_minor, 20.0, max_relative = 1e-6);
    }

    #[test]
    fn recovers_exact_rotated_ellipse() {
        let truth = GeometricEllipse2D {
            center_x: -0.3,
            center_y: 1.7,
            semi_major: 1.2,
            semi_minor: 0.4,
            theta: 0.9,
        };
        let conic = fit_points(&truth.sample_points(12)).unwrap();
        let got = conic.to_geometric().unwrap();
        assert_relative_eq!(got.center_x, truth.center_x, epsilon = 1e-9);
        assert_relative_eq!(got.center_y, truth.center_y, epsilon = 1e-9);
        assert_relative_eq!(got.semi_major, truth.semi_major, epsilon = 1e-9);
        assert_relative_eq!(got.semi_minor, truth.semi_minor, epsilon = 1e-9);
        assert_relative_eq!(got.theta, truth.theta, epsilon = 1e-9);
    }

    #[test]
    fn fit_is_invariant_to_large_offsets() {
        // Same ellipse far from the origin; offset normalization keeps
        // the quartic sums from destroying the fit.
        let truth = GeometricEllipse2D {
            center_x: 500.0,
            center_y: -300.0,
            semi_major: 0.05,
            semi_minor: 0.03,
            theta: 0.4,
        };
        let conic = fit_points(&truth.sample_points(16)).unwrap();
        let got = conic.to_geometric().unwrap();
        assert_relative_eq!(got.center_x, truth.center_x, epsilon = 1e-6);
        assert_relative_eq!(got.center_y, truth.center_y, epsilon = 1e-6);
        assert_relative_eq!(got.semi_major, truth.semi_major, epsilon = 1e-7);
        assert_relative_eq!(got.semi_minor, truth.semi_minor, epsilon = 1e-7);
    }

    #[test]
    fn rejects_too_few_points() {
        let err = fit_points(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]).unwrap_err();
        assert!(matches!(
            err,
            Error::TooFewPoints { needed: 5, got: 4 }
        ));
    }

    #[test]
    fn rejects_collinear_points() {
        let points: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 0.1, 2.0)).collect();
        assert!(matches!(
            fit_points(&points),
            Err(Error::DegenerateFit)
        ));
    }

    #[test]
    fn rejects_coincident_points() {
        let points = vec![(1.0, 1.0); 8];
        assert!(matches!(
            fit_points(&points),
            Err(Error::DegenerateFit)
        ));
    }

    #[test]
    fn incremental_refit_tracks_batch_fit() {
        // Add noisy arc points one at a time, remove two, and compare
        // the final fit against a fresh accumulator over the same set.
        let truth = GeometricEllipse2D {
            center_x: 0.1,
            center_y: 2.5,
            semi_major: 0.4,
            semi_minor: 0.25,
            theta: 1.3,
        };
        let mut points = truth.sample_points(24);
        let extra = truth.point_at(0.05);
        points.push(extra);
        points.push(truth.point_at(1.9));

        let mut acc = ScatterAccumulator::new();
        for &(x, y) in &points {
            acc.add(x, y);
        }
        let removed = points.split_off(points.len() - 2);
        for &(x, y) in removed.iter().rev() {
            acc.remove(x, y).unwrap();
        }
        let inc = acc.fit().unwrap();
        let batch = fit_points(&points).unwrap();
        let gi = inc.to_geometric().unwrap();
        let gb = batch.to_geometric().unwrap();
        assert_relative_eq!(gi.center_x, gb.center_x, epsilon = 1e-9);
        assert_relative_eq!(gi.center_y, gb.center_y, epsilon = 1e-9);
        assert_relative_eq!(gi.semi_major, gb.semi_major, epsilon = 1e-9);
        assert_relative_eq!(gi.semi_minor, gb.semi_minor, epsilon = 1e-9);
    }
}
