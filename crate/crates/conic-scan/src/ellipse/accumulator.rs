//! Running power sums for incremental conic fitting.
//!
//! The direct least-squares ellipse fit only needs the scatter matrices
//! `S1 = D1'D1`, `S2 = D1'D2` and `S3 = D2'D2` of the design matrices
//! `D1 = [x^2 xy y^2]` and `D2 = [x y 1]`. Every entry of those matrices
//! is a power sum `sum(x^p * y^q)` with `p + q <= 4`, so instead of
//! keeping the points around we maintain the fourteen distinct sums plus
//! the point count. Adding or removing a point is O(1), which is what
//! makes the per-row segmenter cheap: growing a segment by one sample
//! never refits from scratch.
//!
//! Coordinates are stored relative to an offset (the first point pushed)
//! to keep the quartic sums well conditioned; the fit undoes the shift
//! when it reports conic coefficients.

use crate::error::{Error, Result};

/// Incremental accumulator of the power sums needed by the ellipse fit.
#[derive(Debug, Clone, Default)]
pub struct ScatterAccumulator {
    n: usize,
    ox: f64,
    oy: f64,
    explicit_offset: bool,
    // Power sums of offset coordinates, named s_{x^p y^q}. `sw` is the
    // zeroth sum (total weight), equal to `n` unless weighted adds were
    // used.
    sw: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
    sxxx: f64,
    sxxy: f64,
    sxyy: f64,
    syyy: f64,
    sxxxx: f64,
    sxxxy: f64,
    sxxyy: f64,
    sxyyy: f64,
    syyyy: f64,
}

impl ScatterAccumulator {
    /// Empty accumulator whose offset will snap to the first added
    /// point.
    pub fn new() -> Self {
        Self::default()
    }

    /// Empty accumulator with a fixed normalization offset.
    pub fn with_offset(ox: f64, oy: f64) -> Self {
        Self {
            ox,
            oy,
            explicit_offset: true,
            ..Self::default()
        }
    }

    /// Number of points currently accumulated.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Offset subtracted from incoming points, fixed by the first `add`.
    pub fn offset(&self) -> (f64, f64) {
        (self.ox, self.oy)
    }

    /// Adds a point to every running sum.
    pub fn add(&mut self, x: f64, y: f64) {
        self.add_weighted(x, y, 1.0);
    }

    /// Adds a point with a nonnegative weight, for reweighted refits.
    /// Weights scale the sums but not the point count.
    pub fn add_weighted(&mut self, x: f64, y: f64, w: f64) {
        if self.n == 0 && !self.explicit_offset {
            self.ox = x;
            self.oy = y;
        }
        self.apply(x, y, w);
        self.n += 1;
    }

    /// Removes a previously added point from every running sum.
    ///
    /// The caller must pass coordinates of a point that is actually in the
    /// accumulator; the sums go inconsistent otherwise. Removing the last
    /// point resets the offset for the next segment.
    pub fn remove(&mut self, x: f64, y: f64) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyAccumulator);
        }
        self.apply(x, y, -1.0);
        self.n -= 1;
        if self.n == 0 {
            // Return to the exact initialized state so the next segment
            // starts from clean sums, not from rounding residue.
            *self = if self.explicit_offset {
                Self::with_offset(self.ox, self.oy)
            } else {
                Self::new()
            };
        }
        Ok(())
    }

    fn apply(&mut self, x: f64, y: f64, w: f64) {
        let x = x - self.ox;
        let y = y - self.oy;
        let xx = x * x;
        let xy = x * y;
        let yy = y * y;
        self.sw += w;
        self.sx += w * x;
        self.sy += w * y;
        self.sxx += w * xx;
        self.sxy += w * xy;
        self.syy += w * yy;
        self.sxxx += w * xx * x;
        self.sxxy += w * xx * y;
        self.sxyy += w * x * yy;
        self.syyy += w * yy * y;
        self.sxxxx += w * xx * xx;
        self.sxxxy += w * xx * xy;
        self.sxxyy += w * xx * yy;
        self.sxyyy += w * xy * yy;
        self.syyyy += w * yy * yy;
    }

    /// Copy re-expressed about a new normalization offset, exactly as if
    /// every point had been added under that offset from the start. Each
    /// shifted power sum is a binomial combination of the lower-order
    /// sums, so the translation is O(1).
    pub fn translated(&self, ox: f64, oy: f64) -> ScatterAccumulator {
        let dx = self.ox - ox;
        let dy = self.oy - oy;
        let s = self;
        ScatterAccumulator {
            n: s.n,
            ox,
            oy,
            explicit_offset: true,
            sw: s.sw,
            sx: s.sx + dx * s.sw,
            sy: s.sy + dy * s.sw,
            sxx: s.sxx + dx * (2.0 * s.sx + dx * s.sw),
            sxy: s.sxy + dx * s.sy + dy * s.sx + dx * dy * s.sw,
            syy: s.syy + dy * (2.0 * s.sy + dy * s.sw),
            sxxx: s.sxxx + dx * (3.0 * s.sxx + dx * (3.0 * s.sx + dx * s.sw)),
            sxxy: s.sxxy
                + dy * s.sxx
                + dx * (2.0 * s.sxy + 2.0 * dy * s.sx + dx * (s.sy + dy * s.sw)),
            sxyy: s.sxyy
                + dx * s.syy
                + dy * (2.0 * s.sxy + 2.0 * dx * s.sy + dy * (s.sx + dx * s.sw)),
            syyy: s.syyy + dy * (3.0 * s.syy + dy * (3.0 * s.sy + dy * s.sw)),
            sxxxx: s.sxxxx
                + dx * (4.0 * s.sxxx + dx * (6.0 * s.sxx + dx * (4.0 * s.sx + dx * s.sw))),
            sxxxy: s.sxxxy
                + dy * s.sxxx
                + dx * (3.0 * s.sxxy + 3.0 * dy * s.sxx)
                + dx * dx * (3.0 * s.sxy + 3.0 * dy * s.sx)
                + dx * dx * dx * (s.sy + dy * s.sw),
            sxxyy: s.sxxyy
                + dy * (2.0 * s.sxxy + dy * s.sxx)
                + dx * (2.0 * s.sxyy + 4.0 * dy * s.sxy + 2.0 * dy * dy * s.sx)
                + dx * dx * (s.syy + dy * (2.0 * s.sy + dy * s.sw)),
            sxyyy: s.sxyyy
                + dx * s.syyy
                + dy * (3.0 * s.sxyy + 3.0 * dx * s.syy)
                + dy * dy * (3.0 * s.sxy + 3.0 * dx * s.sy)
                + dy * dy * dy * (s.sx + dx * s.sw),
            syyyy: s.syyyy
                + dy * (4.0 * s.syyy + dy * (6.0 * s.syy + dy * (4.0 * s.sy + dy * s.sw))),
        }
    }

    /// Folds every sum of `other` into `self`, equivalent to adding all
    /// of `other`'s points individually but in O(1). `other` is
    /// re-expressed about `self`'s offset first.
    pub fn merge(&mut self, other: &ScatterAccumulator) {
        if other.n == 0 && other.sw == 0.0 {
            return;
        }
        if self.n == 0 && !self.explicit_offset {
            *self = other.clone();
            return;
        }
        let t = other.translated(self.ox, self.oy);
        self.n += t.n;
        self.sw += t.sw;
        self.sx += t.sx;
        self.sy += t.sy;
        self.sxx += t.sxx;
        self.sxy += t.sxy;
        self.syy += t.syy;
        self.sxxx += t.sxxx;
        self.sxxy += t.sxxy;
        self.sxyy += t.sxyy;
        self.syyy += t.syyy;
        self.sxxxx += t.sxxxx;
        self.sxxxy += t.sxxxy;
        self.sxxyy += t.sxxyy;
        self.sxyyy += t.sxyyy;
        self.syyyy += t.syyyy;
    }

    /// Copy with the expected contribution of additive zero-mean noise
    /// of variance `var_y` on the y coordinate subtracted from every
    /// affected power sum.
    ///
    /// Least squares over raw sums is attenuated: noise inflates the
    /// even y-moments and the solver absorbs that mass by shrinking the
    /// conic, badly so on partial arcs. Removing the expected inflation
    /// (adjusted least squares) makes the estimate consistent.
    /// Corrections use the measured lower-order sums, exact to O(var²).
    pub fn debiased_y(&self, var_y: f64) -> ScatterAccumulator {
        let v = var_y;
        let n = self.sw;
        let mut out = self.clone();
        out.syy = self.syy - n * v;
        out.sxyy = self.sxyy - v * self.sx;
        out.syyy = self.syyy - 3.0 * v * self.sy;
        out.sxxyy = self.sxxyy - v * self.sxx;
        out.sxyyy = self.sxyyy - 3.0 * v * self.sxy;
        out.syyyy = self.syyyy - 6.0 * v * self.syy + 3.0 * n * v * v;
        out
    }

    /// Scatter blocks in offset coordinates: `(S1, S2, S3)` row-major.
    pub(crate) fn scatter(&self) -> ([[f64; 3]; 3], [[f64; 3]; 3], [[f64; 3]; 3]) {
        let s1 = [
            [self.sxxxx, self.sxxxy, self.sxxyy],
            [self.sxxxy, self.sxxyy, self.sxyyy],
            [self.sxxyy, self.sxyyy, self.syyyy],
        ];
        let s2 = [
            [self.sxxx, self.sxxy, self.sxx],
            [self.sxxy, self.sxyy, self.sxy],
            [self.sxyy, self.syyy, self.syy],
        ];
        let s3 = [
            [self.sxx, self.sxy, self.sx],
            [self.sxy, self.syy, self.sy],
            [self.sx, self.sy, self.sw],
        ];
        (s1, s2, s3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;

    fn batch_sums(points: &[(f64, f64)], ox: f64, oy: f64) -> Vec<f64> {
        let mut out = vec![0.0; 14];
        for &(px, py) in points {
            let x = px - ox;
            let y = py - oy;
            let terms = [
                x,
                y,
                x * x,
                x * y,
                y * y,
                x * x * x,
                x * x * y,
                x * y * y,
                y * y * y,
                x * x * x * x,
                x * x * x * y,
                x * x * y * y,
                x * y * y * y,
                y * y * y * y,
            ];
            for (o, t) in out.iter_mut().zip(terms) {
                *o += t;
            }
        }
        out
    }

    fn current_sums(acc: &ScatterAccumulator) -> Vec<f64> {
        vec![
            acc.sx, acc.sy, acc.sxx, acc.sxy, acc.syy, acc.sxxx, acc.sxxy, acc.sxyy, acc.syyy,
            acc.sxxxx, acc.sxxxy, acc.sxxyy, acc.sxyyy, acc.syyyy,
        ]
    }

    #[test]
    fn add_matches_batch_recompute() {
        let mut rng = StdRng::seed_from_u64(11);
        let points: Vec<(f64, f64)> = (0..40)
            .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(0.5..4.0)))
            .collect();
        let mut acc = ScatterAccumulator::new();
        for &(x, y) in &points {
            acc.add(x, y);
        }
        let (ox, oy) = acc.offset();
        assert_eq!((ox, oy), points[0]);
        let want = batch_sums(&points, ox, oy);
        let got = current_sums(&acc);
        for (g, w) in got.iter().zip(&want) {
            assert_relative_eq!(g, w, epsilon = 1e-9, max_relative = 1e-12);
        }
        assert_eq!(acc.len(), points.len());
    }

    #[test]
    fn remove_undoes_add() {
        let mut rng = StdRng::seed_from_u64(12);
        let points: Vec<(f64, f64)> = (0..20)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(1.0..3.0)))
            .collect();
        let mut acc = ScatterAccumulator::new();
        for &(x, y) in &points {
            acc.add(x, y);
        }
        // Remove the last five and compare against a batch over the prefix.
        for &(x, y) in points[15..].iter().rev() {
            acc.remove(x, y).unwrap();
        }
        let (ox, oy) = acc.offset();
        let want = batch_sums(&points[..15], ox, oy);
        for (g, w) in current_sums(&acc).iter().zip(&want) {
            assert_relative_eq!(g, w, epsilon = 1e-9, max_relative = 1e-12);
        }
        assert_eq!(acc.len(), 15);
    }

    #[test]
    fn single_point_powers_with_fixed_offset() {
        let mut acc = ScatterAccumulator::with_offset(0.0, 0.0);
        acc.add(1.0, 2.0);
        assert_eq!(acc.len(), 1);
        assert_eq!(acc.sx, 1.0);
        assert_eq!(acc.sy, 2.0);
        assert_eq!(acc.sxy, 2.0);
        assert_eq!(acc.sxx, 1.0);
        assert_eq!(acc.syy, 4.0);
        assert_eq!(acc.sxxxy, 2.0);
        assert_eq!(acc.sxxyy, 4.0);
    }

    #[test]
    fn adding_the_offset_point_only_bumps_the_count() {
        let mut acc = ScatterAccumulator::with_offset(3.0, -1.0);
        acc.add(3.0, -1.0);
        assert_eq!(acc.len(), 1);
        for s in current_sums(&acc) {
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn translated_matches_batch_under_new_offset() {
        let mut rng = StdRng::seed_from_u64(13);
        let points: Vec<(f64, f64)> = (0..30)
            .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(0.5..4.0)))
            .collect();
        let mut acc = ScatterAccumulator::new();
        for &(x, y) in &points {
            acc.add(x, y);
        }
        let moved = acc.translated(-0.7, 1.3);
        assert_eq!(moved.offset(), (-0.7, 1.3));
        assert_eq!(moved.len(), points.len());
        let want = batch_sums(&points, -0.7, 1.3);
        for (g, w) in current_sums(&moved).iter().zip(&want) {
            assert_relative_eq!(g, w, epsilon = 1e-9, max_relative = 1e-12);
        }
    }

    #[test]
    fn merge_equals_adding_all_points() {
        let mut rng = StdRng::seed_from_u64(14);
        let points: Vec<(f64, f64)> = (0..50)
            .map(|_| (rng.gen_range(-1.5..1.5), rng.gen_range(1.0..3.0)))
            .collect();
        let mut left = ScatterAccumulator::new();
        for &(x, y) in &points[..20] {
            left.add(x, y);
        }
        let mut right = ScatterAccumulator::new();
        for &(x, y) in &points[20..] {
            right.add(x, y);
        }
        left.merge(&right);
        assert_eq!(left.len(), points.len());
        let (ox, oy) = left.offset();
        assert_eq!((ox, oy), points[0]);
        let want = batch_sums(&points, ox, oy);
        for (g, w) in current_sums(&left).iter().zip(&want) {
            assert_relative_eq!(g, w, epsilon = 1e-9, max_relative = 1e-12);
        }

        let mut empty = ScatterAccumulator::new();
        empty.merge(&left);
        assert_eq!(empty.len(), points.len());
        assert_eq!(current_sums(&empty), current_sums(&left));
    }

    #[test]
    fn remove_from_empty_is_an_error() {
        let mut acc = ScatterAccumulator::new();
        assert!(matches!(
            acc.remove(0.0, 0.0),
            Err(Error::EmptyAccumulator)
        ));
    }

    #[test]
    fn draining_resets_offset() {
        let mut acc = ScatterAccumulator::new();
        acc.add(5.0, 7.0);
        acc.remove(5.0, 7.0).unwrap();
        acc.add(1.0, 2.0);
        assert_eq!(acc.offset(), (1.0, 2.0));
        assert_eq!(acc.len(), 1);
    }
}
