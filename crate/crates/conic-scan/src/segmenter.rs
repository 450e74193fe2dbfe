//! Single-pass scan-row segmentation into ellipses.
//!
//! One left-to-right sweep per row: each point is added to the running
//! scatter accumulator, the ellipse is refit in constant time, and the
//! segment's mean fit error is tested against the threshold. When the
//! error jumps, the offending point is removed, the segment is saved if
//! it qualifies, and a fresh segment starts at the rejected point. This
//! finds every ellipse of a row without any prior segmentation and
//! touches each point a bounded number of times.

use crate::ellipse::{ConicCoefficients, GeometricEllipse2D, ScatterAccumulator, MIN_FIT_POINTS};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Ellipse, ScanRowPoint};

/// Knobs of the sweep. Defaults target indoor depth-camera scenes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmenterConfig {
    /// Mean fit error (meters in scan-plane units) that splits a
    /// segment.
    pub error_threshold: f64,
    /// Fewest supporting points for a saved ellipse.
    pub min_support: usize,
    /// Accepted interval for the radius orthogonal to the scan row.
    pub radius_min: f64,
    pub radius_max: f64,
    /// Smallest accepted minor/major axis ratio; grazing fits to flat
    /// structure produce extremely elongated ellipses and die here.
    pub elongation_min: f64,
    /// Largest run of consecutive invalid pixels bridged within one
    /// segment.
    pub max_gap: usize,
    /// Largest scan-plane distance between consecutive segment points.
    /// Adjacent pixels that land meters apart in depth belong to
    /// different surfaces; without this bound a wall chord and an
    /// object limb can share a single well-fitting large ellipse.
    pub max_point_spacing: f64,
    /// Standard deviation of the range noise, meters. When positive,
    /// each saved segment is refit once with the expected noise
    /// contribution subtracted from the scatter sums and the refit
    /// supplies the reported cut radius. Least squares over raw sums
    /// shrinks under noise (several percent at 5 mm on a 40-pixel arc),
    /// which this correction removes. Zero disables the refit.
    pub noise_sigma: f64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            error_threshold: 0.01,
            min_support: 8,
            radius_min: 0.03,
            radius_max: 1.0,
            elongation_min: 0.2,
            max_gap: 2,
            max_point_spacing: 0.1,
            noise_sigma: 0.0,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.error_threshold > 0.0
            && self.min_support >= 6
            && self.radius_min > 0.0
            && self.radius_min < self.radius_max
            && self.elongation_min > 0.0
            && self.elongation_min <= 1.0
            && self.max_point_spacing > 0.0
            && self.noise_sigma >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Format(format!("invalid segmenter config {self:?}")))
        }
    }
}

/// Work counters for the linearity budget: one sweep performs at most
/// two add/remove/fit operations per input point in total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub adds: usize,
    pub removes: usize,
    pub fits: usize,
}

impl SweepStats {
    pub fn total(&self) -> usize {
        self.adds + self.removes + self.fits
    }
}

/// A saved segment in scan-plane coordinates.
#[derive(Debug, Clone, Copy)]
pub struct SliceSegment {
    pub ellipse: GeometricEllipse2D,
    /// Semi-axis more aligned with the sweep direction.
    pub r1: f64,
    /// `r1` without the noise adjustment.
    pub r1_raw: f64,
    /// Semi-axis more orthogonal to the sweep direction.
    pub r2: f64,
    pub support: usize,
    pub residual: f64,
}

/// Segments within n >= 6 are never fit; below that points accumulate
/// unconditionally, one above the 5-DOF minimum for rank margin.
const MIN_SEGMENT_FIT: usize = MIN_FIT_POINTS + 1;

/// A single point this many thresholds away from the model always
/// splits, regardless of the running mean. The mean alone dilutes: a
/// few hundred small wall errors can absorb an entire object arc before
/// the average budges. Errors below the cap still ride on the mean, so
/// isolated noise outliers do not fragment segments.
const OUTLIER_SPLIT_FACTOR: f64 = 3.0;

/// Fraction of the nominal range variance the noise-adjusted refit
/// subtracts from the scatter sums. Two effects shrink the right
/// amount below 1. Range noise acts along each viewing ray, so its
/// depth component carries only cos^2 of the ray angle, about 0.9
/// here. The fit's response to the subtracted variance is also convex,
/// so subtracting the full expected value overshoots the radius a few
/// percent. Calibrated on rendered cylinders and spheres with radii
/// 0.08 to 0.36 m at 1 to 2.2 m and noise of 2 to 8 mm, where this
/// value holds the mean radius error within about half a percent for
/// arcs of 25 pixels or more.
const DEBIAS_VARIANCE_SCALE: f64 = 0.7;

/// A saved segment plus the bookkeeping the merge pass needs: its index
/// range in the row's point list, whether a model split ended it, and
/// its scatter sums for O(1) union refits.
struct SavedSegment {
    seg: SliceSegment,
    start: usize,
    end: usize,
    split_end: bool,
    acc: ScatterAccumulator,
}

struct Sweep<'c> {
    cfg: &'c SegmenterConfig,
    acc: ScatterAccumulator,
    seg: Vec<(f64, f64)>,
    seg_start: usize,
    last_fit: Option<ConicCoefficients>,
    scored: bool,
    err_sum: f64,
    err_scored: usize,
    last_u: Option<usize>,
    stats: SweepStats,
    all: Vec<(f64, f64)>,
    hard_breaks: Vec<usize>,
    out: Vec<SavedSegment>,
}

impl<'c> Sweep<'c> {
    fn new(cfg: &'c SegmenterConfig) -> Self {
        Self {
            cfg,
            acc: ScatterAccumulator::new(),
            seg: Vec::new(),
            seg_start: 0,
            last_fit: None,
            scored: false,
            err_sum: 0.0,
            err_scored: 0,
            last_u: None,
            stats: SweepStats::default(),
            all: Vec::new(),
            hard_breaks: Vec::new(),
            out: Vec::new(),
        }
    }

    fn reset(&mut self, next_start: usize) {
        self.acc = ScatterAccumulator::new();
        self.seg.clear();
        self.seg_start = next_start;
        self.last_fit = None;
        self.scored = false;
        self.err_sum = 0.0;
        self.err_scored = 0;
    }

    fn push(&mut self, index: usize, x: f64, y: f64, u: usize) {
        self.all.push((x, y));
        if let Some(last_u) = self.last_u {
            let gap = u.saturating_sub(last_u + 1);
            if gap > self.cfg.max_gap {
                self.flush(index);
            }
        }
        self.last_u = Some(u);
        if let Some(&(lx, ly)) = self.seg.last() {
            // Depth discontinuity between adjacent pixels: surfaces are
            // not connected, end the segment here.
            let (dx, dy) = (x - lx, y - ly);
            let limit = self.cfg.max_point_spacing;
            if dx * dx + dy * dy > limit * limit {
                self.flush(index);
            }
        }

        self.acc.add(x, y);
        self.seg.push((x, y));
        self.stats.adds += 1;
        if self.acc.len() < MIN_SEGMENT_FIT {
            return;
        }

        self.stats.fits += 1;
        let cap = OUTLIER_SPLIT_FACTOR * self.cfg.error_threshold;
        match self.acc.fit() {
            Ok(conic) => {
                if self.acc.len() < self.cfg.min_support.max(MIN_SEGMENT_FIT) {
                    // Cache without judging: a conic through barely more
                    // points than its degrees of freedom passes through
                    // noise, so testing here either locks in a garbage
                    // seed or splits a good segment.
                    self.last_fit = Some(conic);
                } else if !self.scored {
                    // First judged fit of this segment: score every
                    // member so the running mean starts out honest.
                    let mut sum = 0.0;
                    let mut worst = 0.0f64;
                    for &(px, py) in &self.seg {
                        let e = conic.point_distance(px, py);
                        sum += e;
                        worst = worst.max(e);
                    }
                    if sum / self.seg.len() as f64 > self.cfg.error_threshold || worst > cap {
                        self.split(index, x, y, u);
                    } else {
                        self.err_sum = sum;
                        self.err_scored = self.seg.len();
                        self.last_fit = Some(conic);
                        self.scored = true;
                    }
                } else {
                    let e = conic.point_distance(x, y);
                    let mean = (self.err_sum + e) / (self.err_scored + 1) as f64;
                    if mean > self.cfg.error_threshold || e > cap {
                        self.split(index, x, y, u);
                    } else {
                        self.err_sum += e;
                        self.err_scored += 1;
                        self.last_fit = Some(conic);
                    }
                }
            }
            Err(_) => {
                // Degenerate so far (for example a straight wall run):
                // no error signal yet, keep accumulating. The save-time
                // filters dispose of whatever a flat run turns into.
            }
        }
    }

    /// Error breach at the current point: drop it from the model, save
    /// the segment as it stood one step earlier, and reseed a fresh
    /// segment with the rejected point.
    fn split(&mut self, index: usize, x: f64, y: f64, u: usize) {
        self.acc
            .remove(x, y)
            .expect("removing the point just added");
        self.stats.removes += 1;
        self.seg.pop();
        // After the O(1) removal the accumulator equals its state of the
        // previous step, whose fit is cached; no refit needed.
        self.save(index, true);
        self.reset(index);
        self.acc.add(x, y);
        self.seg.push((x, y));
        self.stats.adds += 1;
        self.last_u = Some(u);
    }

    /// Row end, pixel gap or depth jump: save what qualifies and reset.
    /// Unlike a model split this is a hard boundary, which the merge
    /// pass must never bridge.
    fn flush(&mut self, next_start: usize) {
        self.hard_breaks.push(next_start);
        self.save(next_start, false);
        self.reset(next_start);
    }

    fn save(&mut self, end_index: usize, split_end: bool) {
        if self.seg.len() < self.cfg.min_support {
            return;
        }
        let Some(conic) = self.last_fit else {
            return;
        };
        let Some(seg) = seal_segment(&conic, &self.acc, &self.seg, self.cfg, &mut self.stats)
        else {
            return;
        };
        self.out.push(SavedSegment {
            seg,
            start: self.seg_start,
            end: end_index,
            split_end,
            acc: self.acc.clone(),
        });
    }

    /// Ends the sweep: flushes the tail segment and heals false splits.
    fn finish(mut self, end: usize) -> (Vec<SavedSegment>, SweepStats) {
        self.flush(end);
        let saved = std::mem::take(&mut self.out);
        let mut stats = self.stats;
        let merged =
            merge_split_fragments(saved, &self.all, &self.hard_breaks, self.cfg, &mut stats);
        (merged, stats)
    }
}

/// Final checks turning a fitted segment into a [`SliceSegment`]: exact
/// mean residual, plausibility filters, and the noise-adjusted radius.
fn seal_segment(
    conic: &ConicCoefficients,
    acc: &ScatterAccumulator,
    pts: &[(f64, f64)],
    cfg: &SegmenterConfig,
    stats: &mut SweepStats,
) -> Option<SliceSegment> {
    // Exact residual against the final model, once per segment.
    let residual = pts
        .iter()
        .map(|&(px, py)| conic.point_distance(px, py))
        .sum::<f64>()
        / pts.len() as f64;
    if residual > cfg.error_threshold {
        return None;
    }
    let geo = conic.to_geometric().ok()?;
    let (r1_raw, r2) = split_axes(&geo);
    let mut r1 = r1_raw;
    if r2 < cfg.radius_min || r2 > cfg.radius_max {
        return None;
    }
    if geo.axis_ratio() < cfg.elongation_min {
        return None;
    }
    // Noise-adjusted refit for the reported cut radius only. The
    // centers and the filter geometry keep the raw fit, whose
    // variance is much lower; the refit trades a little variance
    // for removing the raw fit's systematic shrinkage.
    let var = DEBIAS_VARIANCE_SCALE * cfg.noise_sigma * cfg.noise_sigma;
    if var > 0.0 {
        stats.fits += 1;
        if let Ok(rgeo) = acc.debiased_y(var).fit().and_then(|c| c.to_geometric()) {
            // The raw fit shrinks by at most a few percent, so a
            // sane correction lands barely above 1x. Anything
            // outside this band is a short-arc blowup; keep the
            // raw value there.
            let refined = split_axes(&rgeo).0;
            if refined > 0.85 * r1 && refined < 1.2 * r1 {
                r1 = refined;
            }
        }
    }
    Some(SliceSegment {
        ellipse: geo,
        r1,
        r1_raw,
        r2,
        support: pts.len(),
        residual,
    })
}

/// Rejoins neighboring fragments that one model explains.
///
/// The incremental fit is biased on partial arcs of wide shallow
/// ellipses: mid-arc it under-curves, point errors climb past the
/// threshold, and the sweep splits a clean arc. A refit over the union
/// has the full arc and none of that bias, so such a split heals here,
/// while across a genuine boundary the union residual stays high and
/// the fragments stay apart. Only boundaries created by model splits
/// are candidates; pixel gaps and depth jumps are physical evidence of
/// disconnection and are never bridged. Fragments the save filters
/// dropped leave short index gaps between survivors, which are bridged
/// by re-adding their points, capped so a long dropped run (a wall, not
/// a sliver) is not swallowed untested.
fn merge_split_fragments(
    saved: Vec<SavedSegment>,
    all: &[(f64, f64)],
    hard_breaks: &[usize],
    cfg: &SegmenterConfig,
    stats: &mut SweepStats,
) -> Vec<SavedSegment> {
    if saved.len() < 2 {
        return saved;
    }
    let max_bridge = 4 * cfg.min_support;
    let mut out: Vec<SavedSegment> = Vec::with_capacity(saved.len());
    for cur in saved {
        let joinable = out.last().is_some_and(|prev| {
            prev.split_end
                && cur.start - prev.end <= max_bridge
                && !hard_breaks
                    .iter()
                    .any(|&h| prev.end < h && h <= cur.start)
        });
        if joinable {
            let prev = out.last().expect("joinable checked last");
            let mut acc = prev.acc.clone();
            acc.merge(&cur.acc);
            for &(x, y) in &all[prev.end..cur.start] {
                acc.add(x, y);
                stats.adds += 1;
            }
            stats.fits += 1;
            if let Some(seg) = acc
                .fit()
                .ok()
                .and_then(|c| seal_segment(&c, &acc, &all[prev.start..cur.end], cfg, stats))
            {
                let prev = out.pop().expect("joinable checked last");
                out.push(SavedSegment {
                    seg,
                    start: prev.start,
                    end: cur.end,
                    split_end: cur.split_end,
                    acc,
                });
                continue;
            }
        }
        out.push(cur);
    }
    out
}

/// Splits the semi-axes of a scan-plane ellipse into the component along
/// the sweep direction (`r1`) and orthogonal to it (`r2`), by which of
/// the two axes the major direction is closer to.
fn split_axes(geo: &GeometricEllipse2D) -> (f64, f64) {
    let along = geo.theta.cos().abs() >= std::f64::consts::FRAC_1_SQRT_2;
    if along {
        (geo.semi_major, geo.semi_minor)
    } else {
        (geo.semi_minor, geo.semi_major)
    }
}

/// Runs the sweep over one row of projected points and lifts the saved
/// segments into 3D ellipses.
pub fn extract_ellipses(
    points: &[ScanRowPoint],
    row: usize,
    intrinsics: &CameraIntrinsics,
    cfg: &SegmenterConfig,
) -> Vec<Ellipse> {
    extract_ellipses_with_stats(points, row, intrinsics, cfg).0
}

/// Like [`extract_ellipses`], also reporting work counters.
pub fn extract_ellipses_with_stats(
    points: &[ScanRowPoint],
    row: usize,
    intrinsics: &CameraIntrinsics,
    cfg: &SegmenterConfig,
) -> (Vec<Ellipse>, SweepStats) {
    let mut sweep = Sweep::new(cfg);
    for (i, p) in points.iter().enumerate() {
        sweep.push(i, p.x, p.d, p.u);
    }
    sweep.flush(points.len());
    let stats = sweep.stats;
    let ellipses = sweep
        .out
        .into_iter()
        .map(|(s, _, _)| {
            let cx = s.ellipse.center_x;
            let cd = s.ellipse.center_y;
            Ellipse {
                center: intrinsics.unproject(
                    // The scan-plane center maps back through the pinhole
                    // row geometry: x and d are camera-frame x and z.
                    cx * intrinsics.fx / cd + intrinsics.cx,
                    row as f64,
                    cd,
                ),
                r1: s.r1,
                r1_raw: s.r1_raw,
                r2: s.r2,
                theta: s.ellipse.theta,
                row,
                support: s.support,
                residual: s.residual,
            }
        })
        .collect();
    (ellipses, stats)
}

/// Sweep over a bare 2D slice (unit-agnostic), for the slice experiments
/// and the sample-consensus comparison. Points are treated as
/// consecutive columns, so no gap splitting applies.
pub fn segment_slice(points: &[(f64, f64)], cfg: &SegmenterConfig) -> Vec<SliceSegment> {
    segment_slice_with_stats(points, cfg).0
}

pub fn segment_slice_with_stats(
    points: &[(f64, f64)],
    cfg: &SegmenterConfig,
) -> (Vec<SliceSegment>, SweepStats) {
    let mut sweep = Sweep::new(cfg);
    for (i, &(x, y)) in points.iter().enumerate() {
        sweep.push(i, x, y, i);
    }
    sweep.flush(points.len());
    let stats = sweep.stats;
    (sweep.out.into_iter().map(|(s, _, _)| s).collect(), stats)
}

/// Keeps ellipses whose shape can plausibly be a cross-section of a
/// primitive: minor/major ratio at least `elongation_min` and r2 within
/// the radius interval. Order preserved; idempotent.
pub fn prefilter(ellipses: Vec<Ellipse>, cfg: &SegmenterConfig) -> Vec<Ellipse> {
    let mut kept: Vec<Ellipse> = ellipses
        .into_iter()
        .filter(|e| {
            let ratio = if e.r1 >= e.r2 {
                e.r2 / e.r1
            } else {
                e.r1 / e.r2
            };
            ratio >= cfg.elongation_min && e.r2 >= cfg.radius_min && e.r2 <= cfg.radius_max
        })
        .collect();

    // Rows cutting across an open rim see the near face and the far
    // inside wall of the same surface: two arcs of one circle, fitted
    // into two near-identical ellipses. Keep the better-supported one
    // per row, or downstream linking weaves duplicate chains through
    // the same object.
    kept.sort_by(|a, b| {
        a.row
            .cmp(&b.row)
            .then(b.support.cmp(&a.support))
            .then(a.center.x.total_cmp(&b.center.x))
    });
    let mut out: Vec<Ellipse> = Vec::with_capacity(kept.len());
    for e in kept {
        let dup = out.iter().any(|k| {
            let scale = k.r1.max(e.r1);
            k.row == e.row
                && (k.center - e.center).norm() <= 0.25 * scale
                && (k.r1 - e.r1).abs() <= 0.25 * scale
        });
        if !dup {
            out.push(e);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::project_row;
    use crate::synth::{render, SceneObject, SceneSpec, Shape};
    use approx::assert_relative_eq;
    use nalgebra::Point3;

    fn qvga() -> CameraIntrinsics {
        CameraIntrinsics::default_for(320, 240)
    }

    fn cylinder_and_wall(sigma: f64, seed: u64) -> SceneSpec {
        SceneSpec {
            seed,
            noise_sigma: sigma,
            objects: vec![
                SceneObject {
                    name: "post".into(),
                    shape: Shape::Cylinder {
                        center: [0.0, 0.0, 1.0],
                        axis: [0.0, 1.0, 0.0],
                        radius: 0.2,
                        half_length: 1.0,
                    },
                    velocity: [0.0; 3],
                },
                SceneObject {
                    name: "wall".into(),
                    shape: Shape::Plane {
                        point: [0.0, 0.0, 2.0],
                        normal: [0.0, 0.0, -1.0],
                        half_extents: None,
                    },
                    velocity: [0.0; 3],
                },
            ],
            ..SceneSpec::empty()
        }
    }

    #[test]
    fn cylinder_row_before_wall_yields_one_ellipse() {
        let scene = cylinder_and_wall(0.003, 21);
        let frame = render(&scene, qvga(), 0.0);
        let cfg = SegmenterConfig::default();
        let pts = project_row(&frame, 119);
        let ellipses = extract_ellipses(&pts, 119, &frame.intrinsics, &cfg);
        assert_eq!(ellipses.len(), 1, "got {ellipses:?}");
        let e = &ellipses[0];
        assert_relative_eq!(e.r2, 0.2, epsilon = 0.02);
        assert!(e.support >= cfg.min_support);
        assert!(e.residual <= cfg.error_threshold);
        assert_relative_eq!(e.center.z, 1.0, epsilon = 0.02);
    }

    #[test]
    fn pure_wall_row_yields_nothing() {
        let mut scene = cylinder_and_wall(0.0, 0);
        scene.objects.remove(0);
        let frame = render(&scene, qvga(), 0.0);
        let cfg = SegmenterConfig::default();
        for row in [30, 119, 210] {
            let pts = project_row(&frame, row);
            assert!(pts.len() > 300);
            let ellipses = extract_ellipses(&pts, row, &frame.intrinsics, &cfg);
            assert!(ellipses.is_empty(), "row {row}: {ellipses:?}");
        }
    }

    #[test]
    fn noisy_wall_row_yields_nothing() {
        let mut scene = cylinder_and_wall(0.004, 9);
        scene.objects.remove(0);
        let frame = render(&scene, qvga(), 0.0);
        let cfg = SegmenterConfig::default();
        let mut total = 0;
        for row in 0..240 {
            let pts = project_row(&frame, row);
            total += extract_ellipses(&pts, row, &frame.intrinsics, &cfg).len();
        }
        assert_eq!(total, 0);
    }

    #[test]
    fn two_spheres_in_one_row_come_out_in_column_order() {
        let scene = SceneSpec {
            seed: 5,
            noise_sigma: 0.002,
            objects: vec![
                SceneObject {
                    name: "left".into(),
                    shape: Shape::Sphere {
                        center: [-0.45, 0.0, 1.5],
                        radius: 0.22,
                    },
                    velocity: [0.0; 3],
                },
                SceneObject {
                    name: "right".into(),
                    shape: Shape::Sphere {
                        center: [0.45, 0.0, 1.5],
                        radius: 0.22,
                    },
                    velocity: [0.0; 3],
                },
            ],
            ..SceneSpec::empty()
        };
        let frame = render(&scene, qvga(), 0.0);
        let cfg = SegmenterConfig::default();
        let pts = project_row(&frame, 119);
        let ellipses = extract_ellipses(&pts, 119, &frame.intrinsics, &cfg);
        assert_eq!(ellipses.len(), 2, "{ellipses:?}");
        assert!(ellipses[0].center.x < ellipses[1].center.x);
        assert_relative_eq!(ellipses[0].center.x, -0.45, epsilon = 0.03);
        assert_relative_eq!(ellipses[1].center.x, 0.45, epsilon = 0.03);
    }

    #[test]
    fn gap_beyond_limit_splits_segments() {
        // Two arcs of the same circle separated by a 5-pixel hole: with
        // max_gap 2 they segment separately; with max_gap 8 they fuse
        // into one ellipse.
        let scene = cylinder_and_wall(0.0, 0);
        let mut frame = render(&scene, qvga(), 0.0);
        let row = 119;
        // Find the cylinder span and punch a hole in the middle of it.
        let span: Vec<usize> = project_row(&frame, row)
            .iter()
            .filter(|p| p.d < 1.5)
            .map(|p| p.u)
            .collect();
        let mid = span[span.len() / 2];
        for u in mid - 2..=mid + 2 {
            frame.set_depth(u, row, 0.0);
        }
        let pts = project_row(&frame, row);

        let tight = SegmenterConfig::default();
        let split = extract_ellipses(&pts, row, &frame.intrinsics, &tight);
        assert_eq!(split.len(), 2, "{split:?}");

        let loose = SegmenterConfig {
            max_gap: 8,
            ..SegmenterConfig::default()
        };
        let fused = extract_ellipses(&pts, row, &frame.intrinsics, &loose);
        assert_eq!(fused.len(), 1, "{fused:?}");
        assert_relative_eq!(fused[0].r2, 0.2, epsilon = 1e-6);
    }

    #[test]
    fn segments_are_disjoint_and_within_budget() {
        let scene = cylinder_and_wall(0.004, 33);
        let frame = render(&scene, qvga(), 0.0);
        let cfg = SegmenterConfig::default();
        for row in (0..240).step_by(10) {
            let pts = project_row(&frame, row);
            let (ellipses, stats) =
                extract_ellipses_with_stats(&pts, row, &frame.intrinsics, &cfg);
            let support_total: usize = ellipses.iter().map(|e| e.support).sum();
            assert!(support_total <= pts.len());
            assert!(
                stats.total() <= 2 * pts.len(),
                "row {row}: {stats:?} for {} points",
                pts.len()
            );
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let scene = cylinder_and_wall(0.005, 77);
        let frame = render(&scene, qvga(), 0.0);
        let cfg = SegmenterConfig::default();
        let pts = project_row(&frame, 100);
        let a = extract_ellipses(&pts, 100, &frame.intrinsics, &cfg);
        let b = extract_ellipses(&pts, 100, &frame.intrinsics, &cfg);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.center, y.center);
            assert_eq!(x.residual, y.residual);
        }
    }

    #[test]
    fn prefilter_drops_elongated_and_out_of_range() {
        let cfg = SegmenterConfig::default();
        let mk = |r1: f64, r2: f64| Ellipse {
            center: Point3::new(0.0, 0.0, 1.0),
            r1,
            r1_raw: r1,
            r2,
            theta: 0.0,
            row: 0,
            support: 10,
            residual: 0.001,
        };
        let kept = prefilter(
            vec![
                mk(0.2, 0.02),  // ratio 0.1: elongated, also r2 below min
                mk(0.2, 0.2),   // circle: kept
                mk(0.1, 0.09),  // kept
                mk(0.5, 1.4),   // r2 beyond max
                mk(1.0, 0.15),  // ratio 0.15: elongated
            ],
            &cfg,
        );
        assert_eq!(kept.len(), 2);
        assert_relative_eq!(kept[0].r2, 0.2);
        assert_relative_eq!(kept[1].r2, 0.09);
    }

    #[test]
    fn slice_sweep_handles_dimensionless_units() {
        use crate::synth::sample_ellipse_2d;
        let pts = sample_ellipse_2d(40.0, 20.0, 200.0, 0.5, 60, 4);
        let cfg = SegmenterConfig {
            error_threshold: 1.5,
            min_support: 8,
            radius_min: 1.0,
            radius_max: 100.0,
            elongation_min: 0.2,
            max_gap: 2,
            max_point_spacing: 10.0,
            noise_sigma: 0.0,
        };
        let segs = segment_slice(&pts, &cfg);
        assert_eq!(segs.len(), 1, "{segs:?}");
        assert_relative_eq!(segs[0].ellipse.semi_major, 40.0, epsilon = 2.0);
        assert_relative_eq!(segs[0].ellipse.semi_minor, 20.0, epsilon = 2.0);
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut cfg = SegmenterConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.min_support = 5;
        assert!(cfg.validate().is_err());
        cfg = SegmenterConfig {
            radius_min: 2.0,
            ..SegmenterConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
