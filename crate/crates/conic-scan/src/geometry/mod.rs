//! Camera model, organized depth frames, and scan-row projection.
//!
//! Depth values live in meters in memory and millimeters on disk (see
//! [`io`]). A pixel value of 0 or NaN marks an invalid sample. Rows of
//! a frame are projected into a metric 2D scan plane in which the
//! ellipse machinery operates: for row `v` the plane is spanned by the
//! viewing rays of that row, with `x` the lateral offset in meters and
//! `d` the depth. Fitting in metric scan-plane coordinates rather than
//! pixel coordinates is what lets the radius filters and thresholds be
//! expressed in meters.

pub mod io;

use nalgebra::Point3;

use crate::error::{Error, Result};

/// Pinhole camera model for an organized range image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    /// Conventional consumer depth-camera model scaled to the frame
    /// size: 262.5 px focal length at 320x240, principal point at the
    /// grid center.
    pub fn default_for(width: usize, height: usize) -> Self {
        Self {
            fx: 262.5 * width as f64 / 320.0,
            fy: 262.5 * height as f64 / 240.0,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx >= 0.0
            && self.cx < self.width as f64
            && self.cy >= 0.0
            && self.cy < self.height as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "invalid intrinsics: fx={} fy={} cx={} cy={} for {}x{}",
                self.fx, self.fy, self.cx, self.cy, self.width, self.height
            )))
        }
    }

    /// Intrinsics of the 90 degree rotated view: focal lengths and
    /// principal point swap together with the axes.
    pub fn transposed(&self) -> Self {
        Self {
            fx: self.fy,
            fy: self.fx,
            cx: self.cy,
            cy: self.cx,
            width: self.height,
            height: self.width,
        }
    }

    /// Back-projects pixel `(u, v)` at depth `d` to a camera-frame
    /// point.
    pub fn unproject(&self, u: f64, v: f64, d: f64) -> Point3<f64> {
        Point3::new((u - self.cx) * d / self.fx, (v - self.cy) * d / self.fy, d)
    }

    /// Projects a camera-frame point to pixel coordinates.
    pub fn project(&self, p: &Point3<f64>) -> (f64, f64) {
        (
            p.x * self.fx / p.z + self.cx,
            p.y * self.fy / p.z + self.cy,
        )
    }
}

/// Organized range image with per-pixel depth in meters.
#[derive(Debug, Clone)]
pub struct DepthFrame {
    pub intrinsics: CameraIntrinsics,
    /// Capture time in seconds; synthetic sequences set it from the
    /// frame index.
    pub timestamp: f64,
    depths: Vec<f64>,
}

impl DepthFrame {
    /// Wraps a row-major depth grid. The grid length must match the
    /// intrinsics' dimensions and hold only nonnegative finite values
    /// (0 = invalid) or NaN.
    pub fn new(intrinsics: CameraIntrinsics, depths: Vec<f64>) -> Result<Self> {
        intrinsics.validate()?;
        if depths.len() != intrinsics.width * intrinsics.height {
            return Err(Error::DimensionMismatch {
                want_w: intrinsics.width,
                want_h: intrinsics.height,
                got_w: depths.len(),
                got_h: 1,
            });
        }
        if depths.iter().any(|&d| d < 0.0 || d.is_infinite()) {
            return Err(Error::Format(
                "depth values must be nonnegative and finite (0 or NaN = invalid)".into(),
            ));
        }
        Ok(Self {
            intrinsics,
            timestamp: 0.0,
            depths,
        })
    }

    /// All-invalid frame, useful as a canvas for the renderer.
    pub fn empty(intrinsics: CameraIntrinsics) -> Self {
        let n = intrinsics.width * intrinsics.height;
        Self {
            intrinsics,
            timestamp: 0.0,
            depths: vec![0.0; n],
        }
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height
    }

    /// Depth at `(u, v)` in meters; 0 or NaN means invalid.
    pub fn depth(&self, u: usize, v: usize) -> f64 {
        self.depths[v * self.intrinsics.width + u]
    }

    pub fn set_depth(&mut self, u: usize, v: usize, d: f64) {
        self.depths[v * self.intrinsics.width + u] = d;
    }

    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        let d = self.depth(u, v);
        d.is_finite() && d > 0.0
    }

    pub fn valid_count(&self) -> usize {
        self.depths.iter().filter(|d| d.is_finite() && **d > 0.0).count()
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.depths
    }
}

/// One valid pixel of a scan row in metric scan-plane coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRowPoint {
    /// Source column index.
    pub u: usize,
    /// Lateral coordinate in the row's scan plane, meters.
    pub x: f64,
    /// Depth coordinate in the row's scan plane, meters.
    pub d: f64,
    /// Camera-frame 3D point.
    pub p3d: Point3<f64>,
}

/// Projects the valid pixels of one row into scan-plane coordinates,
/// ordered by column.
pub fn project_row(frame: &DepthFrame, row: usize) -> Vec<ScanRowPoint> {
    let intr = &frame.intrinsics;
    let mut out = Vec::new();
    for u in 0..intr.width {
        if !frame.is_valid(u, row) {
            continue;
        }
        let d = frame.depth(u, row);
        let x = (u as f64 - intr.cx) * d / intr.fx;
        out.push(ScanRowPoint {
            u,
            x,
            d,
            p3d: Point3::new(x, (row as f64 - intr.cy) * d / intr.fy, d),
        });
    }
    out
}

/// Exchanges rows and columns of a frame, producing the 90 degree
/// rotated view of the scene. Objects too tilted for horizontal rows to
/// cut them in usable arcs become upright in the transpose.
pub fn transpose_frame(frame: &DepthFrame) -> DepthFrame {
    let intr = frame.intrinsics;
    let mut out = DepthFrame::empty(intr.transposed());
    out.timestamp = frame.timestamp;
    for v in 0..intr.height {
        for u in 0..intr.width {
            out.set_depth(v, u, frame.depth(u, v));
        }
    }
    out
}

/// Ellipse extracted from one scan row, in camera-frame metric units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    /// 3D center of the cut in the camera frame.
    pub center: Point3<f64>,
    /// Semi-axis more aligned with the scan row, meters. A scan plane
    /// cuts a sphere in a circle whose projection keeps its full extent
    /// exactly along the row, and for upright cylinders and cones the
    /// cut is a circle outright, so this axis is the surface radius the
    /// classifier works on. It is also the well-conditioned one: the
    /// data spans it directly, while the depth axis is extrapolated
    /// from arc curvature.
    pub r1: f64,
    /// `r1` as fitted directly, before any noise adjustment. Under
    /// range noise the direct fit shrinks every row by a near-constant
    /// offset, which cancels out of slope estimates, while the
    /// adjustment trues up each row individually. Slope-derived
    /// quantities read this field; absolute radii read `r1`.
    pub r1_raw: f64,
    /// Semi-axis more orthogonal to the scan row, meters.
    pub r2: f64,
    /// In-plane orientation of the major axis, radians in `[0, pi)`.
    pub theta: f64,
    /// Source scan-row index.
    pub row: usize,
    /// Number of points the fit was accepted over.
    pub support: usize,
    /// Mean point-to-boundary distance of the supporting points, meters.
    pub residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_frame() -> DepthFrame {
        let intr = CameraIntrinsics {
            fx: 100.0,
            fy: 100.0,
            cx: 1.0,
            cy: 1.0,
            width: 3,
            height: 2,
        };
        let depths = vec![1.0, 2.0, 3.0, 4.0, 0.0, 6.0];
        DepthFrame::new(intr, depths).unwrap()
    }

    #[test]
    fn default_intrinsics_match_reference_sizes() {
        let qvga = CameraIntrinsics::default_for(320, 240);
        assert_relative_eq!(qvga.fx, 262.5);
        assert_relative_eq!(qvga.fy, 262.5);
        assert_relative_eq!(qvga.cx, 159.5);
        assert_relative_eq!(qvga.cy, 119.5);
        let vga = CameraIntrinsics::default_for(640, 480);
        assert_relative_eq!(vga.fx, 525.0);
        assert_relative_eq!(vga.fy, 525.0);
    }

    #[test]
    fn project_row_orders_columns_and_skips_invalid() {
        let frame = small_frame();
        let row1 = project_row(&frame, 1);
        let cols: Vec<usize> = row1.iter().map(|p| p.u).collect();
        assert_eq!(cols, vec![0, 2]);
        let row0 = project_row(&frame, 0);
        assert_eq!(row0.len(), 3);
        assert!(row0.windows(2).all(|w| w[0].u < w[1].u));
    }

    #[test]
    fn principal_ray_has_zero_lateral_offset() {
        let intr = CameraIntrinsics {
            fx: 250.0,
            fy: 250.0,
            cx: 2.0,
            cy: 1.0,
            width: 5,
            height: 3,
        };
        let mut frame = DepthFrame::empty(intr);
        frame.set_depth(2, 0, 2.0);
        let pts = project_row(&frame, 0);
        assert_eq!(pts.len(), 1);
        assert_relative_eq!(pts[0].x, 0.0);
        assert_relative_eq!(pts[0].d, 2.0);
        assert_relative_eq!(pts[0].p3d.x, 0.0);
        assert_relative_eq!(pts[0].p3d.y, (0.0 - 1.0) * 2.0 / 250.0);
        assert_relative_eq!(pts[0].p3d.z, 2.0);
    }

    #[test]
    fn projection_round_trips_through_intrinsics() {
        let frame = small_frame();
        for row in 0..frame.height() {
            for p in project_row(&frame, row) {
                let (u, v) = frame.intrinsics.project(&p.p3d);
                assert_relative_eq!(u, p.u as f64, epsilon = 1e-9);
                assert_relative_eq!(v, row as f64, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn empty_row_projects_to_empty_list() {
        let intr = CameraIntrinsics::default_for(320, 240);
        let frame = DepthFrame::empty(intr);
        assert!(project_row(&frame, 17).is_empty());
    }

    #[test]
    fn transpose_swaps_grid_and_intrinsics() {
        let frame = small_frame();
        let t = transpose_frame(&frame);
        assert_eq!(t.width(), 2);
        assert_eq!(t.height(), 3);
        assert_eq!(t.intrinsics.fx, frame.intrinsics.fy);
        assert_eq!(t.intrinsics.cx, frame.intrinsics.cy);
        for v in 0..frame.height() {
            for u in 0..frame.width() {
                assert_eq!(t.depth(v, u), frame.depth(u, v));
            }
        }
    }

    #[test]
    fn transpose_is_an_involution() {
        let frame = small_frame();
        let back = transpose_frame(&transpose_frame(&frame));
        assert_eq!(back.raw(), frame.raw());
        assert_eq!(back.intrinsics, frame.intrinsics);
    }

    #[test]
    fn rejects_mismatched_grid() {
        let intr = CameraIntrinsics::default_for(4, 4);
        assert!(matches!(
            DepthFrame::new(intr, vec![1.0; 15]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_negative_depths() {
        let intr = CameraIntrinsics::default_for(2, 2);
        assert!(DepthFrame::new(intr, vec![1.0, -0.5, 1.0, 1.0]).is_err());
    }
}
