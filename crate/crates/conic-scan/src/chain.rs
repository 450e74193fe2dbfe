//! Grouping of per-row ellipses into vertical chains.
//!
//! Ellipse centers of one object stack up across scan rows: along a line
//! for cylinders and cones, along a circle for spheres. Chains are built
//! by greedy proximity linking with a bounded look-ahead that skips
//! stray rows, then handed to the classifier together with total
//! least-squares center models fitted here.

use crate::ellipse::fit_circle;
use crate::error::{Error, Result};
use crate::geometry::Ellipse;
use nalgebra::{Matrix3, Point3, Vector3};

/// Knobs for chain building.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    /// Largest center-to-center distance (meters, 3D) between linked
    /// ellipses.
    pub phi: f64,
    /// How many rows ahead a link may reach, skipping bad rows.
    pub k_neighbors: usize,
    /// Fewest ellipses in a kept chain.
    pub min_chain: usize,
    /// Largest allowed cut-radius change across a link, as a fraction
    /// of the larger radius (with `phi` as an absolute floor so small
    /// objects are not over-constrained). Centers alone cannot tell
    /// stacked objects apart: where a sphere rests on a cylinder the
    /// center sequences meet within `phi`, but the cut radius jumps
    /// from the sphere's pole to the cylinder's full radius. Within
    /// one object the radius moves a few millimeters per row.
    pub radius_jump_frac: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            phi: 0.05,
            k_neighbors: 3,
            min_chain: 3,
            radius_jump_frac: 0.3,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.phi > 0.0
            && self.k_neighbors >= 1
            && self.min_chain >= 3
            && self.radius_jump_frac >= 0.0
        {
            Ok(())
        } else {
            Err(Error::Format(format!("invalid chain config {self:?}")))
        }
    }
}

/// A 3D line in point-direction form.
#[derive(Debug, Clone, Copy)]
pub struct Line3D {
    pub anchor: Point3<f64>,
    /// Unit length.
    pub direction: Vector3<f64>,
}

impl Line3D {
    pub fn point_at(&self, s: f64) -> Point3<f64> {
        self.anchor + self.direction * s
    }

    /// Signed coordinate of `p`'s projection onto the line.
    pub fn coordinate_of(&self, p: &Point3<f64>) -> f64 {
        (p - self.anchor).dot(&self.direction)
    }

    pub fn distance_to(&self, p: &Point3<f64>) -> f64 {
        let d = p - self.anchor;
        (d - self.direction * d.dot(&self.direction)).norm()
    }
}

/// A circle embedded in a 3D plane.
#[derive(Debug, Clone, Copy)]
pub struct Circle3D {
    pub center: Point3<f64>,
    /// Unit normal of the circle's plane.
    pub normal: Vector3<f64>,
    pub radius: f64,
}

/// Fitted model of a chain's center sequence.
#[derive(Debug, Clone, Copy)]
pub enum CenterModel {
    Line(Line3D),
    Circle(Circle3D),
}

/// A row-ordered sequence of ellipses belonging to one object candidate.
#[derive(Debug, Clone)]
pub struct EllipseChain {
    /// Strictly increasing row indices.
    pub ellipses: Vec<Ellipse>,
    /// Filled by the classifier once a model has been chosen.
    pub center_model: Option<CenterModel>,
    /// Residual of `center_model`, meters.
    pub residual: f64,
}

impl EllipseChain {
    pub fn len(&self) -> usize {
        self.ellipses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ellipses.is_empty()
    }

    pub fn centers(&self) -> impl Iterator<Item = Point3<f64>> + '_ {
        self.ellipses.iter().map(|e| e.center)
    }
}

/// Links the frame's ellipses into maximal vertical chains.
///
/// Each ellipse links to at most one successor: the best unclaimed
/// ellipse within `phi` among the next `k_neighbors` rows, preferring
/// the smallest row gap and, within a row, the nearest center. Chains
/// shorter than `min_chain` are dropped.
pub fn build_components(ellipses: &[Ellipse], cfg: &ChainConfig) -> Vec<EllipseChain> {
    if ellipses.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..ellipses.len()).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (&ellipses[a], &ellipses[b]);
        ea.row
            .cmp(&eb.row)
            .then(ea.center.x.total_cmp(&eb.center.x))
            .then(a.cmp(&b))
    });

    let max_row = ellipses.iter().map(|e| e.row).max().unwrap_or(0);
    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); max_row + 1];
    for &i in &order {
        by_row[ellipses[i].row].push(i);
    }

    let mut next: Vec<Option<usize>> = vec![None; ellipses.len()];
    let mut has_pred = vec![false; ellipses.len()];
    for &i in &order {
        let e = &ellipses[i];
        let mut best: Option<(usize, f64, usize)> = None;
        for row in e.row + 1..=(e.row + cfg.k_neighbors).min(max_row) {
            if best.is_some() {
                // Candidates in earlier rows always win; stop as soon as
                // one row has produced a link.
                break;
            }
            for &j in &by_row[row] {
                if has_pred[j] {
                    continue;
                }
                let dist = (ellipses[j].center - e.center).norm();
                if dist > cfg.phi {
                    continue;
                }
                let (ra, rb) = (e.r1, ellipses[j].r1);
                if (ra - rb).abs() > cfg.phi.max(cfg.radius_jump_frac * ra.max(rb)) {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((_, bd, bj)) => dist < bd || (dist == bd && j < bj),
                };
                if better {
                    best = Some((row, dist, j));
                }
            }
        }
        if let Some((_, _, j)) = best {
            next[i] = Some(j);
            has_pred[j] = true;
        }
    }

    let mut chains = Vec::new();
    for &start in &order {
        if has_pred[start] {
            continue;
        }
        let mut members = Vec::new();
        let mut cur = Some(start);
        while let Some(i) = cur {
            members.push(ellipses[i]);
            cur = next[i];
        }
        if members.len() >= cfg.min_chain {
            chains.push(EllipseChain {
                ellipses: members,
                center_model: None,
                residual: 0.0,
            });
        }
    }
    chains
}

/// Running first and second moments of 3D points, enough to recover the
/// centroid and covariance in constant time per added point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Moments3 {
    n: usize,
    sum: Vector3<f64>,
    sq: Matrix3<f64>,
}

impl Moments3 {
    pub(crate) fn new() -> Self {
        Self {
            n: 0,
            sum: Vector3::zeros(),
            sq: Matrix3::zeros(),
        }
    }

    pub(crate) fn add(&mut self, p: &Point3<f64>) {
        self.n += 1;
        self.sum += p.coords;
        self.sq += p.coords * p.coords.transpose();
    }

    pub(crate) fn mean_covariance(&self) -> Result<(Point3<f64>, Matrix3<f64>)> {
        if self.n < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: self.n,
            });
        }
        let inv = 1.0 / self.n as f64;
        let mean = self.sum * inv;
        let mut cov = self.sq * inv - mean * mean.transpose();
        cov = (cov + cov.transpose()) * 0.5;
        Ok((Point3::from(mean), cov))
    }
}

/// Eigen-decomposition of a centers covariance, eigenvalues descending.
fn principal_axes(cov: &Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let eig = cov.symmetric_eigen();
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = [
        eig.eigenvalues[idx[0]],
        eig.eigenvalues[idx[1]],
        eig.eigenvalues[idx[2]],
    ];
    let vecs = [
        eig.eigenvectors.column(idx[0]).into_owned(),
        eig.eigenvectors.column(idx[1]).into_owned(),
        eig.eigenvectors.column(idx[2]).into_owned(),
    ];
    (vals, vecs)
}

/// Total-least-squares 3D line through the chain's centers.
///
/// Returns the line and the RMS orthogonal distance of the centers from
/// it. The direction is oriented from the first chain member toward the
/// last.
pub fn fit_center_line(chain: &EllipseChain) -> Result<(Line3D, f64)> {
    if chain.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: chain.len(),
        });
    }
    let mut mom = Moments3::new();
    for c in chain.centers() {
        mom.add(&c);
    }
    let (mean, cov) = mom.mean_covariance()?;
    let (vals, vecs) = principal_axes(&cov);
    let spread = vals[0];
    if spread <= 0.0 || spread < 1e-24 {
        return Err(Error::DegenerateFit);
    }
    let mut direction = vecs[0].normalize();
    let span = chain.ellipses[chain.len() - 1].center - chain.ellipses[0].center;
    if direction.dot(&span) < 0.0 {
        direction = -direction;
    }
    // Mean squared orthogonal distance is the covariance mass off the
    // principal axis.
    let orth = (cov.trace() - spread).max(0.0);
    Ok((
        Line3D {
            anchor: mean,
            direction,
        },
        orth.sqrt(),
    ))
}

/// Circle through the chain's centers, fitted in their best-fit plane.
///
/// Returns the circle and the RMS 3D distance of the centers from it
/// (in-plane radial error and out-of-plane offset combined). Collinear
/// centers have no finite circle and fail with `DegenerateFit`, which
/// callers read as "not a sphere".
pub fn fit_center_circle(chain: &EllipseChain) -> Result<(Circle3D, f64)> {
    if chain.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: chain.len(),
        });
    }
    let mut mom = Moments3::new();
    for c in chain.centers() {
        mom.add(&c);
    }
    let (mean, cov) = mom.mean_covariance()?;
    let (vals, vecs) = principal_axes(&cov);
    if vals[0] <= 0.0 || vals[1] < 1e-12 * vals[0] {
        return Err(Error::DegenerateFit);
    }
    let (u, v, normal) = (vecs[0], vecs[1], vecs[2]);
    let plane: Vec<(f64, f64)> = chain
        .centers()
        .map(|c| {
            let q = c - mean;
            (q.dot(&u), q.dot(&v))
        })
        .collect();
    let circle = fit_circle(&plane)?;
    let center = mean + u * circle.center_x + v * circle.center_y;
    let mut sq_sum = 0.0;
    for c in chain.centers() {
        let q = c - mean;
        let (a, b) = (q.dot(&u), q.dot(&v));
        let radial = ((a - circle.center_x).hypot(b - circle.center_y) - circle.radius).abs();
        let oop = q.dot(&normal);
        sq_sum += radial * radial + oop * oop;
    }
    Ok((
        Circle3D {
            center,
            normal: normal.normalize(),
            radius: circle.radius,
        },
        (sq_sum / chain.len() as f64).sqrt(),
    ))
}
