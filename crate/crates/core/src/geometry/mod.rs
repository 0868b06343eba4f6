//! Real 3-space primitives: directions, the conic model of the sphere,
//! orthogonal projections, configuration classification and
//! similarity/affinity fitting.

mod classify;
mod conic;
mod fit;

pub(crate) use classify::{line_deviation, line_direction, plane_deviation};
pub use classify::{classify, classify_default, ConfigClass, ConfigTag, DEFAULT_TOL};
pub use conic::{
    conic_param, gamma, gamma_inverse, param_of_conic, param_of_direction, project, ConicPoint,
};
pub use fit::{fit_affinity, fit_affinity_tol, fit_similarity, AffinityTransform, SimilarityTransform};

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance on `|‖v‖ - 1|` accepted by [`Direction::new`].
pub const UNIT_TOL: f64 = 1e-12;

/// A unit vector of 3-space, i.e. a point of the sphere of directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction(Vec3);

impl Direction {
    pub fn new(v: Vec3) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidDirection { norm });
        }
        Ok(Direction(v))
    }

    /// Normalizes an arbitrary nonzero finite vector.
    pub fn from_vector(v: Vec3) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidDirection { norm });
        }
        Ok(Direction(v / norm))
    }

    pub fn x() -> Self {
        Direction(Vec3::x())
    }

    pub fn y() -> Self {
        Direction(Vec3::y())
    }

    pub fn z() -> Self {
        Direction(Vec3::z())
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn into_vec(self) -> Vec3 {
        self.0
    }

    pub fn antipode(&self) -> Self {
        Direction(-self.0)
    }

    /// Angle between the lines spanned by two directions, in `[0, π/2]`.
    pub fn axis_angle(&self, other: &Direction) -> f64 {
        let cross = self.0.cross(&other.0).norm();
        let dot = self.0.dot(&other.0).abs();
        cross.atan2(dot)
    }

    pub fn rotated(&self, r: &Matrix3<f64>) -> Self {
        Direction::from_vector(r * self.0).expect("rotation of a unit vector")
    }
}

/// An ordered list of labeled points of 3-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub points: Vec<Vec3>,
}

/// Minimum number of points in a configuration.
pub const MIN_POINTS: usize = 4;

/// Points closer than this fraction of the diameter count as coincident.
pub const DISTINCT_TOL: f64 = 1e-12;

impl PointConfig {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.len() < MIN_POINTS {
            return Err(Error::PreconditionViolated(format!(
                "a configuration needs at least {MIN_POINTS} points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::PreconditionViolated("non-finite coordinate".into()));
        }
        let cfg = PointConfig {
            label: None,
            points,
        };
        let diam = cfg.diameter();
        for i in 0..cfg.len() {
            for j in i + 1..cfg.len() {
                if !((cfg.points[i] - cfg.points[j]).norm() > DISTINCT_TOL * diam) {
                    return Err(Error::PreconditionViolated(format!(
                        "points {} and {} coincide",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_arrays(points: &[[f64; 3]]) -> Result<Self> {
        Self::new(points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        diameter(&self.points)
    }

    pub fn centroid(&self) -> Vec3 {
        centroid(&self.points)
    }

    /// Applies `f` to every point; the result is re-validated.
    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Self> {
        let mut cfg = PointConfig::new(self.points.iter().map(f).collect())?;
        cfg.label = self.label.clone();
        Ok(cfg)
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        PointConfig::new(indices.iter().map(|&i| self.points[i]).collect())
    }
}

pub(crate) fn diameter(points: &[Vec3]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d = d.max((points[i] - points[j]).norm());
        }
    }
    d
}

pub(crate) fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().sum::<Vec3>() / points.len() as f64
}

/// Singular values (descending) of the centered coordinate matrix, with the
/// right singular vectors as columns of the returned matrix.
pub(crate) fn centered_svd(points: &[Vec3]) -> ([f64; 3], Matrix3<f64>) {
    let c = centroid(points);
    let rows = points.len().max(3);
    let mut m = DMatrix::<f64>::zeros(rows, 3);
    for (r, p) in points.iter().enumerate() {
        let d = p - c;
        for k in 0..3 {
            m[(r, k)] = d[k];
        }
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut sv = [0.0; 3];
    let mut v = Matrix3::zeros();
    for (k, &o) in order.iter().enumerate() {
        sv[k] = svd.singular_values[o];
        for r in 0..3 {
            v[(r, k)] = vt[(o, r)];
        }
    }
    (sv, v)
}
