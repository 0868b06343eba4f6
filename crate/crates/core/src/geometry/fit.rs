//! Closed-form least-squares similarity and affinity fits between
//! configurations with matched indices.

use nalgebra::{Matrix2, Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use super::classify::plane_deviation;
use super::{centered_svd, centroid, diameter, PointConfig, Vec3, DEFAULT_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub orthogonal: Matrix3<f64>,
    pub translation: Vec3,
    /// `det(orthogonal) = +1`.
    pub proper: bool,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        SimilarityTransform {
            scale: 1.0,
            orthogonal: Matrix3::identity(),
            translation: Vec3::zeros(),
            proper: true,
        }
    }

    pub fn new(scale: f64, orthogonal: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::PreconditionViolated("scale must be positive".into()));
        }
        let err = (orthogonal.transpose() * orthogonal - Matrix3::identity()).abs().max();
        if err > 1e-10 {
            return Err(Error::PreconditionViolated("matrix is not orthogonal".into()));
        }
        Ok(SimilarityTransform {
            scale,
            orthogonal,
            translation,
            proper: orthogonal.determinant() > 0.0,
        })
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.orthogonal * v * self.scale + self.translation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityTransform {
    pub linear: Matrix3<f64>,
    pub translation: Vec3,
}

impl AffinityTransform {
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.linear * v + self.translation
    }
}

fn check_pair(a: &PointConfig, b: &PointConfig) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::PreconditionViolated(format!(
            "configurations have different sizes ({} and {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 3 {
        return Err(Error::PreconditionViolated("need at least three points".into()));
    }
    Ok(())
}

fn rms_residual(a: &[Vec3], b: &[Vec3], f: impl Fn(&Vec3) -> Vec3) -> f64 {
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (f(x) - y).norm_squared()).sum();
    (ss / a.len() as f64).sqrt()
}

/// Least-squares similarity `b ≈ s Q a + t` over all orthogonal `Q`.
///
/// The optimal `Q` is `U V^T` from the SVD of the centered cross-covariance;
/// improper solutions are kept and flagged. When the cross-covariance has
/// rank two, `Q` is not unique and the proper representative is returned.
/// The residual is the RMS misfit divided by the diameter of `b`.
pub fn fit_similarity(a: &PointConfig, b: &PointConfig) -> Result<(SimilarityTransform, f64)> {
    check_pair(a, b)?;
    let ca = centroid(&a.points);
    let cb = centroid(&b.points);
    let var_a: f64 = a.points.iter().map(|p| (p - ca).norm_squared()).sum();
    let diam_b = diameter(&b.points);
    if !(var_a > 0.0) || !(diam_b > 0.0) {
        return Err(Error::DegenerateFit("all points coincide"));
    }
    let mut cov = Matrix3::zeros();
    for (x, y) in a.points.iter().zip(&b.points) {
        cov += (y - cb) * (x - ca).transpose();
    }
    let svd = cov.svd(true, true);
    let mut u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let sv = svd.singular_values;
    let (imax, imin) = {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&p, &q| sv[q].total_cmp(&sv[p]));
        (idx[0], idx[2])
    };
    let mut signs = [1.0; 3];
    if (u * v_t).determinant() < 0.0 && sv[imin] <= 1e-10 * sv[imax] {
        let col = -u.column(imin);
        u.set_column(imin, &col);
        signs[imin] = -1.0;
    }
    let q = u * v_t;
    let trace: f64 = (0..3).map(|k| sv[k] * signs[k]).sum();
    let scale = trace / var_a;
    if !(scale > 0.0) {
        return Err(Error::DegenerateFit("target points coincide"));
    }
    let translation = cb - q * ca * scale;
    let t = SimilarityTransform {
        scale,
        orthogonal: q,
        translation,
        proper: q.determinant() > 0.0,
    };
    let residual = rms_residual(&a.points, &b.points, |p| t.apply(p)) / diam_b;
    Ok((t, residual))
}

struct PlaneFrame {
    origin: Vec3,
    e1: Vec3,
    e2: Vec3,
    normal: Vec3,
}

impl PlaneFrame {
    fn of(points: &[Vec3]) -> Self {
        let (_, v) = centered_svd(points);
        PlaneFrame {
            origin: centroid(points),
            e1: v.column(0).into_owned(),
            e2: v.column(1).into_owned(),
            normal: v.column(2).into_owned(),
        }
    }

    fn coords(&self, p: &Vec3) -> Vector2<f64> {
        let d = p - self.origin;
        Vector2::new(d.dot(&self.e1), d.dot(&self.e2))
    }
}

/// Least-squares affinity between two coplanar configurations, computed in
/// orthonormal frames of their planes. The 3x3 linear part maps the plane of
/// `a` onto the plane of `b` and the normal of `a` onto the normal of `b`.
pub fn fit_affinity(a: &PointConfig, b: &PointConfig) -> Result<(AffinityTransform, f64)> {
    fit_affinity_tol(a, b, DEFAULT_TOL)
}

pub fn fit_affinity_tol(
    a: &PointConfig,
    b: &PointConfig,
    tol: f64,
) -> Result<(AffinityTransform, f64)> {
    check_pair(a, b)?;
    let diam_a = diameter(&a.points);
    let diam_b = diameter(&b.points);
    if plane_deviation(&a.points, diam_a) >= tol || plane_deviation(&b.points, diam_b) >= tol {
        return Err(Error::NotPlanar);
    }
    let fa = PlaneFrame::of(&a.points);
    let fb = PlaneFrame::of(&b.points);
    let pa: Vec<Vector2<f64>> = a.points.iter().map(|p| fa.coords(p)).collect();
    let pb: Vec<Vector2<f64>> = b.points.iter().map(|p| fb.coords(p)).collect();

    let mut saa = Matrix2::zeros();
    let mut sba = Matrix2::zeros();
    for (x, y) in pa.iter().zip(&pb) {
        saa += x * x.transpose();
        sba += y * x.transpose();
    }
    let eig = saa.symmetric_eigen();
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if !(lo > 1e-20 * hi) {
        return Err(Error::DegenerateFit("source points are collinear"));
    }
    let m = sba * saa.try_inverse().ok_or(Error::DegenerateFit("singular normal equations"))?;
    let scale_ratio = diam_a / diam_b;
    if !(m.determinant().abs() * scale_ratio * scale_ratio > 1e-12) {
        return Err(Error::DegenerateFit("fitted map is not invertible"));
    }

    let basis_a = nalgebra::Matrix3x2::from_columns(&[fa.e1, fa.e2]);
    let basis_b = nalgebra::Matrix3x2::from_columns(&[fb.e1, fb.e2]);
    let linear = basis_b * m * basis_a.transpose()
        + fb.normal * fa.normal.transpose() * m.determinant().abs().sqrt();
    let translation = fb.origin - linear * fa.origin;
    let t = AffinityTransform {
        linear,
        translation,
    };
    let residual = rms_residual(&a.points, &b.points, |p| t.apply(p)) / diam_b;
    Ok((t, residual))
}
