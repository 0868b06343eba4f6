//! The sphere of directions as the conic `x^2 + y^2 + z^2 = 0` and as the
//! projective line, and orthogonal projection as a complex dot product.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Direction, Vec3};
use crate::error::{Error, Result};
use crate::projective::{P1Param, P1Point};

/// Relative tolerance for conic membership, `|x^2 + y^2 + z^2| / ‖c‖^2`.
pub const CONIC_TOL: f64 = 1e-10;

/// Homogeneous coordinates of a point of the conic `C = {x^2 + y^2 + z^2 = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConicPoint {
    pub cx: Complex64,
    pub cy: Complex64,
    pub cz: Complex64,
}

impl ConicPoint {
    pub fn new(cx: Complex64, cy: Complex64, cz: Complex64) -> Result<Self> {
        let p = ConicPoint { cx, cy, cz };
        let n2 = p.hermitian_norm_sqr();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::ZeroVector);
        }
        let residual = p.conic_residual();
        if residual > CONIC_TOL {
            return Err(Error::NotOnConic { residual });
        }
        Ok(p)
    }

    pub fn coords(&self) -> [Complex64; 3] {
        [self.cx, self.cy, self.cz]
    }

    pub fn hermitian_norm_sqr(&self) -> f64 {
        self.cx.norm_sqr() + self.cy.norm_sqr() + self.cz.norm_sqr()
    }

    /// `|x^2 + y^2 + z^2|` relative to the squared Hermitian norm.
    pub fn conic_residual(&self) -> f64 {
        (self.cx * self.cx + self.cy * self.cy + self.cz * self.cz).norm()
            / self.hermitian_norm_sqr()
    }

    /// Representative of Hermitian norm `√2`, the scale at which the dot
    /// product with a point is an isometric projection.
    pub fn normalized(&self) -> Self {
        let k = (2.0 / self.hermitian_norm_sqr()).sqrt();
        ConicPoint {
            cx: self.cx * k,
            cy: self.cy * k,
            cz: self.cz * k,
        }
    }

    pub fn conj(&self) -> Self {
        ConicPoint {
            cx: self.cx.conj(),
            cy: self.cy.conj(),
            cz: self.cz.conj(),
        }
    }

    /// Complex bilinear pairing with a real point, `p x + q y + r z`.
    pub fn dot(&self, a: &Vec3) -> Complex64 {
        self.cx * a.x + self.cy * a.y + self.cz * a.z
    }

    pub fn projectively_eq(&self, other: &ConicPoint, tol: f64) -> bool {
        crate::projective::projective_distance(&self.coords(), &other.coords()) <= tol
    }
}

/// Maps a direction `ε` to `ε' + i ε''`, where `(ε, ε', ε'')` is a
/// positively oriented orthonormal frame.
///
/// `ε'` is taken along `ε × e_k` for the coordinate axis `e_k` least aligned
/// with `ε`, and `ε'' = ε × ε'`. The representative has Hermitian norm `√2`.
/// A different frame choice multiplies the result by a unit complex number.
pub fn gamma(eps: &Direction) -> ConicPoint {
    let e = eps.as_vec();
    let k = (0..3)
        .min_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs()))
        .unwrap_or(0);
    let axis = Vec3::ith(k, 1.0);
    let e1 = e.cross(&axis).normalize();
    let e2 = e.cross(&e1);
    ConicPoint {
        cx: Complex64::new(e1.x, e2.x),
        cy: Complex64::new(e1.y, e2.y),
        cz: Complex64::new(e1.z, e2.z),
    }
}

/// Inverse of [`gamma`]: the direction `Re(c) × Im(c)` of the representative
/// rescaled to Hermitian norm `√2`. Independent of the phase of `c`.
pub fn gamma_inverse(c: &ConicPoint) -> Result<Direction> {
    let n2 = c.hermitian_norm_sqr();
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(Error::ZeroVector);
    }
    let residual = c.conic_residual();
    if residual > CONIC_TOL {
        return Err(Error::NotOnConic { residual });
    }
    let c = c.normalized();
    let re = Vec3::new(c.cx.re, c.cy.re, c.cz.re);
    let im = Vec3::new(c.cx.im, c.cy.im, c.cz.im);
    Direction::from_vector(re.cross(&im))
}

/// The degree-2 parametrization `(s : t) -> (s^2 - t^2 : i (s^2 + t^2) : 2 s t)`
/// of the conic by the projective line.
pub fn conic_param(p: &P1Param) -> ConicPoint {
    let (s, t) = (p.a, p.b);
    let i = Complex64::i();
    ConicPoint {
        cx: s * s - t * t,
        cy: i * (s * s + t * t),
        cz: 2.0 * s * t,
    }
}

/// Inverse of [`conic_param`], up to the sign `(s : t) ~ (-s : -t)`.
pub fn param_of_conic(c: &ConicPoint) -> P1Param {
    let i = Complex64::i();
    let s2 = (c.cx - i * c.cy) / 2.0;
    let t2 = -(c.cx + i * c.cy) / 2.0;
    let st = c.cz / 2.0;
    let p = if s2.norm() >= t2.norm() {
        let s = s2.sqrt();
        P1Point { a: s, b: st / s }
    } else {
        let t = t2.sqrt();
        P1Point { a: st / t, b: t }
    };
    p.normalized()
}

pub fn param_of_direction(eps: &Direction) -> P1Param {
    param_of_conic(&gamma(eps))
}

/// Orthogonal projection of `a` along `eps` as a complex number. The
/// image plane orientation is positive with respect to `eps`; the global
/// rotation of the image plane is fixed by the frame choice in [`gamma`].
pub fn project(eps: &Direction, a: &Vec3) -> Complex64 {
    gamma(eps).dot(a)
}
