//! Homogeneous coordinates on the complex projective line, Möbius
//! transformations, the cross ratio, and a scale-free distance between
//! points of complex projective space.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `(a : b)` of the complex projective line.
///
/// Finite values `z` are embedded as `(z : 1)`; infinity is `(1 : 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1Point {
    pub a: Complex64,
    pub b: Complex64,
}

/// Parameter `(s : t)` of the conic parametrization.
pub type P1Param = P1Point;

/// Coordinates `(a_i : b_i)` of one of the five points of a tuple in `(P^1)^5`.
pub type P1PointPair = P1Point;

impl P1Point {
    pub const INFINITY: P1Point = P1Point {
        a: Complex64::new(1.0, 0.0),
        b: Complex64::new(0.0, 0.0),
    };

    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let p = P1Point { a, b };
        if !(p.norm() > 0.0) || !p.norm().is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(p)
    }

    pub fn finite(z: Complex64) -> Self {
        P1Point {
            a: z,
            b: Complex64::new(1.0, 0.0),
        }
    }

    pub fn real(x: f64) -> Self {
        Self::finite(Complex64::new(x, 0.0))
    }

    pub fn norm(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr()).sqrt()
    }

    /// Representative of unit Hermitian norm.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        P1Point {
            a: self.a / n,
            b: self.b / n,
        }
    }

    /// Affine value `a / b`, or `None` at infinity.
    pub fn value(&self) -> Option<Complex64> {
        let n = self.normalized();
        if n.b.norm() <= 1e-300 {
            None
        } else {
            Some(n.a / n.b)
        }
    }

    /// The bracket `a_i b_j - a_j b_i`.
    pub fn bracket(&self, other: &P1Point) -> Complex64 {
        self.a * other.b - other.a * self.b
    }

    /// Chordal distance between unit representatives; zero iff equal as points.
    pub fn chordal_distance(&self, other: &P1Point) -> f64 {
        self.normalized().bracket(&other.normalized()).norm()
    }

    pub fn conj(&self) -> Self {
        P1Point {
            a: self.a.conj(),
            b: self.b.conj(),
        }
    }

    /// The fixed-point-free real structure `(s : t) -> (-conj t : conj s)`,
    /// which corresponds to the antipodal map of the sphere.
    pub fn antipodal(&self) -> Self {
        P1Point {
            a: -self.b.conj(),
            b: self.a.conj(),
        }
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        P1Point {
            a: self.a * k,
            b: self.b * k,
        }
    }
}

/// A Möbius transformation `z -> (a z + b) / (c z + d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moebius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Moebius {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        let scale = a.norm() + b.norm() + c.norm() + d.norm();
        if !(det.norm() > 1e-14 * scale * scale) {
            return Err(Error::PreconditionViolated(
                "Möbius matrix is singular".into(),
            ));
        }
        Ok(Moebius { a, b, c, d })
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Moebius {
            a: one,
            b: zero,
            c: zero,
            d: one,
        }
    }

    pub fn apply(&self, p: &P1Point) -> P1Point {
        P1Point {
            a: self.a * p.a + self.b * p.b,
            b: self.c * p.a + self.d * p.b,
        }
    }
}

/// Two points of P^1 closer than this (chordal, unit representatives) are
/// treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Cross ratio `((m1 - m3)(m2 - m4)) / ((m1 - m4)(m2 - m3))`, evaluated in
/// homogeneous coordinates so that infinity needs no special casing.
///
/// When exactly two of the four values coincide the result is the limit of
/// the formula: `m1 = m3` or `m2 = m4` give `0`, `m1 = m4` or `m2 = m3` give
/// infinity, `m1 = m2` or `m3 = m4` give `1`.
pub fn cross_ratio(m: &[P1Point; 4]) -> Result<P1Point> {
    let n: Vec<P1Point> = m.iter().map(P1Point::normalized).collect();
    if distinct_count(&n) < 3 {
        return Err(Error::DegenerateTuple);
    }
    let num = n[0].bracket(&n[2]) * n[1].bracket(&n[3]);
    let den = n[0].bracket(&n[3]) * n[1].bracket(&n[2]);
    if den.norm() <= 1e-15 * num.norm() {
        Ok(P1Point::INFINITY)
    } else {
        Ok(P1Point::finite(num / den))
    }
}

fn distinct_count(points: &[P1Point]) -> usize {
    let mut reps: Vec<&P1Point> = Vec::new();
    for p in points {
        if reps
            .iter()
            .all(|r| r.chordal_distance(p) > COINCIDENCE_TOL)
        {
            reps.push(p);
        }
    }
    reps.len()
}

/// Hermitian inner product `sum conj(u_k) v_k`.
pub fn hermitian_dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(x, y)| x.conj() * y).sum()
}

pub fn hermitian_norm(u: &[Complex64]) -> f64 {
    u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Sine of the Hermitian angle between two nonzero complex vectors, i.e. the
/// distance between the points they represent in projective space. Computed
/// from the orthogonal residual so small angles keep full precision.
pub fn projective_distance(u: &[Complex64], v: &[Complex64]) -> f64 {
    let nu = hermitian_norm(u);
    let nv = hermitian_norm(v);
    if nu == 0.0 || nv == 0.0 {
        return 1.0;
    }
    let coef = hermitian_dot(u, v) / (nu * nu);
    let r: f64 = u
        .iter()
        .zip(v)
        .map(|(x, y)| (y - x * coef).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (r / nv).min(1.0)
}
