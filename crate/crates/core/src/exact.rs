//! Exact arithmetic over the Gaussian rationals `Q(i)`: scalars, univariate
//! polynomials, binary forms and their GCD, and rational point
//! configurations.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::geometry::{PointConfig, Vec3};

pub type GaussRat = Complex<BigRational>;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn gauss(re: BigRational, im: BigRational) -> GaussRat {
    Complex::new(re, im)
}

pub fn gauss_int(re: i64, im: i64) -> GaussRat {
    Complex::new(rat(re, 1), rat(im, 1))
}

pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Parse(format!("non-finite value {x}")))
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn gauss_to_c64(z: &GaussRat) -> Complex64 {
    Complex64::new(rational_to_f64(&z.re), rational_to_f64(&z.im))
}

pub fn gauss_from_c64(z: Complex64) -> Result<GaussRat> {
    Ok(Complex::new(rational_from_f64(z.re)?, rational_from_f64(z.im)?))
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"-1.25e-3"`
/// exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all = format!("{int_part}{frac_part}");
    let mut num = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let shift = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let r = if shift >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-shift) as usize))
    };
    Ok(r)
}

/// Formats as `"p/q"`, or `"p"` for integers.
pub fn format_rational(x: &BigRational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// A dense univariate polynomial over `Q(i)`, coefficients low to high,
/// with no trailing zeros.
#[derive(Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<GaussRat>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<Complex64> = self.coeffs.iter().map(gauss_to_c64).collect();
        write!(f, "Poly{c:?}")
    }
}

impl Poly {
    pub fn new(mut coeffs: Vec<GaussRat>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::new(vec![GaussRat::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[GaussRat] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&GaussRat> {
        self.coeffs.last()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let z = GaussRat::zero();
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).unwrap_or(&z) + other.coeffs.get(k).unwrap_or(&z)
                })
                .collect(),
        )
    }

    pub fn scale(&self, k: &GaussRat) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![GaussRat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + a * b;
            }
        }
        Poly::new(out)
    }

    /// Euclidean division; panics if `divisor` is zero.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        let dd = divisor.degree().expect("division by zero polynomial");
        let lead_inv = GaussRat::one() / divisor.leading().unwrap();
        let mut rem = self.coeffs.clone();
        let Some(sd) = self.degree() else {
            return (Poly::zero(), Poly::zero());
        };
        if sd < dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![GaussRat::zero(); sd - dd + 1];
        for k in (0..=sd - dd).rev() {
            let c = &rem[k + dd] * &lead_inv;
            if c.is_zero() {
                continue;
            }
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] = &rem[k + j] - &c * d;
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some(l) => self.scale(&(GaussRat::one() / l)),
        }
    }

    /// Monic greatest common divisor; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.monic();
        let mut b = other.monic();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        a
    }

    pub fn eval(&self, x: &GaussRat) -> GaussRat {
        let mut acc = GaussRat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(gauss_to_c64).collect()
    }
}

/// A binary form `F(s, t) = Σ c_k s^k t^(d-k)` of degree `d`, stored as the
/// dehomogenized polynomial `F(u, 1)` together with `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryForm {
    pub poly: Poly,
    pub degree: usize,
}

impl BinaryForm {
    pub fn new(poly: Poly, degree: usize) -> Self {
        debug_assert!(poly.degree().is_none_or(|d| d <= degree));
        BinaryForm { poly, degree }
    }

    /// Linear combination `α s^2 + β s t + γ t^2`.
    pub fn quadratic(s2: GaussRat, st: GaussRat, t2: GaussRat) -> Self {
        BinaryForm::new(Poly::new(vec![t2, st, s2]), 2)
    }

    pub fn one() -> Self {
        BinaryForm::new(Poly::one(), 0)
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn mul(&self, other: &BinaryForm) -> BinaryForm {
        BinaryForm::new(self.poly.mul(&other.poly), self.degree + other.degree)
    }

    /// Multiplicity of the root `(1 : 0)`, i.e. the power of `t` dividing `F`.
    pub fn multiplicity_at_infinity(&self) -> usize {
        self.degree - self.poly.degree().unwrap_or(0)
    }

    pub fn eval(&self, s: &GaussRat, t: &GaussRat) -> GaussRat {
        let mut acc = GaussRat::zero();
        let mut s_pow = GaussRat::one();
        let mut t_pows = vec![GaussRat::one(); self.degree + 1];
        for k in 1..=self.degree {
            t_pows[k] = &t_pows[k - 1] * t;
        }
        for (k, c) in self.poly.coeffs().iter().enumerate() {
            acc = acc + c * &s_pow * &t_pows[self.degree - k];
            s_pow = s_pow * s;
        }
        acc
    }

    pub fn eval_c64(&self, s: Complex64, t: Complex64) -> Complex64 {
        let c = self.poly.to_complex();
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, ck) in c.iter().enumerate() {
            acc += ck * s.powu(k as u32) * t.powu((self.degree - k) as u32);
        }
        acc
    }

    /// Exact quotient by a divisor known to divide `self`.
    pub fn div_exact(&self, divisor: &BinaryForm) -> Result<BinaryForm> {
        let (q, r) = self.poly.div_rem(&divisor.poly);
        if !r.is_zero() || divisor.degree > self.degree {
            return Err(Error::PreconditionViolated("form is not divisible".into()));
        }
        Ok(BinaryForm::new(q, self.degree - divisor.degree))
    }
}

/// Greatest common divisor of nonzero binary forms, including the common
/// factor `t^k` at infinity. Zero forms are ignored; returns `None` if all
/// forms are zero.
pub fn forms_gcd(forms: &[BinaryForm]) -> Option<BinaryForm> {
    let nonzero: Vec<&BinaryForm> = forms.iter().filter(|f| !f.is_zero()).collect();
    let first = nonzero.first()?;
    let mut g = first.poly.monic();
    for f in &nonzero[1..] {
        g = g.gcd(&f.poly);
    }
    let at_inf = nonzero
        .iter()
        .map(|f| f.multiplicity_at_infinity())
        .min()
        .unwrap_or(0);
    let d = g.degree().unwrap_or(0) + at_inf;
    Some(BinaryForm::new(g, d))
}

/// A configuration with exact rational coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalConfig {
    pub points: Vec<[BigRational; 3]>,
}

impl RationalConfig {
    /// Exact conversion of the binary floating point coordinates.
    pub fn from_config(cfg: &PointConfig) -> Result<Self> {
        let points = cfg
            .points
            .iter()
            .map(|p| Ok([rational_from_f64(p.x)?, rational_from_f64(p.y)?, rational_from_f64(p.z)?]))
            .collect::<Result<Vec<_>>>()?;
        Ok(RationalConfig { points })
    }

    pub fn from_ints(points: &[[i64; 3]]) -> Self {
        RationalConfig {
            points: points
                .iter()
                .map(|p| [rat(p[0], 1), rat(p[1], 1), rat(p[2], 1)])
                .collect(),
        }
    }

    pub fn to_config(&self) -> Result<PointConfig> {
        PointConfig::new(
            self.points
                .iter()
                .map(|p| Vec3::new(rational_to_f64(&p[0]), rational_to_f64(&p[1]), rational_to_f64(&p[2])))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn difference(&self, i: usize, j: usize) -> [BigRational; 3] {
        let (a, b) = (&self.points[i], &self.points[j]);
        [&a[0] - &b[0], &a[1] - &b[1], &a[2] - &b[2]]
    }
}

pub fn is_negative(x: &BigRational) -> bool {
    x.is_negative()
}
