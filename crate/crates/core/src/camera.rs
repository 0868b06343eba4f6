//! The Möbius camera of a five-point configuration: pointwise evaluation,
//! the parametrized degree-10 forms, sampling, image comparison and the
//! degree of the image curve.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{forms_gcd, gauss, gauss_from_c64, gauss_to_c64, BinaryForm, GaussRat, RationalConfig};
use crate::geometry::{
    classify_default, conic_param, gamma, gamma_inverse, line_deviation, param_of_direction, ConfigClass,
    ConfigTag, Direction, PointConfig, Vec3, DEFAULT_TOL,
};
use crate::moduli::{phi, M5Point, Tuple5P1};
use crate::projective::{P1Param, P1Point};
use crate::sphere::{fibonacci_grid, minimize_on_sphere, tangent_basis, LmOptions};

/// Degree of the image of the camera, or `Constant` for the collinear case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageDegree {
    Finite(u32),
    Constant,
}

impl std::fmt::Display for ImageDegree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ImageDegree::Finite(d) => write!(f, "{d}"),
            ImageDegree::Constant => f.write_str("Constant"),
        }
    }
}

impl Serialize for ImageDegree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ImageDegree::Finite(d) => s.serialize_u32(*d),
            ImageDegree::Constant => s.serialize_str("Constant"),
        }
    }
}

impl<'de> Deserialize<'de> for ImageDegree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) if s == "Constant" => Ok(ImageDegree::Constant),
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(|v| ImageDegree::Finite(v as u32))
                .ok_or_else(|| serde::de::Error::custom("degree must be a non-negative integer")),
            _ => Err(serde::de::Error::custom("expected an integer or \"Constant\"")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegreeMethod {
    ExactGCD,
    HyperplaneRootCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub degree_of_forms: u32,
    pub gcd_degree: u32,
    /// 1 or 2; 0 for a constant map.
    pub map_degree: u32,
    pub image_degree: ImageDegree,
    pub method: DegreeMethod,
    /// Result of the independent root count, equal to `image_degree`.
    pub root_count_degree: ImageDegree,
    /// Distinct image points found on each random hyperplane.
    pub hyperplane_counts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSample {
    pub param: P1Param,
    pub direction: Direction,
    pub value: M5Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageCurve {
    pub samples: Vec<CameraSample>,
    /// `None` when classification is ambiguous at the default tolerance.
    pub config_class: Option<ConfigClass>,
    pub claimed_degree: Option<ImageDegree>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Float,
    Exact,
}

fn require_five(cfg: &PointConfig) -> Result<()> {
    if cfg.len() != 5 {
        return Err(Error::PreconditionViolated(format!(
            "the camera needs exactly 5 points, got {}",
            cfg.len()
        )));
    }
    Ok(())
}

/// Projections `(⟨c, A_i⟩ : 1)` of the centered configuration scaled to unit
/// diameter, for a conic point `c` of Hermitian norm `√2`.
fn projected_tuple(cfg: &PointConfig, c: &crate::geometry::ConicPoint) -> Tuple5P1 {
    let ctr = cfg.centroid();
    let diam = cfg.diameter();
    std::array::from_fn(|i| P1Point::finite(c.dot(&((cfg.points[i] - ctr) / diam))))
}

/// The Möbius picture of `cfg` along `eps`.
pub fn camera_eval(cfg: &PointConfig, eps: &Direction) -> Result<M5Point> {
    require_five(cfg)?;
    phi(&projected_tuple(cfg, &gamma(eps))).map_err(|e| match e {
        Error::NotInU => Error::DegenerateDirection,
        e => e,
    })
}

/// The camera precomposed with the conic parametrization.
pub fn camera_eval_param(cfg: &PointConfig, p: &P1Param, mode: EvalMode) -> Result<M5Point> {
    require_five(cfg)?;
    match mode {
        EvalMode::Float => {
            let c = conic_param(&p.normalized());
            phi(&projected_tuple(cfg, &c)).map_err(|e| match e {
                Error::NotInU => Error::DegenerateParameter,
                e => e,
            })
        }
        EvalMode::Exact => {
            let forms = CameraForms::new(&RationalConfig::from_config(cfg)?)?;
            let s = gauss_from_c64(p.a)?;
            let t = gauss_from_c64(p.b)?;
            let w = forms.eval_reduced(&s, &t);
            M5Point::new(w.map(|z| gauss_to_c64(&z))).map_err(|_| Error::DegenerateParameter)
        }
    }
}

/// The quadratic form `⟨conic_param(s : t), d⟩` for a rational vector `d`.
fn difference_form(d: &[num_rational::BigRational; 3]) -> BinaryForm {
    let zero = num_rational::BigRational::zero();
    let two = num_rational::BigRational::from_integer(2.into());
    BinaryForm::quadratic(
        gauss(d[0].clone(), d[1].clone()),
        gauss(&two * &d[2], zero),
        gauss(-d[0].clone(), d[1].clone()),
    )
}

/// The six degree-10 binary forms of the parametrized camera and their
/// common divisor.
#[derive(Debug, Clone)]
pub struct CameraForms {
    pub forms: [BinaryForm; 6],
    pub gcd: BinaryForm,
    /// `forms / gcd`, defining the regular extension of the camera.
    pub reduced: [BinaryForm; 6],
}

impl CameraForms {
    pub fn new(cfg: &RationalConfig) -> Result<Self> {
        if cfg.len() != 5 {
            return Err(Error::PreconditionViolated("the camera needs exactly 5 points".into()));
        }
        let forms: [BinaryForm; 6] = std::array::from_fn(|k| {
            crate::moduli::GRAPH_TABLE[k]
                .iter()
                .fold(BinaryForm::one(), |acc, &(i, j)| {
                    acc.mul(&difference_form(&cfg.difference(i - 1, j - 1)))
                })
        });
        let gcd = forms_gcd(&forms).ok_or(Error::ZeroVector)?;
        let reduced = forms
            .iter()
            .map(|f| f.div_exact(&gcd))
            .collect::<Result<Vec<_>>>()?
            .try_into()
            .expect("six forms");
        Ok(CameraForms { forms, gcd, reduced })
    }

    pub fn eval_reduced(&self, s: &GaussRat, t: &GaussRat) -> [GaussRat; 6] {
        std::array::from_fn(|k| self.reduced[k].eval(s, t))
    }

    pub fn reduced_degree(&self) -> usize {
        self.reduced[0].degree
    }
}

/// Exact value of the regular extension of the camera at `(s : t)`.
pub fn camera_eval_param_exact(cfg: &RationalConfig, s: &GaussRat, t: &GaussRat) -> Result<[GaussRat; 6]> {
    let w = CameraForms::new(cfg)?.eval_reduced(s, t);
    if w.iter().all(|z| z.is_zero()) {
        return Err(Error::DegenerateParameter);
    }
    Ok(w)
}

pub fn predicted_degree(cls: &ConfigClass) -> ImageDegree {
    match cls.tag {
        ConfigTag::SpatialGeneric | ConfigTag::SpatialFourCoplanar => ImageDegree::Finite(10),
        ConfigTag::SpatialThreeCollinear => ImageDegree::Finite(8),
        ConfigTag::PlanarGeneric => ImageDegree::Finite(5),
        ConfigTag::PlanarThreeCollinear => ImageDegree::Finite(4),
        ConfigTag::PlanarThreePlusThree => ImageDegree::Finite(3),
        ConfigTag::PlanarFourCollinear => ImageDegree::Finite(2),
        ConfigTag::AllCollinear => ImageDegree::Constant,
    }
}

/// Samples the camera on a seeded Fibonacci grid of `n` directions,
/// skipping degenerate directions.
pub fn camera_sample(cfg: &PointConfig, n: usize, seed: u64) -> Result<ImageCurve> {
    require_five(cfg)?;
    if n == 0 {
        return Err(Error::PreconditionViolated("need at least one sample".into()));
    }
    let samples = fibonacci_grid(n, seed)
        .par_iter()
        .filter_map(|d| {
            let param = param_of_direction(d);
            let direction = gamma_inverse(&conic_param(&param)).ok()?;
            let value = camera_eval(cfg, &direction).ok()?;
            Some(CameraSample {
                param,
                direction,
                value,
            })
        })
        .collect();
    let config_class = classify_default(cfg).ok();
    let claimed_degree = config_class.as_ref().map(predicted_degree);
    Ok(ImageCurve {
        samples,
        config_class,
        claimed_degree,
    })
}

const CSV_HEADER: &str = "s_re,s_im,t_re,t_im,dir_x,dir_y,dir_z,\
w0_re,w0_im,w1_re,w1_im,w2_re,w2_im,w3_re,w3_im,w4_re,w4_im,w5_re,w5_im";

impl ImageCurve {
    /// Writes the samples as CSV with a fixed header row.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for s in &self.samples {
            let d = s.direction.as_vec();
            let mut row = vec![s.param.a.re, s.param.a.im, s.param.b.re, s.param.b.im, d.x, d.y, d.z];
            for z in s.value.w {
                row.push(z.re);
                row.push(z.im);
            }
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Reads samples written by [`ImageCurve::write_csv`].
    pub fn read_csv(input: impl BufRead) -> Result<Vec<CameraSample>> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty sample file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        if header.trim() != CSV_HEADER {
            return Err(Error::Parse("unexpected CSV header".into()));
        }
        let mut out = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", n + 2)))?;
            if v.len() != 19 {
                return Err(Error::Parse(format!("row {}: expected 19 columns", n + 2)));
            }
            let param = P1Point::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]))?;
            let direction = Direction::new(Vec3::new(v[4], v[5], v[6]))?;
            let value = M5Point::new(std::array::from_fn(|k| Complex64::new(v[7 + 2 * k], v[8 + 2 * k])))?;
            out.push(CameraSample {
                param,
                direction,
                value,
            });
        }
        Ok(out)
    }
}

fn exactly_collinear(cfg: &RationalConfig) -> bool {
    let d1 = cfg.difference(1, 0);
    (2..cfg.len()).all(|k| {
        let d = cfg.difference(k, 0);
        d1[1].clone() * &d[2] == d1[2].clone() * &d[1]
            && d1[2].clone() * &d[0] == d1[0].clone() * &d[2]
            && d1[0].clone() * &d[1] == d1[1].clone() * &d[0]
    })
}

fn exactly_coplanar(cfg: &RationalConfig) -> bool {
    let n = cfg.len();
    for a in 1..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let (u, v, w) = (cfg.difference(a, 0), cfg.difference(b, 0), cfg.difference(c, 0));
                let det = &u[0] * (&v[1] * &w[2] - &v[2] * &w[1]) - &u[1] * (&v[0] * &w[2] - &v[2] * &w[0])
                    + &u[2] * (&v[0] * &w[1] - &v[1] * &w[0]);
                if !det.is_zero() {
                    return false;
                }
            }
        }
    }
    true
}

/// Number of hyperplanes used by the root-count cross-check.
pub const HYPERPLANE_TRIALS: u64 = 5;

/// Tolerance for identifying image points found on a hyperplane.
const IMAGE_CLUSTER_TOL: f64 = 1e-6;

fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    let comp = DMatrix::<Complex64>::from_fn(n, n, |r, c| {
        if c == n - 1 {
            -coeffs[r] / lead
        } else if r == c + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut roots: Vec<Complex64> = comp
        .schur()
        .eigenvalues()
        .map(|e| e.iter().copied().collect())
        .unwrap_or_default();
    let eval = |x: Complex64| {
        let mut f = Complex64::new(0.0, 0.0);
        let mut df = Complex64::new(0.0, 0.0);
        for c in coeffs.iter().rev() {
            df = df * x + f;
            f = f * x + c;
        }
        (f, df)
    };
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let (f, df) = eval(*r);
            if df.norm() == 0.0 {
                break;
            }
            let next = *r - f / df;
            if !next.is_finite() {
                break;
            }
            *r = next;
        }
    }
    roots
}

/// Counts distinct image points in the intersection of the image with
/// random hyperplanes, pulled back through the reduced forms, and returns
/// the modal count together with the per-trial counts.
pub fn hyperplane_root_count(forms: &[BinaryForm; 6], seed: u64) -> (ImageDegree, Vec<u32>) {
    let d = forms[0].degree;
    if d == 0 {
        return (ImageDegree::Constant, vec![0; HYPERPLANE_TRIALS as usize]);
    }
    let scaled: Vec<Vec<Complex64>> = forms
        .iter()
        .map(|f| {
            let mut c = f.poly.to_complex();
            c.resize(d + 1, Complex64::new(0.0, 0.0));
            let m = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
            c.iter().map(|z| z / m).collect()
        })
        .collect();
    let eval_point = |s: Complex64, t: Complex64| -> Option<M5Point> {
        let w: [Complex64; 6] = std::array::from_fn(|k| {
            scaled[k]
                .iter()
                .enumerate()
                .map(|(j, c)| c * s.powu(j as u32) * t.powu((d - j) as u32))
                .sum()
        });
        M5Point::new(w).ok()
    };
    let mut counts = Vec::new();
    for trial in 0..HYPERPLANE_TRIALS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37).wrapping_add(trial));
        let h: Vec<Complex64> = (0..6)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut coeffs: Vec<Complex64> = (0..=d)
            .map(|j| (0..6).map(|k| h[k] * scaled[k][j]).sum())
            .collect();
        let scale = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= 1e-13 * scale {
            coeffs.pop();
        }
        let finite = poly_roots(&coeffs);
        let mut pts: Vec<M5Point> = finite
            .iter()
            .filter_map(|u| {
                let p = P1Point { a: *u, b: Complex64::new(1.0, 0.0) }.normalized();
                eval_point(p.a, p.b)
            })
            .collect();
        if coeffs.len() - 1 < d {
            pts.extend(eval_point(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)));
        }
        let mut distinct: Vec<M5Point> = Vec::new();
        for p in pts {
            if !distinct.iter().any(|q| q.distance(&p) <= IMAGE_CLUSTER_TOL) {
                distinct.push(p);
            }
        }
        counts.push(distinct.len() as u32);
    }
    let mut best = (0u32, 0usize);
    for &c in &counts {
        let freq = counts.iter().filter(|&&x| x == c).count();
        if freq > best.1 || (freq == best.1 && c < best.0) {
            best = (c, freq);
        }
    }
    (ImageDegree::Finite(best.0), counts)
}

/// Checks that the camera of a planar configuration is invariant under the
/// half-turn about the plane normal; returns the largest deviation.
fn deck_deviation(cfg: &PointConfig, normal: &Vec3) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0xdec4);
    let mut worst: f64 = 0.0;
    for _ in 0..8 {
        let eps = crate::sphere::random_direction(&mut rng);
        let e = eps.as_vec();
        let Ok(flipped) = Direction::from_vector(normal * (2.0 * e.dot(normal)) - e) else {
            continue;
        };
        let p = param_of_direction(&eps);
        let q = param_of_direction(&flipped);
        if let (Ok(a), Ok(b)) = (
            camera_eval_param(cfg, &p, EvalMode::Float),
            camera_eval_param(cfg, &q, EvalMode::Float),
        ) {
            worst = worst.max(a.distance(&b));
        }
    }
    worst
}

/// Degree of the camera image of `cfg`, whose coordinates are taken as
/// exact binary rationals.
pub fn compute_degree(cfg: &PointConfig) -> Result<DegreeReport> {
    require_five(cfg)?;
    compute_degree_exact(&RationalConfig::from_config(cfg)?)
}

pub fn compute_degree_exact(rcfg: &RationalConfig) -> Result<DegreeReport> {
    let forms = CameraForms::new(rcfg)?;
    let gcd_degree = forms.gcd.degree as u32;
    let reduced = 10 - gcd_degree;
    let collinear = exactly_collinear(rcfg);
    let coplanar = exactly_coplanar(rcfg);
    let (map_degree, image_degree) = if reduced == 0 {
        (0, ImageDegree::Constant)
    } else {
        let md = if coplanar && !collinear { 2 } else { 1 };
        if reduced % md != 0 {
            return Err(Error::DegreeInconsistency {
                exact: format!("{reduced}/{md}"),
                root_count: "not computed".into(),
            });
        }
        (md, ImageDegree::Finite(reduced / md))
    };
    if map_degree == 2 {
        let cfg = rcfg.to_config()?;
        let p = &cfg.points;
        let normal = (p[1] - p[0])
            .cross(&(p[2] - p[0]))
            .try_normalize(0.0)
            .or_else(|| (p[1] - p[0]).cross(&(p[3] - p[0])).try_normalize(0.0))
            .or_else(|| (p[1] - p[0]).cross(&(p[4] - p[0])).try_normalize(0.0))
            .ok_or(Error::DegreeInconsistency {
                exact: "planar".into(),
                root_count: "no plane normal".into(),
            })?;
        let dev = deck_deviation(&cfg, &normal);
        if dev > 1e-8 {
            return Err(Error::DegreeInconsistency {
                exact: image_degree.to_string(),
                root_count: format!("half-turn invariance fails by {dev:e}"),
            });
        }
    }
    let (root_count_degree, hyperplane_counts) = hyperplane_root_count(&forms.reduced, 0);
    if root_count_degree != image_degree {
        return Err(Error::DegreeInconsistency {
            exact: image_degree.to_string(),
            root_count: root_count_degree.to_string(),
        });
    }
    Ok(DegreeReport {
        degree_of_forms: 10,
        gcd_degree,
        map_degree,
        image_degree,
        method: DegreeMethod::ExactGCD,
        root_count_degree,
        hyperplane_counts,
    })
}

/// Whether all points lie on one line at the default tolerance.
pub fn is_constant_camera(cfg: &PointConfig) -> bool {
    line_deviation(&cfg.points, cfg.diameter()) < DEFAULT_TOL
}

/// `v - w ⟨w, v⟩` for unit representatives, flattened to real parts and
/// imaginary parts; its norm is the projective distance.
pub(crate) fn projective_residual(v: &[Complex64; 6], w: &[Complex64; 6]) -> Vec<f64> {
    let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nw = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let ip: Complex64 = w.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>() / (nv * nw);
    let mut out = Vec::with_capacity(12);
    for k in 0..6 {
        let r = v[k] / nv - w[k] / nw * ip;
        out.push(r.re);
        out.push(r.im);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageDistance {
    pub distance: f64,
    /// False if some local refinement stopped without converging, in which
    /// case `distance` is an upper bound.
    pub converged: bool,
}

/// Seeds per query point for the local refinement.
const SEEDS_PER_QUERY: usize = 6;

/// A query at or below this residual counts as lying on the target image.
const SOLVED_TOL: f64 = 1e-12;

/// Solved neighbours tried when tracking an unsolved query.
const TRACK_NEIGHBORS: usize = 6;
const TRACK_STEPS: usize = 8;
const TRACK_PASSES: usize = 6;

#[derive(Debug, Clone, Copy)]
struct QueryFit {
    residual: f64,
    converged: bool,
    preimage: Direction,
}

fn refine(v: &M5Point, target: &PointConfig, start: Direction, opts: &LmOptions) -> QueryFit {
    let res = |eps: &Direction| match camera_eval(target, eps) {
        Ok(w) => projective_residual(&v.w, &w.w),
        Err(_) => vec![1.0; 12],
    };
    let r = minimize_on_sphere(res, start, opts);
    QueryFit {
        residual: r.residual,
        converged: r.converged,
        preimage: r.point,
    }
}

fn fit_query(v: &M5Point, target: &PointConfig, target_samples: &[CameraSample], opts: &LmOptions) -> QueryFit {
    let mut near: Vec<(f64, usize)> = target_samples
        .iter()
        .enumerate()
        .map(|(k, s)| (s.value.distance(v), k))
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0));
    let Some(&(d0, k0)) = near.first() else {
        return QueryFit {
            residual: 1.0,
            converged: false,
            preimage: Direction::z(),
        };
    };
    let mut best = QueryFit {
        residual: d0,
        converged: true,
        preimage: target_samples[k0].direction,
    };
    for &(_, k) in near.iter().take(SEEDS_PER_QUERY) {
        if best.residual <= SOLVED_TOL {
            break;
        }
        let r = refine(v, target, target_samples[k].direction, opts);
        if r.residual < best.residual {
            best = r;
        }
    }
    best
}

fn summarize(fits: impl IntoIterator<Item = (f64, bool)>) -> ImageDistance {
    let mut out = ImageDistance {
        distance: 0.0,
        converged: true,
    };
    for (d, c) in fits {
        out.distance = out.distance.max(d);
        out.converged &= c;
    }
    out
}

/// Largest distance from the given values to the camera image of `target`,
/// each minimized over the sphere starting from the nearest samples.
pub fn directed_image_distance(values: &[M5Point], target: &PointConfig, target_samples: &[CameraSample]) -> ImageDistance {
    let opts = LmOptions::default();
    let fits: Vec<QueryFit> = values
        .par_iter()
        .map(|v| fit_query(v, target, target_samples, &opts))
        .collect();
    summarize(fits.iter().map(|f| (f.residual, f.converged)))
}

/// Follows the camera of `source` from a solved query at `from` to `to`,
/// refining the preimage on `target` at every step.
fn track(source: &PointConfig, target: &PointConfig, from: &Direction, to: &Direction, start: Direction, opts: &LmOptions) -> Option<QueryFit> {
    let mut pre = start;
    let mut last = None;
    for k in 1..=TRACK_STEPS {
        let t = k as f64 / TRACK_STEPS as f64;
        let d = Direction::from_vector(from.as_vec() * (1.0 - t) + to.as_vec() * t).ok()?;
        let v = camera_eval(source, &d).ok()?;
        let r = refine(&v, target, pre, opts);
        pre = r.preimage;
        last = Some(r);
    }
    last
}

/// Directed distance from the camera image of `source`, sampled at
/// `queries`, to that of `target`. Queries the local refinement misses are
/// retried by tracking from solved neighbouring queries.
fn directed_tracked(source: &PointConfig, queries: &[CameraSample], target: &PointConfig, target_samples: &[CameraSample]) -> ImageDistance {
    let opts = LmOptions::default();
    let mut fits: Vec<QueryFit> = queries
        .par_iter()
        .map(|q| fit_query(&q.value, target, target_samples, &opts))
        .collect();
    for _ in 0..TRACK_PASSES {
        let solved: Vec<usize> = (0..fits.len()).filter(|&k| fits[k].residual <= SOLVED_TOL).collect();
        if solved.is_empty() || solved.len() == fits.len() {
            break;
        }
        let updates: Vec<(usize, QueryFit)> = (0..fits.len())
            .into_par_iter()
            .filter(|&k| fits[k].residual > SOLVED_TOL)
            .filter_map(|k| {
                let here = queries[k].direction;
                let mut near: Vec<(f64, usize)> = solved
                    .iter()
                    .map(|&j| (-queries[j].direction.as_vec().dot(here.as_vec()), j))
                    .collect();
                near.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut best = fits[k];
                for &(_, j) in near.iter().take(TRACK_NEIGHBORS) {
                    let from = queries[j].direction;
                    if let Some(r) = track(source, target, &from, &here, fits[j].preimage, &opts) {
                        if r.residual < best.residual {
                            best = r;
                        }
                    }
                    if best.residual <= SOLVED_TOL {
                        break;
                    }
                }
                (best.residual < fits[k].residual).then_some((k, best))
            })
            .collect();
        if updates.is_empty() {
            break;
        }
        for (k, f) in updates {
            fits[k] = f;
        }
    }
    summarize(fits.iter().map(|f| (f.residual, f.converged)))
}

/// Radii in radians of the seed rings around fiber directions.
const RING_RADII: [f64; 4] = [0.003, 0.01, 0.03, 0.08];
const RING_POINTS: usize = 12;

/// Samples on small rings around every direction `±(P_i - P_j)`. The camera
/// sweeps a whole neighbourhood of the line `L_ij` near such a direction,
/// which a uniform grid resolves poorly.
pub fn fiber_ring_samples(cfg: &PointConfig) -> Vec<CameraSample> {
    let mut dirs = Vec::new();
    for i in 0..cfg.len() {
        for j in 0..cfg.len() {
            if let (true, Ok(d)) = (i != j, Direction::from_vector(cfg.points[i] - cfg.points[j])) {
                dirs.push(d);
            }
        }
    }
    dirs.par_iter()
        .flat_map_iter(|d| {
            let (u, v) = tangent_basis(d);
            let c = *d.as_vec();
            RING_RADII.iter().flat_map(move |&r| {
                (0..RING_POINTS).filter_map(move |k| {
                    let phi = std::f64::consts::TAU * k as f64 / RING_POINTS as f64;
                    let direction = Direction::from_vector(c * r.cos() + (u * phi.cos() + v * phi.sin()) * r.sin()).ok()?;
                    let value = camera_eval(cfg, &direction).ok()?;
                    Some(CameraSample {
                        param: param_of_direction(&direction),
                        direction,
                        value,
                    })
                })
            })
        })
        .collect()
}

/// Symmetric Hausdorff-type distance between the camera images of `a` and
/// `b`, each sampled at `n` directions. Rings around the fiber directions
/// serve as extra seeds for the refinement.
pub fn image_distance(a: &PointConfig, b: &PointConfig, n: usize) -> Result<ImageDistance> {
    require_five(a)?;
    require_five(b)?;
    if is_constant_camera(a) || is_constant_camera(b) {
        return Err(Error::PreconditionViolated("image distance is undefined for collinear configurations".into()));
    }
    let qa = camera_sample(a, n, 0)?.samples;
    let qb = camera_sample(b, n, 1)?.samples;
    let seeds_a = [qa.as_slice(), &fiber_ring_samples(a)].concat();
    let seeds_b = [qb.as_slice(), &fiber_ring_samples(b)].concat();
    let ab = directed_tracked(a, &qa, b, &seeds_b);
    let ba = directed_tracked(b, &qb, a, &seeds_a);
    Ok(ImageDistance {
        distance: ab.distance.max(ba.distance),
        converged: ab.converged && ba.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::{distance_to_line, m5_residual, LineId, CALIBRATED};
    use crate::sphere::{random_direction, random_rotation};

    fn cfg(p: &[[f64; 3]]) -> PointConfig {
        PointConfig::from_arrays(p).unwrap()
    }

    fn pyramid() -> PointConfig {
        cfg(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    fn spatial() -> PointConfig {
        cfg(&[[0.1, -0.4, 0.3], [1.2, 0.5, -0.7], [-0.8, 1.1, 0.2], [0.4, 0.9, 1.5], [-1.0, -0.6, -0.9]])
    }

    #[test]
    fn similarity_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = spatial();
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let b = a.map(|p| r * p * 2.5 + Vec3::new(1.0, -3.0, 0.2)).unwrap();
            let eps = random_direction(&mut rng);
            let lhs = camera_eval(&b, &eps).unwrap();
            let rhs = camera_eval(&a, &eps.rotated(&r.transpose())).unwrap();
            assert!(lhs.distance(&rhs) < 1e-10);
        }
    }

    #[test]
    fn fiber_directions_hit_lines() {
        let a = spatial();
        for l in LineId::all() {
            let (i, j) = l.zero_based();
            let eps = Direction::from_vector(a.points[i] - a.points[j]).unwrap();
            for e in [eps, eps.antipode()] {
                let v = camera_eval(&a, &e).unwrap();
                assert!(distance_to_line(&v, l) <= 1e-9);
                assert!(m5_residual(&v, &CALIBRATED) <= 1e-9);
            }
        }
    }

    #[test]
    fn collinear_camera_is_constant() {
        let a = cfg(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [3.0, 3.0, 3.0], [4.5, 4.5, 4.5]]);
        let curve = camera_sample(&a, 50, 0).unwrap();
        let v0 = curve.samples[0].value;
        assert!(curve.samples.iter().all(|s| s.value.distance(&v0) < 1e-9));
        assert_eq!(curve.claimed_degree, Some(ImageDegree::Constant));
    }

    #[test]
    fn degenerate_direction_is_reported() {
        let a = cfg(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.3, 1.0]]);
        assert_eq!(camera_eval(&a, &Direction::x()), Err(Error::DegenerateDirection));
    }

    #[test]
    fn param_routes_agree() {
        let a = spatial();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let p = P1Point {
                a: Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                b: Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            };
            let eps = gamma_inverse(&conic_param(&p)).unwrap();
            let direct = camera_eval(&a, &eps).unwrap();
            let float = camera_eval_param(&a, &p, EvalMode::Float).unwrap();
            assert!(direct.distance(&float) < 1e-8);
        }
        let p = P1Point { a: Complex64::new(0.3, 0.2), b: Complex64::new(-0.5, 1.0) };
        let exact = camera_eval_param(&a, &p, EvalMode::Exact).unwrap();
        let float = camera_eval_param(&a, &p, EvalMode::Float).unwrap();
        assert!(exact.distance(&float) < 1e-10);
    }

    #[test]
    fn planar_deck_invariance() {
        let a = cfg(&[[0.0, 0.0, 0.0], [2.0, 0.1, 0.0], [0.3, 1.7, 0.0], [1.9, 2.2, 0.0], [-1.0, 0.8, 0.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let s = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let t = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let v1 = camera_eval_param(&a, &P1Point { a: s, b: t }, EvalMode::Float).unwrap();
            let v2 = camera_eval_param(&a, &P1Point { a: -s, b: t }, EvalMode::Float).unwrap();
            assert!(v1.distance(&v2) < 1e-10);
        }
    }

    #[test]
    fn pyramid_forms_are_coprime() {
        let forms = CameraForms::new(&RationalConfig::from_config(&pyramid()).unwrap()).unwrap();
        assert!(forms.forms.iter().all(|f| f.degree == 10 && f.poly.degree() == Some(10)));
        assert_eq!(forms.gcd.degree, 0);
        let rep = compute_degree(&pyramid()).unwrap();
        assert_eq!(rep.image_degree, ImageDegree::Finite(10));
    }

    #[test]
    fn degree_of_three_collinear_and_planar() {
        let three = cfg(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.25, 1.0]]);
        let rep = compute_degree(&three).unwrap();
        assert_eq!((rep.gcd_degree, rep.map_degree, rep.image_degree), (2, 1, ImageDegree::Finite(8)));
        let planar = cfg(&[[0.0, 0.0, 0.0], [2.0, 0.125, 0.0], [0.25, 1.75, 0.0], [2.0, 2.25, 0.0], [-1.0, 0.75, 0.0]]);
        let rep = compute_degree(&planar).unwrap();
        assert_eq!((rep.gcd_degree, rep.map_degree, rep.image_degree), (0, 2, ImageDegree::Finite(5)));
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = pyramid();
        let c1 = camera_sample(&a, 300, 9).unwrap();
        let c2 = camera_sample(&a, 300, 9).unwrap();
        assert_eq!(c1, c2);
        assert!(c1.samples.iter().all(|s| m5_residual(&s.value, &CALIBRATED) <= 1e-8));
    }

    #[test]
    fn csv_round_trip() {
        let curve = camera_sample(&spatial(), 20, 0).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let back = ImageCurve::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.len(), curve.samples.len());
        for (a, b) in back.iter().zip(&curve.samples) {
            assert!(a.value.distance(&b.value) < 1e-15);
        }
    }

    #[test]
    fn degree_serialization() {
        assert_eq!(serde_json::to_string(&ImageDegree::Finite(8)).unwrap(), "8");
        assert_eq!(serde_json::to_string(&ImageDegree::Constant).unwrap(), "\"Constant\"");
        let d: ImageDegree = serde_json::from_str("\"Constant\"").unwrap();
        assert_eq!(d, ImageDegree::Constant);
    }
}
