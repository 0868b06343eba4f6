//! Reconstruction of a configuration from its camera.
//!
//! The fiber of the line `L_ij` under the camera is the antipodal pair
//! `±(A_i - A_j)/‖A_i - A_j‖`. Searching these fibers recovers the ten
//! pair directions up to sign, and intersecting lines along them rebuilds
//! the configuration up to similarity. Collinear subsets remove fibers and
//! select one of the lower-degree construction variants.
//!
//! When three points `i, j, k` are collinear the direction of their line
//! is a degenerate direction whose regular extension lands on `L_lm`,
//! `{l, m}` the complementary pair. The fiber search therefore returns all
//! qualifying axes and the construction enumerates them; the camera of each
//! candidate result is compared with the oracle pointwise to pick one.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{camera_eval, image_distance, ImageDistance};
use crate::error::{Error, Result};
use crate::geometry::{
    classify_default, fit_affinity, fit_similarity, line_deviation, plane_deviation, ConfigClass, Direction,
    PointConfig, Vec3, DEFAULT_TOL,
};
use crate::moduli::{distance_to_line, line_span_distance, line_span_residual, line_vanishing_set, representative_tuple, LineId, M5Point};
use crate::projective::{cross_ratio, P1Point};
use crate::sphere::{fibonacci_grid, minimize_on_sphere, LmOptions};

type EvalFn = dyn Fn(&Direction) -> Result<M5Point> + Send + Sync;

/// A map from directions to camera values, the input of reconstruction.
#[derive(Clone)]
pub struct CameraOracle {
    eval: Arc<EvalFn>,
    pub class_hint: Option<ConfigClass>,
}

impl std::fmt::Debug for CameraOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CameraOracle").field("class_hint", &self.class_hint).finish_non_exhaustive()
    }
}

impl CameraOracle {
    pub fn new(eval: impl Fn(&Direction) -> Result<M5Point> + Send + Sync + 'static) -> Self {
        CameraOracle {
            eval: Arc::new(eval),
            class_hint: None,
        }
    }

    /// The camera of a five-point configuration.
    pub fn from_config(cfg: &PointConfig) -> Result<Self> {
        if cfg.len() != 5 {
            return Err(Error::PreconditionViolated("the camera needs exactly 5 points".into()));
        }
        let owned = cfg.clone();
        Ok(CameraOracle {
            eval: Arc::new(move |eps| camera_eval(&owned, eps)),
            class_hint: classify_default(cfg).ok(),
        })
    }

    pub fn eval(&self, eps: &Direction) -> Result<M5Point> {
        (self.eval)(eps)
    }

    /// Largest distance between `eval(-ε)` and the conjugate of `eval(ε)`
    /// over `n` grid directions; zero for a camera of a real configuration.
    pub fn real_structure_defect(&self, n: usize) -> f64 {
        fibonacci_grid(n, 0x7ea1)
            .iter()
            .filter_map(|e| {
                let a = self.eval(e).ok()?;
                let b = self.eval(&e.antipode()).ok()?;
                Some(a.conj().distance(&b))
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberOptions {
    pub grid_n: usize,
    /// Number of distinct grid seeds refined by local descent.
    pub candidates: usize,
    /// Acceptance threshold on the refined objective; it bounds
    /// `distance_to_line` from above.
    pub threshold: f64,
    /// Axes closer than this angle are identified.
    pub merge_angle: f64,
    /// More distinct axes than this is reported as an ambiguous fiber.
    pub max_axes: usize,
    pub seed: u64,
}

impl Default for FiberOptions {
    fn default() -> Self {
        FiberOptions {
            grid_n: 5000,
            candidates: 20,
            threshold: 1e-8,
            merge_angle: 1e-5,
            max_axes: 3,
            seed: 0x5eed,
        }
    }
}

/// Outcome of a fiber search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FiberResult {
    Found {
        axis: Direction,
        residual: f64,
        /// Further accepted axes, ordered by residual.
        alternates: Vec<Direction>,
    },
    NotFound {
        best_residual: f64,
    },
}

impl FiberResult {
    pub fn axes(&self) -> Vec<Direction> {
        match self {
            FiberResult::Found { axis, alternates, .. } => {
                std::iter::once(*axis).chain(alternates.iter().copied()).collect()
            }
            FiberResult::NotFound { .. } => Vec::new(),
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, FiberResult::Found { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberEntry {
    pub line: LineId,
    /// Unsigned axis with the smallest residual.
    pub axis: Option<Direction>,
    pub alternates: Vec<Direction>,
    pub found: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionTable {
    pub entries: Vec<FiberEntry>,
}

impl DirectionTable {
    pub fn entry(&self, i: usize, j: usize) -> Option<&FiberEntry> {
        let l = LineId::new(i, j).ok()?;
        self.entries.iter().find(|e| e.line == l)
    }

    /// All candidate axes of the pair with zero-based indices `(i, j)`.
    fn candidates(&self, i: usize, j: usize) -> Vec<Vec3> {
        match self.entry(i + 1, j + 1) {
            Some(e) if e.found => e
                .axis
                .iter()
                .chain(&e.alternates)
                .map(|d| d.into_vec())
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn found_lines(&self) -> Vec<LineId> {
        self.entries.iter().filter(|e| e.found).map(|e| e.line).collect()
    }

    pub fn missing_lines(&self) -> Vec<LineId> {
        self.entries.iter().filter(|e| !e.found).map(|e| e.line).collect()
    }
}

/// Grid evaluation of an oracle, shared by the searches of all ten lines.
pub struct FiberSearch<'a> {
    oracle: &'a CameraOracle,
    grid: Vec<Direction>,
    values: Vec<Option<M5Point>>,
    /// Grid indices within two grid spacings of each grid point.
    neighbors: Vec<Vec<u32>>,
    opts: FiberOptions,
}

/// Neighbor lists of a Fibonacci grid. The lattice index orders points by
/// their unrotated height `z_k = 1 - (2k+1)/n`, and `|Δz|` bounds the
/// angular distance from below, so only an index window is scanned.
fn grid_neighbors(grid: &[Direction], radius: f64) -> Vec<Vec<u32>> {
    let n = grid.len();
    let window = (radius * n as f64 / 2.0).ceil() as usize + 1;
    let cos_r = radius.cos();
    (0..n)
        .into_par_iter()
        .map(|k| {
            let lo = k.saturating_sub(window);
            let hi = (k + window + 1).min(n);
            (lo..hi)
                .filter(|&m| m != k && grid[k].as_vec().dot(grid[m].as_vec()) >= cos_r)
                .map(|m| m as u32)
                .collect()
        })
        .collect()
}

/// Objective of the fiber search for `l`: the `S_ij` components for lines
/// with a large vanishing set, the offset from the plane of `L_ij` for lines
/// with a single vanishing coordinate.
fn line_objective(v: &M5Point, l: LineId) -> f64 {
    if line_vanishing_set(l).len() > 1 {
        distance_to_line(v, l)
    } else {
        line_span_distance(v, l)
    }
}

/// Residual vector of the fiber search for `l` at `eps`. The camera value
/// carries a phase that jumps where the frame of `gamma` switches axes, so
/// it is rotated to align with `reference` to keep the residual smooth.
fn line_residual(oracle: &CameraOracle, l: LineId, set: &[usize], reference: &[Complex64; 6], eps: &Direction) -> Vec<f64> {
    let bad = || vec![1.0; if set.len() > 1 { 2 * set.len() } else { 12 }];
    let Ok(v) = oracle.eval(eps) else { return bad() };
    let overlap: Complex64 = reference.iter().zip(&v.w).map(|(r, w)| r.conj() * w).sum();
    if !(overlap.norm() > 0.0) {
        return bad();
    }
    let n = v.w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let rot = overlap.conj() / (overlap.norm() * n);
    let v = M5Point { w: v.w.map(|z| z * rot) };
    if set.len() > 1 {
        set.iter().flat_map(|&k| [v.w[k].re, v.w[k].im]).collect()
    } else {
        line_span_residual(&v, l).iter().flat_map(|z| [z.re, z.im]).collect()
    }
}

impl<'a> FiberSearch<'a> {
    pub fn new(oracle: &'a CameraOracle, opts: FiberOptions) -> Result<Self> {
        if opts.grid_n < 500 {
            return Err(Error::PreconditionViolated("fiber search needs a grid of at least 500 directions".into()));
        }
        let grid = fibonacci_grid(opts.grid_n, opts.seed);
        let values = grid.par_iter().map(|e| oracle.eval(e).ok()).collect();
        let spacing = (4.0 * std::f64::consts::PI / opts.grid_n as f64).sqrt();
        let neighbors = grid_neighbors(&grid, 2.0 * spacing);
        Ok(FiberSearch {
            oracle,
            grid,
            values,
            neighbors,
            opts,
        })
    }

    /// Refined local minima of `distance_to_line(·, l)` below the threshold,
    /// merged up to sign and sorted by residual, plus the best residual seen.
    fn minima(&self, l: LineId) -> (Vec<(Direction, f64)>, f64) {
        let set = line_vanishing_set(l);
        let f: Vec<f64> = self
            .values
            .iter()
            .map(|v| v.map_or(f64::INFINITY, |v| line_objective(&v, l)))
            .collect();
        // seeds are the grid's discrete local minima, so a deep zero cannot
        // absorb the whole candidate budget
        let mut order: Vec<(f64, usize)> = (0..f.len())
            .filter(|&k| f[k].is_finite() && self.neighbors[k].iter().all(|&m| f[k] <= f[m as usize]))
            .map(|k| (f[k], k))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let spacing = (4.0 * std::f64::consts::PI / self.opts.grid_n as f64).sqrt();
        let mut seeds: Vec<Direction> = Vec::new();
        for &(_, k) in &order {
            if seeds.len() >= self.opts.candidates {
                break;
            }
            let d = self.grid[k];
            if seeds.iter().all(|s| s.axis_angle(&d) > 1.5 * spacing) {
                seeds.push(d);
            }
        }
        let lm = LmOptions::default();
        let refined: Vec<(Direction, f64)> = seeds
            .par_iter()
            .map(|s| {
                let reference = self.oracle.eval(s).map_or([Complex64::new(1.0, 0.0); 6], |v| v.w);
                let r = minimize_on_sphere(|e| line_residual(self.oracle, l, &set, &reference, e), *s, &lm);
                (r.point, r.residual)
            })
            .collect();
        let best = refined.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let mut sorted = refined;
        sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut out: Vec<(Direction, f64)> = Vec::new();
        for (d, r) in sorted {
            if r > self.opts.threshold {
                continue;
            }
            if out.iter().all(|(o, _)| o.axis_angle(&d) > self.opts.merge_angle) {
                out.push((d, r));
            }
        }
        (out, best)
    }

    fn result(&self, l: LineId, axes: Vec<(Direction, f64)>, best: f64) -> Result<FiberResult> {
        if axes.len() > self.opts.max_axes {
            return Err(Error::AmbiguousFiber {
                i: l.i,
                j: l.j,
                count: axes.len(),
            });
        }
        let mut it = axes.into_iter();
        Ok(match it.next() {
            None => FiberResult::NotFound { best_residual: best },
            Some((axis, residual)) => FiberResult::Found {
                axis,
                residual,
                alternates: it.map(|a| a.0).collect(),
            },
        })
    }

    /// Fiber of one line. For a line whose vanishing set is a single
    /// coordinate `w_k` the hyperplane `w_k = 0` also contains the lines whose
    /// sets contain `k`, so the search measures the offset from the plane of
    /// `L_ij` itself. This also keeps a genuine fiber shared with such a
    /// line, as when `A_i - A_j` is parallel to `A_k - A_l`.
    pub fn fiber(&self, l: LineId) -> Result<FiberResult> {
        let (axes, best) = self.minima(l);
        self.result(l, axes, best)
    }

    pub fn table(&self) -> Result<(DirectionTable, Vec<FiberResult>)> {
        let lines = LineId::all();
        let results: Vec<FiberResult> = lines.iter().map(|l| self.fiber(*l)).collect::<Result<_>>()?;
        let entries = lines
            .iter()
            .zip(&results)
            .map(|(l, r)| match r {
                FiberResult::Found {
                    axis,
                    residual,
                    alternates,
                } => FiberEntry {
                    line: *l,
                    axis: Some(*axis),
                    alternates: alternates.clone(),
                    found: true,
                    residual: *residual,
                },
                FiberResult::NotFound { best_residual } => FiberEntry {
                    line: *l,
                    axis: None,
                    alternates: Vec::new(),
                    found: false,
                    residual: *best_residual,
                },
            })
            .collect();
        Ok((DirectionTable { entries }, results))
    }
}

/// Fiber of `L_ij` under the oracle, with the single-coordinate
/// membership rule applied.
pub fn find_fiber(oracle: &CameraOracle, l: LineId, grid_n: usize) -> Result<FiberResult> {
    let search = FiberSearch::new(
        oracle,
        FiberOptions {
            grid_n,
            ..FiberOptions::default()
        },
    )?;
    search.fiber(l)
}

/// Smallest angle, in radians, accepted between lines to be intersected.
pub const PARALLEL_ANGLE: f64 = 1e-8;

fn intersect_vec(p1: &Vec3, d1: &Vec3, p2: &Vec3, d2: &Vec3) -> Option<(Vec3, f64)> {
    let n = d1.cross(d2);
    let sin = n.norm() / (d1.norm() * d2.norm());
    if !(sin.asin() > PARALLEL_ANGLE) {
        return None;
    }
    let w = p1 - p2;
    let a = d1.dot(d1);
    let b = d1.dot(d2);
    let c = d2.dot(d2);
    let d = d1.dot(&w);
    let e = d2.dot(&w);
    let den = a * c - b * b;
    let s = (b * e - c * d) / den;
    let t = (a * e - b * d) / den;
    let q1 = p1 + d1 * s;
    let q2 = p2 + d2 * t;
    Some(((q1 + q2) / 2.0, (q1 - q2).norm()))
}

/// Midpoint of the common perpendicular of two lines and its length.
pub fn intersect_lines(p1: &Vec3, d1: &Direction, p2: &Vec3, d2: &Direction) -> Result<(Vec3, f64)> {
    intersect_vec(p1, d1.as_vec(), p2, d2.as_vec()).ok_or(Error::ParallelLines)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReconstructionMode {
    Deg10,
    Deg8,
    Planar5,
    Planar4,
    Planar3,
    CrossRatioOnly,
}

/// Which construction variant the pattern of missing fibers calls for.
#[derive(Debug, Clone, PartialEq)]
enum Plan {
    /// All ten fibers present.
    Full,
    /// Fibers of one collinear triple missing; `rest` is the other pair.
    Triple { triple: [usize; 3], rest: [usize; 2] },
    /// Two collinear triples through the shared vertex `apex`.
    TwoTriples { apex: usize, others: [usize; 4] },
    /// Four collinear points.
    Quadruple { quad: [usize; 4] },
}

fn plan_of(table: &DirectionTable) -> Result<Plan> {
    let missing: Vec<(usize, usize)> = table
        .missing_lines()
        .iter()
        .map(|l| l.zero_based())
        .collect();
    let inconsistent = || Error::InconsistentDirections { residual: f64::INFINITY };
    let vertices = |pairs: &[(usize, usize)]| {
        let mut v: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    match missing.len() {
        0 => Ok(Plan::Full),
        3 => {
            let v = vertices(&missing);
            if v.len() != 3 {
                return Err(inconsistent());
            }
            let rest: Vec<usize> = (0..5).filter(|x| !v.contains(x)).collect();
            Ok(Plan::Triple {
                triple: [v[0], v[1], v[2]],
                rest: [rest[0], rest[1]],
            })
        }
        4 => {
            let apex = (0..5)
                .find(|&a| missing.iter().all(|&(i, j)| i == a || j == a))
                .ok_or_else(inconsistent)?;
            let others: Vec<usize> = (0..5).filter(|&x| x != apex).collect();
            Ok(Plan::TwoTriples {
                apex,
                others: [others[0], others[1], others[2], others[3]],
            })
        }
        6 => {
            let v = vertices(&missing);
            if v.len() != 4 {
                return Err(inconsistent());
            }
            Ok(Plan::Quadruple {
                quad: [v[0], v[1], v[2], v[3]],
            })
        }
        _ => Err(inconsistent()),
    }
}

/// A configuration built from one choice of candidate axes.
#[derive(Debug, Clone)]
struct Built {
    points: [Vec3; 5],
    /// Largest intersection or consistency defect, relative to the diameter.
    residual: f64,
}

fn diameter5(p: &[Vec3; 5]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..5 {
        for j in i + 1..5 {
            d = d.max((p[i] - p[j]).norm());
        }
    }
    d
}

fn offset(p: &[Vec3; 5], i: usize, j: usize, axis: &Vec3) -> f64 {
    (p[j] - p[i]).cross(axis).norm()
}

/// Cartesian product of candidate lists.
fn choices(lists: &[Vec<Vec3>]) -> Vec<Vec<Vec3>> {
    let mut out = vec![Vec::new()];
    for l in lists {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                l.iter().map(move |a| {
                    let mut p = prefix.clone();
                    p.push(*a);
                    p
                })
            })
            .collect();
    }
    out
}

fn finish(points: [Vec3; 5], raw: f64, checks: &[(usize, usize, Vec<Vec3>)]) -> Built {
    let diam = diameter5(&points);
    let mut residual = raw / diam;
    for (i, j, axes) in checks {
        let best = axes
            .iter()
            .map(|a| offset(&points, *i, *j, a))
            .fold(f64::INFINITY, f64::min);
        if best.is_finite() {
            residual = residual.max(best / diam);
        }
    }
    Built { points, residual }
}

fn build_full(table: &DirectionTable) -> Vec<Built> {
    let used = [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (2, 4), (3, 4)];
    let lists: Vec<Vec<Vec3>> = used.iter().map(|&(i, j)| table.candidates(i, j)).collect();
    let checks: Vec<(usize, usize, Vec<Vec3>)> = [(0, 3), (0, 4), (1, 4)]
        .iter()
        .map(|&(i, j)| (i, j, table.candidates(i, j)))
        .collect();
    choices(&lists)
        .into_iter()
        .filter_map(|ax| {
            let mut c = [Vec3::zeros(); 5];
            c[1] = ax[0];
            let (p2, r2) = intersect_vec(&c[0], &ax[1], &c[1], &ax[2])?;
            c[2] = p2;
            let (p3, r3) = intersect_vec(&c[1], &ax[3], &c[2], &ax[4])?;
            c[3] = p3;
            let (p4, r4) = intersect_vec(&c[2], &ax[5], &c[3], &ax[6])?;
            c[4] = p4;
            Some(finish(c, r2.max(r3).max(r4), &checks))
        })
        .collect()
}

fn build_triple(table: &DirectionTable, triple: [usize; 3], rest: [usize; 2]) -> Vec<Built> {
    let [l, m] = rest;
    let mut lists = vec![table.candidates(l, m)];
    for &x in &triple {
        lists.push(table.candidates(l.min(x), l.max(x)));
        lists.push(table.candidates(m.min(x), m.max(x)));
    }
    choices(&lists)
        .into_iter()
        .filter_map(|ax| {
            let mut c = [Vec3::zeros(); 5];
            c[m] = ax[0];
            let mut raw: f64 = 0.0;
            for (n, &x) in triple.iter().enumerate() {
                let (p, r) = intersect_vec(&c[l], &ax[1 + 2 * n], &c[m], &ax[2 + 2 * n])?;
                c[x] = p;
                raw = raw.max(r);
            }
            let aligned = line_deviation(&triple.map(|x| c[x]), 1.0);
            Some(finish(c, raw.max(aligned), &[]))
        })
        .collect()
}

fn build_two_triples(table: &DirectionTable, apex: usize, others: [usize; 4]) -> Vec<Built> {
    let [o0, o1, o2, o3] = others;
    let partitions = [([o0, o1], [o2, o3]), ([o0, o2], [o1, o3]), ([o0, o3], [o1, o2])];
    let cand = |i: usize, j: usize| table.candidates(i.min(j), i.max(j));
    let mut out = Vec::new();
    for ([b, c], [d, e]) in partitions {
        let lists = vec![cand(d, e), cand(b, c), cand(b, d), cand(c, d), cand(b, e), cand(c, e)];
        for ax in choices(&lists) {
            let (dir1, dir2, bd, cd, be) = (ax[0], ax[1], ax[2], ax[3], ax[4]);
            let mut p = [Vec3::zeros(); 5];
            p[d] = bd;
            let Some((pc, r1)) = intersect_vec(&p[b], &dir1, &p[d], &cd) else { continue };
            let Some((pe, r2)) = intersect_vec(&p[d], &dir2, &p[b], &be) else { continue };
            let Some((pa, r3)) = intersect_vec(&p[b], &dir1, &p[d], &dir2) else { continue };
            p[c] = pc;
            p[e] = pe;
            p[apex] = pa;
            out.push(finish(p, r1.max(r2).max(r3), &[(c.min(e), c.max(e), vec![ax[5]])]));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignEntry {
    pub line: LineId,
    /// Sign `s` with `A_j - A_i` a positive multiple of `s` times the table axis.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignResolution {
    pub signs: Vec<SignEntry>,
    pub residual: f64,
    /// Flipping every sign gives the point reflection of the result, which
    /// produces the same camera; the representative here is arbitrary.
    pub global_flip_ambiguous: bool,
}

/// Threshold on the relative construction residual.
pub const CONSTRUCTION_TOL: f64 = 1e-6;

fn read_signs(table: &DirectionTable, points: &[Vec3; 5]) -> Vec<SignEntry> {
    table
        .entries
        .iter()
        .filter_map(|e| {
            let axis = e.axis?;
            let (i, j) = e.line.zero_based();
            let d = (points[j] - points[i]).dot(axis.as_vec());
            Some(SignEntry {
                line: e.line,
                sign: if d >= 0.0 { 1 } else { -1 },
            })
        })
        .collect()
}

fn build_all(table: &DirectionTable) -> Result<(Plan, Vec<Built>)> {
    let plan = plan_of(table)?;
    let built = match &plan {
        Plan::Full => build_full(table),
        Plan::Triple { triple, rest } => build_triple(table, *triple, *rest),
        Plan::TwoTriples { apex, others } => build_two_triples(table, *apex, *others),
        Plan::Quadruple { .. } => Vec::new(),
    };
    Ok((plan, built))
}

/// Builds the configuration from unsigned axes and reads the signs of the
/// pair directions off the result.
///
/// Every construction step intersects lines, which do not depend on the
/// sign of their direction vectors, so the construction residual is the
/// same for all sign assignments of the consumed axes; the search over
/// assignments reduces to the search over candidate axes done here.
pub fn resolve_signs(table: &DirectionTable) -> Result<SignResolution> {
    let (_, built) = build_all(table)?;
    let best = built
        .into_iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .ok_or(Error::InconsistentDirections { residual: f64::INFINITY })?;
    if !(best.residual <= CONSTRUCTION_TOL) {
        return Err(Error::InconsistentDirections { residual: best.residual });
    }
    Ok(SignResolution {
        signs: read_signs(table, &best.points),
        residual: best.residual,
        global_flip_ambiguous: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    /// `None` in `CrossRatioOnly` mode.
    pub config: Option<PointConfig>,
    pub sign_assignment: Vec<SignEntry>,
    pub intersection_residual: f64,
    pub mode: ReconstructionMode,
    /// Largest pointwise distance between the oracle and the camera of
    /// `config` on the probe directions.
    pub camera_residual: f64,
    /// Zero-based indices of the collinear quadruple in `CrossRatioOnly` mode.
    pub collinear_quadruple: Option<[usize; 4]>,
    /// Cross ratio of the collinear quadruple in `CrossRatioOnly` mode.
    pub cross_ratio: Option<Complex64>,
    /// Further candidates, pairwise not similar to each other or to
    /// `config`, whose cameras also match the oracle.
    pub camera_twins: Vec<PointConfig>,
    pub table: DirectionTable,
}

/// Required pointwise agreement between the oracle and the result.
pub const CAMERA_MATCH_TOL: f64 = 1e-6;

const PROBES: usize = 64;

/// Largest pointwise camera mismatch on a fixed probe grid.
pub fn camera_mismatch(oracle: &CameraOracle, cfg: &PointConfig) -> f64 {
    fibonacci_grid(PROBES, 0xc4ec)
        .iter()
        .filter_map(|e| {
            let a = oracle.eval(e).ok()?;
            let b = camera_eval(cfg, e).ok()?;
            Some(a.distance(&b))
        })
        .fold(0.0, f64::max)
}

fn is_constant(oracle: &CameraOracle) -> bool {
    let vals: Vec<M5Point> = fibonacci_grid(16, 0xc0de)
        .iter()
        .filter_map(|e| oracle.eval(e).ok())
        .collect();
    vals.first()
        .is_some_and(|v0| vals.iter().all(|v| v.distance(v0) <= 1e-9))
}

fn quadruple_cross_ratio(oracle: &CameraOracle, quad: [usize; 4]) -> Result<Complex64> {
    for e in fibonacci_grid(16, 0xc405) {
        let Ok(v) = oracle.eval(&e) else { continue };
        let Ok(rep) = representative_tuple(&v) else { continue };
        let m: [P1Point; 4] = quad.map(|k| rep[k]);
        if let Ok(cr) = cross_ratio(&m) {
            if let Some(z) = cr.value() {
                return Ok(z);
            }
        }
    }
    Err(Error::DegenerateTuple)
}

/// Reconstructs a five-point configuration from its camera oracle.
pub fn reconstruct5(oracle: &CameraOracle) -> Result<ReconstructionResult> {
    reconstruct5_with(oracle, FiberOptions::default())
}

pub fn reconstruct5_with(oracle: &CameraOracle, opts: FiberOptions) -> Result<ReconstructionResult> {
    if is_constant(oracle) {
        return Err(Error::ConstantCamera);
    }
    let search = FiberSearch::new(oracle, opts)?;
    let (table, _) = search.table()?;
    let (plan, built) = build_all(&table)?;
    if let Plan::Quadruple { quad } = plan {
        let cr = quadruple_cross_ratio(oracle, quad)?;
        return Ok(ReconstructionResult {
            config: None,
            sign_assignment: Vec::new(),
            intersection_residual: 0.0,
            mode: ReconstructionMode::CrossRatioOnly,
            camera_residual: 0.0,
            collinear_quadruple: Some(quad),
            cross_ratio: Some(cr),
            camera_twins: Vec::new(),
            table,
        });
    }
    let mut matching: Vec<(f64, Built, PointConfig)> = Vec::new();
    let mut best_construction = f64::INFINITY;
    let mut best_mismatch = f64::INFINITY;
    for b in built {
        best_construction = best_construction.min(b.residual);
        if !(b.residual <= CONSTRUCTION_TOL) {
            continue;
        }
        let Ok(cfg) = PointConfig::new(b.points.to_vec()) else { continue };
        let mismatch = camera_mismatch(oracle, &cfg);
        best_mismatch = best_mismatch.min(mismatch);
        if mismatch <= CAMERA_MATCH_TOL {
            matching.push((mismatch, b, cfg));
        }
    }
    if matching.is_empty() {
        return Err(Error::InconsistentDirections {
            residual: if best_mismatch.is_finite() { best_mismatch } else { best_construction },
        });
    }
    matching.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.residual.total_cmp(&b.1.residual)));
    let mut classes: Vec<PointConfig> = Vec::new();
    for (_, _, c) in &matching {
        let known = classes
            .iter()
            .any(|k| fit_similarity(k, c).is_ok_and(|(_, r)| r <= CAMERA_MATCH_TOL));
        if !known {
            classes.push(c.clone());
        }
    }
    let camera_twins = classes.split_off(1);
    let (mismatch, b, cfg) = matching.swap_remove(0);
    let planar = plane_deviation(&cfg.points, cfg.diameter()) < CONSTRUCTION_TOL;
    let mode = match (&plan, planar) {
        (Plan::Full, false) => ReconstructionMode::Deg10,
        (Plan::Full, true) => ReconstructionMode::Planar5,
        (Plan::Triple { .. }, false) => ReconstructionMode::Deg8,
        (Plan::Triple { .. }, true) => ReconstructionMode::Planar4,
        _ => ReconstructionMode::Planar3,
    };
    Ok(ReconstructionResult {
        sign_assignment: read_signs(&table, &b.points),
        config: Some(cfg),
        intersection_residual: b.residual,
        mode,
        camera_residual: mismatch,
        collinear_quadruple: None,
        cross_ratio: None,
        camera_twins,
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtupleDistance {
    /// Zero-based index `k` of the point added to the anchors.
    pub index: usize,
    pub distance: ImageDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub planar: bool,
    /// Zero-based anchor indices.
    pub anchors: [usize; 4],
    pub subtuples: Vec<SubtupleDistance>,
    pub max_distance: f64,
    /// Residual of the global similarity (spatial) or affinity (planar) fit.
    pub fit_residual: f64,
    pub proper: Option<bool>,
    pub equivalent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceOptions {
    pub samples: usize,
    pub image_tol: f64,
    pub fit_tol: f64,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions {
            samples: 300,
            image_tol: 1e-7,
            fit_tol: 1e-9,
        }
    }
}

fn subsets4(n: usize) -> impl Iterator<Item = [usize; 4]> {
    (0..n).flat_map(move |a| {
        (a + 1..n).flat_map(move |b| (b + 1..n).flat_map(move |c| (c + 1..n).map(move |d| [a, b, c, d])))
    })
}

fn max_collinear(cfg: &PointConfig) -> usize {
    let diam = cfg.diameter();
    let n = cfg.len();
    let mut best = 2;
    for i in 0..n {
        for j in i + 1..n {
            let count = (0..n)
                .filter(|&k| line_deviation(&[cfg.points[i], cfg.points[j], cfg.points[k]], diam) < DEFAULT_TOL)
                .count();
            best = best.max(count);
        }
    }
    best
}

fn choose_anchors(cfg: &PointConfig, planar: bool) -> Option<[usize; 4]> {
    let diam = cfg.diameter();
    let no_three = |q: &[usize; 4]| {
        (0..4).all(|s| {
            let t: Vec<Vec3> = (0..4).filter(|&r| r != s).map(|r| cfg.points[q[r]]).collect();
            line_deviation(&t, diam) >= DEFAULT_TOL
        })
    };
    let pts = |q: &[usize; 4]| q.map(|k| cfg.points[k]);
    if planar {
        subsets4(cfg.len()).find(|q| no_three(q))
    } else {
        subsets4(cfg.len()).find(|q| plane_deviation(&pts(q), diam) >= DEFAULT_TOL && no_three(q))
    }
}

/// Compares configurations of `n >= 5` points through the cameras of the
/// five-point subtuples formed by four anchors and each remaining point,
/// and fits one global transformation.
pub fn verify_equivalence_n(a: &PointConfig, b: &PointConfig) -> Result<EquivalenceReport> {
    verify_equivalence_n_with(a, b, &EquivalenceOptions::default())
}

pub fn verify_equivalence_n_with(a: &PointConfig, b: &PointConfig, opts: &EquivalenceOptions) -> Result<EquivalenceReport> {
    let n = a.len();
    if n != b.len() || n < 5 {
        return Err(Error::PreconditionViolated("need two configurations of equal size n >= 5".into()));
    }
    if max_collinear(a) >= n - 1 || max_collinear(b) >= n - 1 {
        return Err(Error::PreconditionViolated(format!("{} points are collinear", n - 1)));
    }
    let planar = plane_deviation(&a.points, a.diameter()) < DEFAULT_TOL;
    let anchors = choose_anchors(a, planar)
        .ok_or_else(|| Error::PreconditionViolated("no admissible anchor quadruple".into()))?;
    let subtuples = (0..n)
        .filter(|k| !anchors.contains(k))
        .map(|k| {
            let idx = [anchors[0], anchors[1], anchors[2], anchors[3], k];
            let d = image_distance(&a.subset(&idx)?, &b.subset(&idx)?, opts.samples)?;
            Ok(SubtupleDistance { index: k, distance: d })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_distance = subtuples.iter().map(|s| s.distance.distance).fold(0.0, f64::max);
    let (fit_residual, proper) = if planar {
        match fit_affinity(a, b) {
            Ok((_, r)) => (r, None),
            Err(Error::NotPlanar) => (f64::INFINITY, None),
            Err(e) => return Err(e),
        }
    } else {
        let (t, r) = fit_similarity(a, b)?;
        (r, Some(t.proper))
    };
    Ok(EquivalenceReport {
        planar,
        anchors,
        subtuples,
        max_distance,
        fit_residual,
        proper,
        equivalent: max_distance <= opts.image_tol && fit_residual <= opts.fit_tol,
    })
}

/// Singular values of the matrix of found axes, descending; a vanishing
/// third value indicates a planar source.
pub fn axis_spread(table: &DirectionTable) -> [f64; 3] {
    let axes: Vec<Vec3> = table.entries.iter().filter_map(|e| e.axis.map(|a| a.into_vec())).collect();
    if axes.is_empty() {
        return [0.0; 3];
    }
    let m = DMatrix::from_fn(axes.len(), 3, |r, c| axes[r][c]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.resize(3, 0.0);
    [sv[0], sv[1], sv[2]]
}
