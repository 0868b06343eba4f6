//! Necessary conditions for a pentapod to have mobility at least two.
//!
//! A pentapod of mobility `>= 2` has one of four geometric properties:
//! (a) platform and base are similar, (b) both are planar and affine
//! equivalent, (c) `m` platform points are collinear while the remaining
//! base points coincide, or (d) both split as three points on a line plus
//! two on a parallel line, with the same index split. For pentapods with no
//! four aligned anchors, (a) and (b) arise from platform and base having
//! the same camera image; that comparison is reported alongside.
//!
//! Anchors of one side may coincide, as condition (c) requires, so the
//! anchor sets are checked for finiteness only.

use serde::{Deserialize, Serialize};

use crate::camera::{image_distance, ImageDistance};
use crate::error::{Error, Result};
use crate::geometry::{
    classify_default, fit_affinity_tol, fit_similarity, line_deviation, line_direction, plane_deviation,
    AffinityTransform, ConfigTag, Direction, PointConfig, SimilarityTransform, Vec3,
};

/// Default relative tolerance of the four conditions.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Image distance below which two cameras count as equal.
pub const CAMERA_EQUAL_TOL: f64 = 1e-7;

/// Directions sampled per camera for the image comparison.
pub const CAMERA_SAMPLES: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pentapod {
    pub platform: PointConfig,
    pub base: PointConfig,
    /// Carried for downstream use; the conditions ignore them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leg_lengths: Option<[f64; 5]>,
}

fn anchors(points: Vec<Vec3>, side: &str) -> Result<PointConfig> {
    if points.len() != 5 {
        return Err(Error::PreconditionViolated(format!("the {side} needs 5 anchor points, got {}", points.len())));
    }
    if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::PreconditionViolated(format!("non-finite {side} coordinate")));
    }
    Ok(PointConfig { label: None, points })
}

impl Pentapod {
    /// Anchor sets may contain coincident points.
    pub fn new(platform: Vec<Vec3>, base: Vec<Vec3>, leg_lengths: Option<[f64; 5]>) -> Result<Self> {
        if let Some(d) = leg_lengths {
            if d.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(Error::PreconditionViolated("leg lengths must be positive".into()));
            }
        }
        Ok(Pentapod {
            platform: anchors(platform, "platform")?,
            base: anchors(base, "base")?,
            leg_lengths,
        })
    }

    pub fn from_arrays(platform: &[[f64; 3]], base: &[[f64; 3]]) -> Result<Self> {
        let v = |p: &[[f64; 3]]| p.iter().map(|q| Vec3::new(q[0], q[1], q[2])).collect();
        Pentapod::new(v(platform), v(base), None)
    }

    /// Re-validates a deserialized value.
    pub fn validated(self) -> Result<Self> {
        let mut out = Pentapod::new(self.platform.points, self.base.points, self.leg_lengths)?;
        out.platform.label = self.platform.label;
        out.base.label = self.base.label;
        Ok(out)
    }

    /// The pentapod with platform and base exchanged.
    pub fn swapped(&self) -> Self {
        Pentapod {
            platform: self.base.clone(),
            base: self.platform.clone(),
            leg_lengths: self.leg_lengths,
        }
    }
}

fn diam(points: &[Vec3]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d = d.max((points[i] - points[j]).norm());
        }
    }
    d
}

/// Deviation of `idx` from a common line, relative to `scale`; sets of at
/// most two points are collinear.
fn collinearity(points: &[Vec3], idx: &[usize], scale: f64) -> f64 {
    if idx.len() <= 2 || scale == 0.0 {
        return 0.0;
    }
    let sub: Vec<Vec3> = idx.iter().map(|&i| points[i]).collect();
    line_deviation(&sub, scale)
}

fn coincidence(points: &[Vec3], idx: &[usize], scale: f64) -> f64 {
    let sub: Vec<Vec3> = idx.iter().map(|&i| points[i]).collect();
    let d = diam(&sub);
    if d == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        d / scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondA {
    pub holds: bool,
    pub transform: Option<SimilarityTransform>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondB {
    pub holds: bool,
    pub platform_planar: bool,
    pub base_planar: bool,
    pub transform: Option<AffinityTransform>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondC {
    pub holds: bool,
    pub m: Option<usize>,
    /// Zero-based indices: the `m` collinear ones first, then the
    /// coincident ones.
    pub index_permutation: Option<[usize; 5]>,
    /// Whether the witness needs platform and base interchanged.
    pub swapped: bool,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelLines {
    pub platform: Direction,
    pub base: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondD {
    pub holds: bool,
    /// Zero-based indices of the aligned triple and the parallel pair.
    pub partition: Option<([usize; 3], [usize; 2])>,
    /// Directions of the triple lines `g` and `G`.
    pub lines: Option<ParallelLines>,
    /// Largest of the four collinearity and parallelism residuals.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraCheck {
    pub holds: bool,
    pub distance: Option<ImageDistance>,
    /// Why the comparison was not run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "mobility >= 2 possible")]
    Possible,
    #[serde(rename = "mobility >= 2 excluded by theorem")]
    Excluded,
}

/// Printed with every report.
pub const NECESSITY_NOTE: &str = "conditions (a)-(d) are necessary, not sufficient, for mobility >= 2";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub cond_a: CondA,
    pub cond_b: CondB,
    pub cond_c: CondC,
    pub cond_d: CondD,
    pub camera_images_equal: CameraCheck,
    pub verdict: Verdict,
    pub note: String,
    pub tol: f64,
}

impl ConditionReport {
    pub fn holding(&self) -> Vec<char> {
        [
            ('a', self.cond_a.holds),
            ('b', self.cond_b.holds),
            ('c', self.cond_c.holds),
            ('d', self.cond_d.holds),
        ]
        .iter()
        .filter(|x| x.1)
        .map(|x| x.0)
        .collect()
    }
}

pub fn check_condition_a(pp: &Pentapod, tol: f64) -> CondA {
    match fit_similarity(&pp.platform, &pp.base) {
        Ok((t, r)) => CondA {
            holds: r <= tol,
            transform: Some(t),
            residual: Some(r),
        },
        Err(_) => CondA {
            holds: false,
            transform: None,
            residual: None,
        },
    }
}

fn planar(cfg: &PointConfig, tol: f64) -> bool {
    let scale = cfg.diameter();
    scale == 0.0 || plane_deviation(&cfg.points, scale) <= tol
}

pub fn check_condition_b(pp: &Pentapod, tol: f64) -> CondB {
    let platform_planar = planar(&pp.platform, tol);
    let base_planar = planar(&pp.base, tol);
    let fit = if platform_planar && base_planar {
        fit_affinity_tol(&pp.platform, &pp.base, tol).ok()
    } else {
        None
    };
    match fit {
        Some((t, r)) => CondB {
            holds: r <= tol,
            platform_planar,
            base_planar,
            transform: Some(t),
            residual: Some(r),
        },
        None => CondB {
            holds: false,
            platform_planar,
            base_planar,
            transform: None,
            residual: None,
        },
    }
}

/// `k`-subsets of `0..n` in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

fn condition_c_one_way(collinear_side: &[Vec3], coincident_side: &[Vec3], tol: f64) -> Option<(usize, [usize; 5], f64)> {
    let s1 = diam(collinear_side);
    let s2 = diam(coincident_side);
    for m in (0..=5).rev() {
        for idx in subsets(5, m) {
            let rest: Vec<usize> = (0..5).filter(|i| !idx.contains(i)).collect();
            let r = collinearity(collinear_side, &idx, s1).max(coincidence(coincident_side, &rest, s2));
            if r <= tol {
                let mut perm = [0; 5];
                for (slot, i) in idx.iter().chain(&rest).enumerate() {
                    perm[slot] = *i;
                }
                return Some((m, perm, r));
            }
        }
    }
    None
}

/// Searches `m` from 5 down, subsets in lexicographic order, platform
/// collinear first and then the interchanged roles.
pub fn check_condition_c(pp: &Pentapod, tol: f64) -> CondC {
    let sides = [(&pp.platform, &pp.base, false), (&pp.base, &pp.platform, true)];
    for (p, q, swapped) in sides {
        if let Some((m, perm, r)) = condition_c_one_way(&p.points, &q.points, tol) {
            return CondC {
                holds: true,
                m: Some(m),
                index_permutation: Some(perm),
                swapped,
                residual: Some(r),
            };
        }
    }
    CondC {
        holds: false,
        m: None,
        index_permutation: None,
        swapped: false,
        residual: None,
    }
}

/// Residual of `triple` on a line with `pair` on a parallel line, and the
/// line's direction. Coincident pair points lie on every parallel.
fn split_residual(points: &[Vec3], triple: &[usize; 3], pair: &[usize; 2]) -> (f64, Option<Vec3>) {
    let scale = diam(points);
    if scale == 0.0 {
        return (0.0, None);
    }
    let sub: Vec<Vec3> = triple.iter().map(|&i| points[i]).collect();
    let aligned = line_deviation(&sub, scale);
    let u = line_direction(&sub);
    let d = points[pair[1]] - points[pair[0]];
    let parallel = d.cross(&u).norm() / scale;
    (aligned.max(parallel), Some(u))
}

pub fn check_condition_d(pp: &Pentapod, tol: f64) -> CondD {
    let mut best = CondD {
        holds: false,
        partition: None,
        lines: None,
        residual: None,
    };
    for t in subsets(5, 3) {
        let triple = [t[0], t[1], t[2]];
        let rest: Vec<usize> = (0..5).filter(|i| !t.contains(i)).collect();
        let pair = [rest[0], rest[1]];
        let (rp, up) = split_residual(&pp.platform.points, &triple, &pair);
        let (rb, ub) = split_residual(&pp.base.points, &triple, &pair);
        let r = rp.max(rb);
        if best.residual.is_none_or(|b| r < b) {
            let lines = match (up.map(Direction::from_vector), ub.map(Direction::from_vector)) {
                (Some(Ok(platform)), Some(Ok(base))) => Some(ParallelLines { platform, base }),
                _ => None,
            };
            best = CondD {
                holds: r <= tol,
                partition: Some((triple, pair)),
                lines,
                residual: Some(r),
            };
        }
        if best.holds {
            break;
        }
    }
    if !best.holds {
        best.lines = None;
    }
    best
}

fn has_coincidence(cfg: &PointConfig) -> bool {
    PointConfig::new(cfg.points.clone()).is_err()
}

/// Compares the camera images of platform and base when both cameras are
/// defined and non-constant.
pub fn camera_check(pp: &Pentapod) -> CameraCheck {
    let skip = |why: &str| CameraCheck {
        holds: false,
        distance: None,
        skipped: Some(why.into()),
    };
    if has_coincidence(&pp.platform) || has_coincidence(&pp.base) {
        return skip("anchor points coincide");
    }
    let constant = |c: &PointConfig| classify_default(c).is_ok_and(|k| k.tag == ConfigTag::AllCollinear);
    if constant(&pp.platform) || constant(&pp.base) {
        return skip("a camera is constant");
    }
    match image_distance(&pp.platform, &pp.base, CAMERA_SAMPLES) {
        Ok(d) => CameraCheck {
            holds: d.distance <= CAMERA_EQUAL_TOL,
            distance: Some(d),
            skipped: None,
        },
        Err(e) => skip(&e.to_string()),
    }
}

/// Runs all four conditions and the camera comparison.
pub fn necessary_condition_report(pp: &Pentapod) -> ConditionReport {
    necessary_condition_report_tol(pp, DEFAULT_TOL)
}

pub fn necessary_condition_report_tol(pp: &Pentapod, tol: f64) -> ConditionReport {
    let cond_a = check_condition_a(pp, tol);
    let cond_b = check_condition_b(pp, tol);
    let cond_c = check_condition_c(pp, tol);
    let cond_d = check_condition_d(pp, tol);
    let any = cond_a.holds || cond_b.holds || cond_c.holds || cond_d.holds;
    ConditionReport {
        cond_a,
        cond_b,
        cond_c,
        cond_d,
        camera_images_equal: camera_check(pp),
        verdict: if any { Verdict::Possible } else { Verdict::Excluded },
        note: NECESSITY_NOTE.into(),
        tol,
    }
}
