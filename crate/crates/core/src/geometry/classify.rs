use serde::{Deserialize, Serialize};

use super::{centered_svd, Direction, PointConfig, Vec3};
use crate::error::{Error, Result};

/// Default relative threshold for collinearity and coplanarity tests.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Width of the band around the tolerance inside which a classification is
/// reported as ambiguous.
const AMBIGUITY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConfigTag {
    SpatialGeneric,
    SpatialFourCoplanar,
    SpatialThreeCollinear,
    PlanarGeneric,
    PlanarThreeCollinear,
    PlanarThreePlusThree,
    PlanarFourCollinear,
    AllCollinear,
}

impl ConfigTag {
    pub fn is_planar(self) -> bool {
        !matches!(
            self,
            ConfigTag::SpatialGeneric | ConfigTag::SpatialFourCoplanar | ConfigTag::SpatialThreeCollinear
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigClass {
    pub tag: ConfigTag,
    /// Every collinear index triple `(i, j, k)`, zero-based, `i < j < k`.
    pub collinear_triples: Vec<[usize; 3]>,
    /// Maximal collinear subsets of size at least three.
    pub collinear_sets: Vec<Vec<usize>>,
    /// A collinear triple together with the complementary pair, when the pair
    /// spans a line parallel to the triple's line.
    pub parallel_split: Option<([usize; 3], [usize; 2])>,
    pub plane_normal: Option<Direction>,
}

/// Deviation of a point set from its best-fit line, relative to `scale`.
pub(crate) fn line_deviation(points: &[Vec3], scale: f64) -> f64 {
    centered_svd(points).0[1] / scale
}

/// Deviation of a point set from its best-fit plane, relative to `scale`.
pub(crate) fn plane_deviation(points: &[Vec3], scale: f64) -> f64 {
    centered_svd(points).0[2] / scale
}

/// Unit direction of the best-fit line of `points`.
pub(crate) fn line_direction(points: &[Vec3]) -> Vec3 {
    centered_svd(points).1.column(0).into_owned()
}

/// Classifies a configuration by its collinear and coplanar subsets.
///
/// A subset is collinear (coplanar) when the second (third) singular value
/// of its centered coordinates, divided by the diameter of the whole
/// configuration, is below `tol`. If the tag changes when `tol` is divided
/// or multiplied by ten the result is [`Error::ToleranceAmbiguity`].
pub fn classify(cfg: &PointConfig, tol: f64) -> Result<ConfigClass> {
    if !(tol > 0.0) {
        return Err(Error::PreconditionViolated("tolerance must be positive".into()));
    }
    let strict = classify_at(cfg, tol / AMBIGUITY_FACTOR);
    let loose = classify_at(cfg, tol * AMBIGUITY_FACTOR);
    if strict.tag != loose.tag {
        return Err(Error::ToleranceAmbiguity {
            strict: strict.tag,
            loose: loose.tag,
        });
    }
    Ok(classify_at(cfg, tol))
}

pub fn classify_default(cfg: &PointConfig) -> Result<ConfigClass> {
    classify(cfg, DEFAULT_TOL)
}

fn classify_at(cfg: &PointConfig, tol: f64) -> ConfigClass {
    let pts = &cfg.points;
    let n = pts.len();
    let diam = cfg.diameter();
    let pick = |idx: &[usize]| idx.iter().map(|&i| pts[i]).collect::<Vec<_>>();

    let mut triples = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if line_deviation(&pick(&[i, j, k]), diam) < tol {
                    triples.push([i, j, k]);
                }
            }
        }
    }

    let mut sets: Vec<Vec<usize>> = Vec::new();
    for t in &triples {
        if sets.iter().any(|s| t.iter().all(|i| s.contains(i))) {
            continue;
        }
        let mut set = t.to_vec();
        for x in 0..n {
            if set.contains(&x) {
                continue;
            }
            let mut trial = set.clone();
            trial.push(x);
            if line_deviation(&pick(&trial), diam) < tol {
                set = trial;
            }
        }
        set.sort_unstable();
        sets.push(set);
    }

    let (sv, v) = centered_svd(pts);
    let coplanar = sv[2] / diam < tol;
    let all_collinear = sv[1] / diam < tol;
    let plane_normal = if coplanar && !all_collinear {
        Direction::from_vector(v.column(2).into_owned()).ok()
    } else {
        None
    };

    let parallel_split = if n == 5 {
        find_parallel_split(pts, &triples, diam, tol)
    } else {
        None
    };

    let max_set = sets.iter().map(Vec::len).max().unwrap_or(0);
    let tag = if all_collinear {
        ConfigTag::AllCollinear
    } else if coplanar {
        if max_set >= 4 {
            ConfigTag::PlanarFourCollinear
        } else if sets.len() >= 2 {
            ConfigTag::PlanarThreePlusThree
        } else if sets.len() == 1 {
            ConfigTag::PlanarThreeCollinear
        } else {
            ConfigTag::PlanarGeneric
        }
    } else if !sets.is_empty() {
        ConfigTag::SpatialThreeCollinear
    } else if has_coplanar_quadruple(pts, diam, tol) {
        ConfigTag::SpatialFourCoplanar
    } else {
        ConfigTag::SpatialGeneric
    };

    ConfigClass {
        tag,
        collinear_triples: triples,
        collinear_sets: sets,
        parallel_split,
        plane_normal,
    }
}

fn has_coplanar_quadruple(pts: &[Vec3], diam: f64, tol: f64) -> bool {
    let n = pts.len();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    if plane_deviation(&[pts[a], pts[b], pts[c], pts[d]], diam) < tol {
                        return true;
                    }
                }
            }
        }
    }
    false
}

fn find_parallel_split(
    pts: &[Vec3],
    triples: &[[usize; 3]],
    diam: f64,
    tol: f64,
) -> Option<([usize; 3], [usize; 2])> {
    for t in triples {
        let rest: Vec<usize> = (0..5).filter(|i| !t.contains(i)).collect();
        let dir = line_direction(&[pts[t[0]], pts[t[1]], pts[t[2]]]);
        let pair = pts[rest[1]] - pts[rest[0]];
        if pair.cross(&dir).norm() / diam < tol {
            return Some((*t, [rest[0], rest[1]]));
        }
    }
    None
}
