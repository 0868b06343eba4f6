#![allow(dead_code)]

use moebius_core::exact::RationalConfig;
use moebius_core::geometry::{classify_default, ConfigTag, PointConfig, Vec3};
use moebius_core::sphere::random_rotation;
use rand::Rng;
use rand_distr::StandardNormal;

/// One integer fixture per configuration class, with its tag.
pub const CLASS_FIXTURES: [(ConfigTag, [[i64; 3]; 5]); 8] = [
    (ConfigTag::SpatialGeneric, [[0, 0, 0], [3, 1, 0], [1, 4, 1], [0, 2, 5], [2, 3, 3]]),
    (ConfigTag::SpatialFourCoplanar, [[0, 0, 1], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]]),
    (ConfigTag::SpatialThreeCollinear, [[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0], [0, 1, 1]]),
    (ConfigTag::PlanarGeneric, [[0, 0, 0], [2, 0, 0], [0, 3, 0], [3, 2, 0], [1, 5, 0]]),
    (ConfigTag::PlanarThreeCollinear, [[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0], [1, 2, 0]]),
    (ConfigTag::PlanarThreePlusThree, [[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0], [0, 3, 0]]),
    (ConfigTag::PlanarFourCollinear, [[0, 0, 0], [1, 0, 0], [2, 0, 0], [4, 0, 0], [1, 1, 0]]),
    (ConfigTag::AllCollinear, [[0, 0, 0], [1, 1, 1], [2, 2, 2], [3, 3, 3], [4, 4, 4]]),
];

pub fn int_config(p: &[[i64; 3]]) -> PointConfig {
    RationalConfig::from_ints(p).to_config().unwrap()
}

pub fn cfg(p: &[[f64; 3]]) -> PointConfig {
    PointConfig::from_arrays(p).unwrap()
}

pub fn gaussian_vec(rng: &mut impl Rng) -> Vec3 {
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random configuration of `n` points whose class is `SpatialGeneric` for
/// `n = 5`; for other `n`, no four points are coplanar.
pub fn random_spatial(rng: &mut impl Rng, n: usize) -> PointConfig {
    loop {
        let pts: Vec<Vec3> = (0..n).map(|_| gaussian_vec(rng)).collect();
        let Ok(c) = PointConfig::new(pts) else { continue };
        let generic = (0..n).all(|skip| {
            let idx: Vec<usize> = (0..n).filter(|&k| k != skip).take(5).collect();
            idx.len() < 5
                || c.subset(&idx)
                    .ok()
                    .and_then(|s| classify_default(&s).ok())
                    .is_some_and(|k| k.tag == ConfigTag::SpatialGeneric)
        });
        if generic && min_volume(&c) > 1e-2 {
            return c;
        }
    }
}

/// Smallest absolute tetrahedron volume over all quadruples.
fn min_volume(c: &PointConfig) -> f64 {
    let p = &c.points;
    let n = p.len();
    let mut best = f64::INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            for d in b + 1..n {
                for e in d + 1..n {
                    let v = (p[b] - p[a]).cross(&(p[d] - p[a])).dot(&(p[e] - p[a])).abs() / 6.0;
                    best = best.min(v);
                }
            }
        }
    }
    best
}

/// Random planar configuration in the plane `z = 0` with no three points
/// nearly collinear.
pub fn random_planar(rng: &mut impl Rng) -> PointConfig {
    loop {
        let pts: Vec<Vec3> = (0..5)
            .map(|_| Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), 0.0))
            .collect();
        let Ok(c) = PointConfig::new(pts) else { continue };
        if classify_default(&c).is_ok_and(|k| k.tag == ConfigTag::PlanarGeneric) && min_area(&c) > 5e-2 {
            return c;
        }
    }
}

fn min_area(c: &PointConfig) -> f64 {
    let p = &c.points;
    let mut best = f64::INFINITY;
    for a in 0..5 {
        for b in a + 1..5 {
            for d in b + 1..5 {
                best = best.min((p[b] - p[a]).cross(&(p[d] - p[a])).norm() / 2.0);
            }
        }
    }
    best
}

/// `s · R · p + t` with a random rotation, scale and translation.
pub fn random_similar(rng: &mut impl Rng, c: &PointConfig) -> PointConfig {
    let r = random_rotation(rng);
    let s = rng.random_range(0.3..3.0);
    let t = gaussian_vec(rng);
    c.map(|p| r * p * s + t).unwrap()
}
