use moebius_core::geometry::Vec3;
use moebius_core::pentapod::*;
use moebius_core::sphere::random_rotation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn arrays(p: &[Vec3]) -> Vec<[f64; 3]> {
    p.iter().map(|v| [v.x, v.y, v.z]).collect()
}

fn rigid(points: &[[f64; 3]], seed: u64, scale: f64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = random_rotation(&mut rng);
    let t = Vec3::new(rng.random(), rng.random(), rng.random());
    let v: Vec<Vec3> = points.iter().map(|p| r * Vec3::new(p[0], p[1], p[2]) * scale + t).collect();
    arrays(&v)
}

fn random_points(rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    (0..5)
        .map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)])
        .collect()
}

const SPATIAL: [[f64; 3]; 5] = [[0.1, -0.4, 0.3], [1.2, 0.5, -0.7], [-0.8, 1.1, 0.2], [0.4, 0.9, 1.5], [-1.0, -0.6, -0.9]];
const PLANAR: [[f64; 3]; 5] = [[0.0, 0.0, 0.0], [2.0, 0.1, 0.0], [0.3, 1.7, 0.0], [1.9, 2.2, 0.0], [-1.0, 0.8, 0.0]];

pub fn planted_a() -> Pentapod {
    Pentapod::from_arrays(&SPATIAL, &rigid(&SPATIAL, 1, 2.0)).unwrap()
}

pub fn planted_b() -> Pentapod {
    let sheared: Vec<[f64; 3]> = PLANAR.iter().map(|p| [p[0] + 0.7 * p[1], 1.3 * p[1], 0.0]).collect();
    Pentapod::from_arrays(&PLANAR, &rigid(&sheared, 2, 1.0)).unwrap()
}

pub fn planted_c() -> Pentapod {
    let platform = [[0.0, 0.0, 0.0], [1.0, 0.5, 0.2], [3.0, 1.5, 0.6], [0.3, 1.1, -0.4], [-0.7, 0.2, 0.9]];
    let base = [[0.2, 0.1, 0.0], [1.4, -0.3, 0.5], [0.5, 1.2, 0.8], [-0.6, 0.4, 1.1], [-0.6, 0.4, 1.1]];
    Pentapod::from_arrays(&platform, &base).unwrap()
}

pub fn planted_d() -> Pentapod {
    let platform = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [2.0, 1.0, 0.0]];
    let base = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0], [1.0, 2.0, 0.0], [1.5, 2.0, 0.0]];
    Pentapod::from_arrays(&platform, &rigid(&base, 4, 1.0)).unwrap()
}

#[test]
fn planted_conditions_are_reported_exactly() {
    for (pp, expect) in [(planted_a(), 'a'), (planted_b(), 'b'), (planted_c(), 'c'), (planted_d(), 'd')] {
        let r = necessary_condition_report(&pp);
        assert_eq!(r.holding(), vec![expect], "{r:#?}");
        assert_eq!(r.verdict, Verdict::Possible);
    }
}

#[test]
fn similar_pair_has_equal_cameras() {
    let r = necessary_condition_report(&planted_a());
    assert!((r.cond_a.transform.as_ref().unwrap().scale - 2.0).abs() < 1e-12);
    assert!(r.camera_images_equal.holds, "{:?}", r.camera_images_equal);
    let r = necessary_condition_report(&planted_b());
    assert!(r.camera_images_equal.holds, "{:?}", r.camera_images_equal);
}

#[test]
fn identical_platform_and_base() {
    let pp = Pentapod::from_arrays(&SPATIAL, &SPATIAL).unwrap();
    let a = check_condition_a(&pp, DEFAULT_TOL);
    assert!(a.holds);
    assert!(a.residual.unwrap() < 1e-15);
}

#[test]
fn generic_pentapods_satisfy_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e7);
    for _ in 0..50 {
        let pp = Pentapod::from_arrays(&random_points(&mut rng), &random_points(&mut rng)).unwrap();
        let r = necessary_condition_report_tol(&pp, DEFAULT_TOL);
        assert!(r.holding().is_empty(), "{r:#?}");
        assert_eq!(r.verdict, Verdict::Excluded);
        assert!(r.cond_a.residual.unwrap() > 1e-3);
        assert!(!r.camera_images_equal.holds);
    }
}

#[test]
fn condition_b_needs_planarity_and_affinity() {
    let pp = Pentapod::from_arrays(&SPATIAL, &SPATIAL).unwrap();
    let b = check_condition_b(&pp, DEFAULT_TOL);
    assert!(!b.holds && !b.platform_planar);
    let warped: Vec<[f64; 3]> = PLANAR.iter().map(|p| [p[0] + 0.2 * p[1] * p[1], p[1], 0.0]).collect();
    let pp = Pentapod::from_arrays(&PLANAR, &warped).unwrap();
    let b = check_condition_b(&pp, DEFAULT_TOL);
    assert!(b.platform_planar && b.base_planar);
    assert!(!b.holds);
    assert!(b.residual.unwrap() > 1e-3);
}

#[test]
fn condition_c_witnesses() {
    let c = check_condition_c(&planted_c(), DEFAULT_TOL);
    assert!(c.holds);
    assert_eq!(c.m, Some(3));
    assert_eq!(c.index_permutation, Some([0, 1, 2, 3, 4]));
    assert!(!c.swapped);

    let line: Vec<[f64; 3]> = (0..5).map(|k| [k as f64, 2.0 * k as f64, -(k as f64)]).collect();
    let c = check_condition_c(&Pentapod::from_arrays(&line, &SPATIAL).unwrap(), DEFAULT_TOL);
    assert!(c.holds);
    assert_eq!(c.m, Some(5));

    let swapped = check_condition_c(&planted_c().swapped(), DEFAULT_TOL);
    assert!(swapped.holds && swapped.swapped);
    assert_eq!(swapped.m, Some(3));
}

#[test]
fn condition_d_needs_both_sides_and_matching_indices() {
    let d = check_condition_d(&planted_d(), DEFAULT_TOL);
    assert!(d.holds);
    assert_eq!(d.partition, Some(([0, 1, 2], [3, 4])));

    let pp = planted_d();
    let one_side = Pentapod::from_arrays(&arrays(&pp.platform.points), &SPATIAL).unwrap();
    assert!(!check_condition_d(&one_side, DEFAULT_TOL).holds);

    let mut base = arrays(&pp.base.points);
    base.swap(2, 3);
    let mismatched = Pentapod::from_arrays(&arrays(&pp.platform.points), &base).unwrap();
    assert!(!check_condition_d(&mismatched, DEFAULT_TOL).holds);
}

#[test]
fn conditions_survive_independent_rigid_motions() {
    for (k, pp) in [planted_a(), planted_b(), planted_c(), planted_d()].into_iter().enumerate() {
        let moved = Pentapod::from_arrays(
            &rigid(&arrays(&pp.platform.points), 10 + k as u64, 1.0),
            &rigid(&arrays(&pp.base.points), 20 + k as u64, 1.0),
        )
        .unwrap();
        let before = necessary_condition_report(&pp).holding();
        let after = necessary_condition_report(&moved).holding();
        assert_eq!(before, after);
    }
}

#[test]
fn interchange_keeps_condition_c() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut cases = vec![planted_a(), planted_c(), planted_d()];
    for _ in 0..5 {
        cases.push(Pentapod::from_arrays(&random_points(&mut rng), &random_points(&mut rng)).unwrap());
    }
    for pp in cases {
        assert_eq!(
            check_condition_c(&pp, DEFAULT_TOL).holds,
            check_condition_c(&pp.swapped(), DEFAULT_TOL).holds
        );
    }
}

#[test]
fn report_serializes_verdict_text() {
    let r = necessary_condition_report(&planted_c());
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["verdict"], "mobility >= 2 possible");
    assert_eq!(json["note"], NECESSITY_NOTE);
    assert!(json["camera_images_equal"]["skipped"].is_string());
}

#[test]
fn leg_lengths_must_be_positive() {
    let p: Vec<Vec3> = SPATIAL.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
    assert!(Pentapod::new(p.clone(), p.clone(), Some([1.0, 2.0, 0.0, 1.0, 1.0])).is_err());
    assert!(Pentapod::new(p.clone(), p, Some([1.0; 5])).is_ok());
}
