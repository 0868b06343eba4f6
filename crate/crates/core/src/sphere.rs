//! Deterministic direction grids and small nonlinear least-squares problems
//! on the unit sphere.

use nalgebra::{Matrix2, Matrix3, Quaternion, UnitQuaternion, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{Direction, Vec3};

/// Uniformly distributed rotation drawn from `rng`.
pub fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    loop {
        let q = Quaternion::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        if q.norm() > 1e-6 {
            return UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
        }
    }
}

pub fn random_direction(rng: &mut impl Rng) -> Direction {
    loop {
        let v = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        if let Ok(d) = Direction::from_vector(v) {
            if v.norm() > 1e-6 {
                return d;
            }
        }
    }
}

/// `n` points of the spherical Fibonacci lattice, rotated by a random
/// rotation derived from `seed`; the same `(n, seed)` gives identical output.
pub fn fibonacci_grid(n: usize, seed: u64) -> Vec<Direction> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let rot = random_rotation(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let a = golden * k as f64;
            Direction::from_vector(rot * Vec3::new(r * a.cos(), r * a.sin(), z))
                .expect("lattice point is a unit vector")
        })
        .collect()
}

/// Orthonormal basis of the tangent plane at `d`.
pub fn tangent_basis(d: &Direction) -> (Vec3, Vec3) {
    let v = d.as_vec();
    let k = (0..3)
        .min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .unwrap_or(0);
    let e1 = v.cross(&Vec3::ith(k, 1.0)).normalize();
    let e2 = v.cross(&e1);
    (e1, e2)
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Finite-difference step in the tangent chart, in radians.
    pub fd_step: f64,
    /// Stop when the cost `½‖r‖²` drops below this value.
    pub cost_floor: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iter: 60,
            fd_step: 1e-7,
            cost_floor: 1e-32,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmResult {
    pub point: Direction,
    /// `‖r‖` at `point`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn chart(d: &Direction, basis: &(Vec3, Vec3), u: Vector2<f64>) -> Direction {
    Direction::from_vector(d.as_vec() + basis.0 * u.x + basis.1 * u.y).unwrap_or(*d)
}

fn sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Levenberg-Marquardt minimization of `‖r(ε)‖²` over the sphere, working
/// in a tangent chart re-centered after every accepted step. The Jacobian
/// is formed by central differences.
pub fn minimize_on_sphere(
    r: impl Fn(&Direction) -> Vec<f64>,
    start: Direction,
    opts: &LmOptions,
) -> LmResult {
    let mut x = start;
    let mut rx = r(&x);
    let mut cost = sq(&rx);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        if cost <= opts.cost_floor {
            converged = true;
            break;
        }
        let basis = tangent_basis(&x);
        let h = opts.fd_step;
        let cols: Vec<Vec<f64>> = [Vector2::new(h, 0.0), Vector2::new(0.0, h)]
            .iter()
            .map(|du| {
                let plus = r(&chart(&x, &basis, *du));
                let minus = r(&chart(&x, &basis, -du));
                plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect()
            })
            .collect();
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for k in 0..rx.len() {
            let row = Vector2::new(cols[0][k], cols[1][k]);
            jtj += row * row.transpose();
            jtr += row * rx[k];
        }
        if jtr.norm() <= 1e-300 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let damped = jtj + Matrix2::from_diagonal(&jtj.diagonal().map(|v| v.max(1e-30))) * lambda;
            let Some(step) = damped.try_inverse().map(|m| -(m * jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let candidate = chart(&x, &basis, step);
            let rc = r(&candidate);
            let cc = sq(&rc);
            if cc < cost {
                let rel = (cost - cc) / cost.max(1e-300);
                x = candidate;
                rx = rc;
                cost = cc;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if step.norm() < 1e-15 || rel < 1e-14 {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no descent direction left at machine precision
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    LmResult {
        point: x,
        residual: cost.sqrt(),
        iterations,
        converged,
    }
}
