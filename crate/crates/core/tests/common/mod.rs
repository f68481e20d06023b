//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use logit_bandit::linalg::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain logistic slope written out from its definition.
pub fn slope(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, m, fm, flm);
    let right = simpson(m, fm, b, fb, frm);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a), f(b), f(m));
    let whole = simpson(a, fa, b, fb, fm);
    adaptive(&f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// `∫₀¹ μ̇(z1 + v(z2 − z1)) dv` by quadrature.
pub fn alpha_quadrature(z1: f64, z2: f64) -> f64 {
    integrate(|v| slope(z1 + v * (z2 - z1)), 0.0, 1.0, 1e-14)
}

/// Root of a sign-changing `f` on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimum of `f` over the points of a square grid with spacing `step`
/// that satisfy `feasible`.
pub fn grid_min_2d(f: impl Fn(&Vector) -> f64, feasible: impl Fn(&Vector) -> bool, half_width: f64, step: f64) -> (Vector, f64) {
    let n = (2.0 * half_width / step).round() as i64;
    let mut best = (Vector::zeros(2), f64::INFINITY);
    for i in 0..=n {
        for j in 0..=n {
            let p = Vector::from_row_slice(&[-half_width + i as f64 * step, -half_width + j as f64 * step]);
            if feasible(&p) {
                let v = f(&p);
                if v < best.1 {
                    best = (p, v);
                }
            }
        }
    }
    best
}

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut impl Rng, d: usize) -> Vector {
    loop {
        let v = Vector::from_iterator(d, (0..d).map(|_| rng.random_range(-1.0..1.0)));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn min_eig(m: &Matrix) -> f64 {
    logit_bandit::linalg::min_eigenvalue(m)
}
