//! Projections of the MLE onto `Θ` and onto the admissible set `W_t`.
//!
//! The objective `θ ↦ ‖g_t(θ) − g_t(θ̂_t)‖²_{H_t(θ)⁻¹}` is smooth but not
//! convex, so it is minimized by projected gradient descent from several
//! feasible starts (radial rescale of `θ̂`, previous projection, origin, three
//! random points) and the best end point wins. Gradients are central
//! differences. When `θ̂` is already feasible it is returned unchanged.

use nalgebra::{Cholesky, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::confidence::{project_ball, AdmissibleSet, ConfidenceSet};
use crate::linalg::{self, Vector};
use crate::rng::{random_in_ball, Purpose};

pub const MAX_ITERATIONS: usize = 500;
pub const FD_STEP: f64 = 1e-6;
pub const RANDOM_STARTS: usize = 3;

fn finite_or_inf(v: Option<f64>) -> f64 {
    match v {
        Some(x) if x.is_finite() => x,
        _ => f64::INFINITY,
    }
}

fn numerical_gradient(f: &impl Fn(&Vector) -> f64, theta: &Vector) -> Vector {
    let mut grad = Vector::zeros(theta.len());
    let mut probe = theta.clone();
    for i in 0..theta.len() {
        let orig = probe[i];
        probe[i] = orig + FD_STEP;
        let up = f(&probe);
        probe[i] = orig - FD_STEP;
        let down = f(&probe);
        probe[i] = orig;
        grad[i] = (up - down) / (2.0 * FD_STEP);
    }
    grad
}

/// Projected gradient descent from one feasible start. Only strictly
/// improving steps are taken, so the result is never worse than `start`.
fn descend(
    f: &impl Fn(&Vector) -> f64,
    project: &impl Fn(&Vector) -> Vector,
    start: Vector,
) -> (Vector, f64) {
    let mut x = start;
    let mut fx = f(&x);
    if !fx.is_finite() {
        return (x, fx);
    }
    let mut eta = f64::NAN;
    for _ in 0..MAX_ITERATIONS {
        if fx <= 1e-30 {
            break;
        }
        let grad = numerical_gradient(f, &x);
        let gnorm = grad.norm();
        if !gnorm.is_finite() || gnorm == 0.0 {
            break;
        }
        if !eta.is_finite() {
            eta = 0.1 * (1.0 + x.norm()) / gnorm;
        }
        let mut moved = None;
        for _ in 0..60 {
            let cand = project(&(&x - &grad * eta));
            let step = &x - &cand;
            let fc = f(&cand);
            if fc.is_finite() && fc <= fx - 1e-4 * grad.dot(&step) && fc < fx {
                moved = Some((cand, fc, step.norm()));
                break;
            }
            eta *= 0.5;
        }
        let Some((cand, fc, step_len)) = moved else { break };
        let gain = fx - fc;
        x = cand;
        fx = fc;
        eta *= 2.0;
        if step_len <= 1e-13 * (1.0 + x.norm()) || gain <= 1e-15 * fx {
            break;
        }
    }
    (x, fx)
}

/// Best descent result over the starts; falls back to the first start when
/// every candidate evaluates to a non-finite value.
fn multi_start(
    f: &impl Fn(&Vector) -> f64,
    project: &impl Fn(&Vector) -> Vector,
    starts: Vec<Vector>,
) -> Vector {
    let fallback = starts[0].clone();
    let mut best: Option<(Vector, f64)> = None;
    for s in starts {
        let (x, fx) = descend(f, project, s);
        if fx.is_finite() && best.as_ref().is_none_or(|(_, b)| fx < *b) {
            best = Some((x, fx));
        }
    }
    match best {
        Some((x, _)) => x,
        None => {
            log::warn!("projection solver found no finite objective value; using the radial rescale");
            fallback
        }
    }
}

fn random_starts(t: usize, dim: usize, radius: f64, project: &impl Fn(&Vector) -> Vector) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(t as u64);
    rng.set_stream(Purpose::Projection as u64);
    (0..RANDOM_STARTS)
        .map(|_| project(&random_in_ball(&mut rng, dim, radius)))
        .collect()
}

/// `θ⁽¹⁾_t = argmin_{‖θ‖ ≤ S} ‖g_t(θ) − g_t(θ̂_t)‖_{H_t(θ)⁻¹}`.
pub fn project_to_theta_set(cs: &ConfidenceSet<'_>, previous: Option<&Vector>) -> Vector {
    let s = cs.schedule.s_bound;
    let theta_hat = cs.theta_hat();
    if theta_hat.norm() <= s {
        return theta_hat.clone();
    }
    let project = |v: &Vector| project_ball(v, s);
    let f = |v: &Vector| finite_or_inf(cs.deviation_squared(v).ok());
    let mut starts = vec![project(theta_hat)];
    if let Some(p) = previous {
        starts.push(project(p));
    }
    starts.push(Vector::zeros(theta_hat.len()));
    starts.extend(random_starts(cs.t, theta_hat.len(), s, &project));
    multi_start(&f, &project, starts)
}

/// `θ⁽²⁾_t = argmin_{θ ∈ W_t} ‖g_t(θ) − g_t(θ̂_t)‖_{H_t(θ)⁻¹}`.
pub fn project_to_admissible(
    cs: &ConfidenceSet<'_>,
    w: &AdmissibleSet,
    previous: Option<&Vector>,
) -> Vector {
    let theta_hat = cs.theta_hat();
    if w.contains(theta_hat, 0.0) {
        return theta_hat.clone();
    }
    let project = |v: &Vector| w.project(v);
    let f = |v: &Vector| finite_or_inf(cs.deviation_squared(v).ok());
    let mut starts = vec![project(&project_ball(theta_hat, w.s_bound()))];
    if let Some(p) = previous {
        starts.push(project(p));
    }
    starts.push(Vector::zeros(theta_hat.len()));
    starts.extend(random_starts(cs.t, theta_hat.len(), w.s_bound(), &project));
    let best = multi_start(&f, &project, starts);
    w.shrink_into(&best)
}

/// `θ^L_t = argmin_{‖θ‖ ≤ S} ‖g_t(θ) − g_t(θ̂_t)‖_{V_t⁻¹}`, the estimator of
/// the GLM-UCB baseline.
pub fn linear_projection(cs: &ConfidenceSet<'_>, v_factor: &Cholesky<f64, Dyn>, previous: Option<&Vector>) -> Vector {
    let s = cs.schedule.s_bound;
    let theta_hat = cs.theta_hat();
    if theta_hat.norm() <= s {
        return theta_hat.clone();
    }
    let g_hat = cs.history.score_gap(theta_hat, cs.lambda()).ok();
    let f = |v: &Vector| {
        let g = cs.history.score_gap(v, cs.lambda()).ok();
        finite_or_inf(g.zip(g_hat.as_ref()).map(|(g, gh)| linalg::inverse_quad(v_factor, &(g - gh))))
    };
    let project = |v: &Vector| project_ball(v, s);
    let mut starts = vec![project(theta_hat)];
    if let Some(p) = previous {
        starts.push(project(p));
    }
    starts.push(Vector::zeros(theta_hat.len()));
    starts.extend(random_starts(cs.t, theta_hat.len(), s, &project));
    multi_start(&f, &project, starts)
}
