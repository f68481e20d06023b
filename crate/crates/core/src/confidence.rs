//! Confidence radii, the confidence set `C_t(δ)` around the MLE, and the
//! admissible log-odds set used by the second-order algorithm.
//!
//! `Θ` is the Euclidean ball of radius `S`. The set `C_t(δ)` is
//!
//! ```text
//! { θ : ‖g_t(θ) − g_t(θ̂_t)‖_{H_t(θ)⁻¹} ≤ γ_t(δ) }
//! ```
//!
//! which is not convex; projections onto it are computed numerically in
//! [`crate::projection`].

use std::collections::HashMap;
use std::f64::consts::LN_2;

use nalgebra::{Cholesky, Dyn};
use thiserror::Error;

use crate::estimation::{EstimationError, InteractionHistory};
use crate::linalg::{self, Matrix, Vector};
use crate::link::LinkConstants;
use crate::mle::EstimatorSnapshot;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfidenceError {
    #[error("invalid radius schedule: {0}")]
    InvalidSchedule(String),
    #[error("log det H = {log_det} is below d·log λ = {floor}")]
    DeterminantBelowRidge { log_det: f64, floor: f64 },
    #[error("boundary sampling needs d = 2, got d = {0}")]
    NotTwoDimensional(usize),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

/// Parameters shared by every radius.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RadiusSchedule {
    pub lambda: f64,
    pub delta: f64,
    pub s_bound: f64,
    pub dim: usize,
    pub link: LinkConstants,
}

impl RadiusSchedule {
    pub fn new(lambda: f64, delta: f64, s_bound: f64, dim: usize) -> Result<Self, ConfidenceError> {
        let bad = |what: &str, v: f64| Err(ConfidenceError::InvalidSchedule(format!("{what} = {v}")));
        if !(lambda > 0.0 && lambda.is_finite()) {
            return bad("lambda", lambda);
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return bad("delta", delta);
        }
        if !(s_bound > 0.0 && s_bound.is_finite()) {
            return bad("S", s_bound);
        }
        if dim == 0 {
            return bad("d", 0.0);
        }
        Ok(Self {
            lambda,
            delta,
            s_bound,
            dim,
            link: LinkConstants::SIGMOID,
        })
    }

    /// `γ_t(δ) = √λ(S + ½) + (2/√λ)·log((2^d/δ)(1 + Lt/(dλ))^{d/2})`.
    pub fn gamma(&self, t: usize) -> f64 {
        let d = self.dim as f64;
        let sl = self.lambda.sqrt();
        let log_arg = d * LN_2 - self.delta.ln()
            + 0.5 * d * (self.link.max_slope * t as f64 / (d * self.lambda)).ln_1p();
        sl * (self.s_bound + 0.5) + 2.0 / sl * log_arg
    }

    /// `β_t(δ) = √λ·S + √(log(1/δ) + 2d·log(1 + t/(κλd)))`.
    pub fn beta(&self, t: usize, kappa: f64) -> f64 {
        let d = self.dim as f64;
        self.lambda.sqrt() * self.s_bound
            + (-self.delta.ln() + 2.0 * d * (t as f64 / (kappa * self.lambda * d)).ln_1p()).sqrt()
    }
}

/// Radius of the self-normalized Bernstein-type inequality, given `det H`.
pub fn bernstein_radius(lambda: f64, delta: f64, dim: usize, det_h: f64) -> Result<f64, ConfidenceError> {
    bernstein_radius_log_det(lambda, delta, dim, det_h.ln())
}

/// Same as [`bernstein_radius`] with `log det H` passed directly:
/// `√λ/2 + (2/√λ)(½ log det H − (d/2) log λ − log δ) + (2/√λ) d log 2`.
pub fn bernstein_radius_log_det(
    lambda: f64,
    delta: f64,
    dim: usize,
    log_det_h: f64,
) -> Result<f64, ConfidenceError> {
    let d = dim as f64;
    let floor = d * lambda.ln();
    // rounding in a factorization can land a hair below the floor
    if log_det_h.is_nan() || log_det_h < floor - 1e-9 * floor.abs().max(1.0) {
        return Err(ConfidenceError::DeterminantBelowRidge {
            log_det: log_det_h,
            floor,
        });
    }
    let sl = lambda.sqrt();
    let middle = (0.5 * (log_det_h - floor)).max(0.0) - delta.ln();
    Ok(0.5 * sl + 2.0 / sl * middle + 2.0 / sl * d * LN_2)
}

/// `|θᵀx| ≤ ell`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogOddsConstraint {
    pub arm: Vector,
    pub ell: f64,
}

/// `W = { θ : ‖θ‖ ≤ S, |θᵀx_s| ≤ ℓ_s for all s }`.
///
/// Every constraint is recorded, but only the binding ones take part in
/// projections: a slab with `ℓ ≥ S‖x‖` is implied by the ball, and repeated
/// arms keep only their smallest `ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleSet {
    s_bound: f64,
    constraints: Vec<LogOddsConstraint>,
    active: Vec<LogOddsConstraint>,
    active_index: HashMap<Vec<u64>, usize>,
}

pub const DYKSTRA_SWEEPS: usize = 200;

impl AdmissibleSet {
    pub fn new(s_bound: f64) -> Self {
        Self {
            s_bound,
            constraints: Vec::new(),
            active: Vec::new(),
            active_index: HashMap::new(),
        }
    }

    pub fn s_bound(&self) -> f64 {
        self.s_bound
    }

    pub fn constraints(&self) -> &[LogOddsConstraint] {
        &self.constraints
    }

    /// Constraints that are not implied by the ball or by a tighter copy.
    pub fn active_constraints(&self) -> &[LogOddsConstraint] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn push(&mut self, constraint: LogOddsConstraint) {
        let norm = constraint.arm.norm();
        if constraint.ell < self.s_bound * norm && norm > 0.0 {
            let key: Vec<u64> = constraint.arm.iter().map(|v| (v + 0.0).to_bits()).collect();
            match self.active_index.get(&key) {
                Some(&i) => {
                    if constraint.ell < self.active[i].ell {
                        self.active[i].ell = constraint.ell;
                    }
                }
                None => {
                    self.active_index.insert(key, self.active.len());
                    self.active.push(constraint.clone());
                }
            }
        }
        self.constraints.push(constraint);
    }

    pub fn contains(&self, theta: &Vector, tol: f64) -> bool {
        theta.norm() <= self.s_bound + tol
            && self.active.iter().all(|c| c.arm.dot(theta).abs() <= c.ell + tol)
    }

    /// Largest violation over the ball and every recorded constraint.
    pub fn max_violation(&self, theta: &Vector) -> f64 {
        let ball = theta.norm() - self.s_bound;
        self.constraints
            .iter()
            .map(|c| c.arm.dot(theta).abs() - c.ell)
            .fold(ball, f64::max)
    }

    /// Shrink toward the origin until every constraint holds exactly.
    pub fn shrink_into(&self, theta: &Vector) -> Vector {
        let mut c: f64 = 1.0;
        let n = theta.norm();
        if n > self.s_bound {
            c = c.min(self.s_bound / n);
        }
        for con in &self.active {
            let z = con.arm.dot(theta).abs();
            if z > con.ell {
                c = c.min(con.ell / z);
            }
        }
        if c < 1.0 {
            theta * c
        } else {
            theta.clone()
        }
    }

    /// Euclidean projection onto `W` by Dykstra's alternating projections,
    /// followed by a radial shrink that makes the result exactly feasible.
    pub fn project(&self, theta: &Vector) -> Vector {
        if self.contains(theta, 0.0) {
            return theta.clone();
        }
        if self.active.is_empty() {
            return project_ball(theta, self.s_bound);
        }
        let sets = self.active.len() + 1;
        let mut x = theta.clone();
        let mut increments = vec![Vector::zeros(theta.len()); sets];
        for _ in 0..DYKSTRA_SWEEPS {
            let before = x.clone();
            for (k, inc) in increments.iter_mut().enumerate() {
                let y = &x + &*inc;
                let p = if k == 0 {
                    project_ball(&y, self.s_bound)
                } else {
                    project_slab(&y, &self.active[k - 1])
                };
                *inc = &y - &p;
                x = p;
            }
            if (&x - &before).norm() <= 1e-15 * (1.0 + x.norm()) {
                break;
            }
        }
        self.shrink_into(&x)
    }
}

pub fn project_ball(theta: &Vector, radius: f64) -> Vector {
    let n = theta.norm();
    if n > radius {
        theta * (radius / n)
    } else {
        theta.clone()
    }
}

fn project_slab(theta: &Vector, c: &LogOddsConstraint) -> Vector {
    let z = c.arm.dot(theta);
    let nn = c.arm.norm_squared();
    if z > c.ell {
        theta - &c.arm * ((z - c.ell) / nn)
    } else if z < -c.ell {
        theta - &c.arm * ((z + c.ell) / nn)
    } else {
        theta.clone()
    }
}

/// Which visualization set to trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySet {
    /// `{θ : ‖θ − θ̂‖_{V_t} ≤ κ β_t}`
    Linear,
    /// `{θ : ‖θ − θ̂‖_{H_t(θ)} ≤ (1+2S) γ_t}`
    NonLinear,
}

impl BoundarySet {
    pub fn label(self) -> &'static str {
        match self {
            BoundarySet::Linear => "L",
            BoundarySet::NonLinear => "NL",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    /// Boundary point, moved back along its ray onto `Θ` when needed.
    pub point: Vector,
    /// Boundary point before clipping.
    pub raw: Vector,
    pub clipped: bool,
}

/// Mode for [`ConfidenceSet::log_odds_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogOddsMode {
    Conservative,
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogOddsBound {
    /// Sound upper bound on `sup_{θ ∈ C_t ∩ Θ} |xᵀθ|`; this is the value used
    /// in constraints.
    pub bound: f64,
    /// Largest `|xᵀθ|` found by searching inside `C_t ∩ Θ` (a lower estimate of
    /// the supremum), in search mode only.
    pub searched: Option<f64>,
}

/// `C_t(δ)` for one round, with `g_t(θ̂_t)` cached.
#[derive(Debug, Clone)]
pub struct ConfidenceSet<'a> {
    pub history: &'a InteractionHistory,
    pub snapshot: &'a EstimatorSnapshot,
    pub schedule: &'a RadiusSchedule,
    pub t: usize,
    g_hat: Vector,
    gamma: f64,
}

impl<'a> ConfidenceSet<'a> {
    pub fn new(
        history: &'a InteractionHistory,
        snapshot: &'a EstimatorSnapshot,
        schedule: &'a RadiusSchedule,
        t: usize,
    ) -> Result<Self, ConfidenceError> {
        if snapshot.theta_hat.len() != history.dim() {
            return Err(EstimationError::DimensionMismatch {
                expected: history.dim(),
                found: snapshot.theta_hat.len(),
            }
            .into());
        }
        let g_hat = history.score_gap(&snapshot.theta_hat, schedule.lambda)?;
        Ok(Self {
            history,
            snapshot,
            schedule,
            t,
            g_hat,
            gamma: schedule.gamma(t),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta_hat(&self) -> &Vector {
        &self.snapshot.theta_hat
    }

    pub fn lambda(&self) -> f64 {
        self.schedule.lambda
    }

    /// `‖g_t(θ) − g_t(θ̂_t)‖_{H_t(θ)⁻¹}`.
    pub fn deviation(&self, theta: &Vector) -> Result<f64, ConfidenceError> {
        Ok(self.deviation_squared(theta)?.sqrt())
    }

    pub fn deviation_squared(&self, theta: &Vector) -> Result<f64, ConfidenceError> {
        let diff = self.history.score_gap(theta, self.lambda())? - &self.g_hat;
        let chol = self.history.hessian_factor(theta, self.lambda())?;
        Ok(linalg::inverse_quad(&chol, &diff))
    }

    pub fn contains(&self, theta: &Vector) -> Result<bool, ConfidenceError> {
        Ok(self.deviation(theta)? <= self.gamma)
    }

    pub fn design_matrix(&self, kappa: f64) -> Result<Matrix, ConfidenceError> {
        Ok(self.history.design_matrix(kappa, self.lambda())?)
    }

    /// Sound upper bound on `sup_{θ ∈ C_t ∩ Θ} |xᵀθ|`.
    ///
    /// For `θ, θ_ref ∈ C_t ∩ Θ`, `G_t(θ, θ_ref) ⪰ (1+2S)⁻¹H_t(·)` at both ends
    /// and `G_t ⪰ κ⁻¹V_t`, so `‖θ − θ_ref‖_{V_t} ≤ 2√(κ(1+2S))·γ_t`. The
    /// reference point is the first of `θ̂_t`, `hint` and the projection onto
    /// `Θ` that is certified to lie in `C_t ∩ Θ`; without one only the ball
    /// bound `S‖x‖` is used.
    pub fn log_odds_bound(
        &self,
        x: &Vector,
        kappa: f64,
        v_factor: &Cholesky<f64, Dyn>,
        mode: LogOddsMode,
        hint: Option<&Vector>,
    ) -> Result<LogOddsBound, ConfidenceError> {
        let s = self.schedule.s_bound;
        let ball = s * x.norm();
        if ball == 0.0 {
            return Ok(LogOddsBound {
                bound: 0.0,
                searched: (mode == LogOddsMode::Search).then_some(0.0),
            });
        }
        let reference = self.certified_reference(hint)?;
        let bound = match &reference {
            Some(r) => {
                let width = 2.0 * (kappa * (1.0 + 2.0 * s)).sqrt() * self.gamma
                    * linalg::inverse_norm(v_factor, x);
                ball.min(x.dot(r).abs() + width)
            }
            None => ball,
        };
        let searched = match (mode, &reference) {
            (LogOddsMode::Search, Some(r)) => Some(self.search_log_odds(x, r)?.min(bound)),
            (LogOddsMode::Search, None) => Some(f64::NAN),
            (LogOddsMode::Conservative, _) => None,
        };
        Ok(LogOddsBound { bound, searched })
    }

    fn certified_reference(&self, hint: Option<&Vector>) -> Result<Option<Vector>, ConfidenceError> {
        let s = self.schedule.s_bound;
        if self.theta_hat().norm() <= s {
            return Ok(Some(self.theta_hat().clone()));
        }
        if let Some(h) = hint {
            if h.norm() <= s && self.contains(h)? {
                return Ok(Some(h.clone()));
            }
        }
        let p = crate::projection::project_to_theta_set(self, None);
        if p.norm() <= s && self.contains(&p)? {
            return Ok(Some(p));
        }
        Ok(None)
    }

    /// Walks from `start` along a fan of directions and bisects for the edge
    /// of `C_t ∩ Θ`, returning the largest `|xᵀθ|` met.
    fn search_log_odds(&self, x: &Vector, start: &Vector) -> Result<f64, ConfidenceError> {
        let s = self.schedule.s_bound;
        let d = x.len();
        let xn = x.norm();
        let mut dirs = vec![x / xn, -(x / xn)];
        for i in 0..d {
            let mut e = Vector::zeros(d);
            e[i] = 1.0;
            dirs.push(e.clone());
            dirs.push(-e);
        }
        let mut best = x.dot(start).abs();
        for u in dirs {
            // the ray leaves the ball at s_max
            let b = start.dot(&u);
            let s_max = -b + (b * b - start.norm_squared() + s * s).max(0.0).sqrt();
            let inside = |r: f64| -> Result<bool, ConfidenceError> { self.contains(&(start + &u * r)) };
            let (mut lo, mut hi) = (0.0, s_max);
            if inside(hi)? {
                lo = hi;
            } else {
                for _ in 0..50 {
                    let mid = 0.5 * (lo + hi);
                    if inside(mid)? {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            best = best.max(x.dot(&(start + &u * lo)).abs());
        }
        Ok(best)
    }

    /// `n` boundary points of the chosen set along equally spaced rays from
    /// `θ̂_t`.
    pub fn boundary_samples(
        &self,
        which: BoundarySet,
        kappa: f64,
        n: usize,
    ) -> Result<Vec<BoundarySample>, ConfidenceError> {
        let d = self.history.dim();
        if d != 2 {
            return Err(ConfidenceError::NotTwoDimensional(d));
        }
        let center = self.theta_hat();
        let s = self.schedule.s_bound;
        let lambda = self.lambda();
        let mut out = Vec::with_capacity(n);
        let v = self.design_matrix(kappa)?;
        let nl_radius = (1.0 + 2.0 * s) * self.gamma;
        let l_radius = kappa * self.schedule.beta(self.t, kappa);
        for i in 0..n {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let u = Vector::from_row_slice(&[angle.cos(), angle.sin()]);
            let step = match which {
                BoundarySet::Linear => l_radius / (u.transpose() * &v * &u)[(0, 0)].sqrt(),
                BoundarySet::NonLinear => {
                    let phi = |r: f64| -> Result<f64, ConfidenceError> {
                        let h = self.history.hessian(&(center + &u * r), lambda)?;
                        Ok(r * (u.transpose() * h * &u)[(0, 0)].sqrt() - nl_radius)
                    };
                    // ‖u‖_H ≥ √λ puts a sign change inside [0, radius/√λ]
                    let (mut lo, mut hi) = (0.0, nl_radius / lambda.sqrt());
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if phi(mid)? <= 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                        if hi - lo <= 1e-14 * hi.max(1.0) {
                            break;
                        }
                    }
                    0.5 * (lo + hi)
                }
            };
            let raw = center + &u * step;
            let (point, clipped) = if raw.norm() > s {
                let b = center.dot(&u);
                let exit = -b + (b * b - center.norm_squared() + s * s).max(0.0).sqrt();
                (center + &u * exit.max(0.0), true)
            } else {
                (raw.clone(), false)
            };
            out.push(BoundarySample { point, raw, clipped });
        }
        Ok(out)
    }
}
