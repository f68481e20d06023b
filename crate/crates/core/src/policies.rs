//! Optimistic policies and their theoretical regret bounds.
//!
//! Every policy scores an arm as `μ(xᵀθ_t) + ε_t(x)` and plays the lowest
//! index among the maximizers. The variants differ in `θ_t` and `ε_t`:
//!
//! | variant      | `θ_t`                         | `ε_t(x)`                                          |
//! |--------------|-------------------------------|---------------------------------------------------|
//! | `glm_ucb`    | `V`-metric projection on `Θ`  | `4Lκ β_t ‖x‖_{V⁻¹}`                                |
//! | `log_ucb_1`  | projection on `Θ`             | `L√(4+8S) √κ γ_t ‖x‖_{V⁻¹}`                        |
//! | `log_ucb_2`  | projection on `W_t`           | `(2+4S) μ̇(xᵀθ) ‖x‖_{H(θ)⁻¹} γ_t + (4+8S) M κ γ_t² ‖x‖²_{V⁻¹}` |
//! | `greedy`     | `θ̂_t`                         | 0                                                 |
//! | `random`     | `θ̂_t`                         | uniform choice                                    |

use nalgebra::{Cholesky, Dyn};
use rand::Rng;
use thiserror::Error;

use crate::confidence::{
    AdmissibleSet, ConfidenceError, ConfidenceSet, LogOddsBound, LogOddsConstraint, LogOddsMode,
    RadiusSchedule,
};
use crate::estimation::{EstimationError, InteractionHistory};
use crate::linalg::{self, Vector};
use crate::link::{sigmoid, sigmoid_deriv};
use crate::mle::{fit_mle, EstimatorSnapshot};
use crate::projection;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("arm set is empty")]
    EmptyArmSet,
    #[error("policy is at round {expected}, called with round {found}")]
    RoundMismatch { expected: usize, found: usize },
    #[error("κ must be at least 4, got {0}")]
    InvalidKappa(f64),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Confidence(#[from] ConfidenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    GlmUcb,
    LogUcb1,
    LogUcb2,
    Greedy,
    Random,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::GlmUcb,
        PolicyKind::LogUcb1,
        PolicyKind::LogUcb2,
        PolicyKind::Greedy,
        PolicyKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::GlmUcb => "glm_ucb",
            PolicyKind::LogUcb1 => "log_ucb_1",
            PolicyKind::LogUcb2 => "log_ucb_2",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Whether the policy comes with a prediction-error guarantee.
    pub fn is_optimistic(self) -> bool {
        matches!(self, PolicyKind::GlmUcb | PolicyKind::LogUcb1 | PolicyKind::LogUcb2)
    }
}

/// Bonus of one arm, split into its first- and second-order parts. Only
/// `log_ucb_2` has a non-zero second part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bonus {
    pub first: f64,
    pub second: f64,
}

impl Bonus {
    pub fn total(&self) -> f64 {
        self.first + self.second
    }
}

/// Everything a policy needs to score arms in its current round.
#[derive(Debug, Clone)]
struct RoundState {
    t: usize,
    theta: Vector,
    gamma: f64,
    beta: f64,
    v_factor: Cholesky<f64, Dyn>,
    h_factor: Option<Cholesky<f64, Dyn>>,
}

#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    schedule: RadiusSchedule,
    kappa: f64,
    history: InteractionHistory,
    snapshot: EstimatorSnapshot,
    admissible: Option<AdmissibleSet>,
    round: RoundState,
    last_log_odds: Option<LogOddsBound>,
    log_odds_mode: LogOddsMode,
}

impl Policy {
    pub fn new(kind: PolicyKind, schedule: RadiusSchedule, kappa: f64) -> Result<Self, PolicyError> {
        if !(kappa >= 4.0 && kappa.is_finite()) {
            return Err(PolicyError::InvalidKappa(kappa));
        }
        let history = InteractionHistory::new(schedule.dim);
        let snapshot = fit_mle(&history, schedule.lambda, None)?;
        let admissible = (kind == PolicyKind::LogUcb2).then(|| AdmissibleSet::new(schedule.s_bound));
        let round = Self::prepare(kind, &schedule, kappa, &history, &snapshot, admissible.as_ref(), None)?;
        Ok(Self {
            kind,
            schedule,
            kappa,
            history,
            snapshot,
            admissible,
            round,
            last_log_odds: None,
            log_odds_mode: LogOddsMode::Conservative,
        })
    }

    /// Also run the search for `sup |xᵀθ|` when computing log-odds bounds.
    /// The emitted constraints are unaffected.
    pub fn with_log_odds_search(mut self) -> Self {
        self.log_odds_mode = LogOddsMode::Search;
        self
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn schedule(&self) -> &RadiusSchedule {
        &self.schedule
    }

    /// Round the policy is about to play.
    pub fn t(&self) -> usize {
        self.round.t
    }

    pub fn history(&self) -> &InteractionHistory {
        &self.history
    }

    pub fn snapshot(&self) -> &EstimatorSnapshot {
        &self.snapshot
    }

    /// `θ_t` used in the index: a projection for the optimistic variants,
    /// `θ̂_t` otherwise.
    pub fn theta(&self) -> &Vector {
        &self.round.theta
    }

    pub fn gamma(&self) -> f64 {
        self.round.gamma
    }

    pub fn beta(&self) -> f64 {
        self.round.beta
    }

    pub fn admissible(&self) -> Option<&AdmissibleSet> {
        self.admissible.as_ref()
    }

    /// Log-odds bound attached to the most recent update (`log_ucb_2`).
    pub fn last_log_odds(&self) -> Option<LogOddsBound> {
        self.last_log_odds
    }

    pub fn confidence_set(&self) -> Result<ConfidenceSet<'_>, PolicyError> {
        Ok(ConfidenceSet::new(&self.history, &self.snapshot, &self.schedule, self.round.t)?)
    }

    fn prepare(
        kind: PolicyKind,
        schedule: &RadiusSchedule,
        kappa: f64,
        history: &InteractionHistory,
        snapshot: &EstimatorSnapshot,
        admissible: Option<&AdmissibleSet>,
        previous: Option<&Vector>,
    ) -> Result<RoundState, PolicyError> {
        let t = history.len() + 1;
        let v = history.design_matrix(kappa, schedule.lambda)?;
        let v_factor = linalg::cholesky(&v).map_err(EstimationError::from)?;
        let cs = ConfidenceSet::new(history, snapshot, schedule, t)?;
        let theta = match kind {
            PolicyKind::LogUcb1 => projection::project_to_theta_set(&cs, previous),
            PolicyKind::LogUcb2 => {
                projection::project_to_admissible(&cs, admissible.expect("log_ucb_2 keeps W_t"), previous)
            }
            PolicyKind::GlmUcb => projection::linear_projection(&cs, &v_factor, previous),
            PolicyKind::Greedy | PolicyKind::Random => snapshot.theta_hat.clone(),
        };
        let h_factor = match kind {
            PolicyKind::LogUcb2 => Some(history.hessian_factor(&theta, schedule.lambda)?),
            _ => None,
        };
        Ok(RoundState {
            t,
            gamma: schedule.gamma(t),
            beta: schedule.beta(t, kappa),
            theta,
            v_factor,
            h_factor,
        })
    }

    /// `‖x‖_{V_t⁻¹}`.
    pub fn v_inverse_norm(&self, x: &Vector) -> f64 {
        linalg::inverse_norm(&self.round.v_factor, x)
    }

    /// `‖x‖_{H_t(θ)⁻¹}` at `θ = θ_t`.
    pub fn h_inverse_norm(&self, x: &Vector) -> Result<f64, PolicyError> {
        match &self.round.h_factor {
            Some(f) => Ok(linalg::inverse_norm(f, x)),
            None => {
                let f = self.history.hessian_factor(&self.round.theta, self.schedule.lambda)?;
                Ok(linalg::inverse_norm(&f, x))
            }
        }
    }

    /// `L√(4+8S)·√κ·γ_t·‖x‖_{V_t⁻¹}`.
    pub fn bonus_log_ucb_1(&self, x: &Vector) -> f64 {
        let s = self.schedule.s_bound;
        self.schedule.link.max_slope
            * (4.0 + 8.0 * s).sqrt()
            * self.kappa.sqrt()
            * self.round.gamma
            * self.v_inverse_norm(x)
    }

    /// Both terms of the second-order bonus, evaluated at `θ_t`.
    pub fn bonus_log_ucb_2(&self, x: &Vector) -> Result<Bonus, PolicyError> {
        let s = self.schedule.s_bound;
        let gamma = self.round.gamma;
        let first = (2.0 + 4.0 * s)
            * sigmoid_deriv(x.dot(&self.round.theta))
            * self.h_inverse_norm(x)?
            * gamma;
        let vn = self.v_inverse_norm(x);
        let second = (4.0 + 8.0 * s) * self.schedule.link.max_curvature * self.kappa * gamma * gamma * vn * vn;
        Ok(Bonus { first, second })
    }

    /// `4Lκ·β_t·‖x‖_{V_t⁻¹}`.
    pub fn bonus_glm_ucb(&self, x: &Vector) -> f64 {
        4.0 * self.schedule.link.max_slope * self.kappa * self.round.beta * self.v_inverse_norm(x)
    }

    /// This policy's bonus at `x`.
    pub fn bonus(&self, x: &Vector) -> Result<Bonus, PolicyError> {
        Ok(match self.kind {
            PolicyKind::GlmUcb => Bonus { first: self.bonus_glm_ucb(x), second: 0.0 },
            PolicyKind::LogUcb1 => Bonus { first: self.bonus_log_ucb_1(x), second: 0.0 },
            PolicyKind::LogUcb2 => self.bonus_log_ucb_2(x)?,
            PolicyKind::Greedy | PolicyKind::Random => Bonus { first: 0.0, second: 0.0 },
        })
    }

    /// Lowest index maximizing `μ(xᵀθ_t) + ε_t(x)`; uniform for `random`.
    pub fn select<R: Rng + ?Sized>(&self, arms: &[Vector], t: usize, rng: &mut R) -> Result<usize, PolicyError> {
        if arms.is_empty() {
            return Err(PolicyError::EmptyArmSet);
        }
        self.check_round(t)?;
        if self.kind == PolicyKind::Random {
            return Ok(rng.random_range(0..arms.len()));
        }
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, x) in arms.iter().enumerate() {
            let score = sigmoid(x.dot(&self.round.theta)) + self.bonus(x)?.total();
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        Ok(best)
    }

    fn check_round(&self, t: usize) -> Result<(), PolicyError> {
        if t == self.round.t {
            Ok(())
        } else {
            Err(PolicyError::RoundMismatch { expected: self.round.t, found: t })
        }
    }

    /// Record the outcome of round `t`, refit and move to round `t + 1`.
    pub fn update(&mut self, x: &Vector, reward: bool, t: usize) -> Result<(), PolicyError> {
        self.check_round(t)?;
        if let Some(w) = self.admissible.as_mut() {
            let cs = ConfidenceSet::new(&self.history, &self.snapshot, &self.schedule, t)?;
            let bound = cs.log_odds_bound(x, self.kappa, &self.round.v_factor, self.log_odds_mode, Some(&self.round.theta))?;
            w.push(LogOddsConstraint { arm: x.clone(), ell: bound.bound });
            self.last_log_odds = Some(bound);
        }
        self.history.push(x.clone(), reward)?;
        self.snapshot = fit_mle(&self.history, self.schedule.lambda, Some(&self.snapshot.theta_hat))?;
        let previous = self.round.theta.clone();
        self.round = Self::prepare(
            self.kind,
            &self.schedule,
            self.kappa,
            &self.history,
            &self.snapshot,
            self.admissible.as_ref(),
            Some(&previous),
        )?;
        Ok(())
    }
}

fn kappa_lambda_factor(sched: &RadiusSchedule, kappa: f64) -> f64 {
    1.0f64.max(1.0 / (kappa * sched.lambda))
}

/// `C₁ = √(32d(1+2S)·max(1, 1/(κλ))·log(1 + T/(κλd)))`.
pub fn c1(sched: &RadiusSchedule, kappa: f64, horizon: usize) -> f64 {
    let d = sched.dim as f64;
    let s = sched.s_bound;
    (32.0 * d * (1.0 + 2.0 * s)
        * kappa_lambda_factor(sched, kappa)
        * (horizon as f64 / (kappa * sched.lambda * d)).ln_1p())
    .sqrt()
}

/// `C₂ = (4+8S)·√(2dL·max(1, L/λ)·log(1 + LT/(dλ)))`.
pub fn c2(sched: &RadiusSchedule, horizon: usize) -> f64 {
    let d = sched.dim as f64;
    let l = sched.link.max_slope;
    (4.0 + 8.0 * sched.s_bound)
        * (2.0 * d * l * 1.0f64.max(l / sched.lambda) * (l * horizon as f64 / (d * sched.lambda)).ln_1p()).sqrt()
}

/// `C₃ = M·d·max(1, 1/(κλ))·log(1 + T/(κdλ))·(8+16S)·(2 + 2√(1+2S))`.
pub fn c3(sched: &RadiusSchedule, kappa: f64, horizon: usize) -> f64 {
    let d = sched.dim as f64;
    let s = sched.s_bound;
    sched.link.max_curvature
        * d
        * kappa_lambda_factor(sched, kappa)
        * (horizon as f64 / (kappa * d * sched.lambda)).ln_1p()
        * (8.0 + 16.0 * s)
        * (2.0 + 2.0 * (1.0 + 2.0 * s).sqrt())
}

/// `C₄ = √(2L·max(1, L/λ))·√(d·log(1 + LT/(dλ)))`.
pub fn c4(sched: &RadiusSchedule, horizon: usize) -> f64 {
    let d = sched.dim as f64;
    let l = sched.link.max_slope;
    (2.0 * l * 1.0f64.max(l / sched.lambda)).sqrt()
        * (d * (l * horizon as f64 / (d * sched.lambda)).ln_1p()).sqrt()
}

/// `C₅ = 4d·√(1+2S)·max(1, 1/(κλ))·log(1 + T/(κdλ))`.
pub fn c5(sched: &RadiusSchedule, kappa: f64, horizon: usize) -> f64 {
    let d = sched.dim as f64;
    4.0 * d
        * (1.0 + 2.0 * sched.s_bound).sqrt()
        * kappa_lambda_factor(sched, kappa)
        * (horizon as f64 / (kappa * d * sched.lambda)).ln_1p()
}

/// Regret bound of `log_ucb_1`: `C₁·L·√κ·γ_T·√T`.
pub fn regret_bound_ucb1(sched: &RadiusSchedule, kappa: f64, horizon: usize) -> f64 {
    c1(sched, kappa, horizon) * sched.link.max_slope * kappa.sqrt() * sched.gamma(horizon) * (horizon as f64).sqrt()
}

/// The two terms `C₂·γ_T·√T` and `C₃·γ_T²·κ` of the `log_ucb_2` bound.
pub fn regret_bound_ucb2_terms(sched: &RadiusSchedule, kappa: f64, horizon: usize) -> (f64, f64) {
    let gamma = sched.gamma(horizon);
    (
        c2(sched, horizon) * gamma * (horizon as f64).sqrt(),
        c3(sched, kappa, horizon) * gamma * gamma * kappa,
    )
}

pub fn regret_bound_ucb2(sched: &RadiusSchedule, kappa: f64, horizon: usize) -> f64 {
    let (a, b) = regret_bound_ucb2_terms(sched, kappa, horizon);
    a + b
}

/// Envelope on `Σ_t μ̇(x_tᵀθ_t)‖x_t‖_{H_t(θ_t)⁻¹}`: `C₄√T + C₅·M·κ·γ_T`.
pub fn elliptical_sum_envelope(sched: &RadiusSchedule, kappa: f64, horizon: usize) -> f64 {
    c4(sched, horizon) * (horizon as f64).sqrt()
        + c5(sched, kappa, horizon) * sched.link.max_curvature * kappa * sched.gamma(horizon)
}

/// Running regret bound `R̄_t` of a policy with a guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTracker {
    pub kind: PolicyKind,
    pub schedule: RadiusSchedule,
    pub kappa: f64,
    pub horizon: usize,
}

impl BoundTracker {
    pub fn new(kind: PolicyKind, schedule: RadiusSchedule, kappa: f64, horizon: usize) -> Self {
        Self { kind, schedule, kappa, horizon }
    }

    /// `R̄_t`, the bound with horizon `t`; `None` for policies without one.
    pub fn at(&self, t: usize) -> Option<f64> {
        match self.kind {
            PolicyKind::LogUcb1 => Some(regret_bound_ucb1(&self.schedule, self.kappa, t)),
            PolicyKind::LogUcb2 => Some(regret_bound_ucb2(&self.schedule, self.kappa, t)),
            _ => None,
        }
    }

    pub fn final_value(&self) -> Option<f64> {
        self.at(self.horizon)
    }
}
