//! Interaction history, the regularized logistic likelihood and the matrices
//! built from it.
//!
//! The history keeps the ordered list of interactions and, alongside it, one
//! aggregate per distinct arm vector (pull count, success count). Every
//! quantity below is a sum over interactions whose summand depends on the
//! interaction only through its arm and reward, so it is evaluated over the
//! aggregates. With a finite arm set this makes the per-evaluation cost
//! independent of the round index.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{Cholesky, Dyn};
use thiserror::Error;

use crate::link::{alpha, ln_sigmoid, sigmoid, sigmoid_deriv};
use crate::linalg::{self, LinalgError, Matrix, Vector};

/// Arms may exceed the unit ball by this much before they are rejected.
pub const ARM_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("arm norm {0} exceeds 1")]
    ArmOutsideBall(f64),
    #[error("regularization must be positive and finite, got {0}")]
    InvalidRegularization(f64),
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("Newton solver did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },
    #[error("history line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl From<LinalgError> for EstimationError {
    fn from(err: LinalgError) -> Self {
        match err {
            LinalgError::NotPositiveDefinite => EstimationError::NotPositiveDefinite,
            LinalgError::DimensionMismatch { expected, found } => {
                EstimationError::DimensionMismatch { expected, found }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub arm: Vector,
    pub reward: bool,
}

/// Pull statistics of one distinct arm vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmAggregate {
    pub arm: Vector,
    pub pulls: f64,
    pub successes: f64,
}

/// Ordered record of `(arm, reward)` pairs. Round `t` sees items `1..t−1`.
#[derive(Debug, Clone)]
pub struct InteractionHistory {
    dim: usize,
    items: Vec<Interaction>,
    aggregates: Vec<ArmAggregate>,
    lookup: HashMap<Vec<u64>, usize>,
    gram: Matrix,
    response: Vector,
}

impl PartialEq for InteractionHistory {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.items == other.items
    }
}

fn arm_key(arm: &Vector) -> Vec<u64> {
    // -0.0 and 0.0 describe the same arm
    arm.iter().map(|v| (v + 0.0).to_bits()).collect()
}

fn check_dim(expected: usize, found: usize) -> Result<(), EstimationError> {
    if expected == found {
        Ok(())
    } else {
        Err(EstimationError::DimensionMismatch { expected, found })
    }
}

fn check_lambda(lambda: f64) -> Result<(), EstimationError> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(EstimationError::InvalidRegularization(lambda))
    }
}

impl InteractionHistory {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            dim,
            items: Vec::new(),
            aggregates: Vec::new(),
            lookup: HashMap::new(),
            gram: Matrix::zeros(dim, dim),
            response: Vector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Interaction] {
        &self.items
    }

    pub fn aggregates(&self) -> &[ArmAggregate] {
        &self.aggregates
    }

    pub fn push(&mut self, arm: Vector, reward: bool) -> Result<(), EstimationError> {
        check_dim(self.dim, arm.len())?;
        let norm = arm.norm();
        if !norm.is_finite() || norm > 1.0 + ARM_NORM_TOLERANCE {
            return Err(EstimationError::ArmOutsideBall(norm));
        }
        let key = arm_key(&arm);
        let slot = match self.lookup.get(&key) {
            Some(&i) => i,
            None => {
                self.aggregates.push(ArmAggregate {
                    arm: arm.clone(),
                    pulls: 0.0,
                    successes: 0.0,
                });
                self.lookup.insert(key, self.aggregates.len() - 1);
                self.aggregates.len() - 1
            }
        };
        let agg = &mut self.aggregates[slot];
        agg.pulls += 1.0;
        if reward {
            agg.successes += 1.0;
            self.response += &arm;
        }
        self.gram.ger(1.0, &arm, &arm, 1.0);
        self.items.push(Interaction { arm, reward });
        Ok(())
    }

    /// `Σ_s x_s x_sᵀ`, maintained incrementally.
    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    /// `Σ_s r_{s+1} x_s`, maintained incrementally.
    pub fn response_sum(&self) -> &Vector {
        &self.response
    }

    /// Regularized log-likelihood
    /// `Σ_s [r log μ(xᵀθ) + (1−r) log(1−μ(xᵀθ))] − (λ/2)‖θ‖²`.
    pub fn log_likelihood(&self, theta: &Vector, lambda: f64) -> Result<f64, EstimationError> {
        check_dim(self.dim, theta.len())?;
        check_lambda(lambda)?;
        let mut total = 0.0;
        for agg in &self.aggregates {
            let z = agg.arm.dot(theta);
            let failures = agg.pulls - agg.successes;
            if agg.successes > 0.0 {
                total += agg.successes * ln_sigmoid(z);
            }
            if failures > 0.0 {
                total += failures * ln_sigmoid(-z);
            }
        }
        Ok(total - 0.5 * lambda * theta.norm_squared())
    }

    /// `g_t(θ) = Σ_s μ(x_sᵀθ) x_s + λθ`.
    pub fn score_gap(&self, theta: &Vector, lambda: f64) -> Result<Vector, EstimationError> {
        check_dim(self.dim, theta.len())?;
        check_lambda(lambda)?;
        let mut g = theta * lambda;
        for agg in &self.aggregates {
            let w = agg.pulls * sigmoid(agg.arm.dot(theta));
            g.axpy(w, &agg.arm, 1.0);
        }
        Ok(g)
    }

    /// Gradient of the log-likelihood, `Σ r x − g_t(θ)`.
    pub fn log_likelihood_gradient(
        &self,
        theta: &Vector,
        lambda: f64,
    ) -> Result<Vector, EstimationError> {
        Ok(&self.response - self.score_gap(theta, lambda)?)
    }

    /// `H_t(θ) = Σ_s μ̇(x_sᵀθ) x_s x_sᵀ + λI`.
    pub fn hessian(&self, theta: &Vector, lambda: f64) -> Result<Matrix, EstimationError> {
        check_dim(self.dim, theta.len())?;
        check_lambda(lambda)?;
        Ok(self.weighted_gram(lambda, |x| agg_weight(x, |z| sigmoid_deriv(z.dot(theta)))))
    }

    /// `V_t = Σ_s x_s x_sᵀ + κλI`.
    pub fn design_matrix(&self, kappa: f64, lambda: f64) -> Result<Matrix, EstimationError> {
        check_lambda(lambda)?;
        check_lambda(kappa)?;
        let mut v = self.gram.clone();
        for i in 0..self.dim {
            v[(i, i)] += kappa * lambda;
        }
        Ok(v)
    }

    /// `G_t(θ₁, θ₂) = Σ_s α(x_sᵀθ₁, x_sᵀθ₂) x_s x_sᵀ + λI`.
    pub fn interp_gram(
        &self,
        theta1: &Vector,
        theta2: &Vector,
        lambda: f64,
    ) -> Result<Matrix, EstimationError> {
        check_dim(self.dim, theta1.len())?;
        check_dim(self.dim, theta2.len())?;
        check_lambda(lambda)?;
        Ok(self.weighted_gram(lambda, |x| {
            agg_weight(x, |arm| alpha(arm.dot(theta1), arm.dot(theta2)))
        }))
    }

    fn weighted_gram(&self, lambda: f64, weight: impl Fn(&ArmAggregate) -> f64) -> Matrix {
        let mut m = Matrix::identity(self.dim, self.dim) * lambda;
        for agg in &self.aggregates {
            m.syger(weight(agg), &agg.arm, &agg.arm, 1.0);
        }
        m.fill_upper_triangle_with_lower_triangle();
        m
    }

    /// Cholesky factor of `H_t(θ)`.
    pub fn hessian_factor(
        &self,
        theta: &Vector,
        lambda: f64,
    ) -> Result<Cholesky<f64, Dyn>, EstimationError> {
        Ok(linalg::cholesky(&self.hessian(theta, lambda)?)?)
    }

    /// One interaction per line: `x_1,...,x_d,r`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            for v in item.arm.iter() {
                let _ = write!(out, "{v},");
            }
            out.push_str(if item.reward { "1\n" } else { "0\n" });
        }
        out
    }

    pub fn from_text(dim: usize, text: &str) -> Result<Self, EstimationError> {
        let mut history = Self::new(dim);
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != dim + 1 {
                return Err(EstimationError::Parse {
                    line: line_no,
                    message: format!("expected {} fields, found {}", dim + 1, fields.len()),
                });
            }
            let mut arm = Vector::zeros(dim);
            for (j, f) in fields[..dim].iter().enumerate() {
                arm[j] = f.parse().map_err(|_| EstimationError::Parse {
                    line: line_no,
                    message: format!("invalid number {f:?}"),
                })?;
            }
            let reward = match fields[dim] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(EstimationError::Parse {
                        line: line_no,
                        message: format!("reward must be 0 or 1, found {other:?}"),
                    })
                }
            };
            history.push(arm, reward)?;
        }
        Ok(history)
    }
}

#[inline]
fn agg_weight(agg: &ArmAggregate, per_pull: impl Fn(&Vector) -> f64) -> f64 {
    agg.pulls * per_pull(&agg.arm)
}
