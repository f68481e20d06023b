//! Regularized logistic maximum-likelihood estimation by damped Newton.

use nalgebra::Cholesky;

use crate::estimation::{EstimationError, InteractionHistory};
use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Stop once the gradient 2-norm is at or below this value.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
        }
    }
}

/// The fitted estimator after round `t − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSnapshot {
    pub theta_hat: Vector,
    pub lambda: f64,
    /// Round index the snapshot serves, i.e. `history.len() + 1`.
    pub t: usize,
    pub grad_norm: f64,
    pub iterations: usize,
}

pub fn fit_mle(
    history: &InteractionHistory,
    lambda: f64,
    warm_start: Option<&Vector>,
) -> Result<EstimatorSnapshot, EstimationError> {
    fit_mle_with(history, lambda, warm_start, NewtonSettings::default())
}

pub fn fit_mle_with(
    history: &InteractionHistory,
    lambda: f64,
    warm_start: Option<&Vector>,
    settings: NewtonSettings,
) -> Result<EstimatorSnapshot, EstimationError> {
    let d = history.dim();
    let mut theta = match warm_start {
        Some(w) if w.len() == d && w.iter().all(|v| v.is_finite()) => w.clone(),
        Some(w) if w.len() != d => {
            return Err(EstimationError::DimensionMismatch {
                expected: d,
                found: w.len(),
            })
        }
        _ => Vector::zeros(d),
    };
    let t = history.len() + 1;
    if history.is_empty() {
        // only the ridge term is left; its minimizer is exactly zero
        theta.fill(0.0);
    }
    let mut value = history.log_likelihood(&theta, lambda)?;
    let mut grad = history.log_likelihood_gradient(&theta, lambda)?;
    let mut grad_norm = grad.norm();
    let mut iterations = 0;

    while grad_norm > settings.tolerance {
        if iterations == settings.max_iterations {
            return Err(EstimationError::NonConvergence {
                iterations,
                grad_norm,
            });
        }
        iterations += 1;
        let hessian = history.hessian(&theta, lambda)?;
        let chol = Cholesky::new(hessian).ok_or(EstimationError::NotPositiveDefinite)?;
        let step = chol.solve(&grad);
        let decrement = grad.dot(&step);

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = &theta + &step * scale;
            let cand_value = history.log_likelihood(&candidate, lambda)?;
            let slack = 1e-12 * value.abs().max(1.0);
            if cand_value >= value + 1e-4 * scale * decrement - slack {
                accepted = Some((candidate, cand_value));
                break;
            }
            scale *= 0.5;
        }
        let (candidate, cand_value) = match accepted {
            Some(c) => c,
            // Objective is flat at rounding level; trust the full Newton step.
            None => {
                let candidate = &theta + &step;
                let v = history.log_likelihood(&candidate, lambda)?;
                (candidate, v)
            }
        };
        theta = candidate;
        value = cand_value;
        grad = history.log_likelihood_gradient(&theta, lambda)?;
        grad_norm = grad.norm();
    }

    Ok(EstimatorSnapshot {
        theta_hat: theta,
        lambda,
        t,
        grad_norm,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_history_fits_zero() {
        let h = InteractionHistory::new(3);
        let snap = fit_mle(&h, 1.0, None).unwrap();
        assert_eq!(snap.theta_hat, Vector::zeros(3));
        assert_eq!(snap.iterations, 0);
        assert_eq!(snap.t, 1);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let mut h = InteractionHistory::new(1);
        h.push(Vector::from_element(1, 1.0), true).unwrap();
        let settings = NewtonSettings {
            tolerance: 1e-300,
            max_iterations: 1,
        };
        let err = fit_mle_with(&h, 1.0, None, settings).unwrap_err();
        assert!(matches!(err, EstimationError::NonConvergence { iterations: 1, .. }));
    }

    #[test]
    fn separable_data_still_converges() {
        let mut h = InteractionHistory::new(2);
        for _ in 0..200 {
            h.push(Vector::from_row_slice(&[1.0, 0.0]), true).unwrap();
            h.push(Vector::from_row_slice(&[-1.0, 0.0]), false).unwrap();
        }
        let snap = fit_mle(&h, 1e-3, None).unwrap();
        assert!(snap.grad_norm <= 1e-8);
        assert!(snap.theta_hat[0] > 5.0);
        assert_relative_eq!(snap.theta_hat[1], 0.0, epsilon = 1e-12);
    }
}
