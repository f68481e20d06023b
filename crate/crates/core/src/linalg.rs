//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use thiserror::Error;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub fn cholesky(m: &Matrix) -> Result<Cholesky<f64, Dyn>, LinalgError> {
    Cholesky::new(m.clone()).ok_or(LinalgError::NotPositiveDefinite)
}

/// `‖x‖_M = √(xᵀMx)`, or `‖x‖_{M⁻¹}` when `inverse` is set.
///
/// The inverse form goes through a Cholesky solve; `M⁻¹` is never formed.
pub fn weighted_norm(x: &Vector, m: &Matrix, inverse: bool) -> Result<f64, LinalgError> {
    if m.nrows() != x.len() || m.ncols() != x.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: m.nrows(),
            found: x.len(),
        });
    }
    let chol = cholesky(m)?;
    if inverse {
        Ok(inverse_norm(&chol, x))
    } else {
        // ‖Lᵀx‖₂ with M = LLᵀ
        Ok((chol.l().transpose() * x).norm())
    }
}

/// `‖x‖_{M⁻¹}` given the Cholesky factor of `M`.
pub fn inverse_norm(chol: &Cholesky<f64, Dyn>, x: &Vector) -> f64 {
    inverse_quad(chol, x).max(0.0).sqrt()
}

/// `xᵀM⁻¹x` given the Cholesky factor of `M`.
pub fn inverse_quad(chol: &Cholesky<f64, Dyn>, x: &Vector) -> f64 {
    let l = chol.l_dirty();
    let y = l
        .solve_lower_triangular(x)
        .expect("Cholesky factor has a positive diagonal");
    y.norm_squared()
}

pub fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum()
}

pub fn min_eigenvalue(sym: &Matrix) -> f64 {
    SymmetricEigen::new(sym.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Lower Cholesky factor of `λI + Σ v vᵀ` maintained under rank-one updates.
#[derive(Debug, Clone)]
pub struct CholeskyTracker {
    factor: Matrix,
}

impl CholeskyTracker {
    pub fn new(dim: usize, ridge: f64) -> Self {
        Self {
            factor: Matrix::identity(dim, dim) * ridge.sqrt(),
        }
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// Replace the factor of `A` with the factor of `A + v vᵀ` in O(d²).
    pub fn rank_one_update(&mut self, v: &Vector) {
        let n = self.dim();
        let mut w = v.clone();
        let l = &mut self.factor;
        for k in 0..n {
            let lkk = l[(k, k)];
            let r = lkk.hypot(w[k]);
            let c = r / lkk;
            let s = w[k] / lkk;
            l[(k, k)] = r;
            for i in (k + 1)..n {
                let lik = (l[(i, k)] + s * w[i]) / c;
                w[i] = c * w[i] - s * lik;
                l[(i, k)] = lik;
            }
        }
    }

    pub fn log_det(&self) -> f64 {
        self.factor.diagonal().iter().map(|v| 2.0 * v.ln()).sum()
    }

    /// `‖b‖_{A⁻¹}`.
    pub fn inverse_norm(&self, b: &Vector) -> f64 {
        self.factor
            .solve_lower_triangular(b)
            .expect("tracked factor has a positive diagonal")
            .norm()
    }

    pub fn factor(&self) -> &Matrix {
        &self.factor
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weighted_norm_reference_points() {
        let e1 = Vector::from_vec(vec![1.0, 0.0]);
        assert_eq!(weighted_norm(&e1, &Matrix::identity(2, 2), false).unwrap(), 1.0);
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 1.0]));
        assert_relative_eq!(weighted_norm(&e1, &m, true).unwrap(), 0.5);
        assert_relative_eq!(weighted_norm(&e1, &m, false).unwrap(), 2.0);
    }

    #[test]
    fn weighted_norm_rejects_indefinite_and_mismatched() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
        let x = Vector::from_vec(vec![1.0, 1.0]);
        assert_eq!(weighted_norm(&x, &m, true), Err(LinalgError::NotPositiveDefinite));
        let y = Vector::from_vec(vec![1.0, 1.0, 1.0]);
        assert!(matches!(
            weighted_norm(&y, &Matrix::identity(2, 2), false),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tracker_matches_batch_factorization() {
        let mut tracker = CholeskyTracker::new(3, 0.7);
        let mut batch = Matrix::identity(3, 3) * 0.7;
        let vs = [[0.3, -0.2, 0.9], [1.0, 0.0, 0.0], [-0.5, 0.5, 0.1], [0.2, 0.2, 0.2]];
        for v in vs {
            let v = Vector::from_row_slice(&v);
            tracker.rank_one_update(&v);
            batch += &v * v.transpose();
        }
        let chol = cholesky(&batch).unwrap();
        assert_relative_eq!(tracker.log_det(), log_det(&chol), epsilon = 1e-12);
        let b = Vector::from_row_slice(&[1.0, -2.0, 0.5]);
        assert_relative_eq!(tracker.inverse_norm(&b), inverse_norm(&chol, &b), epsilon = 1e-12);
    }
}
