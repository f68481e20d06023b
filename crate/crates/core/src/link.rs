//! Sigmoid link arithmetic.
//!
//! Everything here is a pure scalar function. Expressions that can leave the
//! double-precision range (slope envelopes, κ for large logits) are evaluated
//! through logarithms or through the hyperbolic identities
//!
//! ```text
//! μ̇(z)        = 1 / (4 cosh²(z/2))
//! μ(b) − μ(a) = sinh((b−a)/2) / (2 cosh(a/2) cosh(b/2))
//! 1 / μ̇(z)    = 2 + 2 cosh(z)
//! ```
//!
//! which avoid the cancellation of `μ(b) − μ(a)` when both logits saturate.

use std::f64::consts::LN_2;

use thiserror::Error;

/// Below this logit gap the slope coefficient is evaluated at the midpoint.
pub const ALPHA_SWITCH: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LinkError {
    #[error("logit must be finite, got {0}")]
    NonFinite(f64),
    #[error("maximal logit must be non-negative, got {0}")]
    NegativeLogit(f64),
}

/// Uniform bounds on the first two derivatives of the link.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinkConstants {
    /// Upper bound on μ̇ (written `L`).
    pub max_slope: f64,
    /// Upper bound on |μ̈| (written `M`).
    pub max_curvature: f64,
}

impl LinkConstants {
    pub const SIGMOID: LinkConstants = LinkConstants {
        max_slope: 0.25,
        max_curvature: 0.25,
    };
}

impl Default for LinkConstants {
    fn default() -> Self {
        Self::SIGMOID
    }
}

fn check(z: f64) -> Result<f64, LinkError> {
    if z.is_finite() {
        Ok(z)
    } else {
        Err(LinkError::NonFinite(z))
    }
}

/// Logistic function `1 / (1 + e^{-z})`.
///
/// Only `e^{-|z|}` is ever formed, so nothing overflows. For `z ≳ 37` the
/// result rounds to exactly `1.0` in double precision.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_checked(z: f64) -> Result<f64, LinkError> {
    check(z).map(sigmoid)
}

/// `log μ(z)`, computed as `-softplus(-z)`.
#[inline]
pub fn ln_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// μ̇(z) = μ(z)(1 − μ(z)), formed from `e^{-|z|}` so that the tails keep full
/// relative precision.
#[inline]
pub fn sigmoid_deriv(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    let d = 1.0 + e;
    e / (d * d)
}

pub fn sigmoid_deriv_checked(z: f64) -> Result<f64, LinkError> {
    check(z).map(sigmoid_deriv)
}

/// `log μ̇(z)`, finite for every finite `z`.
#[inline]
pub fn ln_sigmoid_deriv(z: f64) -> f64 {
    let a = z.abs();
    -a - 2.0 * (-a).exp().ln_1p()
}

/// μ̈(z) = μ̇(z)(1 − 2μ(z)) = −μ̇(z)·tanh(z/2).
#[inline]
pub fn sigmoid_second_deriv(z: f64) -> f64 {
    -sigmoid_deriv(z) * (0.5 * z).tanh()
}

/// `log cosh(x)` without overflow.
#[inline]
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// `log(sinh(h)/h)` for `h ≥ 0`.
fn ln_sinhc(h: f64) -> f64 {
    if h < 20.0 {
        (h.sinh() / h).ln()
    } else {
        h + (-(-2.0 * h).exp()).ln_1p() - LN_2 - h.ln()
    }
}

/// Mean slope of μ on the segment `[z1, z2]`:
/// `∫₀¹ μ̇(z1 + v(z2 − z1)) dv = (μ(z2) − μ(z1)) / (z2 − z1)`.
///
/// Falls back to μ̇ at the midpoint when `|z2 − z1| ≤ ALPHA_SWITCH`.
pub fn alpha(z1: f64, z2: f64) -> f64 {
    let gap = z2 - z1;
    if gap.abs() <= ALPHA_SWITCH {
        return sigmoid_deriv(0.5 * (z1 + z2));
    }
    let h = 0.5 * gap.abs();
    let (a, b) = (0.5 * z1, 0.5 * z2);
    if h < 300.0 && a.abs() < 300.0 && b.abs() < 300.0 {
        (h.sinh() / h) / (4.0 * a.cosh() * b.cosh())
    } else {
        (ln_sinhc(h) - 2.0 * LN_2 - ln_cosh(a) - ln_cosh(b)).exp()
    }
}

pub fn alpha_checked(z1: f64, z2: f64) -> Result<f64, LinkError> {
    Ok(alpha(check(z1)?, check(z2)?))
}

/// Two-sided control of the mean slope by the slope at one end point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEnvelope {
    /// `μ̇(z1)(1 − e^{−|Δ|})/|Δ|`
    pub lower: f64,
    /// `μ̇(z1)(e^{|Δ|} − 1)/|Δ|`; `+∞` when it is not representable.
    pub upper: f64,
    /// `μ̇(z1)/(1 + |Δ|)`
    pub lower_simple: f64,
    /// Natural log of `upper`, always finite.
    pub ln_upper: f64,
}

/// Self-concordance envelope around `alpha(z1, z2)`, with `Δ = z1 − z2`.
pub fn self_concordance_envelope(z1: f64, z2: f64) -> SlopeEnvelope {
    let gap = (z1 - z2).abs();
    let slope = sigmoid_deriv(z1);
    let ln_slope = ln_sigmoid_deriv(z1);
    if gap == 0.0 {
        return SlopeEnvelope {
            lower: slope,
            upper: slope,
            lower_simple: slope,
            ln_upper: ln_slope,
        };
    }
    let lower_ratio = -(-gap).exp_m1() / gap;
    // log((e^g − 1)/g)
    let ln_upper_ratio = if gap < 1.0 {
        (gap.exp_m1() / gap).ln()
    } else {
        gap + (-(-gap).exp()).ln_1p() - gap.ln()
    };
    let ln_upper = ln_slope + ln_upper_ratio;
    let upper = if gap < 700.0 {
        slope * (gap.exp_m1() / gap)
    } else {
        ln_upper.exp()
    };
    // A vanishing μ̇(z1) with a huge gap is still representable through logs.
    let upper = if upper.is_finite() && !(upper == 0.0 && ln_upper > -700.0) {
        upper
    } else {
        ln_upper.exp()
    };
    SlopeEnvelope {
        lower: slope * lower_ratio,
        upper,
        lower_simple: slope / (1.0 + gap),
        ln_upper,
    }
}

/// κ for a decision set whose logits range over `[-max_logit, max_logit]`:
/// `1/μ̇(max_logit) = 2 + 2 cosh(max_logit)`.
pub fn kappa_of(max_logit: f64) -> Result<f64, LinkError> {
    let m = check(max_logit)?;
    if m < 0.0 {
        return Err(LinkError::NegativeLogit(m));
    }
    Ok(2.0 + 2.0 * m.cosh())
}

/// Inverse of [`kappa_of`] on `κ ≥ 4`.
pub fn max_logit_for_kappa(kappa: f64) -> f64 {
    (0.5 * (kappa - 2.0)).max(1.0).acosh()
}
