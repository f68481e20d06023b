//! Monte Carlo checks of the Bernstein-type self-normalized inequality.
//!
//! A trace plays arms `x_s` against Bernoulli noise `ε_{s+1} = r − μ(x_sᵀθ*)`
//! and tracks `S_t = Σ_{s<t} ε_{s+1}x_s` in the norm of
//! `H_t = Σ_{s<t} σ_s² x_s x_sᵀ + λI`, with `σ_s² = μ̇(x_sᵀθ*)`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::confidence::{bernstein_radius_log_det, ConfidenceError};
use crate::linalg::{CholeskyTracker, Vector};
use crate::link::{sigmoid, sigmoid_deriv, LinkConstants};
use crate::rng::{random_on_sphere, Purpose, SeedStreams};

pub const MIN_RUNS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Independent uniform unit arms.
    IidSphere,
    /// `x_s = normalize(S_s + e₁)`: arms driven by past noise.
    AdaptiveGreedy,
    /// `x_s = θ*/‖θ*‖`: the smallest possible variance.
    Aligned,
}

impl Design {
    pub const ALL: [Design; 3] = [Design::IidSphere, Design::AdaptiveGreedy, Design::Aligned];

    pub fn name(self) -> &'static str {
        match self {
            Design::IidSphere => "iid_sphere",
            Design::AdaptiveGreedy => "adaptive_greedy",
            Design::Aligned => "aligned",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub x: Vector,
    /// `ε_{t+1}`, drawn after the check at round `t`.
    pub eps: f64,
    pub sigma2: f64,
    /// `‖S_t‖_{H_t⁻¹}`.
    pub norm: f64,
    pub bernstein_radius: f64,
    pub classical_radius: f64,
    /// Running `min_{s ≤ t} σ_s²`.
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleTrace {
    pub lambda: f64,
    pub delta: f64,
    pub steps: Vec<TraceStep>,
    /// `log det H_{T+1}` from the incremental factor.
    pub final_log_det: f64,
}

impl MartingaleTrace {
    pub fn omega(&self) -> f64 {
        self.steps.last().map_or(LinkConstants::SIGMOID.max_slope, |s| s.omega)
    }

    pub fn bernstein_violated(&self) -> bool {
        self.steps.iter().any(|s| s.norm > s.bernstein_radius)
    }

    pub fn classical_violated(&self) -> bool {
        self.steps.iter().any(|s| s.norm > s.classical_radius)
    }
}

/// Sub-Gaussian radius `(1/√ω)·√(2d·log(1 + ωt/(λd)))`.
pub fn classical_radius(omega: f64, t: usize, lambda: f64, dim: usize) -> f64 {
    let d = dim as f64;
    (2.0 * d * (omega * t as f64 / (lambda * d)).ln_1p()).sqrt() / omega.sqrt()
}

/// Simulate `horizon` rounds; the check at round `t` uses the first `t − 1`
/// noise terms.
pub fn simulate_trace<R: Rng + ?Sized>(
    design: Design,
    theta_star: &Vector,
    horizon: usize,
    lambda: f64,
    delta: f64,
    rng: &mut R,
) -> Result<MartingaleTrace, ConfidenceError> {
    let d = theta_star.len();
    let mut tracker = CholeskyTracker::new(d, lambda);
    let mut s = Vector::zeros(d);
    let mut omega = f64::INFINITY;
    let mut steps = Vec::with_capacity(horizon);
    let aligned = {
        let n = theta_star.norm();
        if n > 0.0 {
            theta_star / n
        } else {
            unit(d, 0)
        }
    };
    for t in 1..=horizon {
        let x = match design {
            Design::IidSphere => random_on_sphere(rng, d, 1.0),
            Design::AdaptiveGreedy => {
                let v = &s + unit(d, 0);
                let n = v.norm();
                if n > 0.0 {
                    v / n
                } else {
                    unit(d, 0)
                }
            }
            Design::Aligned => aligned.clone(),
        };
        let z = x.dot(theta_star);
        let sigma2 = sigmoid_deriv(z);
        omega = omega.min(sigma2);
        let norm = tracker.inverse_norm(&s);
        let log_det = tracker.log_det();
        let bern = bernstein_radius_log_det(lambda, delta, d, log_det)?;
        let classical = classical_radius(omega, t, lambda, d);

        let reward = rng.random::<f64>() < sigmoid(z);
        let eps = f64::from(u8::from(reward)) - sigmoid(z);
        s.axpy(eps, &x, 1.0);
        tracker.rank_one_update(&(&x * sigma2.sqrt()));
        steps.push(TraceStep {
            x,
            eps,
            sigma2,
            norm,
            bernstein_radius: bern,
            classical_radius: classical,
            omega,
        });
    }
    Ok(MartingaleTrace {
        lambda,
        delta,
        final_log_det: tracker.log_det(),
        steps,
    })
}

fn unit(d: usize, i: usize) -> Vector {
    let mut e = Vector::zeros(d);
    e[i] = 1.0;
    e
}

/// Wilson score interval at 95% for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    const Z: f64 = 1.959963984540054;
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let denom = 1.0 + Z * Z / n_f;
    let center = (p + Z * Z / (2.0 * n_f)) / denom;
    let half = Z * (p * (1.0 - p) / n_f + Z * Z / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub design: Design,
    pub d: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub lambda: f64,
    pub delta: f64,
    pub n_runs: usize,
    /// Fraction of runs where the Bernstein-type radius is exceeded at some round.
    pub violations_thm1: f64,
    /// Same fraction for the sub-Gaussian radius.
    pub violations_classical: f64,
    /// Wilson 95% interval for `violations_thm1`.
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MartingaleError {
    #[error("at least {MIN_RUNS} runs are required, got {0}")]
    TooFewRuns(usize),
    #[error(transparent)]
    Confidence(#[from] ConfidenceError),
}

/// Uniform-in-time violation frequencies over `n_runs` independent traces.
pub fn violation_stats(
    design: Design,
    theta_star: &Vector,
    horizon: usize,
    lambda: f64,
    delta: f64,
    n_runs: usize,
    seed: u64,
) -> Result<ViolationReport, MartingaleError> {
    if n_runs < MIN_RUNS {
        return Err(MartingaleError::TooFewRuns(n_runs));
    }
    let streams = SeedStreams::new(seed);
    let outcomes: Vec<(bool, bool)> = (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = streams.stream(Purpose::Martingale, run as u64, design as u64);
            let trace = simulate_trace(design, theta_star, horizon, lambda, delta, &mut rng)?;
            Ok((trace.bernstein_violated(), trace.classical_violated()))
        })
        .collect::<Result<_, ConfidenceError>>()?;
    let bern = outcomes.iter().filter(|o| o.0).count();
    let classical = outcomes.iter().filter(|o| o.1).count();
    let (ci_low, ci_high) = wilson_interval(bern, n_runs);
    Ok(ViolationReport {
        design,
        d: theta_star.len(),
        horizon,
        lambda,
        delta,
        n_runs,
        violations_thm1: bern as f64 / n_runs as f64,
        violations_classical: classical as f64 / n_runs as f64,
        ci_low,
        ci_high,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusComparison {
    pub omega: f64,
    pub t: usize,
    pub bernstein: f64,
    pub classical: f64,
    pub bernstein_smaller: bool,
}

/// Tabulate both radii, bounding `det H_t` by `(λ + Lt/d)^d`.
pub fn compare_radii(
    omega_grid: &[f64],
    t_grid: &[usize],
    lambda: f64,
    delta: f64,
    dim: usize,
) -> Result<Vec<RadiusComparison>, ConfidenceError> {
    let d = dim as f64;
    let l = LinkConstants::SIGMOID.max_slope;
    let mut rows = Vec::with_capacity(omega_grid.len() * t_grid.len());
    for &omega in omega_grid {
        for &t in t_grid {
            let log_det = d * (lambda + l * t as f64 / d).ln();
            let bernstein = bernstein_radius_log_det(lambda, delta, dim, log_det)?;
            let classical = classical_radius(omega, t, lambda, dim);
            rows.push(RadiusComparison {
                omega,
                t,
                bernstein,
                classical,
                bernstein_smaller: bernstein < classical,
            });
        }
    }
    Ok(rows)
}
