//! Simulated logistic bandit worlds.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::linalg::Vector;
use crate::link::{kappa_of, sigmoid};
use crate::rng::{random_on_sphere, Purpose, SeedStreams};

/// Angular noise of oversampled arms, in radians.
pub const OVERSAMPLE_ANGLE_SD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvironmentError {
    #[error("invalid arm-set specification: {0}")]
    InvalidSpec(String),
    #[error("‖θ*‖ = {norm} exceeds S = {s_bound}")]
    ThetaOutsideBall { norm: f64, s_bound: f64 },
    #[error("played arm is not a member of the round's arm set")]
    ArmNotInSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmSetKind {
    /// The same `K` unit arms every round.
    FixedFinite,
    /// `K` fresh uniform unit vectors per round.
    FreshUnitSphere,
    /// Each arm is a noisy copy of `direction` with probability
    /// `oversample_weight`, otherwise uniform on the sphere.
    OversampledDirection,
}

impl ArmSetKind {
    pub fn name(self) -> &'static str {
        match self {
            ArmSetKind::FixedFinite => "fixed_finite",
            ArmSetKind::FreshUnitSphere => "fresh_unit_sphere",
            ArmSetKind::OversampledDirection => "oversampled_direction",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fixed_finite" => Some(ArmSetKind::FixedFinite),
            "fresh_unit_sphere" => Some(ArmSetKind::FreshUnitSphere),
            "oversampled_direction" => Some(ArmSetKind::OversampledDirection),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSetSpec {
    pub kind: ArmSetKind,
    pub k: usize,
    pub direction: Option<Vector>,
    pub oversample_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticBanditInstance {
    pub theta_star: Vector,
    pub s_bound: f64,
    pub arm_spec: ArmSetSpec,
    pub seed: u64,
    fixed_arms: Vec<Vector>,
}

impl LogisticBanditInstance {
    pub fn new(
        theta_star: Vector,
        s_bound: f64,
        arm_spec: ArmSetSpec,
        seed: u64,
    ) -> Result<Self, EnvironmentError> {
        let d = theta_star.len();
        if d == 0 {
            return Err(EnvironmentError::InvalidSpec("dimension must be positive".into()));
        }
        let norm = theta_star.norm();
        if !(s_bound > 0.0) || norm > s_bound * (1.0 + 1e-12) {
            return Err(EnvironmentError::ThetaOutsideBall { norm, s_bound });
        }
        if arm_spec.k == 0 {
            return Err(EnvironmentError::InvalidSpec("K must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&arm_spec.oversample_weight) {
            return Err(EnvironmentError::InvalidSpec(format!(
                "oversample_weight must lie in [0, 1], got {}",
                arm_spec.oversample_weight
            )));
        }
        if arm_spec.kind == ArmSetKind::OversampledDirection {
            match &arm_spec.direction {
                Some(dir) if dir.len() == d && (dir.norm() - 1.0).abs() <= 1e-9 => {}
                _ => {
                    return Err(EnvironmentError::InvalidSpec(
                        "oversampled_direction needs a unit direction of dimension d".into(),
                    ))
                }
            }
        }
        let fixed_arms = if arm_spec.kind == ArmSetKind::FixedFinite {
            let mut rng = SeedStreams::new(seed).stream(Purpose::Instance, 0, 1);
            (0..arm_spec.k).map(|_| random_on_sphere(&mut rng, d, 1.0)).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            theta_star,
            s_bound,
            arm_spec,
            seed,
            fixed_arms,
        })
    }

    /// Replace the fixed arm set, e.g. to study a hand-built decision set.
    pub fn with_fixed_arms(mut self, arms: Vec<Vector>) -> Result<Self, EnvironmentError> {
        if arms.is_empty() || arms.iter().any(|a| a.len() != self.dim() || a.norm() > 1.0 + 1e-12) {
            return Err(EnvironmentError::InvalidSpec("fixed arms must be non-empty unit-ball vectors".into()));
        }
        self.arm_spec.kind = ArmSetKind::FixedFinite;
        self.arm_spec.k = arms.len();
        self.fixed_arms = arms;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn fixed_arms(&self) -> &[Vector] {
        &self.fixed_arms
    }

    /// Arm set of round `t`. Fixed sets ignore `rng`; the others consume it.
    pub fn draw_arm_set<R: Rng + ?Sized>(&self, _t: usize, rng: &mut R) -> Vec<Vector> {
        let d = self.dim();
        match self.arm_spec.kind {
            ArmSetKind::FixedFinite => self.fixed_arms.clone(),
            ArmSetKind::FreshUnitSphere => (0..self.arm_spec.k)
                .map(|_| random_on_sphere(rng, d, 1.0))
                .collect(),
            ArmSetKind::OversampledDirection => {
                let dir = self.arm_spec.direction.as_ref().expect("validated in new");
                let noise = Normal::new(0.0, OVERSAMPLE_ANGLE_SD).expect("positive sd");
                (0..self.arm_spec.k)
                    .map(|_| {
                        if rng.random::<f64>() < self.arm_spec.oversample_weight {
                            rotate_toward_random(dir, noise.sample(rng), rng)
                        } else {
                            random_on_sphere(rng, d, 1.0)
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn success_probability(&self, x: &Vector) -> f64 {
        sigmoid(x.dot(&self.theta_star))
    }

    /// Bernoulli reward with success probability `μ(xᵀθ*)`.
    pub fn pull<R: Rng + ?Sized>(&self, x: &Vector, rng: &mut R) -> bool {
        rng.random::<f64>() < self.success_probability(x)
    }

    /// `μ(max_a aᵀθ*) − μ(xᵀθ*)`.
    pub fn instant_regret(&self, x: &Vector, arm_set: &[Vector]) -> Result<f64, EnvironmentError> {
        if !arm_set.iter().any(|a| a == x) {
            return Err(EnvironmentError::ArmNotInSet);
        }
        let best = arm_set
            .iter()
            .map(|a| a.dot(&self.theta_star))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((sigmoid(best) - sigmoid(x.dot(&self.theta_star))).max(0.0))
    }

    /// `sup_{x ∈ X, θ ∈ Θ} 1/μ̇(xᵀθ)`.
    pub fn kappa(&self) -> f64 {
        let s = self.s_bound;
        match self.arm_spec.kind {
            ArmSetKind::FixedFinite => self
                .fixed_arms
                .iter()
                .map(|a| kappa_of(a.norm() * s).expect("finite non-negative"))
                .fold(4.0, f64::max),
            _ => kappa_of(s).expect("finite non-negative"),
        }
    }
}

/// `cos φ · dir + sin φ · u` for a uniformly random unit `u ⊥ dir`.
fn rotate_toward_random<R: Rng + ?Sized>(dir: &Vector, phi: f64, rng: &mut R) -> Vector {
    let d = dir.len();
    if d == 1 {
        return dir.clone();
    }
    loop {
        let g = random_on_sphere(rng, d, 1.0);
        let ortho = &g - dir * g.dot(dir);
        let n = ortho.norm();
        if n > 1e-8 {
            let x = dir * phi.cos() + ortho * (phi.sin() / n);
            return &x / x.norm().max(1.0);
        }
    }
}
