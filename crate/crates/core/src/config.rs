//! Experiment configuration in a flat `key = value` text format.
//!
//! ```text
//! # comment
//! instance.d = 2
//! instance.s = 5
//! instance.theta_star = random_on_sphere(S)   # or: 3.0, -4.0
//! arms.kind = fixed_finite                    # fresh_unit_sphere | oversampled_direction
//! arms.k = 10
//! horizon = 2000
//! replications = 50
//! policies = log_ucb_1, log_ucb_2, glm_ucb
//! lambda = d_log_t                            # or a positive number
//! delta = 0.05
//! seed = 7
//! ```
//!
//! Unknown keys are rejected. Errors name the offending key.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::environment::ArmSetKind;
use crate::martingale::Design;
use crate::policies::PolicyKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: &str, message: impl Into<String>) -> Self {
        Self {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSpec {
    RandomOnSphere,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    Fixed(f64),
    /// `λ = d·log T`.
    DLogT,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub s: f64,
    pub theta_star: ThetaSpec,
    pub arm_kind: ArmSetKind,
    pub k: usize,
    pub direction: Option<Vec<f64>>,
    pub oversample_weight: f64,
    pub horizon: usize,
    pub replications: usize,
    pub policies: Vec<PolicyKind>,
    pub lambda: LambdaRule,
    pub delta: f64,
    pub seed: u64,
    pub output: PathBuf,
    pub kappa_override: Option<f64>,
    pub figure_checkpoint: Option<usize>,
    pub figure_samples: usize,
    pub martingale_designs: Vec<Design>,
    pub martingale_runs: usize,
    pub martingale_theta_norm: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 2,
            s: 1.0,
            theta_star: ThetaSpec::RandomOnSphere,
            arm_kind: ArmSetKind::FixedFinite,
            k: 10,
            direction: None,
            oversample_weight: 0.0,
            horizon: 1000,
            replications: 1,
            policies: vec![PolicyKind::LogUcb1, PolicyKind::LogUcb2, PolicyKind::GlmUcb],
            lambda: LambdaRule::DLogT,
            delta: 0.05,
            seed: 0,
            output: PathBuf::from("out"),
            kappa_override: None,
            figure_checkpoint: None,
            figure_samples: 256,
            martingale_designs: Design::ALL.to_vec(),
            martingale_runs: 2000,
            martingale_theta_norm: None,
        }
    }
}

const KEYS: &[&str] = &[
    "instance.d",
    "instance.s",
    "instance.theta_star",
    "arms.kind",
    "arms.k",
    "arms.direction",
    "arms.oversample_weight",
    "horizon",
    "replications",
    "policies",
    "lambda",
    "delta",
    "seed",
    "output",
    "kappa_override",
    "figure.checkpoint",
    "figure.samples",
    "martingale.designs",
    "martingale.runs",
    "martingale.theta_norm",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| ConfigError::new(key, format!("cannot parse {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    let inner = v.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .map(|f| parse_num::<f64>(key, f.trim()))
        .collect()
}

fn parse_names<T>(key: &str, v: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigError> {
    let items: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).ok_or_else(|| ConfigError::new(key, format!("unknown name {s:?}"))))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(ConfigError::new(key, "list is empty"));
    }
    Ok(items)
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(&format!("line {}", i + 1), "expected `key = value`"))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::new(key, "unknown key"));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(ConfigError::new(key, "duplicate key"));
            }
        }
        let mut c = ExperimentConfig::default();
        for (key, v) in &entries {
            let key = key.as_str();
            let v = v.as_str();
            match key {
                "instance.d" => c.d = parse_num(key, v)?,
                "instance.s" => c.s = parse_num(key, v)?,
                "instance.theta_star" => {
                    c.theta_star = if v.replace(' ', "") == "random_on_sphere(S)" {
                        ThetaSpec::RandomOnSphere
                    } else {
                        ThetaSpec::Explicit(parse_list(key, v)?)
                    }
                }
                "arms.kind" => {
                    c.arm_kind = ArmSetKind::parse(v)
                        .ok_or_else(|| ConfigError::new(key, format!("unknown arm-set kind {v:?}")))?
                }
                "arms.k" => c.k = parse_num(key, v)?,
                "arms.direction" => c.direction = Some(parse_list(key, v)?),
                "arms.oversample_weight" => c.oversample_weight = parse_num(key, v)?,
                "horizon" => c.horizon = parse_num(key, v)?,
                "replications" => c.replications = parse_num(key, v)?,
                "policies" => c.policies = parse_names(key, v, PolicyKind::parse)?,
                "lambda" => {
                    c.lambda = if v == "d_log_t" {
                        LambdaRule::DLogT
                    } else {
                        LambdaRule::Fixed(parse_num(key, v)?)
                    }
                }
                "delta" => c.delta = parse_num(key, v)?,
                "seed" => c.seed = parse_num(key, v)?,
                "output" => c.output = PathBuf::from(v),
                "kappa_override" => c.kappa_override = Some(parse_num(key, v)?),
                "figure.checkpoint" => c.figure_checkpoint = Some(parse_num(key, v)?),
                "figure.samples" => c.figure_samples = parse_num(key, v)?,
                "martingale.designs" => c.martingale_designs = parse_names(key, v, Design::parse)?,
                "martingale.runs" => c.martingale_runs = parse_num(key, v)?,
                "martingale.theta_norm" => c.martingale_theta_norm = Some(parse_num(key, v)?),
                _ => unreachable!("key list checked above"),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |k: &str, m: &str| Err(ConfigError::new(k, m));
        if self.d == 0 {
            return fail("instance.d", "must be at least 1");
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return fail("instance.s", "must be positive");
        }
        if let ThetaSpec::Explicit(v) = &self.theta_star {
            if v.len() != self.d {
                return fail("instance.theta_star", "length differs from instance.d");
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > self.s * (1.0 + 1e-12) {
                return fail("instance.theta_star", "norm exceeds instance.s");
            }
        }
        if self.k == 0 {
            return fail("arms.k", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.oversample_weight) {
            return fail("arms.oversample_weight", "must lie in [0, 1]");
        }
        if self.arm_kind == ArmSetKind::OversampledDirection {
            match &self.direction {
                Some(v) if v.len() == self.d && v.iter().any(|x| *x != 0.0) => {}
                _ => return fail("arms.direction", "needs a non-zero vector of length instance.d"),
            }
        }
        if self.horizon == 0 {
            return fail("horizon", "must be at least 1");
        }
        if self.replications == 0 {
            return fail("replications", "must be at least 1");
        }
        if let LambdaRule::Fixed(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return fail("lambda", "must be positive");
            }
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return fail("delta", "must lie in (0, 1]");
        }
        if let Some(k) = self.kappa_override {
            if !(k >= 4.0 && k.is_finite()) {
                return fail("kappa_override", "must be at least 4");
            }
        }
        if self.figure_checkpoint == Some(0) {
            return fail("figure.checkpoint", "must be at least 1");
        }
        if self.figure_samples == 0 {
            return fail("figure.samples", "must be at least 1");
        }
        if let Some(n) = self.martingale_theta_norm {
            if !(n >= 0.0 && n.is_finite()) {
                return fail("martingale.theta_norm", "must be non-negative");
            }
        }
        Ok(())
    }

    /// Regularization resolved against the horizon.
    pub fn lambda_value(&self) -> f64 {
        match self.lambda {
            LambdaRule::Fixed(l) => l,
            LambdaRule::DLogT => (self.d as f64 * (self.horizon as f64).ln()).max(f64::MIN_POSITIVE),
        }
    }

    /// Every key in sorted order with its resolved value.
    pub fn canonical_text(&self) -> String {
        let mut m: BTreeMap<&str, String> = BTreeMap::new();
        m.insert("instance.d", self.d.to_string());
        m.insert("instance.s", self.s.to_string());
        m.insert(
            "instance.theta_star",
            match &self.theta_star {
                ThetaSpec::RandomOnSphere => "random_on_sphere(S)".into(),
                ThetaSpec::Explicit(v) => fmt_list(v),
            },
        );
        m.insert("arms.kind", self.arm_kind.name().into());
        m.insert("arms.k", self.k.to_string());
        if let Some(d) = &self.direction {
            m.insert("arms.direction", fmt_list(d));
        }
        m.insert("arms.oversample_weight", self.oversample_weight.to_string());
        m.insert("horizon", self.horizon.to_string());
        m.insert("replications", self.replications.to_string());
        m.insert(
            "policies",
            self.policies.iter().map(|p| p.name()).collect::<Vec<_>>().join(","),
        );
        m.insert(
            "lambda",
            match self.lambda {
                LambdaRule::Fixed(l) => l.to_string(),
                LambdaRule::DLogT => "d_log_t".into(),
            },
        );
        m.insert("delta", self.delta.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("output", self.output.display().to_string());
        if let Some(k) = self.kappa_override {
            m.insert("kappa_override", k.to_string());
        }
        if let Some(c) = self.figure_checkpoint {
            m.insert("figure.checkpoint", c.to_string());
        }
        m.insert("figure.samples", self.figure_samples.to_string());
        m.insert(
            "martingale.designs",
            self.martingale_designs.iter().map(|d| d.name()).collect::<Vec<_>>().join(","),
        );
        m.insert("martingale.runs", self.martingale_runs.to_string());
        if let Some(n) = self.martingale_theta_norm {
            m.insert("martingale.theta_norm", n.to_string());
        }
        m.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of [`canonical_text`](Self::canonical_text), hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_text())
    }
}
