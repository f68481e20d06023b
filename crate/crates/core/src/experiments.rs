//! Replicated bandit simulations and their outputs.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::confidence::{BoundarySet, ConfidenceError, ConfidenceSet, RadiusSchedule};
use crate::config::{ConfigError, ExperimentConfig, ThetaSpec};
use crate::environment::{ArmSetSpec, EnvironmentError, LogisticBanditInstance};
use crate::linalg::Vector;
use crate::link::sigmoid;
use crate::martingale::{self, MartingaleError, ViolationReport};
use crate::policies::{BoundTracker, Policy, PolicyError, PolicyKind};
use crate::rng::{random_on_sphere, Purpose, SeedStreams};

pub const TRACE_HEADER: &str =
    "policy,rep,t,arm_idx,reward,inst_regret,cum_regret,bonus,gamma,good_event,bonus_first,bonus_second,bound";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("per-arm diagnostics were not recorded; enable them to validate optimism")]
    DiagnosticsDisabled,
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl From<PolicyError> for ExperimentError {
    fn from(e: PolicyError) -> Self {
        ExperimentError::Numerical(e.to_string())
    }
}

impl From<ConfidenceError> for ExperimentError {
    fn from(e: ConfidenceError) -> Self {
        ExperimentError::Numerical(e.to_string())
    }
}

impl From<MartingaleError> for ExperimentError {
    fn from(e: MartingaleError) -> Self {
        match e {
            MartingaleError::TooFewRuns(n) => ExperimentError::Config(ConfigError {
                path: "martingale.runs".into(),
                message: format!("at least {} runs are required, got {n}", martingale::MIN_RUNS),
            }),
            other => ExperimentError::Numerical(other.to_string()),
        }
    }
}

impl From<EnvironmentError> for ExperimentError {
    fn from(e: EnvironmentError) -> Self {
        match e {
            EnvironmentError::ArmNotInSet => ExperimentError::Numerical(e.to_string()),
            other => ExperimentError::Config(ConfigError {
                path: "instance".into(),
                message: other.to_string(),
            }),
        }
    }
}

/// One row of the trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub policy: PolicyKind,
    pub rep: usize,
    pub t: usize,
    pub arm_idx: usize,
    pub reward: bool,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub bonus: f64,
    pub gamma: f64,
    /// `θ* ∈ C_s(δ)` for every `s ≤ t`.
    pub good_event: bool,
    pub bonus_first: f64,
    pub bonus_second: f64,
    pub bound: Option<f64>,
}

/// Per-round checks that need `θ*` and the whole arm set.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// `max_x |μ(xᵀθ*) − μ(xᵀθ_t)| − ε_t(x)` over the round's arms.
    pub max_pred_slack: f64,
    /// `‖g_t(θ_t) − g_t(θ̂_t)‖_{H_t(θ_t)⁻¹}`.
    pub theta_deviation: f64,
    /// Same quantity at `θ*`.
    pub star_deviation: f64,
    /// `θ*` lies in the policy's feasible set (`Θ`, or `W_t` for `log_ucb_2`).
    pub star_feasible: bool,
    /// `x_tᵀθ*` for the played arm.
    pub star_logit: f64,
    /// Log-odds bound attached to the played arm (`log_ucb_2`).
    pub ell: Option<f64>,
    /// Searched value of the same supremum, when available.
    pub ell_searched: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub policy: PolicyKind,
    pub rep: usize,
    pub kappa: f64,
    pub rows: Vec<TraceRow>,
    pub diagnostics: Option<Vec<StepDiagnostics>>,
}

impl ReplicationResult {
    pub fn final_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn good_event(&self) -> bool {
        self.rows.last().is_none_or(|r| r.good_event)
    }

    pub fn final_bound(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.bound)
    }

    pub fn cum_regret_at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.rows[t - 1].cum_regret
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub final_regret_mean: f64,
    pub final_regret_std: f64,
    pub good_event_freq: f64,
    /// Good-event replications whose final regret exceeds the bound.
    pub bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub instance: LogisticBanditInstance,
    pub kappa: f64,
    pub lambda: f64,
    pub results: Vec<ReplicationResult>,
}

/// Sample mean and standard deviation (`n − 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Build the simulated world described by `config`.
pub fn build_instance(config: &ExperimentConfig) -> Result<LogisticBanditInstance, ExperimentError> {
    config.validate()?;
    let theta_star = match &config.theta_star {
        ThetaSpec::Explicit(v) => Vector::from_row_slice(v),
        ThetaSpec::RandomOnSphere => {
            let mut rng = SeedStreams::new(config.seed).stream(Purpose::Instance, 0, 0);
            random_on_sphere(&mut rng, config.d, config.s)
        }
    };
    let direction = config.direction.as_ref().map(|v| {
        let v = Vector::from_row_slice(v);
        let n = v.norm();
        v / n
    });
    let spec = ArmSetSpec {
        kind: config.arm_kind,
        k: config.k,
        direction,
        oversample_weight: config.oversample_weight,
    };
    Ok(LogisticBanditInstance::new(theta_star, config.s, spec, config.seed)?)
}

fn schedule_for(config: &ExperimentConfig) -> Result<RadiusSchedule, ExperimentError> {
    RadiusSchedule::new(config.lambda_value(), config.delta, config.s, config.d).map_err(|e| {
        ExperimentError::Config(ConfigError {
            path: "lambda".into(),
            message: e.to_string(),
        })
    })
}

/// Run one replication of one policy.
///
/// Arm sets and reward draws come from streams keyed by `(rep, t)` only, so
/// every policy faces the same contexts and the same uniform variates.
pub fn run_replication(
    instance: &LogisticBanditInstance,
    schedule: RadiusSchedule,
    kappa: f64,
    kind: PolicyKind,
    rep: usize,
    horizon: usize,
    streams: SeedStreams,
    diagnostics: bool,
) -> Result<ReplicationResult, ExperimentError> {
    let mut policy = Policy::new(kind, schedule, kappa)?;
    if diagnostics && kind == PolicyKind::LogUcb2 {
        policy = policy.with_log_odds_search();
    }
    let tracker = BoundTracker::new(kind, schedule, kappa, horizon);
    let theta_star = &instance.theta_star;
    let mut policy_rng = streams.stream(Purpose::Policy, rep as u64, kind as u64);
    let mut rows = Vec::with_capacity(horizon);
    let mut diags = diagnostics.then(|| Vec::with_capacity(horizon));
    let mut cum = 0.0;
    let mut good = true;

    for t in 1..=horizon {
        let mut arm_rng = streams.stream(Purpose::Arms, rep as u64, t as u64);
        let arms = instance.draw_arm_set(t, &mut arm_rng);

        let cs = policy.confidence_set()?;
        let star_dev = cs.deviation(theta_star)?;
        good = good && star_dev <= cs.gamma();

        let idx = policy.select(&arms, t, &mut policy_rng)?;
        let x = &arms[idx];
        let bonus = policy.bonus(x)?;

        let mut diag = None;
        if diagnostics {
            let theta = policy.theta();
            let mut max_slack = f64::NEG_INFINITY;
            for a in &arms {
                let gap = (sigmoid(a.dot(theta_star)) - sigmoid(a.dot(theta))).abs();
                max_slack = max_slack.max(gap - policy.bonus(a)?.total());
            }
            let star_feasible = match policy.admissible() {
                Some(w) => w.max_violation(theta_star) <= 0.0,
                None => theta_star.norm() <= schedule.s_bound,
            };
            diag = Some(StepDiagnostics {
                max_pred_slack: max_slack,
                theta_deviation: cs.deviation(theta)?,
                star_deviation: star_dev,
                star_feasible,
                star_logit: x.dot(theta_star),
                ell: None,
                ell_searched: None,
            });
        }

        let mut reward_rng = streams.stream(Purpose::Rewards, rep as u64, t as u64);
        let reward = instance.pull(x, &mut reward_rng);
        let inst = instance.instant_regret(x, &arms)?;
        cum += inst;
        rows.push(TraceRow {
            policy: kind,
            rep,
            t,
            arm_idx: idx,
            reward,
            inst_regret: inst,
            cum_regret: cum,
            bonus: bonus.total(),
            gamma: policy.gamma(),
            good_event: good,
            bonus_first: bonus.first,
            bonus_second: bonus.second,
            bound: tracker.at(t),
        });

        let x = x.clone();
        policy.update(&x, reward, t)?;
        if let (Some(list), Some(mut d)) = (diags.as_mut(), diag) {
            if let Some(lo) = policy.last_log_odds() {
                d.ell = Some(lo.bound);
                d.ell_searched = lo.searched;
            }
            list.push(d);
        }
    }
    Ok(ReplicationResult {
        policy: kind,
        rep,
        kappa,
        rows,
        diagnostics: diags,
    })
}

/// Run every `(policy, replication)` pair on a pool of `threads` workers.
/// Results come back in `(policy, rep)` order whatever the thread count.
pub fn run(config: &ExperimentConfig, threads: usize, diagnostics: bool) -> Result<RunOutput, ExperimentError> {
    let instance = build_instance(config)?;
    let schedule = schedule_for(config)?;
    let kappa = config.kappa_override.unwrap_or_else(|| instance.kappa());
    let streams = SeedStreams::new(config.seed);
    let jobs: Vec<(PolicyKind, usize)> = config
        .policies
        .iter()
        .flat_map(|&p| (0..config.replications).map(move |r| (p, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| ExperimentError::Numerical(format!("thread pool: {e}")))?;
    let results = pool.install(|| {
        jobs.par_iter()
            .map(|&(kind, rep)| {
                run_replication(&instance, schedule, kappa, kind, rep, config.horizon, streams, diagnostics)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(RunOutput {
        config: config.clone(),
        lambda: schedule.lambda,
        instance,
        kappa,
        results,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

impl RunOutput {
    pub fn for_policy(&self, kind: PolicyKind) -> impl Iterator<Item = &ReplicationResult> {
        self.results.iter().filter(move |r| r.policy == kind)
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for res in &self.results {
            for r in &res.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.policy.name(),
                    r.rep,
                    r.t,
                    r.arm_idx,
                    u8::from(r.reward),
                    r.inst_regret,
                    r.cum_regret,
                    r.bonus,
                    r.gamma,
                    u8::from(r.good_event),
                    r.bonus_first,
                    r.bonus_second,
                    opt(r.bound),
                );
            }
        }
        out
    }

    /// Mean and standard deviation of the cumulative regret per round.
    pub fn aggregate(&self, kind: PolicyKind) -> Vec<(usize, f64, f64)> {
        let reps: Vec<&ReplicationResult> = self.for_policy(kind).collect();
        (1..=self.config.horizon)
            .map(|t| {
                let vals: Vec<f64> = reps.iter().map(|r| r.rows[t - 1].cum_regret).collect();
                let (m, s) = mean_std(&vals);
                (t, m, s)
            })
            .collect()
    }

    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from("policy,t,mean_cum_regret,std_cum_regret\n");
        for &kind in &self.config.policies {
            for (t, m, s) in self.aggregate(kind) {
                let _ = writeln!(out, "{},{t},{m},{s}", kind.name());
            }
        }
        out
    }

    pub fn policy_summary(&self, kind: PolicyKind) -> PolicySummary {
        let reps: Vec<&ReplicationResult> = self.for_policy(kind).collect();
        let finals: Vec<f64> = reps.iter().map(|r| r.final_regret()).collect();
        let (mean, std) = mean_std(&finals);
        let good = reps.iter().filter(|r| r.good_event()).count();
        let violations = reps
            .iter()
            .filter(|r| r.good_event())
            .filter(|r| r.final_bound().is_some_and(|b| r.final_regret() > b))
            .count();
        PolicySummary {
            final_regret_mean: mean,
            final_regret_std: std,
            good_event_freq: good as f64 / reps.len().max(1) as f64,
            bound_violations: violations,
        }
    }

    pub fn summary_json(&self) -> Value {
        let mut per_policy = Map::new();
        for &kind in &self.config.policies {
            per_policy.insert(
                kind.name().to_string(),
                serde_json::to_value(self.policy_summary(kind)).expect("plain struct"),
            );
        }
        json!({
            "config_hash": self.config.hash(),
            "per_policy": Value::Object(per_policy),
        })
    }

    /// Write `trace.csv`, `aggregate.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        let trace = self.trace_csv();
        let aggregate = self.aggregate_csv();
        let summary = serde_json::to_string_pretty(&self.summary_json()).expect("valid json") + "\n";
        fs::create_dir_all(dir)?;
        fs::write(dir.join("trace.csv"), trace)?;
        fs::write(dir.join("aggregate.csv"), aggregate)?;
        fs::write(dir.join("summary.json"), summary)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimismEntry {
    pub policy: &'static str,
    pub good_event_runs: usize,
    /// Largest `Δ^pred − ε` over rounds, arms and good-event runs.
    pub max_pred_slack: f64,
    /// Good-event runs where `R_T ≤ 2 Σ_t ε_t(x_t)`.
    pub decomposition_holds: usize,
}

/// Optimism checks for the optimistic policies on good-event replications.
pub fn validate_optimism(results: &[ReplicationResult]) -> Result<Vec<OptimismEntry>, ExperimentError> {
    let mut out: Vec<OptimismEntry> = Vec::new();
    for kind in PolicyKind::ALL.into_iter().filter(|k| k.is_optimistic()) {
        let reps: Vec<&ReplicationResult> = results.iter().filter(|r| r.policy == kind).collect();
        if reps.is_empty() {
            continue;
        }
        let mut entry = OptimismEntry {
            policy: kind.name(),
            good_event_runs: 0,
            max_pred_slack: f64::NEG_INFINITY,
            decomposition_holds: 0,
        };
        for r in reps.into_iter().filter(|r| r.good_event()) {
            let diags = r.diagnostics.as_ref().ok_or(ExperimentError::DiagnosticsDisabled)?;
            entry.good_event_runs += 1;
            for d in diags {
                entry.max_pred_slack = entry.max_pred_slack.max(d.max_pred_slack);
            }
            let bonus_sum: f64 = r.rows.iter().map(|row| row.bonus).sum();
            if r.final_regret() <= 2.0 * bonus_sum {
                entry.decomposition_holds += 1;
            }
        }
        out.push(entry);
    }
    Ok(out)
}

/// Run one replication to `figure.checkpoint` and trace both confidence sets.
///
/// Output columns: `theta_1,theta_2,set_label` with labels `L`, `NL`,
/// `theta_star` and `theta_hat`.
pub fn emit_confidence_figure_data(config: &ExperimentConfig) -> Result<String, ExperimentError> {
    if config.d != 2 {
        return Err(ExperimentError::Config(ConfigError {
            path: "instance.d".into(),
            message: "figure data needs d = 2".into(),
        }));
    }
    let instance = build_instance(config)?;
    let schedule = schedule_for(config)?;
    let kappa = config.kappa_override.unwrap_or_else(|| instance.kappa());
    let checkpoint = config.figure_checkpoint.unwrap_or(config.horizon);
    let kind = config.policies[0];
    let streams = SeedStreams::new(config.seed);
    let mut policy = Policy::new(kind, schedule, kappa)?;
    let mut policy_rng = streams.stream(Purpose::Policy, 0, kind as u64);
    for t in 1..checkpoint {
        let arms = instance.draw_arm_set(t, &mut streams.stream(Purpose::Arms, 0, t as u64));
        let idx = policy.select(&arms, t, &mut policy_rng)?;
        let reward = instance.pull(&arms[idx], &mut streams.stream(Purpose::Rewards, 0, t as u64));
        policy.update(&arms[idx].clone(), reward, t)?;
    }
    let cs = ConfidenceSet::new(policy.history(), policy.snapshot(), &schedule, checkpoint)?;
    let mut out = String::from("theta_1,theta_2,set_label\n");
    for which in [BoundarySet::Linear, BoundarySet::NonLinear] {
        for s in cs.boundary_samples(which, kappa, config.figure_samples)? {
            let _ = writeln!(out, "{},{},{}", s.point[0], s.point[1], which.label());
        }
    }
    let star = &instance.theta_star;
    let hat = cs.theta_hat();
    let _ = writeln!(out, "{},{},theta_star", star[0], star[1]);
    let _ = writeln!(out, "{},{},theta_hat", hat[0], hat[1]);
    Ok(out)
}

/// Violation statistics for each configured design, with
/// `θ* = martingale.theta_norm · θ*_instance/‖θ*_instance‖`.
pub fn run_martingale(config: &ExperimentConfig) -> Result<Vec<ViolationReport>, ExperimentError> {
    let instance = build_instance(config)?;
    let norm = config.martingale_theta_norm.unwrap_or(config.s);
    let base = &instance.theta_star;
    let theta = if base.norm() > 0.0 {
        base * (norm / base.norm())
    } else {
        base.clone()
    };
    config
        .martingale_designs
        .iter()
        .map(|&d| {
            Ok(martingale::violation_stats(
                d,
                &theta,
                config.horizon,
                config.lambda_value(),
                config.delta,
                config.martingale_runs,
                config.seed,
            )?)
        })
        .collect()
}
