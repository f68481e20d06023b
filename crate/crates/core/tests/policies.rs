mod common;

use logit_bandit::confidence::RadiusSchedule;
use logit_bandit::environment::{ArmSetKind, ArmSetSpec, LogisticBanditInstance};
use logit_bandit::linalg::Vector;
use logit_bandit::link::{kappa_of, sigmoid_deriv};
use logit_bandit::policies::*;
use logit_bandit::rng::{Purpose, SeedStreams};

fn reference_schedule() -> RadiusSchedule {
    RadiusSchedule::new(1.0, 0.05, 1.0, 2).unwrap()
}

fn e1() -> Vector {
    Vector::from_row_slice(&[1.0, 0.0])
}

#[test]
fn empty_history_bonus_values() {
    let p = Policy::new(PolicyKind::LogUcb1, reference_schedule(), 4.0).unwrap();
    // mpmath, 40 digits
    assert!((p.bonus_log_ucb_1(&e1()) - 9.092937079078437).abs() < 1e-12);
    let glm = Policy::new(PolicyKind::GlmUcb, reference_schedule(), 4.0).unwrap();
    assert_eq!(glm.bonus_glm_ucb(&Vector::zeros(2)), 0.0);
}

#[test]
fn ucb1_bonus_grows_with_kappa() {
    let bonus = |kappa: f64| {
        let mut p = Policy::new(PolicyKind::LogUcb1, reference_schedule(), kappa).unwrap();
        for t in 1..=30 {
            p.update(&Vector::from_row_slice(&[0.6, 0.8]), t % 2 == 0, t).unwrap();
        }
        p.bonus_log_ucb_1(&e1())
    };
    assert!(bonus(9.0) > bonus(4.0));
    assert!(bonus(100.0) > bonus(9.0));
}

#[test]
fn glm_to_ucb1_ratio_is_algebraic() {
    let s = 2.0;
    let sched = RadiusSchedule::new(1.5, 0.1, s, 3).unwrap();
    let kappa = kappa_of(s).unwrap();
    let mut a = Policy::new(PolicyKind::GlmUcb, sched.clone(), kappa).unwrap();
    let mut b = Policy::new(PolicyKind::LogUcb1, sched, kappa).unwrap();
    let mut rng = common::rng(5);
    for t in 1..=20 {
        let x = common::unit_vector(&mut rng, 3);
        a.update(&x, t % 3 == 0, t).unwrap();
        b.update(&x, t % 3 == 0, t).unwrap();
    }
    let x = common::unit_vector(&mut rng, 3) * 0.7;
    let expected = 4.0 * kappa.sqrt() * a.beta() / ((4.0 + 8.0 * s).sqrt() * b.gamma());
    let ratio = a.bonus_glm_ucb(&x) / b.bonus_log_ucb_1(&x);
    assert!((ratio - expected).abs() <= 1e-12 * expected);
}

#[test]
fn regret_bounds_match_formula_oracle() {
    let sched = reference_schedule();
    // mpmath evaluations at λ=1, d=2, S=1, κ=4, δ=0.05, T=100
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    assert!(rel(regret_bound_ucb1(&sched, 4.0, 100), 1729.044616023842) < 1e-12);
    assert!(rel(regret_bound_ucb2(&sched, 4.0, 100), 166349.3173336176) < 1e-12);
    assert!(rel(elliptical_sum_envelope(&sched, 4.0, 100), 574.0213303645311) < 1e-12);
    assert!(regret_bound_ucb1(&sched, 4.0, 101) > regret_bound_ucb1(&sched, 4.0, 100));
}

fn d_log_t(d: usize, horizon: usize, s: f64) -> RadiusSchedule {
    RadiusSchedule::new(d as f64 * (horizon as f64).ln(), 0.05, s, d).unwrap()
}

#[test]
fn ucb1_bound_rate() {
    let (d, kappa) = (3, 50.0);
    let ratios: Vec<f64> = (2..=16)
        .map(|e| {
            let t = 10usize.pow(e);
            let tf = t as f64;
            regret_bound_ucb1(&d_log_t(d, t, 2.0), kappa, t) / (kappa.sqrt() * d as f64 * tf.sqrt() * tf.ln())
        })
        .collect();
    // saturates: bounded, with shrinking increments
    assert!(ratios.iter().all(|r| *r < 12.0), "{ratios:?}");
    let steps: Vec<f64> = ratios.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps[steps.len() - 1] < 0.25 * steps[2], "{ratios:?}");
}

#[test]
fn ucb2_kappa_gap_vanishes_relative_to_root_t() {
    let (d, k1, k2) = (2, 10.0, 1000.0);
    let gaps: Vec<f64> = (6..=16)
        .map(|e| {
            let t = 10usize.pow(e);
            let sched = d_log_t(d, t, 3.0);
            (regret_bound_ucb2(&sched, k2, t) - regret_bound_ucb2(&sched, k1, t)) / (t as f64).sqrt()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps.last().unwrap() < &(0.05 * gaps[0]));

    let sched = reference_schedule();
    let shares: Vec<f64> = (3..=14)
        .map(|e| {
            let (a, b) = regret_bound_ucb2_terms(&sched, 100.0, 10usize.pow(e));
            b / a
        })
        .collect();
    assert!(shares.windows(2).all(|w| w[1] < w[0]), "{shares:?}");
}

struct Run {
    policy: Policy,
    regret: f64,
    bonus_sum: f64,
    elliptical_sum: f64,
    star_covered: bool,
}

fn simulate(kind: PolicyKind, s: f64, horizon: usize, seed: u64) -> Run {
    let theta_star = Vector::from_row_slice(&[s / 2f64.sqrt(), -s / 2f64.sqrt()]);
    let spec = ArmSetSpec { kind: ArmSetKind::FixedFinite, k: 8, direction: None, oversample_weight: 0.0 };
    let env = LogisticBanditInstance::new(theta_star.clone(), s, spec, seed).unwrap();
    let kappa = env.kappa();
    let streams = SeedStreams::new(seed);
    let mut policy = Policy::new(kind, RadiusSchedule::new(2.0, 0.05, s, 2).unwrap(), kappa).unwrap();
    let mut run = Run { policy: policy.clone(), regret: 0.0, bonus_sum: 0.0, elliptical_sum: 0.0, star_covered: true };
    for t in 1..=horizon {
        let mut arm_rng = streams.stream(Purpose::Arms, 0, t as u64);
        let arms = env.draw_arm_set(t, &mut arm_rng);
        let i = policy.select(&arms, t, &mut arm_rng).unwrap();
        let x = &arms[i];
        run.star_covered &= policy.confidence_set().unwrap().contains(&theta_star).unwrap();
        run.bonus_sum += policy.bonus(x).unwrap().total();
        if kind == PolicyKind::LogUcb2 {
            run.elliptical_sum += sigmoid_deriv(x.dot(policy.theta())) * policy.h_inverse_norm(x).unwrap();
        }
        run.regret += env.instant_regret(x, &arms).unwrap();
        let reward = env.pull(x, &mut streams.stream(Purpose::Rewards, 0, t as u64));
        policy.update(x, reward, t).unwrap();
    }
    run.policy = policy;
    run
}

#[test]
fn second_order_policy_state_and_envelopes() {
    let horizon = 400;
    let run = simulate(PolicyKind::LogUcb2, 2.0, horizon, 3);
    let p = &run.policy;
    let w = p.admissible().unwrap();
    assert_eq!(w.len(), horizon);
    assert!(p.theta().norm() <= 2.0 + 1e-9);
    assert!(w.max_violation(p.theta()) <= 1e-8);
    assert!(run.star_covered);
    assert!(run.regret <= 2.0 * run.bonus_sum);
    assert!(run.regret <= regret_bound_ucb2(p.schedule(), p.kappa(), horizon));
    assert!(run.elliptical_sum <= elliptical_sum_envelope(p.schedule(), p.kappa(), horizon));
}

#[test]
fn first_order_policy_keeps_feasible_estimate() {
    let run = simulate(PolicyKind::LogUcb1, 1.0, 300, 4);
    let p = &run.policy;
    assert!(run.star_covered);
    assert!(run.regret <= 2.0 * run.bonus_sum);
    assert!(run.regret <= regret_bound_ucb1(p.schedule(), p.kappa(), 300));
    if p.snapshot().theta_hat.norm() <= 1.0 {
        assert_eq!(p.theta(), &p.snapshot().theta_hat);
    }
}

#[test]
fn second_order_term_fades_along_a_run() {
    let s = 1.0;
    let kappa = kappa_of(s).unwrap();
    let mut p = Policy::new(PolicyKind::LogUcb2, RadiusSchedule::new(1.0, 0.05, s, 2).unwrap(), kappa).unwrap();
    let mut rng = common::rng(8);
    let probe = Vector::from_row_slice(&[0.6, 0.8]);
    let share = |p: &Policy| {
        let b = p.bonus_log_ucb_2(&probe).unwrap();
        b.second / b.first
    };
    let mut shares = Vec::new();
    for t in 1..=3000 {
        if t % 500 == 0 {
            shares.push(share(&p));
        }
        let x = common::unit_vector(&mut rng, 2);
        let reward = rand::Rng::random::<f64>(&mut rng) < 0.5;
        p.update(&x, reward, t).unwrap();
    }
    shares.push(share(&p));
    assert!(shares.windows(2).all(|w| w[1] < w[0]), "{shares:?}");
}

#[test]
fn greedy_follows_the_estimate() {
    let sched = reference_schedule();
    let mut p = Policy::new(PolicyKind::Greedy, sched, 4.0).unwrap();
    let x = Vector::from_row_slice(&[0.0, 1.0]);
    for t in 1..=10 {
        p.update(&x, true, t).unwrap();
    }
    let arms = vec![e1(), Vector::from_row_slice(&[0.6, 0.8]), x.clone(), -x];
    let mut rng = common::rng(0);
    assert_eq!(p.select(&arms, 11, &mut rng).unwrap(), 2);
    assert_eq!(p.select(&arms[..1], 11, &mut rng).unwrap(), 0);
}
