mod common;

use logit_bandit::environment::*;
use logit_bandit::linalg::Vector;
use logit_bandit::link::sigmoid;

fn spec(kind: ArmSetKind, k: usize, direction: Option<Vector>, weight: f64) -> ArmSetSpec {
    ArmSetSpec { kind, k, direction, oversample_weight: weight }
}

#[test]
fn empirical_pull_rate_matches_sigmoid() {
    let theta = Vector::from_row_slice(&[1.2, -0.4]);
    let env = LogisticBanditInstance::new(theta.clone(), 2.0, spec(ArmSetKind::FreshUnitSphere, 3, None, 0.0), 1).unwrap();
    let x = Vector::from_row_slice(&[0.8, 0.6]);
    let p = sigmoid(x.dot(&theta));
    let mut rng = common::rng(2);
    let n = 100_000;
    let hits = (0..n).filter(|_| env.pull(&x, &mut rng)).count();
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((hits as f64 / n as f64 - p).abs() < 4.0 * se);
}

#[test]
fn oversampled_arms_cluster_around_direction() {
    let dir = Vector::from_row_slice(&[0.0, 0.0, 1.0]);
    let env = LogisticBanditInstance::new(
        Vector::from_row_slice(&[0.5, 0.0, 0.0]),
        1.0,
        spec(ArmSetKind::OversampledDirection, 10, Some(dir.clone()), 1.0),
        3,
    )
    .unwrap();
    let mut rng = common::rng(4);
    let mut n = 0;
    for t in 1..=1000 {
        for a in env.draw_arm_set(t, &mut rng) {
            assert!((a.norm() - 1.0).abs() < 1e-12);
            let angle = a.dot(&dir).clamp(-1.0, 1.0).acos();
            assert!(angle <= 5.0 * OVERSAMPLE_ANGLE_SD);
            n += 1;
        }
    }
    assert_eq!(n, 10_000);
}

#[test]
fn fixed_arms_are_stable_and_kappa_uses_them() {
    let theta = Vector::from_row_slice(&[0.0, 2.0]);
    let env = LogisticBanditInstance::new(theta.clone(), 3.0, spec(ArmSetKind::FixedFinite, 6, None, 0.0), 9).unwrap();
    let mut rng = common::rng(0);
    assert_eq!(env.draw_arm_set(1, &mut rng), env.draw_arm_set(50, &mut rng));
    assert_eq!(env.fixed_arms().len(), 6);
    // unit arms against the S-ball: κ = 2 + 2cosh(3)
    assert!((env.kappa() - (2.0 + 2.0 * 3f64.cosh())).abs() < 1e-9);

    let short = env
        .with_fixed_arms(vec![Vector::from_row_slice(&[0.5, 0.0]), Vector::from_row_slice(&[0.0, 0.25])])
        .unwrap();
    assert!((short.kappa() - (2.0 + 2.0 * 1.5f64.cosh())).abs() < 1e-12);
    let arms = short.fixed_arms().to_vec();
    assert_eq!(short.instant_regret(&arms[1], &arms).unwrap(), 0.0);
    let gap = short.instant_regret(&arms[0], &arms).unwrap();
    assert!((gap - (sigmoid(0.5) - 0.5)).abs() < 1e-15);
    assert!(matches!(
        short.instant_regret(&Vector::from_row_slice(&[1.0, 0.0]), &arms),
        Err(EnvironmentError::ArmNotInSet)
    ));
}

#[test]
fn invalid_instances_are_rejected() {
    let theta = Vector::from_row_slice(&[3.0, 0.0]);
    assert!(matches!(
        LogisticBanditInstance::new(theta, 2.0, spec(ArmSetKind::FixedFinite, 4, None, 0.0), 0),
        Err(EnvironmentError::ThetaOutsideBall { .. })
    ));
    let theta = Vector::from_row_slice(&[1.0, 0.0]);
    assert!(LogisticBanditInstance::new(theta.clone(), 2.0, spec(ArmSetKind::FixedFinite, 0, None, 0.0), 0).is_err());
    assert!(LogisticBanditInstance::new(theta.clone(), 2.0, spec(ArmSetKind::OversampledDirection, 3, None, 0.5), 0).is_err());
    assert!(LogisticBanditInstance::new(theta, 2.0, spec(ArmSetKind::FreshUnitSphere, 3, None, 1.5), 0).is_err());
}
