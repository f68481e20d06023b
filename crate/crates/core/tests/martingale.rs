mod common;

use logit_bandit::linalg::{Matrix, Vector};
use logit_bandit::link::sigmoid_deriv;
use logit_bandit::martingale::*;

#[test]
fn incremental_log_det_matches_batch() {
    let theta = Vector::from_row_slice(&[1.0, -2.0, 0.5]);
    let mut rng = common::rng(1);
    let trace = simulate_trace(Design::IidSphere, &theta, 200, 0.7, 0.05, &mut rng).unwrap();
    let mut h = Matrix::identity(3, 3) * 0.7;
    for s in &trace.steps {
        h += &s.x * s.x.transpose() * s.sigma2;
    }
    let batch = h.determinant().ln();
    assert!((trace.final_log_det - batch).abs() < 1e-10 * batch.abs());
}

#[test]
fn aligned_design_has_smallest_variance() {
    let theta = Vector::from_row_slice(&[8.0, 0.0]);
    let mut rng = common::rng(2);
    let trace = simulate_trace(Design::Aligned, &theta, 50, 1.0, 0.05, &mut rng).unwrap();
    assert!(trace.omega() <= sigmoid_deriv(8.0) * (1.0 + 1e-12));
    let adaptive = simulate_trace(Design::AdaptiveGreedy, &theta, 50, 1.0, 0.05, &mut rng).unwrap();
    assert!(adaptive.steps.iter().all(|s| (s.x.norm() - 1.0).abs() < 1e-12));
}

#[test]
fn classical_radius_grows_as_variance_shrinks() {
    let omegas = [0.25, 0.1, 1e-2, 1e-3, 1e-4];
    let r: Vec<f64> = omegas.iter().map(|&w| classical_radius(w, 1000, 1.0, 2)).collect();
    assert!(r.windows(2).all(|w| w[1] > w[0]), "{r:?}");
    // bounded by its ω → 0 limit √(2t/λ)
    assert!(r.iter().all(|&x| x < 2000f64.sqrt()));
    assert!((classical_radius(1e-12, 1000, 1.0, 2) - 2000f64.sqrt()).abs() < 1e-6);
}

#[test]
fn bernstein_radius_wins_at_small_variance() {
    let rows = compare_radii(&[0.25, 1e-3], &[100, 10_000], 1.0, 0.05, 2).unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows.iter().filter(|r| r.omega == 1e-3 && r.t == 10_000) {
        assert!(row.bernstein_smaller, "{row:?}");
    }
    assert!(rows.iter().all(|r| r.bernstein_smaller == (r.bernstein < r.classical)));
}

#[test]
fn violation_report_is_well_formed() {
    let theta = Vector::from_row_slice(&[2.0, 0.0]);
    let r = violation_stats(Design::IidSphere, &theta, 100, 1.0, 0.05, 200, 11).unwrap();
    assert!(r.ci_low <= r.violations_thm1 + 1e-12 && r.violations_thm1 <= r.ci_high);
    assert!(r.violations_thm1 <= 0.05);
    let again = violation_stats(Design::IidSphere, &theta, 100, 1.0, 0.05, 200, 11).unwrap();
    assert_eq!(r, again);
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["T"], 100);
    assert_eq!(json["design"], "iid_sphere");
}

#[test]
fn wilson_interval_reference() {
    // closed form at k = 5, n = 100
    let (lo, hi) = wilson_interval(5, 100);
    assert!((lo - 0.021543).abs() < 1e-5, "{lo}");
    assert!((hi - 0.111750).abs() < 1e-5, "{hi}");
}
