use duopoly_core::dynamics::{LearnConfig, LimitClass};
use duopoly_core::experiments::{
    estimate_selection, phase_sweep, selection_curve, tracking_deviations, Drift, SweepMode, SweepOutcome,
};
use duopoly_core::market::GameParams;
use duopoly_core::pool::Workers;
use duopoly_core::stats::median;

fn base() -> LearnConfig {
    LearnConfig::new(GameParams::new(1.5).unwrap(), 0.85)
}

#[test]
fn tracking_error_shrinks_like_inverse_root_batch() {
    let medians: Vec<f64> = [16, 256, 4096]
        .iter()
        .map(|&b| {
            let cfg = base().with_batch_size(b);
            median(&tracking_deviations(0.5, &cfg, 200, 100, 5, Workers::all(), Drift::Sampled).unwrap())
        })
        .collect();
    for w in medians.windows(2) {
        let ratio = w[0] / w[1];
        // 16x the batch should cut the deviation by about sqrt(16) = 4.
        assert!((2.5..=6.5).contains(&ratio), "{medians:?}");
    }
}

#[test]
fn selection_reruns_are_identical() {
    let cfg = base().with_horizon(20_000);
    let a = selection_curve(0.4, &cfg, &[2, 8], 30, 9, Workers::all()).unwrap();
    let b = selection_curve(0.4, &cfg, &[2, 8], 30, 9, Workers::SEQUENTIAL).unwrap();
    assert_eq!(a, b);
}

#[test]
fn selection_near_the_ends_of_the_basin() {
    let cfg = base().with_batch_size(64);
    let low = estimate_selection(0.02, &cfg, 100, 3, Workers::all()).unwrap();
    let high = estimate_selection(0.82, &cfg, 100, 3, Workers::all()).unwrap();
    assert!(low.p_plus_hat <= 0.02, "{low:?}");
    assert!(high.p_plus_hat >= 0.98, "{high:?}");
}

#[test]
fn collusive_limit_increases_with_fidelity() {
    let rhos: Vec<f64> = (80..=99).map(|k| k as f64 / 100.0).collect();
    let rows = phase_sweep(1.5, &rhos, &[0.6], SweepMode::Deterministic, &base(), 0, Workers::all()).unwrap();
    let limits: Vec<f64> = rows
        .iter()
        .map(|r| match r.outcome {
            SweepOutcome::Limit { limit: LimitClass::CollusivePlus, theta_final } => theta_final,
            other => panic!("rho = {}: {other:?}", r.rho),
        })
        .collect();
    assert!(limits.windows(2).all(|w| w[1] >= w[0]), "{limits:?}");
}
