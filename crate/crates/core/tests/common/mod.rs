//! Property checks shared by the proptest suite and the acceptance run.
//! Each returns `Err` with a description of the first violation.

#![allow(dead_code)]

use duopoly_core::dynamics::{logit, sigmoid, LearnConfig};
use duopoly_core::experiments::estimate_selection;
use duopoly_core::market::{
    classify_regime, delta, joint_probs, GameParams, LlmParams, RegimeKind, DEFAULT_REGIME_TOL,
};
use duopoly_core::pool::{map_indexed, Workers};
use duopoly_core::rng::RngStream;

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn probability_closure(theta: f64, rho: f64) -> Check {
    let p = LlmParams::new(theta, rho).map_err(|e| e.to_string())?;
    let jp = joint_probs(&p);
    let all = [jp.p_hh, jp.p_hl, jp.p_lh, jp.p_ll];
    ensure(all.iter().all(|&x| x >= 0.0), || format!("negative probability in {all:?}"))?;
    ensure((all.iter().sum::<f64>() - 1.0).abs() < 1e-12, || format!("sum {} != 1", all.iter().sum::<f64>()))?;
    ensure(jp.p_hl == jp.p_lh, || "asymmetric off-diagonal".into())?;
    ensure((jp.p_hh + jp.p_hl - p.p_high()).abs() < 1e-12, || "row sum differs from p_H".into())?;
    ensure((p.p_high() + p.p_low() - 1.0).abs() < 1e-12, || "p_H + p_L != 1".into())
}

/// Conditional means computed from the joint table, as an independent
/// route to the payoff difference.
pub fn delta_by_conditioning(theta: f64, rho: f64, r: f64) -> f64 {
    let jp = joint_probs(&LlmParams::new(theta, rho).unwrap());
    let p_high = jp.p_hh + jp.p_hl;
    let p_low = jp.p_lh + jp.p_ll;
    let given_high = (jp.p_hh * 2.0 * r + jp.p_hl * r) / p_high;
    let given_low = (jp.p_lh * (2.0 + r) + jp.p_ll * 2.0) / p_low;
    given_high - given_low
}

pub fn delta_dual_form(theta: f64, rho: f64, r: f64) -> Check {
    let g = GameParams::new(r).map_err(|e| e.to_string())?;
    let closed = delta(&LlmParams::new(theta, rho).unwrap(), &g).map_err(|e| e.to_string())?;
    let oracle = delta_by_conditioning(theta, rho, r);
    ensure((closed - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()), || {
        format!("closed {closed} vs conditional {oracle} at ({theta}, {rho}, {r})")
    })
}

/// Sign of the payoff difference against the regime's equilibria, away
/// from the roots themselves.
pub fn sign_structure(theta: f64, rho: f64, r: f64) -> Check {
    let g = GameParams::new(r).map_err(|e| e.to_string())?;
    let regime = classify_regime(rho, &g, DEFAULT_REGIME_TOL).map_err(|e| e.to_string())?;
    let d = delta(&LlmParams::new(theta, rho).unwrap(), &g).map_err(|e| e.to_string())?;
    let margin = 1e-6;
    match regime.kind {
        RegimeKind::LowFidelity => ensure(d < 0.0, || format!("low fidelity but delta {d} >= 0")),
        RegimeKind::PerfectFidelity => ensure(d > 0.0, || format!("perfect fidelity but delta {d} <= 0")),
        RegimeKind::Critical => ensure(d <= 1e-12, || format!("critical but delta {d} > 0")),
        RegimeKind::HighFidelity => {
            let (lo, hi) = (regime.theta_minus.unwrap(), regime.theta_plus.unwrap());
            if theta > lo + margin && theta < hi - margin {
                ensure(d > 0.0, || format!("delta {d} <= 0 inside ({lo}, {hi}) at {theta}"))
            } else if theta < lo - margin || theta > hi + margin {
                ensure(d < 0.0, || format!("delta {d} >= 0 outside ({lo}, {hi}) at {theta}"))
            } else {
                Ok(())
            }
        }
    }
}

pub fn sigmoid_consistency(z: f64, theta: f64) -> Check {
    let s = sigmoid(z);
    ensure(s > 0.0 && s < 1.0, || format!("sigmoid({z}) = {s} outside (0, 1)"))?;
    ensure((sigmoid(-z) - (1.0 - s)).abs() < 1e-15, || format!("sigmoid not symmetric at {z}"))?;
    ensure((logit(s) - z).abs() <= 1e-9 * (1.0 + z.abs()), || format!("logit(sigmoid({z})) = {}", logit(s)))?;
    ensure((sigmoid(logit(theta)) - theta).abs() < 1e-14, || format!("sigmoid(logit({theta})) drifts"))?;
    ensure(sigmoid(z + 1e-3) > s || s > 1.0 - 1e-12, || format!("sigmoid not increasing at {z}"))
}

pub fn rng_determinism(seed: u64, stream: u64) -> Check {
    let draws = |seed, stream| {
        let mut rng = RngStream::new(seed, stream);
        (0..64).map(|_| rng.uniform()).collect::<Vec<f64>>()
    };
    let a = draws(seed, stream);
    ensure(a == draws(seed, stream), || "same (seed, stream) gave different draws".into())?;
    ensure(a != draws(seed, stream.wrapping_add(1)), || "neighbouring streams coincide".into())?;
    ensure(a != draws(seed.wrapping_add(1), stream), || "neighbouring seeds coincide".into())?;
    ensure(a.iter().all(|u| (0.0..1.0).contains(u)), || "draw outside [0, 1)".into())
}

pub fn worker_invariance(seed: u64, workers: usize) -> Check {
    let cfg = LearnConfig::new(GameParams::new(1.5).unwrap(), 0.85)
        .with_batch_size(2)
        .with_horizon(400);
    let one = estimate_selection(0.3, &cfg, 12, seed, Workers::SEQUENTIAL).map_err(|e| e.to_string())?;
    let many = estimate_selection(0.3, &cfg, 12, seed, Workers(workers)).map_err(|e| e.to_string())?;
    ensure(one == many, || format!("workers=1 gave {one:?}, workers={workers} gave {many:?}"))?;
    let f = |i: usize| RngStream::for_replication(seed, "w", i as u64).uniform();
    ensure(
        map_indexed(50, Workers::SEQUENTIAL, f) == map_indexed(50, Workers(workers), f),
        || "map_indexed output depends on worker count".into(),
    )
}
