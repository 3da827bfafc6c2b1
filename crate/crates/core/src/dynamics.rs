//! Learning recursions in log-odds space.
//!
//! The propensity is stored as `z = log(theta / (1 - theta))` and retraining
//! step `n` adds `gamma_n` times a drift estimate, with
//! `gamma_n = eta / (n + 1)^alpha`. The stochastic recursion uses the IPW
//! batch mean, the deterministic one the exact payoff difference. `z` is
//! clamped to `[-z_cap, z_cap]`; reaching the barrier ends the run.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimator::{EstimatorConfig, IpwWeights};
use crate::llm::profile_counts;
use crate::market::{
    classify_regime, delta_interior, GameParams, LlmParams, Regime, RegimeKind,
    DEFAULT_REGIME_TOL,
};
use crate::rng::RngStream;

pub const DEFAULT_Z_CAP: f64 = 30.0;
pub const DEFAULT_CLASSIFY_TOL: f64 = 0.05;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.05;
/// Default thinning keeps about this many samples per trajectory.
pub const DEFAULT_RECORDED_SAMPLES: u64 = 2000;

const SEPARATRIX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    pub game: GameParams,
    pub rho: f64,
    pub batch_size: usize,
    pub alpha: f64,
    pub eta: f64,
    pub horizon: u64,
    pub estimator: EstimatorConfig,
    pub z_cap: f64,
    /// Record every k-th step; `None` means `max(1, N / 2000)`.
    pub record_every: Option<u64>,
    pub classify_tol: f64,
    /// Fraction of recorded samples that must all sit near the limit.
    pub window_fraction: f64,
    pub regime_tol: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            game: GameParams::new(1.5).expect("1.5 is a valid profitability"),
            rho: 0.85,
            batch_size: 16,
            alpha: 2.0 / 3.0,
            eta: 1.0,
            horizon: 100_000,
            estimator: EstimatorConfig::default(),
            z_cap: DEFAULT_Z_CAP,
            record_every: None,
            classify_tol: DEFAULT_CLASSIFY_TOL,
            window_fraction: DEFAULT_WINDOW_FRACTION,
            regime_tol: DEFAULT_REGIME_TOL,
        }
    }
}

impl LearnConfig {
    pub fn new(game: GameParams, rho: f64) -> Self {
        Self { game, rho, ..Self::default() }
    }

    pub fn with_batch_size(mut self, b: usize) -> Self {
        self.batch_size = b;
        self
    }

    pub fn with_horizon(mut self, n: u64) -> Self {
        self.horizon = n;
        self
    }

    pub fn with_step_schedule(mut self, alpha: f64, eta: f64) -> Self {
        self.alpha = alpha;
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.5 && self.rho <= 1.0) {
            return Err(invalid(format!("rho must lie in (1/2, 1], got {}", self.rho)));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        if !(self.alpha > 0.5 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha must lie in (1/2, 1], got {}", self.alpha)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon N must be at least 1"));
        }
        if !(self.z_cap >= 20.0) || !self.z_cap.is_finite() {
            return Err(invalid(format!("z_cap must be finite and at least 20, got {}", self.z_cap)));
        }
        if self.record_every == Some(0) {
            return Err(invalid("record_every must be at least 1"));
        }
        if !(self.classify_tol > 0.0) {
            return Err(invalid("classification tolerance must be positive"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(invalid("window fraction must lie in (0, 1]"));
        }
        self.estimator.validate()
    }

    pub fn regime(&self) -> Result<Regime> {
        classify_regime(self.rho, &self.game, self.regime_tol)
    }

    pub fn record_interval(&self) -> u64 {
        self.record_every
            .unwrap_or_else(|| (self.horizon / DEFAULT_RECORDED_SAMPLES).max(1))
    }

    pub fn step_size(&self, n: u64) -> f64 {
        step_size(n, self.alpha, self.eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LimitClass {
    /// theta -> 0
    Competitive,
    /// theta -> theta_+
    CollusivePlus,
    /// theta -> 1/2
    Half,
    /// theta -> 1
    FullCollusion,
    Undetermined,
}

impl LimitClass {
    pub fn name(self) -> &'static str {
        match self {
            LimitClass::Competitive => "Competitive",
            LimitClass::CollusivePlus => "CollusivePlus",
            LimitClass::Half => "Half",
            LimitClass::FullCollusion => "FullCollusion",
            LimitClass::Undetermined => "Undetermined",
        }
    }

    pub fn is_determined(self) -> bool {
        self != LimitClass::Undetermined
    }
}

/// Stable limits admissible in a regime, with their location in theta.
pub fn admissible_limits(regime: &Regime) -> Vec<(LimitClass, f64)> {
    match regime.kind {
        RegimeKind::LowFidelity => vec![(LimitClass::Competitive, 0.0)],
        RegimeKind::Critical => vec![(LimitClass::Competitive, 0.0), (LimitClass::Half, 0.5)],
        RegimeKind::HighFidelity => {
            let mut v = vec![(LimitClass::Competitive, 0.0)];
            if let Some(tp) = regime.theta_plus {
                v.push((LimitClass::CollusivePlus, tp));
            }
            v
        }
        RegimeKind::PerfectFidelity => vec![(LimitClass::FullCollusion, 1.0)],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Step index of every recorded sample.
    pub steps: Vec<u64>,
    pub z_path: Vec<f64>,
    /// `sigmoid` of `z_path`, sample by sample.
    pub thetas: Vec<f64>,
    pub z_final: f64,
    pub steps_run: u64,
    /// The run stopped on the `z_cap` barrier.
    pub absorbed: bool,
    /// Started exactly on the unstable interior equilibrium.
    pub on_separatrix: bool,
    pub limit: LimitClass,
}

impl Trajectory {
    pub fn theta_final(&self) -> f64 {
        sigmoid(self.z_final)
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[inline]
pub fn logit(theta: f64) -> f64 {
    (theta / (1.0 - theta)).ln()
}

/// `eta / (n + 1)^alpha`.
pub fn step_size(n: u64, alpha: f64, eta: f64) -> f64 {
    eta / ((n + 1) as f64).powf(alpha)
}

/// Interpolation times `t_n = gamma_0 + ... + gamma_{n-1}` for `n = 0..=steps`.
pub fn step_times(cfg: &LearnConfig, steps: u64) -> Vec<f64> {
    let mut t = 0.0;
    let mut out = Vec::with_capacity(steps as usize + 1);
    out.push(0.0);
    for n in 0..steps {
        t += cfg.step_size(n);
        out.push(t);
    }
    out
}

/// Smallest `n` with `t_n >= t_end`.
pub fn steps_for_time(t_end: f64, alpha: f64, eta: f64) -> u64 {
    let mut t = 0.0;
    let mut n = 0;
    while t < t_end {
        t += step_size(n, alpha, eta);
        n += 1;
    }
    n
}

/// Batch-mean IPW drift at `z` for one batch drawn from `rng`.
pub fn sampled_drift(z: f64, cfg: &LearnConfig, rng: &mut RngStream) -> Result<f64> {
    let p = LlmParams::new_unchecked(sigmoid(z), cfg.rho);
    let scores = IpwWeights::new(&p, &cfg.estimator)?.profile_scores(&cfg.game);
    let counts = profile_counts(&p, cfg.batch_size, rng);
    let total: f64 = counts.iter().zip(scores).map(|(&c, s)| c as f64 * s).sum();
    Ok(total / (2.0 * cfg.batch_size as f64))
}

pub fn exact_drift(z: f64, cfg: &LearnConfig) -> f64 {
    delta_interior(sigmoid(z), cfg.rho, cfg.game.r())
}

/// One retraining step: `z + gamma_n * D_bar`, clamped to the barrier.
pub fn stochastic_step(z: f64, cfg: &LearnConfig, n: u64, rng: &mut RngStream) -> Result<f64> {
    let drift = sampled_drift(z, cfg, rng)?;
    Ok((z + cfg.step_size(n) * drift).clamp(-cfg.z_cap, cfg.z_cap))
}

/// Large-batch limit of [`stochastic_step`].
pub fn deterministic_step(z: f64, cfg: &LearnConfig, n: u64) -> f64 {
    (z + cfg.step_size(n) * exact_drift(z, cfg)).clamp(-cfg.z_cap, cfg.z_cap)
}

fn check_start(theta0: f64) -> Result<()> {
    if !(theta0 > 0.0 && theta0 < 1.0) {
        return Err(invalid(format!("theta0 must lie in (0, 1), got {theta0}")));
    }
    Ok(())
}

fn on_separatrix(theta0: f64, regime: &Regime) -> bool {
    matches!(regime.kind, RegimeKind::HighFidelity)
        && regime
            .theta_minus
            .is_some_and(|tm| (theta0 - tm).abs() <= SEPARATRIX_TOL)
}

fn run<F>(theta0: f64, cfg: &LearnConfig, mut step: F) -> Result<Trajectory>
where
    F: FnMut(f64, u64) -> Result<f64>,
{
    cfg.validate()?;
    check_start(theta0)?;
    let regime = cfg.regime()?;
    let every = cfg.record_interval();

    let mut z = logit(theta0).clamp(-cfg.z_cap, cfg.z_cap);
    let mut absorbed = z.abs() >= cfg.z_cap;
    let mut steps = vec![0];
    let mut z_path = vec![z];
    let mut steps_run = 0;

    while !absorbed && steps_run < cfg.horizon {
        z = step(z, steps_run)?;
        steps_run += 1;
        absorbed = z.abs() >= cfg.z_cap;
        if absorbed || steps_run % every == 0 || steps_run == cfg.horizon {
            steps.push(steps_run);
            z_path.push(z);
        }
    }

    let thetas: Vec<f64> = z_path.iter().map(|&z| sigmoid(z)).collect();
    let limit = if absorbed {
        // The barrier is absorbing, so the final value is the limit.
        classify_limit(&thetas, &regime, cfg.classify_tol, 1)
    } else {
        let window = ((thetas.len() as f64 * cfg.window_fraction).ceil() as usize).max(1);
        classify_limit(&thetas, &regime, cfg.classify_tol, window)
    };
    Ok(Trajectory {
        steps,
        z_path,
        thetas,
        z_final: z,
        steps_run,
        absorbed,
        on_separatrix: on_separatrix(theta0, &regime),
        limit,
    })
}

pub fn simulate_stochastic(theta0: f64, cfg: &LearnConfig, rng: &mut RngStream) -> Result<Trajectory> {
    run(theta0, cfg, |z, n| stochastic_step(z, cfg, n, rng))
}

/// Iterates [`deterministic_step`]. A start exactly on the separatrix is held
/// there: the drift vanishes analytically and rounding noise would otherwise
/// be amplified by the repelling fixed point.
pub fn simulate_deterministic(theta0: f64, cfg: &LearnConfig) -> Result<Trajectory> {
    let pinned = on_separatrix(theta0, &cfg.regime()?);
    run(theta0, cfg, |z, n| Ok(if pinned { z } else { deterministic_step(z, cfg, n) }))
}

/// Right-hand side of the mean-field ODE, `theta (1 - theta) Delta(theta)`.
pub fn ode_rhs(theta: f64, cfg: &LearnConfig) -> f64 {
    theta * (1.0 - theta) * delta_interior(theta, cfg.rho, cfg.game.r())
}

/// Classical fourth-order Runge-Kutta with fixed step `dt`; the last step is
/// shortened to land on `t_end`. Returns `(t, theta)` including `t = 0`.
pub fn ode_flow(theta0: f64, cfg: &LearnConfig, t_end: f64, dt: f64) -> Result<Vec<(f64, f64)>> {
    check_start(theta0)?;
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(invalid("ode_flow needs dt > 0 and t_end >= 0"));
    }
    let f = |th: f64| ode_rhs(th, cfg);
    let mut t = 0.0;
    let mut theta = theta0;
    let mut out = vec![(t, theta)];
    let n_steps = (t_end / dt).ceil() as u64;
    for i in 0..n_steps {
        let h = if i + 1 == n_steps { t_end - t } else { dt };
        let k1 = f(theta);
        let k2 = f(theta + 0.5 * h * k1);
        let k3 = f(theta + 0.5 * h * k2);
        let k4 = f(theta + h * k3);
        theta += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = if i + 1 == n_steps { t_end } else { t + h };
        out.push((t, theta));
    }
    Ok(out)
}

/// Picks the admissible equilibrium that every one of the last `window`
/// samples is within `tol` of; `Undetermined` if there is none.
pub fn classify_limit(tail: &[f64], regime: &Regime, tol: f64, window: usize) -> LimitClass {
    if tail.is_empty() || window == 0 {
        return LimitClass::Undetermined;
    }
    let recent = &tail[tail.len().saturating_sub(window)..];
    admissible_limits(regime)
        .into_iter()
        .map(|(class, at)| {
            let worst = recent.iter().map(|th| (th - at).abs()).fold(0.0, f64::max);
            (class, worst)
        })
        .filter(|&(_, worst)| worst <= tol)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(LimitClass::Undetermined, |(class, _)| class)
}
