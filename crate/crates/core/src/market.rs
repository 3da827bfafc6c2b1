//! Closed-form game mathematics.
//!
//! Everything here is a pure function of the relative profitability `r` of
//! the high price, the propensity `theta` and the output fidelity `rho`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default half-width of the band around `rho_c` that counts as critical.
pub const DEFAULT_REGIME_TOL: f64 = 1e-9;

/// `theta_bounds` treats `|s - 1|` below this as exactly critical.
const CRITICAL_S_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "H")]
    High,
    #[serde(rename = "L")]
    Low,
}

impl Action {
    pub fn flip(self) -> Self {
        match self {
            Action::High => Action::Low,
            Action::Low => Action::High,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Action::High => "H",
            Action::Low => "L",
        }
    }
}

/// Relative profitability `r` of the high price, `1 < r < 2`.
///
/// The payoff matrix is
///
/// ```text
///            H            L
///   H   (2r, 2r)     (r, 2 + r)
///   L   (2 + r, r)   (2, 2)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGame", into = "RawGame")]
pub struct GameParams {
    r: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGame {
    r: f64,
}

impl TryFrom<RawGame> for GameParams {
    type Error = Error;
    fn try_from(raw: RawGame) -> Result<Self> {
        GameParams::new(raw.r)
    }
}

impl From<GameParams> for RawGame {
    fn from(g: GameParams) -> Self {
        RawGame { r: g.r }
    }
}

impl GameParams {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 1.0 && r < 2.0) {
            return Err(invalid(format!("r must lie in (1, 2), got {r}")));
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Largest entry of the payoff matrix, `2 + r`.
    pub fn max_payoff(&self) -> f64 {
        2.0 + self.r
    }

    pub fn payoffs(&self, a1: Action, a2: Action) -> (f64, f64) {
        let r = self.r;
        match (a1, a2) {
            (Action::High, Action::High) => (2.0 * r, 2.0 * r),
            (Action::High, Action::Low) => (r, 2.0 + r),
            (Action::Low, Action::High) => (2.0 + r, r),
            (Action::Low, Action::Low) => (2.0, 2.0),
        }
    }
}

pub fn payoffs(a1: Action, a2: Action, g: &GameParams) -> (f64, f64) {
    g.payoffs(a1, a2)
}

/// Propensity `theta` in `[0, 1]` and output fidelity `rho` in `[1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlmParams {
    pub theta: f64,
    pub rho: f64,
}

impl LlmParams {
    pub fn new(theta: f64, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(invalid(format!("theta must lie in [0, 1], got {theta}")));
        }
        if !(0.5..=1.0).contains(&rho) {
            return Err(invalid(format!("rho must lie in [1/2, 1], got {rho}")));
        }
        Ok(Self { theta, rho })
    }

    /// Skips validation; for hot loops where `theta` comes from a sigmoid.
    pub(crate) fn new_unchecked(theta: f64, rho: f64) -> Self {
        Self { theta, rho }
    }

    /// `P(S = H | theta) = theta rho + (1 - theta)(1 - rho)`.
    pub fn p_high(&self) -> f64 {
        self.theta * self.rho + (1.0 - self.theta) * (1.0 - self.rho)
    }

    /// Evaluated directly rather than as `1 - p_high` to keep precision near 0.
    pub fn p_low(&self) -> f64 {
        self.theta * (1.0 - self.rho) + (1.0 - self.theta) * self.rho
    }
}

/// Distribution of the recommendation profile `(S_1, S_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointProbs {
    pub p_hh: f64,
    pub p_hl: f64,
    pub p_lh: f64,
    pub p_ll: f64,
}

impl JointProbs {
    pub fn get(&self, a1: Action, a2: Action) -> f64 {
        match (a1, a2) {
            (Action::High, Action::High) => self.p_hh,
            (Action::High, Action::Low) => self.p_hl,
            (Action::Low, Action::High) => self.p_lh,
            (Action::Low, Action::Low) => self.p_ll,
        }
    }

    pub fn total(&self) -> f64 {
        self.p_hh + self.p_hl + self.p_lh + self.p_ll
    }
}

pub fn joint_probs(p: &LlmParams) -> JointProbs {
    let (theta, rho) = (p.theta, p.rho);
    let miss = 1.0 - rho;
    let split = rho * miss;
    JointProbs {
        p_hh: theta * rho * rho + (1.0 - theta) * miss * miss,
        p_hl: split,
        p_lh: split,
        p_ll: theta * miss * miss + (1.0 - theta) * rho * rho,
    }
}

pub fn marginal_p_high(p: &LlmParams) -> f64 {
    p.p_high()
}

/// Conditional payoff difference `E[Pi | S = H] - E[Pi | S = L]`.
///
/// Uses the reduced form `2(r - 1) - r rho (1 - rho) / (p_H p_L)`. At
/// `rho = 1` every interior `theta` gives the constant `2r - 2`.
pub fn delta(p: &LlmParams, g: &GameParams) -> Result<f64> {
    if p.rho == 1.0 {
        return Ok(2.0 * g.r - 2.0);
    }
    let (p_high, p_low) = (p.p_high(), p.p_low());
    if p_high <= 0.0 || p_low <= 0.0 {
        return Err(Error::DegenerateConditioning { p_high, p_low });
    }
    Ok(delta_reduced(p.rho, g.r, p_high, p_low))
}

/// Infallible evaluation for `theta` strictly inside `(0, 1)`.
pub(crate) fn delta_interior(theta: f64, rho: f64, r: f64) -> f64 {
    if rho == 1.0 {
        return 2.0 * r - 2.0;
    }
    let p = LlmParams::new_unchecked(theta, rho);
    delta_reduced(rho, r, p.p_high(), p.p_low())
}

#[inline]
fn delta_reduced(rho: f64, r: f64, p_high: f64, p_low: f64) -> f64 {
    2.0 * (r - 1.0) - r * rho * (1.0 - rho) / (p_high * p_low)
}

fn check_rho_open(rho: f64) -> Result<()> {
    if !(rho > 0.5 && rho <= 1.0) {
        return Err(invalid(format!("rho must lie in (1/2, 1], got {rho}")));
    }
    Ok(())
}

/// Ratio of miscoordination cost to coordination benefit:
/// `s = 2(2 - r) rho (1 - rho) / ((r - 1)(2 rho - 1)^2)`.
pub fn s_statistic(rho: f64, g: &GameParams) -> Result<f64> {
    check_rho_open(rho)?;
    let r = g.r;
    let kappa = 2.0 * rho - 1.0;
    Ok(2.0 * (2.0 - r) * rho * (1.0 - rho) / ((r - 1.0) * kappa * kappa))
}

fn bounds_from_s(s: f64) -> Option<(f64, f64)> {
    if s > 1.0 + CRITICAL_S_TOL {
        None
    } else if (s - 1.0).abs() <= CRITICAL_S_TOL {
        Some((0.5, 0.5))
    } else {
        let half_width = 0.5 * (1.0 - s).sqrt();
        Some((0.5 - half_width, 0.5 + half_width))
    }
}

/// Zeros `(theta_-, theta_+)` of the payoff difference, or `None` when
/// `s > 1` and the difference is negative everywhere.
pub fn theta_bounds(rho: f64, g: &GameParams) -> Result<Option<(f64, f64)>> {
    Ok(bounds_from_s(s_statistic(rho, g)?))
}

/// Smallest fidelity at which a collusive equilibrium exists:
/// `(1 + sqrt((2 - r) / r)) / 2`.
pub fn rho_critical(g: &GameParams) -> f64 {
    let r = g.r;
    0.5 * (1.0 + ((2.0 - r) / r).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeKind {
    LowFidelity,
    Critical,
    HighFidelity,
    PerfectFidelity,
}

impl RegimeKind {
    pub fn name(self) -> &'static str {
        match self {
            RegimeKind::LowFidelity => "LowFidelity",
            RegimeKind::Critical => "Critical",
            RegimeKind::HighFidelity => "HighFidelity",
            RegimeKind::PerfectFidelity => "PerfectFidelity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub rho: f64,
    pub rho_c: f64,
    pub s: f64,
    pub theta_minus: Option<f64>,
    pub theta_plus: Option<f64>,
}

pub fn classify_regime(rho: f64, g: &GameParams, tol: f64) -> Result<Regime> {
    if !(tol > 0.0) {
        return Err(invalid(format!("regime tolerance must be positive, got {tol}")));
    }
    let s = s_statistic(rho, g)?;
    let rho_c = rho_critical(g);
    let (kind, bounds) = if rho == 1.0 {
        (RegimeKind::PerfectFidelity, bounds_from_s(s))
    } else if (rho - rho_c).abs() <= tol {
        // Inside the band s may sit a hair above 1; the knife edge keeps its
        // degenerate equilibrium at 1/2 either way.
        (RegimeKind::Critical, bounds_from_s(s.min(1.0)))
    } else if rho < rho_c {
        (RegimeKind::LowFidelity, None)
    } else {
        (RegimeKind::HighFidelity, bounds_from_s(s))
    };
    Ok(Regime {
        kind,
        rho,
        rho_c,
        s,
        theta_minus: bounds.map(|b| b.0),
        theta_plus: bounds.map(|b| b.1),
    })
}
