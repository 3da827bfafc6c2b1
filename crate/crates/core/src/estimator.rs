//! Inverse-probability-weighted estimate of the conditional payoff
//! difference.
//!
//! A single observation `(S, Pi)` scores `Pi / p_H` when `S = H` and
//! `-Pi / p_L` when `S = L`. With clipping, each denominator is floored at
//! `epsilon_clip` independently; the floored pair is not renormalised.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::llm::RoundOutcome;
use crate::market::{Action, GameParams, LlmParams};

const PROFILES: [(Action, Action); 4] = [
    (Action::High, Action::High),
    (Action::High, Action::Low),
    (Action::Low, Action::High),
    (Action::Low, Action::Low),
];

pub const DEFAULT_EPSILON_CLIP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Floor on both conditioning probabilities. Zero disables clipping.
    pub epsilon_clip: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { epsilon_clip: DEFAULT_EPSILON_CLIP }
    }
}

impl EstimatorConfig {
    pub fn new(epsilon_clip: f64) -> Result<Self> {
        let cfg = Self { epsilon_clip };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn unclipped() -> Self {
        Self { epsilon_clip: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.25).contains(&self.epsilon_clip) {
            return Err(invalid(format!(
                "epsilon_clip must lie in [0, 1/4], got {}",
                self.epsilon_clip
            )));
        }
        Ok(())
    }
}

/// Inverse weights for one propensity, reused across a whole batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpwWeights {
    pub p_high: f64,
    pub p_low: f64,
    inv_high: f64,
    inv_low: f64,
}

impl IpwWeights {
    pub fn new(p: &LlmParams, cfg: &EstimatorConfig) -> Result<Self> {
        let eps = cfg.epsilon_clip;
        let p_high = p.p_high().max(eps);
        let p_low = p.p_low().max(eps);
        if p_high <= 0.0 || p_low <= 0.0 {
            return Err(Error::DegenerateConditioning { p_high, p_low });
        }
        Ok(Self { p_high, p_low, inv_high: 1.0 / p_high, inv_low: 1.0 / p_low })
    }

    #[inline]
    pub fn score(&self, action: Action, payoff: f64) -> f64 {
        match action {
            Action::High => payoff * self.inv_high,
            Action::Low => -payoff * self.inv_low,
        }
    }

    /// Sum of both sellers' scores for one round.
    #[inline]
    pub fn round_score(&self, o: &RoundOutcome) -> f64 {
        self.score(o.rec1, o.payoff1) + self.score(o.rec2, o.payoff2)
    }

    /// Round scores for the profiles `HH, HL, LH, LL`.
    pub fn profile_scores(&self, g: &GameParams) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, (a1, a2)) in PROFILES.into_iter().enumerate() {
            let (pi1, pi2) = g.payoffs(a1, a2);
            out[i] = self.score(a1, pi1) + self.score(a2, pi2);
        }
        out
    }
}

pub fn ipw_score(action: Action, payoff: f64, p: &LlmParams, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(IpwWeights::new(p, cfg)?.score(action, payoff))
}

/// `(1 / 2b)` times the sum of both sellers' scores over the batch. `p`
/// must be the propensity the batch was generated at.
pub fn batch_mean(batch: &[RoundOutcome], p: &LlmParams, cfg: &EstimatorConfig) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let w = IpwWeights::new(p, cfg)?;
    let total: f64 = batch.iter().map(|o| w.round_score(o)).sum();
    Ok(total / (2.0 * batch.len() as f64))
}
