//! Round generator for the shared recommender.
//!
//! Each round consumes exactly three uniforms from the stream, in this order:
//! the latent mode (`u < theta` means high-price mode), seller 1's
//! recommendation and seller 2's recommendation (`u < rho` means the
//! recommendation matches the mode).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::market::{Action, GameParams, LlmParams};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "HMode")]
    High,
    #[serde(rename = "LMode")]
    Low,
}

impl Mode {
    pub fn action(self) -> Action {
        match self {
            Mode::High => Action::High,
            Mode::Low => Action::Low,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::High => "HMode",
            Mode::Low => "LMode",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub mode: Mode,
    pub rec1: Action,
    pub rec2: Action,
    pub payoff1: f64,
    pub payoff2: f64,
}

#[inline]
fn recommend(mode: Mode, rho: f64, u: f64) -> Action {
    if u < rho {
        mode.action()
    } else {
        mode.action().flip()
    }
}

pub fn sample_round(p: &LlmParams, g: &GameParams, rng: &mut RngStream) -> RoundOutcome {
    let mode = if rng.uniform() < p.theta { Mode::High } else { Mode::Low };
    let rec1 = recommend(mode, p.rho, rng.uniform());
    let rec2 = recommend(mode, p.rho, rng.uniform());
    let (payoff1, payoff2) = g.payoffs(rec1, rec2);
    RoundOutcome { mode, rec1, rec2, payoff1, payoff2 }
}

/// `b` independent rounds at a fixed propensity.
pub fn sample_batch(
    p: &LlmParams,
    g: &GameParams,
    b: usize,
    rng: &mut RngStream,
) -> Result<Vec<RoundOutcome>> {
    if b == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    Ok((0..b).map(|_| sample_round(p, g, rng)).collect())
}

/// Tallies `b` rounds by action profile, indexed `HH, HL, LH, LL`. Consumes
/// the stream exactly as `b` calls to [`sample_round`] would.
pub fn profile_counts(p: &LlmParams, b: usize, rng: &mut RngStream) -> [u32; 4] {
    let mut counts = [0u32; 4];
    for _ in 0..b {
        let high_mode = rng.uniform() < p.theta;
        let high1 = (rng.uniform() < p.rho) == high_mode;
        let high2 = (rng.uniform() < p.rho) == high_mode;
        counts[2 * (!high1 as usize) + !high2 as usize] += 1;
    }
    counts
}

/// Writes `round,mode,rec1,rec2,payoff1,payoff2` rows, rounds numbered from 0.
pub fn write_trace<W: Write>(mut w: W, rounds: &[RoundOutcome]) -> std::io::Result<()> {
    writeln!(w, "round,mode,rec1,rec2,payoff1,payoff2")?;
    for (i, o) in rounds.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            i,
            o.mode.name(),
            o.rec1.symbol(),
            o.rec2.symbol(),
            o.payoff1,
            o.payoff2
        )?;
    }
    Ok(())
}
