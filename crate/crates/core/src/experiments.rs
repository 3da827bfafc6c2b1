//! Monte Carlo experiment harness.
//!
//! Every replication draws from its own stream keyed by the experiment cell
//! and the replication index, and results are gathered in input order, so
//! output depends only on the base seed and never on the worker count.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    deterministic_step, logit, sigmoid, simulate_deterministic, simulate_stochastic,
    stochastic_step, steps_for_time, LearnConfig, LimitClass,
};
use crate::error::{invalid, Error, Result};
use crate::market::{classify_regime, GameParams, RegimeKind};
use crate::pool::{map_indexed, Workers};
use crate::rng::RngStream;
use crate::stats::{median, quantile, wilson_interval, Z_95};

/// Share of undetermined replications above which an estimate is refused.
pub const MAX_UNDETERMINED_FRACTION: f64 = 0.2;

/// Outcome counts for one `(theta0, config)` cell.
///
/// `p_plus_hat` is the share of collusive limits among determined runs. In
/// the high-fidelity regime "collusive" means `CollusivePlus`; elsewhere it
/// is any limit other than `Competitive`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionEstimate {
    pub p_plus_hat: f64,
    pub replications: usize,
    pub collusive: usize,
    pub competitive: usize,
    pub undetermined_count: usize,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SelectionEstimate {
    pub fn from_limits(limits: &[LimitClass]) -> Self {
        let undetermined_count = limits.iter().filter(|l| !l.is_determined()).count();
        let competitive = limits.iter().filter(|&&l| l == LimitClass::Competitive).count();
        let determined = limits.len() - undetermined_count;
        let collusive = determined - competitive;
        let p_plus_hat = if determined == 0 { 0.0 } else { collusive as f64 / determined as f64 };
        let (ci_low, ci_high) = wilson_interval(collusive, determined, Z_95);
        Self {
            p_plus_hat,
            replications: limits.len(),
            collusive,
            competitive,
            undetermined_count,
            ci_low,
            ci_high,
        }
    }

    pub fn determined(&self) -> usize {
        self.replications - self.undetermined_count
    }

    /// Share of runs that ended competitive, with its interval.
    pub fn competitive_share(&self) -> (f64, f64, f64) {
        (1.0 - self.p_plus_hat, 1.0 - self.ci_high, 1.0 - self.ci_low)
    }

    fn check_undetermined(self) -> Result<Self> {
        if self.undetermined_count as f64 > MAX_UNDETERMINED_FRACTION * self.replications as f64 {
            return Err(Error::TooManyUndetermined {
                undetermined: self.undetermined_count,
                replications: self.replications,
            });
        }
        Ok(self)
    }
}

/// Stream tag of a selection cell. Replication `k` of the cell draws from
/// `RngStream::for_replication(seed, &cell_tag(..), k)`.
pub fn cell_tag(theta0: f64, cfg: &LearnConfig) -> String {
    format!(
        "selection|r={}|rho={}|b={}|alpha={}|eta={}|N={}|eps={}|theta0={}",
        cfg.game.r(),
        cfg.rho,
        cfg.batch_size,
        cfg.alpha,
        cfg.eta,
        cfg.horizon,
        cfg.estimator.epsilon_clip,
        theta0
    )
}

/// Runs `reps` trajectories for each cell, flattened into one work list so
/// the pool stays busy when cells have uneven cost.
fn run_cells(
    cells: &[(f64, LearnConfig)],
    reps: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<SelectionEstimate>> {
    if reps == 0 {
        return Err(invalid("replications must be at least 1"));
    }
    for (theta0, cfg) in cells {
        cfg.validate()?;
        if !(*theta0 > 0.0 && *theta0 < 1.0) {
            return Err(invalid(format!("theta0 must lie in (0, 1), got {theta0}")));
        }
    }
    let tags: Vec<String> = cells.iter().map(|(th, c)| cell_tag(*th, c)).collect();
    let limits = map_indexed(cells.len() * reps, workers, |i| {
        let (cell, k) = (i / reps, i % reps);
        let (theta0, cfg) = &cells[cell];
        let mut rng = RngStream::for_replication(seed, &tags[cell], k as u64);
        simulate_stochastic(*theta0, cfg, &mut rng).map(|t| t.limit)
    });
    let limits = limits.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(limits.chunks(reps).map(SelectionEstimate::from_limits).collect())
}

/// Outcome shares at one start without the undetermined-rate check.
pub fn estimate_selection(
    theta0: f64,
    cfg: &LearnConfig,
    reps: usize,
    seed: u64,
    workers: Workers,
) -> Result<SelectionEstimate> {
    Ok(run_cells(&[(theta0, *cfg)], reps, seed, workers)?[0])
}

fn require_high_fidelity(cfg: &LearnConfig) -> Result<()> {
    cfg.validate()?;
    let regime = cfg.regime()?;
    if regime.kind != RegimeKind::HighFidelity {
        return Err(invalid(format!(
            "selection experiments need the high-fidelity regime (rho > {:.6}), got {} at rho = {}",
            regime.rho_c,
            regime.kind.name(),
            cfg.rho
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of `P(theta_n -> theta_+)` with a 95% Wilson interval.
pub fn selection_probability(
    theta0: f64,
    cfg: &LearnConfig,
    reps: usize,
    seed: u64,
    workers: Workers,
) -> Result<SelectionEstimate> {
    require_high_fidelity(cfg)?;
    estimate_selection(theta0, cfg, reps, seed, workers)?.check_undetermined()
}

/// Selection probability at one start for several batch sizes.
pub fn selection_curve(
    theta0: f64,
    cfg: &LearnConfig,
    b_grid: &[usize],
    reps: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<(usize, SelectionEstimate)>> {
    require_high_fidelity(cfg)?;
    let cells: Vec<(f64, LearnConfig)> =
        b_grid.iter().map(|&b| (theta0, cfg.with_batch_size(b))).collect();
    let estimates = run_cells(&cells, reps, seed, workers)?;
    b_grid
        .iter()
        .zip(estimates)
        .map(|(&b, e)| Ok((b, e.check_undetermined()?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockinRecord {
    pub b: usize,
    /// Start `theta_- + delta`, inside the collusive basin.
    pub theta_above: f64,
    /// `1 - p_plus_hat` at `theta_above`, with interval.
    pub misselection_above: f64,
    pub ci_low_above: f64,
    pub ci_high_above: f64,
    /// Start `theta_- - delta`, inside the competitive basin.
    pub theta_below: f64,
    pub p_plus_below: f64,
    pub ci_low_below: f64,
    pub ci_high_below: f64,
    pub above: SelectionEstimate,
    pub below: SelectionEstimate,
}

/// Probability of ending in the basin opposite to the start, at
/// `theta_- +/- delta`, for every batch size in `b_grid`.
pub fn lockin_curve(
    delta: f64,
    cfg: &LearnConfig,
    b_grid: &[usize],
    reps: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<LockinRecord>> {
    require_high_fidelity(cfg)?;
    let theta_minus = cfg.regime()?.theta_minus.expect("high-fidelity regime has theta_-");
    let (above, below) = (theta_minus + delta, theta_minus - delta);
    if !(delta > 0.0 && below > 0.0 && above < 1.0) {
        return Err(invalid(format!(
            "delta = {delta} puts a start outside (0, 1) around theta_- = {theta_minus}"
        )));
    }
    let cells: Vec<(f64, LearnConfig)> = b_grid
        .iter()
        .flat_map(|&b| [(above, cfg.with_batch_size(b)), (below, cfg.with_batch_size(b))])
        .collect();
    let estimates = run_cells(&cells, reps, seed, workers)?;
    b_grid
        .iter()
        .zip(estimates.chunks(2))
        .map(|(&b, pair)| {
            let up = pair[0].check_undetermined()?;
            let down = pair[1].check_undetermined()?;
            let (mis, mis_lo, mis_hi) = up.competitive_share();
            Ok(LockinRecord {
                b,
                theta_above: above,
                misselection_above: mis,
                ci_low_above: mis_lo,
                ci_high_above: mis_hi,
                theta_below: below,
                p_plus_below: down.p_plus_hat,
                ci_low_below: down.ci_low,
                ci_high_below: down.ci_high,
                above: up,
                below: down,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRecord {
    pub b: usize,
    /// Distance between the interpolated `epsilon` and `1 - epsilon` crossings.
    pub width: f64,
    pub lower: f64,
    pub upper: f64,
    pub below_resolution: bool,
    pub curve: Vec<(f64, SelectionEstimate)>,
}

/// Start grid `theta_- + k * resolution` for `|k * resolution| <= span`,
/// restricted to `(0, 1)`.
pub fn separatrix_grid(theta_minus: f64, span: f64, resolution: f64) -> Vec<f64> {
    let k_max = (span / resolution).round() as i64;
    (-k_max..=k_max)
        .map(|k| theta_minus + k as f64 * resolution)
        .filter(|&th| th > 0.0 && th < 1.0)
        .collect()
}

/// Width of the band where the interpolated selection curve lies strictly
/// between `epsilon` and `1 - epsilon`. Crossings are taken outermost: the
/// first rise above `epsilon` from the left and the first drop below
/// `1 - epsilon` from the right.
pub fn band_width(thetas: &[f64], p_hat: &[f64], epsilon: f64) -> Result<(f64, f64, f64)> {
    let n = thetas.len();
    if n < 2 || p_hat.len() != n {
        return Err(invalid("band width needs at least two grid points"));
    }
    let lerp = |i: usize, level: f64| {
        let (p0, p1) = (p_hat[i], p_hat[i + 1]);
        let frac = if p1 == p0 { 0.0 } else { (level - p0) / (p1 - p0) };
        thetas[i] + frac.clamp(0.0, 1.0) * (thetas[i + 1] - thetas[i])
    };
    let first_above = p_hat.iter().position(|&p| p > epsilon);
    let last_below = p_hat.iter().rposition(|&p| p < 1.0 - epsilon);
    match (first_above, last_below) {
        (Some(i), Some(j)) if i > 0 && j + 1 < n => {
            let lower = lerp(i - 1, epsilon);
            let upper = lerp(j, 1.0 - epsilon);
            Ok(((upper - lower).max(0.0), lower, upper))
        }
        _ => Err(invalid(
            "start grid does not bracket the transition; widen the span around theta_-",
        )),
    }
}

/// Measures the width of the uncertain band around the separatrix for each
/// batch size.
#[allow(clippy::too_many_arguments)]
pub fn transition_width(
    cfg: &LearnConfig,
    b_grid: &[usize],
    resolution: f64,
    span: f64,
    epsilon: f64,
    reps: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<WidthRecord>> {
    require_high_fidelity(cfg)?;
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(invalid(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    if !(resolution > 0.0 && span >= resolution) {
        return Err(invalid("need resolution > 0 and span >= resolution"));
    }
    let theta_minus = cfg.regime()?.theta_minus.expect("high-fidelity regime has theta_-");
    let grid = separatrix_grid(theta_minus, span, resolution);
    let cells: Vec<(f64, LearnConfig)> = b_grid
        .iter()
        .flat_map(|&b| grid.iter().map(move |&th| (th, cfg.with_batch_size(b))))
        .collect();
    let estimates = run_cells(&cells, reps, seed, workers)?;
    b_grid
        .iter()
        .zip(estimates.chunks(grid.len()))
        .map(|(&b, row)| {
            for e in row {
                e.check_undetermined()?;
            }
            let p_hat: Vec<f64> = row.iter().map(|e| e.p_plus_hat).collect();
            let (width, lower, upper) = band_width(&grid, &p_hat, epsilon)?;
            Ok(WidthRecord {
                b,
                width,
                lower,
                upper,
                below_resolution: width < resolution,
                curve: grid.iter().copied().zip(row.iter().copied()).collect(),
            })
        })
        .collect()
}

/// Source of the drift in the tracked recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Drift {
    /// IPW batch mean (the learning rule).
    Sampled,
    /// Exact payoff difference (the infinite-batch surrogate).
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingRecord {
    pub b: usize,
    pub steps: u64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub iqr: f64,
    /// Share of replications whose deviation exceeds three times the median.
    pub tail_fraction: f64,
    pub deviations: Vec<f64>,
}

/// `sup_n |theta_n - theta_n^det|` over `steps` steps for each replication.
pub fn tracking_deviations(
    theta0: f64,
    cfg: &LearnConfig,
    steps: u64,
    reps: usize,
    seed: u64,
    workers: Workers,
    drift: Drift,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !(theta0 > 0.0 && theta0 < 1.0) {
        return Err(invalid(format!("theta0 must lie in (0, 1), got {theta0}")));
    }
    let z0 = logit(theta0);
    let mut det = Vec::with_capacity(steps as usize);
    let mut z = z0;
    for n in 0..steps {
        z = deterministic_step(z, cfg, n);
        det.push(sigmoid(z));
    }
    let tag = format!("tracking|r={}|rho={}|b={}|theta0={}", cfg.game.r(), cfg.rho, cfg.batch_size, theta0);
    map_indexed(reps, workers, |k| {
        let mut rng = RngStream::for_replication(seed, &tag, k as u64);
        let mut z = z0;
        let mut sup: f64 = 0.0;
        for (n, &target) in det.iter().enumerate() {
            z = match drift {
                Drift::Sampled => stochastic_step(z, cfg, n as u64, &mut rng)?,
                Drift::Exact => deterministic_step(z, cfg, n as u64),
            };
            sup = sup.max((sigmoid(z) - target).abs());
        }
        Ok(sup)
    })
    .into_iter()
    .collect()
}

/// Median sup-deviation between stochastic and deterministic paths over
/// the first `N(T) = min{n : t_n >= T}` steps, per batch size.
#[allow(clippy::too_many_arguments)]
pub fn tracking_error(
    theta0: f64,
    cfg: &LearnConfig,
    b_grid: &[usize],
    horizon_time: f64,
    reps: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<TrackingRecord>> {
    if !(horizon_time > 0.0) {
        return Err(invalid("tracking horizon T must be positive"));
    }
    if reps == 0 {
        return Err(invalid("replications must be at least 1"));
    }
    let steps = steps_for_time(horizon_time, cfg.alpha, cfg.eta);
    b_grid
        .iter()
        .map(|&b| {
            let c = cfg.with_batch_size(b);
            let deviations = tracking_deviations(theta0, &c, steps, reps, seed, workers, Drift::Sampled)?;
            let med = median(&deviations);
            let (q25, q75) = (quantile(&deviations, 0.25), quantile(&deviations, 0.75));
            let tail = deviations.iter().filter(|&&d| d > 3.0 * med).count();
            Ok(TrackingRecord {
                b,
                steps,
                median: med,
                q25,
                q75,
                iqr: q75 - q25,
                tail_fraction: tail as f64 / reps as f64,
                deviations,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SweepMode {
    Deterministic,
    Stochastic { batch_size: usize, reps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SweepOutcome {
    Limit { limit: LimitClass, theta_final: f64 },
    Selection(SelectionEstimate),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub rho: f64,
    pub theta0: f64,
    pub regime: RegimeKind,
    pub theta_minus: Option<f64>,
    pub theta_plus: Option<f64>,
    pub outcome: SweepOutcome,
}

/// Limit (or collusion share) over a `rho x theta0` grid, with the analytic
/// thresholds attached to every cell. Rows are ordered by `rho`, then
/// `theta0`.
pub fn phase_sweep(
    r: f64,
    rho_grid: &[f64],
    theta0_grid: &[f64],
    mode: SweepMode,
    template: &LearnConfig,
    seed: u64,
    workers: Workers,
) -> Result<Vec<SweepRecord>> {
    let game = GameParams::new(r)?;
    if let Some(rho) = rho_grid.iter().find(|&&rho| !(rho > 0.5 && rho <= 1.0)) {
        return Err(invalid(format!("sweep rho {rho} outside (1/2, 1]")));
    }
    if let Some(th) = theta0_grid.iter().find(|&&th| !(th > 0.0 && th < 1.0)) {
        return Err(invalid(format!("sweep theta0 {th} outside (0, 1)")));
    }
    let cells: Vec<(f64, LearnConfig)> = rho_grid
        .iter()
        .flat_map(|&rho| {
            theta0_grid
                .iter()
                .map(move |&th| (th, LearnConfig { game, rho, ..*template }))
        })
        .collect();

    let outcomes: Vec<SweepOutcome> = match mode {
        SweepMode::Deterministic => map_indexed(cells.len(), workers, |i| {
            let (theta0, cfg) = &cells[i];
            simulate_deterministic(*theta0, cfg).map(|t| SweepOutcome::Limit {
                limit: t.limit,
                theta_final: t.theta_final(),
            })
        })
        .into_iter()
        .collect::<Result<_>>()?,
        SweepMode::Stochastic { batch_size, reps } => {
            let cells: Vec<(f64, LearnConfig)> = cells
                .iter()
                .map(|(th, c)| (*th, c.with_batch_size(batch_size)))
                .collect();
            run_cells(&cells, reps, seed, workers)?
                .into_iter()
                .map(SweepOutcome::Selection)
                .collect()
        }
    };

    cells
        .iter()
        .zip(outcomes)
        .map(|((theta0, cfg), outcome)| {
            let regime = classify_regime(cfg.rho, &game, cfg.regime_tol)?;
            Ok(SweepRecord {
                rho: cfg.rho,
                theta0: *theta0,
                regime: regime.kind,
                theta_minus: regime.theta_minus,
                theta_plus: regime.theta_plus,
                outcome,
            })
        })
        .collect()
}
