//! Resolved per-command configurations and their execution.
//!
//! Each `*Run` struct is the complete, serialisable description of one
//! invocation. It is what the sidecar echoes under `config`, so feeding a
//! sidecar back through `--config` repeats the run.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use duopoly_core::dynamics::{simulate_deterministic, simulate_stochastic, LearnConfig, LimitClass};
use duopoly_core::experiments::{
    cell_tag, lockin_curve, phase_sweep, selection_curve, tracking_error, transition_width,
    SweepMode, SweepOutcome,
};
use duopoly_core::market::{classify_regime, delta, rho_critical, GameParams, LlmParams, DEFAULT_REGIME_TOL};
use duopoly_core::output::{
    self, sidecar_path, write_json, write_lockin_csv, write_selection_csv, write_sweep_csv,
    write_tracking_csv, write_trajectory_csv, write_width_csv, write_width_curve_csv,
};
use duopoly_core::pool::Workers;
use duopoly_core::rng::RngStream;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::fmt::sig;

pub const DEFAULT_SEED: u64 = 42;

pub fn version() -> &'static str {
    concat!(env!("CARGO_PKG_VERSION"), "+", env!("DUOPOLY_GIT_DESCRIBE"))
}

fn example_learn() -> LearnConfig {
    LearnConfig::default()
}

/// Template for the separatrix experiments: a gentler first step so that
/// the start point, not the first batch, decides the basin.
fn separatrix_learn() -> LearnConfig {
    LearnConfig { eta: 0.2, horizon: 200_000, ..LearnConfig::default() }
}

#[derive(Serialize)]
struct Sidecar<'a, C> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    wall_clock_seconds: f64,
    config: &'a C,
}

fn write_sidecar<C: Serialize>(csv: &Path, command: &str, seed: u64, started: Instant, config: &C) -> Result<(), CliError> {
    let sidecar = Sidecar {
        command,
        version: version(),
        seed,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        config,
    };
    write_json(&sidecar_path(csv), &sidecar)?;
    Ok(())
}

fn finish(w: impl Write) -> Result<(), CliError> {
    let mut w = w;
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- constants

#[derive(Debug, Serialize)]
pub struct Constants {
    pub r: f64,
    pub rho_c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at_rho: Option<RhoConstants>,
}

#[derive(Debug, Serialize)]
pub struct RhoConstants {
    pub rho: f64,
    pub s: f64,
    pub regime: &'static str,
    pub theta_minus: Option<f64>,
    pub theta_plus: Option<f64>,
    pub delta: Vec<DeltaSample>,
}

#[derive(Debug, Serialize)]
pub struct DeltaSample {
    pub theta: f64,
    pub delta: f64,
}

pub const DELTA_SAMPLES: [f64; 7] = [0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95];

pub fn constants(r: f64, rho: Option<f64>) -> Result<Constants, CliError> {
    let game = GameParams::new(r)?;
    let at_rho = rho
        .map(|rho| -> Result<RhoConstants, CliError> {
            let regime = classify_regime(rho, &game, DEFAULT_REGIME_TOL)?;
            let delta = DELTA_SAMPLES
                .iter()
                .map(|&theta| Ok(DeltaSample { theta, delta: delta(&LlmParams::new(theta, rho)?, &game)? }))
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(RhoConstants {
                rho,
                s: regime.s,
                regime: regime.kind.name(),
                theta_minus: regime.theta_minus,
                theta_plus: regime.theta_plus,
                delta,
            })
        })
        .transpose()?;
    Ok(Constants { r, rho_c: rho_critical(&game), at_rho })
}

pub fn print_constants(c: &Constants, json: bool) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    if json {
        serde_json::to_writer_pretty(&mut out, c).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(out)?;
        return Ok(());
    }
    writeln!(out, "r            {}", sig(c.r))?;
    writeln!(out, "rho_c        {}", sig(c.rho_c))?;
    if let Some(at) = &c.at_rho {
        let opt = |x: Option<f64>| x.map(sig).unwrap_or_else(|| "-".into());
        writeln!(out, "rho          {}", sig(at.rho))?;
        writeln!(out, "s            {}", sig(at.s))?;
        writeln!(out, "regime       {}", at.regime)?;
        writeln!(out, "theta_minus  {}", opt(at.theta_minus))?;
        writeln!(out, "theta_plus   {}", opt(at.theta_plus))?;
        writeln!(out, "theta        delta")?;
        for d in &at.delta {
            writeln!(out, "{:<12} {}", sig(d.theta), sig(d.delta))?;
        }
    }
    Ok(())
}

// --------------------------------------------------------------- trajectory

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryRun {
    pub learn: LearnConfig,
    pub theta0: f64,
    pub deterministic: bool,
    pub reps: usize,
    pub seed: u64,
}

impl Default for TrajectoryRun {
    fn default() -> Self {
        Self { learn: example_learn(), theta0: 0.5, deterministic: false, reps: 1, seed: DEFAULT_SEED }
    }
}

#[derive(Serialize)]
struct TrajectorySidecar<'a> {
    command: &'static str,
    version: &'static str,
    seed: u64,
    replication: usize,
    stream_id: Option<u64>,
    limit: LimitClass,
    z_final: f64,
    theta_final: f64,
    steps_run: u64,
    absorbed: bool,
    on_separatrix: bool,
    config: &'a TrajectoryRun,
}

fn replication_path(out: &Path, k: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}_rep{k}.{ext}"))
}

pub fn trajectory(run: &TrajectoryRun, out: &Path) -> Result<(), CliError> {
    run.learn.validate()?;
    if run.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let reps = if run.deterministic { 1 } else { run.reps };
    let tag = cell_tag(run.theta0, &run.learn);
    for k in 0..reps {
        let (traj, stream_id) = if run.deterministic {
            (simulate_deterministic(run.theta0, &run.learn)?, None)
        } else {
            let mut rng = RngStream::for_replication(run.seed, &tag, k as u64);
            let id = rng.stream_id();
            (simulate_stochastic(run.theta0, &run.learn, &mut rng)?, Some(id))
        };
        let path = if reps == 1 { out.to_path_buf() } else { replication_path(out, k) };
        let mut w = output::create(&path)?;
        write_trajectory_csv(&mut w, &traj)?;
        finish(w)?;
        let sidecar = TrajectorySidecar {
            command: "trajectory",
            version: version(),
            seed: run.seed,
            replication: k,
            stream_id,
            limit: traj.limit,
            z_final: traj.z_final,
            theta_final: traj.theta_final(),
            steps_run: traj.steps_run,
            absorbed: traj.absorbed,
            on_separatrix: traj.on_separatrix,
            config: run,
        };
        write_json(&sidecar_path(&path), &sidecar)?;
        println!(
            "rep {k}: limit {} theta_final {} steps {}{}",
            traj.limit.name(),
            sig(traj.theta_final()),
            traj.steps_run,
            if traj.absorbed { " (absorbed)" } else { "" }
        );
    }
    Ok(())
}

// ---------------------------------------------------------------- selection

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionRun {
    pub learn: LearnConfig,
    pub theta0: f64,
    pub b: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
}

impl Default for SelectionRun {
    fn default() -> Self {
        Self { learn: example_learn(), theta0: 0.5, b: vec![1, 4, 16, 64], reps: 200, seed: DEFAULT_SEED }
    }
}

pub fn selection(run: &SelectionRun, out: &Path, workers: Workers) -> Result<(), CliError> {
    let started = Instant::now();
    let rows = selection_curve(run.theta0, &run.learn, &run.b, run.reps, run.seed, workers)?;
    let mut w = output::create(out)?;
    write_selection_csv(&mut w, run.theta0, &rows)?;
    finish(w)?;
    write_sidecar(out, "selection", run.seed, started, run)?;
    println!("b        p_plus     ci_low     ci_high    undetermined");
    for (b, e) in &rows {
        println!(
            "{:<8} {:<10} {:<10} {:<10} {}",
            b,
            sig(e.p_plus_hat),
            sig(e.ci_low),
            sig(e.ci_high),
            e.undetermined_count
        );
    }
    Ok(())
}

// ------------------------------------------------------------------ lock-in

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LockinRun {
    pub learn: LearnConfig,
    pub delta: f64,
    pub b: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
}

impl Default for LockinRun {
    fn default() -> Self {
        Self { learn: separatrix_learn(), delta: 0.1, b: vec![1, 4, 16, 64], reps: 200, seed: DEFAULT_SEED }
    }
}

pub fn lockin(run: &LockinRun, out: &Path, workers: Workers) -> Result<(), CliError> {
    let started = Instant::now();
    let rows = lockin_curve(run.delta, &run.learn, &run.b, run.reps, run.seed, workers)?;
    let mut w = output::create(out)?;
    write_lockin_csv(&mut w, &rows)?;
    finish(w)?;
    write_sidecar(out, "lockin", run.seed, started, run)?;
    println!("b        misselect_above  p_plus_below");
    for r in &rows {
        println!("{:<8} {:<16} {}", r.b, sig(r.misselection_above), sig(r.p_plus_below));
    }
    Ok(())
}

// -------------------------------------------------------------------- width

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WidthRun {
    pub learn: LearnConfig,
    pub b: Vec<usize>,
    pub resolution: f64,
    pub span: f64,
    pub epsilon: f64,
    pub reps: usize,
    pub seed: u64,
}

impl Default for WidthRun {
    fn default() -> Self {
        Self {
            learn: separatrix_learn(),
            b: vec![4, 64],
            resolution: 0.005,
            span: 0.25,
            epsilon: 0.1,
            reps: 100,
            seed: DEFAULT_SEED,
        }
    }
}

fn curve_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("width");
    out.with_file_name(format!("{stem}_curve.csv"))
}

pub fn width(run: &WidthRun, out: &Path, workers: Workers) -> Result<(), CliError> {
    let started = Instant::now();
    let rows = transition_width(
        &run.learn,
        &run.b,
        run.resolution,
        run.span,
        run.epsilon,
        run.reps,
        run.seed,
        workers,
    )?;
    let mut w = output::create(out)?;
    write_width_csv(&mut w, &rows)?;
    finish(w)?;
    let mut w = output::create(&curve_path(out))?;
    write_width_curve_csv(&mut w, &rows)?;
    finish(w)?;
    write_sidecar(out, "width", run.seed, started, run)?;
    println!("b        width      lower      upper");
    for r in &rows {
        let width = if r.below_resolution { format!("<={}", sig(run.resolution)) } else { sig(r.width) };
        println!("{:<8} {:<10} {:<10} {}", r.b, width, sig(r.lower), sig(r.upper));
    }
    Ok(())
}

// ----------------------------------------------------------------- tracking

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackingRun {
    pub learn: LearnConfig,
    pub theta0: f64,
    pub b: Vec<usize>,
    /// Horizon in accumulated step size.
    #[serde(rename = "T")]
    pub horizon_time: f64,
    pub reps: usize,
    pub seed: u64,
}

impl Default for TrackingRun {
    fn default() -> Self {
        Self {
            learn: example_learn(),
            theta0: 0.5,
            b: vec![16, 256, 4096],
            horizon_time: 20.0,
            reps: 100,
            seed: DEFAULT_SEED,
        }
    }
}

pub fn tracking(run: &TrackingRun, out: &Path, workers: Workers) -> Result<(), CliError> {
    let started = Instant::now();
    let rows = tracking_error(run.theta0, &run.learn, &run.b, run.horizon_time, run.reps, run.seed, workers)?;
    let mut w = output::create(out)?;
    write_tracking_csv(&mut w, &rows)?;
    finish(w)?;
    write_sidecar(out, "tracking", run.seed, started, run)?;
    println!("b        steps    median     iqr        tail_fraction");
    for r in &rows {
        println!("{:<8} {:<8} {:<10} {:<10} {}", r.b, r.steps, sig(r.median), sig(r.iqr), sig(r.tail_fraction));
    }
    Ok(())
}

// -------------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepRun {
    /// Template for every cell; its `rho` is replaced by the grid value.
    pub learn: LearnConfig,
    pub rho: Vec<f64>,
    pub theta0: Vec<f64>,
    pub deterministic: bool,
    /// Batch size and replications of stochastic cells.
    pub b: usize,
    pub reps: usize,
    pub seed: u64,
}

impl Default for SweepRun {
    fn default() -> Self {
        let grid = |start: f64, n: usize, step: f64| (0..n).map(|k| start + k as f64 * step).collect();
        Self {
            learn: example_learn(),
            rho: grid(0.55, 45, 0.01),
            theta0: grid(0.02, 49, 0.02),
            deterministic: false,
            b: 64,
            reps: 200,
            seed: DEFAULT_SEED,
        }
        .tidied()
    }
}

impl SweepRun {
    fn tidied(mut self) -> Self {
        let round = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x = (*x * 1e12).round() / 1e12);
        round(&mut self.rho);
        round(&mut self.theta0);
        self
    }
}

pub fn sweep(run: &SweepRun, out: &Path, workers: Workers) -> Result<(), CliError> {
    let started = Instant::now();
    let mode = if run.deterministic {
        SweepMode::Deterministic
    } else {
        SweepMode::Stochastic { batch_size: run.b, reps: run.reps }
    };
    let records = phase_sweep(run.learn.game.r(), &run.rho, &run.theta0, mode, &run.learn, run.seed, workers)?;
    let mut w = output::create(out)?;
    write_sweep_csv(&mut w, &records)?;
    finish(w)?;
    write_sidecar(out, "sweep", run.seed, started, run)?;
    let collusive = records
        .iter()
        .filter(|r| match r.outcome {
            SweepOutcome::Limit { limit, .. } => limit != LimitClass::Competitive && limit.is_determined(),
            SweepOutcome::Selection(e) => e.p_plus_hat >= 0.5,
        })
        .count();
    println!("{} cells, {} collusive, written to {}", records.len(), collusive, out.display());
    Ok(())
}
