//! `duopoly`: analytic constants, single trajectories and the Monte Carlo
//! experiments of the shared-recommender duopoly, written as CSV plus JSON
//! sidecars.

mod config;
mod error;
mod fmt;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use duopoly_core::pool::Workers;

use crate::config::{grid_flag, resolve, sizes_flag, Grid, Overrides, Sizes};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "duopoly", version = run::version(), about = "Duopoly pricing with a shared recommender")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the critical fidelity, equilibria and payoff difference.
    Constants(ConstantsArgs),
    /// Simulate one learning trajectory (or a few seeded replicas).
    Trajectory(TrajectoryArgs),
    /// Collusion probability at one start for several batch sizes.
    Selection(SelectionArgs),
    /// Mis-selection on either side of the separatrix versus batch size.
    Lockin(LockinArgs),
    /// Width of the uncertain band around the separatrix.
    Width(WidthArgs),
    /// Deviation of the stochastic path from the deterministic one.
    Tracking(TrackingArgs),
    /// Limits over a (rho, theta0) grid.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long, default_value_t = 1.5)]
    r: f64,
    #[arg(long)]
    rho: Option<f64>,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

/// Learning-rule settings shared by every simulating command.
#[derive(Args)]
struct LearnFlags {
    /// Profitability of the high price, in (1, 2).
    #[arg(long)]
    r: Option<f64>,
    /// Step-size decay exponent, in (1/2, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Step-size scale, in (0, 1].
    #[arg(long)]
    eta: Option<f64>,
    /// Number of retraining steps.
    #[arg(long = "N", visible_alias = "horizon")]
    horizon: Option<u64>,
    #[arg(long)]
    epsilon_clip: Option<f64>,
    #[arg(long)]
    z_cap: Option<f64>,
    #[arg(long)]
    record_every: Option<u64>,
    #[arg(long)]
    classify_tol: Option<f64>,
    #[arg(long)]
    window_fraction: Option<f64>,
    #[arg(long)]
    regime_tol: Option<f64>,
}

impl LearnFlags {
    fn apply(&self, o: &mut Overrides) {
        o.set("learn.game.r", self.r)
            .set("learn.alpha", self.alpha)
            .set("learn.eta", self.eta)
            .set("learn.horizon", self.horizon)
            .set("learn.estimator.epsilon_clip", self.epsilon_clip)
            .set("learn.z_cap", self.z_cap)
            .set("learn.record_every", self.record_every)
            .set("learn.classify_tol", self.classify_tol)
            .set("learn.window_fraction", self.window_fraction)
            .set("learn.regime_tol", self.regime_tol);
    }
}

#[derive(Args)]
struct RunFlags {
    /// JSON config (or a previous run's sidecar); flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores. Never changes the output.
    #[arg(long, env = "DUOPOLY_WORKERS", default_value_t = 0)]
    workers: usize,
    /// CSV path; the sidecar goes next to it with a .json extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunFlags {
    fn out(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    fn config(&self) -> Option<&Path> {
        self.config.as_deref()
    }
}

#[derive(Args)]
struct TrajectoryArgs {
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Batch size.
    #[arg(long)]
    b: Option<usize>,
    /// Use the exact payoff difference instead of sampled batches.
    #[arg(long)]
    deterministic: bool,
    /// Independent replicas; with more than one, files get a `_repK` suffix.
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    learn: LearnFlags,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args)]
struct SelectionArgs {
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Comma-separated batch sizes.
    #[arg(long, value_parser = sizes_flag)]
    b: Option<Sizes>,
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    learn: LearnFlags,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args)]
struct LockinArgs {
    /// Offset of both starts from the separatrix.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, value_parser = sizes_flag)]
    b: Option<Sizes>,
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    learn: LearnFlags,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args)]
struct WidthArgs {
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, value_parser = sizes_flag)]
    b: Option<Sizes>,
    /// Spacing of the start grid.
    #[arg(long)]
    resolution: Option<f64>,
    /// Half-width of the start grid around the separatrix.
    #[arg(long)]
    span: Option<f64>,
    /// The band is where the collusion share lies in (epsilon, 1 - epsilon).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    learn: LearnFlags,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args)]
struct TrackingArgs {
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, value_parser = sizes_flag)]
    b: Option<Sizes>,
    /// Horizon in accumulated step size.
    #[arg(long = "T")]
    horizon_time: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    learn: LearnFlags,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args)]
struct SweepArgs {
    /// Fidelity grid: start:stop:step or a comma list.
    #[arg(long, value_parser = grid_flag)]
    rho: Option<Grid>,
    /// Start grid: start:stop:step or a comma list.
    #[arg(long, value_parser = grid_flag)]
    theta0: Option<Grid>,
    #[arg(long)]
    deterministic: bool,
    /// Batch size of stochastic cells.
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    learn: LearnFlags,
    #[command(flatten)]
    run: RunFlags,
}

fn overrides(learn: &LearnFlags, run: &RunFlags) -> Overrides {
    let mut o = Overrides::default();
    learn.apply(&mut o);
    o.set("seed", run.seed);
    o
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Constants(a) => {
            let c = run::constants(a.r, a.rho)?;
            run::print_constants(&c, a.json)
        }
        Command::Trajectory(a) => {
            let mut o = overrides(&a.learn, &a.run);
            o.set("theta0", a.theta0)
                .set("learn.rho", a.rho)
                .set("learn.batch_size", a.b)
                .set("reps", a.reps)
                .set("deterministic", a.deterministic.then_some(true));
            let cfg: run::TrajectoryRun = resolve(a.run.config(), o)?;
            run::trajectory(&cfg, &a.run.out("trajectory.csv"))
        }
        Command::Selection(a) => {
            let mut o = overrides(&a.learn, &a.run);
            o.set("theta0", a.theta0).set("learn.rho", a.rho).set("b", a.b.map(|s| s.0)).set("reps", a.reps);
            let cfg: run::SelectionRun = resolve(a.run.config(), o)?;
            run::selection(&cfg, &a.run.out("selection.csv"), Workers(a.run.workers))
        }
        Command::Lockin(a) => {
            let mut o = overrides(&a.learn, &a.run);
            o.set("delta", a.delta).set("learn.rho", a.rho).set("b", a.b.map(|s| s.0)).set("reps", a.reps);
            let cfg: run::LockinRun = resolve(a.run.config(), o)?;
            run::lockin(&cfg, &a.run.out("lockin.csv"), Workers(a.run.workers))
        }
        Command::Width(a) => {
            let mut o = overrides(&a.learn, &a.run);
            o.set("learn.rho", a.rho)
                .set("b", a.b.map(|s| s.0))
                .set("resolution", a.resolution)
                .set("span", a.span)
                .set("epsilon", a.epsilon)
                .set("reps", a.reps);
            let cfg: run::WidthRun = resolve(a.run.config(), o)?;
            run::width(&cfg, &a.run.out("width.csv"), Workers(a.run.workers))
        }
        Command::Tracking(a) => {
            let mut o = overrides(&a.learn, &a.run);
            o.set("theta0", a.theta0)
                .set("learn.rho", a.rho)
                .set("b", a.b.map(|s| s.0))
                .set("T", a.horizon_time)
                .set("reps", a.reps);
            let cfg: run::TrackingRun = resolve(a.run.config(), o)?;
            run::tracking(&cfg, &a.run.out("tracking.csv"), Workers(a.run.workers))
        }
        Command::Sweep(a) => {
            let mut o = overrides(&a.learn, &a.run);
            o.set("rho", a.rho.map(|g| g.0))
                .set("theta0", a.theta0.map(|g| g.0))
                .set("deterministic", a.deterministic.then_some(true))
                .set("b", a.b)
                .set("reps", a.reps);
            let cfg: run::SweepRun = resolve(a.run.config(), o)?;
            run::sweep(&cfg, &a.run.out("sweep.csv"), Workers(a.run.workers))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
