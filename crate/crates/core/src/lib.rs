//! Simulation laboratory for a duopoly in which both sellers take their
//! pricing recommendations from one shared, periodically retrained model.
//!
//! The model is summarised by two numbers: a propensity `theta` (probability
//! of operating in high-price mode) and an output fidelity `rho` (probability
//! that a recommendation matches the mode). Retraining moves `theta` in
//! log-odds space along an inverse-probability-weighted estimate of the
//! conditional payoff advantage of the high price.
//!
//! Module map:
//!
//! * [`market`]: payoffs, outcome probabilities, the payoff difference and the
//!   analytic thresholds that split the parameter space into regimes.
//! * [`llm`]: the stochastic round generator.
//! * [`estimator`]: the IPW score and its batch average.
//! * [`dynamics`]: stochastic and deterministic recursions, the mean-field ODE
//!   and limit classification.
//! * [`experiments`]: Monte Carlo harnesses (selection probability, lock-in,
//!   transition width, tracking error, phase sweep).
//! * [`output`]: CSV and JSON sidecar writers shared by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod llm;
pub mod market;
pub mod output;
pub mod pool;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
