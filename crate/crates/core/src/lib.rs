//! Neuro-control workbench: train multilayer-perceptron inverse-model
//! controllers for a simulated DC servo with Levenberg-Marquardt or Bayesian
//! regularization, then compare them in closed loop.
//!
//! The pipeline is
//!
//! 1. [`experiment::run_step_experiment`] drives the [`plant`] with random
//!    steps and logs `u(k)`, `y(k)`;
//! 2. [`experiment::build_inverse_dataset`] turns the log into regressor
//!    patterns `[y(k+1), y(k), y(k-1), u(k-1), u(k-2)] -> u(k)`;
//! 3. a trainer from [`training`] fits an [`mlp::MlpNetwork`];
//! 4. [`control::run_closed_loop`] puts the network in series with the plant
//!    and [`control::compute_indices`] scores tracking and control effort.

pub mod cli;
pub mod control;
pub mod error;
pub mod experiment;
pub mod mlp;
pub mod network_file;
pub mod pipeline;
pub mod plant;
pub mod scaling;
pub mod training;

pub use error::{Error, Result};
