//! Bayesian regularization with Gauss-Newton evidence updates.
//!
//! The data and weight coefficients are re-estimated from the effective
//! number of parameters
//!
//! ```text
//! gamma = N - 2 beta tr((H + lambda I)^{-1})
//! beta  = gamma / (2 E_W)
//! alpha = P (n - gamma) / (2 E_D,sum)        = (n - gamma) / (2 E_D)
//! ```
//!
//! where `n = P * M` is the target count and `E_D,sum = (1/2) sum e^2`.
//! `alpha` multiplies the normalized `E_D = E_D,sum / P`, hence the factor `P`
//! relative to the half-sum form; the minimizer of `alpha E_D + beta E_W` is
//! then the most probable weight vector under the Gaussian evidence model.
//!
//! `lambda` is the damping of the accepted step. Including it keeps the
//! factorization well posed for rank-deficient `J^T J`, at the cost of
//! pushing `gamma` towards `N` whenever `lambda >> 2 beta`. Setting
//! `damped_trace = false` uses the textbook `tr(H^{-1})` instead (falling
//! back to the damped form if that factorization fails).

use serde::{Deserialize, Serialize};

use super::lm::{diverged, EpochOutcome, LmConfig, LmSolver};
use super::report::{EpochRecord, StopReason, TrainReport};
use super::{compute_er, Dataset};
use crate::error::{Error, Result};
use crate::mlp::MlpNetwork;

const HYPER_MIN: f64 = 1e-12;
const HYPER_MAX: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrConfig {
    pub lm: LmConfig,
    pub alpha_init: f64,
    pub beta_init: f64,
    pub reestimate_every: usize,
    /// Use `tr((H + lambda I)^{-1})` instead of `tr(H^{-1})` for `gamma`.
    pub damped_trace: bool,
}

impl Default for BrConfig {
    fn default() -> Self {
        Self {
            lm: LmConfig::default(),
            alpha_init: 1.0,
            beta_init: 1e-3,
            reestimate_every: 1,
            damped_trace: true,
        }
    }
}

impl BrConfig {
    pub fn validate(&self) -> Result<()> {
        self.lm.validate()?;
        if !(self.alpha_init > 0.0 && self.alpha_init.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "alpha_init must be positive, got {}",
                self.alpha_init
            )));
        }
        if !(self.beta_init > 0.0 && self.beta_init.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "beta_init must be positive, got {}",
                self.beta_init
            )));
        }
        if self.reestimate_every == 0 {
            return Err(Error::InvalidConfig("reestimate_every must be positive".into()));
        }
        Ok(())
    }
}

/// Re-estimated hyperparameters after one evidence update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Evidence {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Evidence update given the trace of the inverse Hessian.
pub(crate) fn reestimate(
    num_weights: usize,
    target_count: usize,
    patterns: usize,
    inverse_trace: f64,
    e_d: f64,
    e_w: f64,
    beta: f64,
) -> Evidence {
    let n_w = num_weights as f64;
    let gamma = (n_w - 2.0 * beta * inverse_trace).clamp(0.0, n_w);
    let e_d_half_sum = e_d * patterns as f64;
    let alpha = (patterns as f64 * (target_count as f64 - gamma) / (2.0 * e_d_half_sum))
        .clamp(HYPER_MIN, HYPER_MAX);
    let beta = (gamma / (2.0 * e_w)).clamp(HYPER_MIN, HYPER_MAX);
    // 0/0 when gamma and E_W both vanish; fall back to the floor.
    let fix = |v: f64| if v.is_nan() { HYPER_MIN } else { v };
    Evidence {
        gamma,
        alpha: fix(alpha),
        beta: fix(beta),
    }
}

/// Levenberg-Marquardt on `E_R` with automatic `alpha`, `beta`.
pub fn train_br(
    net: &MlpNetwork,
    data: &Dataset,
    cfg: &BrConfig,
) -> Result<(MlpNetwork, TrainReport)> {
    cfg.validate()?;
    let mut solver = LmSolver::new(net.clone(), data, &cfg.lm)?;
    let mut report = TrainReport {
        initial_e_d: solver.e_d,
        initial_e_w: solver.e_w,
        initial_val_e_d: None,
        records: Vec::new(),
        stop_reason: StopReason::MaxEpochs,
        returned_epoch: 0,
        final_weights: net.flatten(),
    };
    if !solver.is_finite() {
        return Err(diverged("initial error is not finite", report));
    }
    let (mut alpha, mut beta) = (cfg.alpha_init, cfg.beta_init);
    for epoch in 1..=cfg.lm.max_epochs {
        match solver.epoch(alpha, beta)? {
            EpochOutcome::LambdaOverflow => {
                report.stop_reason = StopReason::LambdaOverflow;
                break;
            }
            EpochOutcome::Accepted {
                lambda_used,
                equations,
            } => {
                let mut gamma = None;
                let (alpha_used, beta_used) = (alpha, beta);
                if epoch % cfg.reestimate_every == 0 {
                    let undamped = if cfg.damped_trace {
                        None
                    } else {
                        equations.inverse_trace(0.0, alpha, beta)
                    };
                    let trace = undamped
                        .or_else(|| equations.inverse_trace(lambda_used, alpha, beta))
                        .ok_or_else(|| {
                            let mut partial = report.clone();
                            partial.final_weights = solver.net.flatten();
                            diverged("damped Hessian lost positive definiteness", partial)
                        })?;
                    let ev = reestimate(
                        equations.num_weights(),
                        equations.target_count(),
                        equations.patterns(),
                        trace,
                        solver.e_d,
                        solver.e_w,
                        beta,
                    );
                    gamma = Some(ev.gamma);
                    alpha = ev.alpha;
                    beta = ev.beta;
                }
                report.records.push(EpochRecord {
                    epoch,
                    e_d: solver.e_d,
                    e_d_half_sum: solver.e_d * data.len() as f64,
                    e_w: solver.e_w,
                    e_r: compute_er(alpha_used, beta_used, solver.e_d, solver.e_w),
                    lambda: lambda_used,
                    alpha: alpha_used,
                    beta: beta_used,
                    gamma,
                    val_e_d: None,
                });
                report.returned_epoch = epoch;
                if solver.e_d <= cfg.lm.goal_ed {
                    report.stop_reason = StopReason::GoalReached;
                    break;
                }
            }
        }
    }
    report.final_weights = solver.net.flatten();
    Ok((solver.net, report))
}
