use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::report::{EpochRecord, StopReason, TrainReport};
use super::{compute_er, ed_from_residuals, sum_squares, Dataset};
use crate::error::{Error, Result};
use crate::mlp::MlpNetwork;

/// Smallest damping the schedule decays to; keeps `lambda * increase` able to
/// grow again after many accepted steps.
const LAMBDA_FLOOR: f64 = 1e-20;

/// Damping schedule and stopping rules for Levenberg-Marquardt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub lambda_init: f64,
    pub lambda_increase: f64,
    pub lambda_decrease: f64,
    pub lambda_max: f64,
    pub max_epochs: usize,
    pub goal_ed: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            lambda_init: 1e-3,
            lambda_increase: 10.0,
            lambda_decrease: 0.1,
            lambda_max: 1e10,
            max_epochs: 200,
            goal_ed: 0.0,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lambda_init > 0.0 && self.lambda_init.is_finite()) {
            return bad(format!("lambda_init must be positive, got {}", self.lambda_init));
        }
        if !(self.lambda_increase > 1.0 && self.lambda_increase.is_finite()) {
            return bad(format!(
                "lambda_increase must exceed 1, got {}",
                self.lambda_increase
            ));
        }
        if !(self.lambda_decrease > 0.0 && self.lambda_decrease < 1.0) {
            return bad(format!(
                "lambda_decrease must lie in (0, 1), got {}",
                self.lambda_decrease
            ));
        }
        if !(self.lambda_max >= self.lambda_init) {
            return bad(format!(
                "lambda_max ({}) must be at least lambda_init ({})",
                self.lambda_max, self.lambda_init
            ));
        }
        if !(self.goal_ed >= 0.0) {
            return bad(format!("goal_ed must be non-negative, got {}", self.goal_ed));
        }
        Ok(())
    }
}

/// Gauss-Newton quantities at one weight vector: `JᵀJ`, `Jᵀe`, and the
/// error terms, with `J = de/dw` and `e = d - y`.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    jtj: DMatrix<f64>,
    jte: DVector<f64>,
    weights: DVector<f64>,
    patterns: usize,
    targets: usize,
    pub e_d: f64,
    pub e_w: f64,
}

/// A proposed, uncommitted weight update.
#[derive(Debug, Clone)]
pub struct LmStep {
    pub candidate: Vec<f64>,
    pub delta: Vec<f64>,
    /// Quadratic-model prediction of `E_R` at the candidate.
    pub predicted_objective: f64,
}

impl NormalEquations {
    pub fn build(net: &MlpNetwork, data: &Dataset) -> Result<Self> {
        let (residuals, jac_t) = net.residuals_and_jacobian_t(data)?;
        let e = DVector::from_vec(residuals);
        let jtj = &jac_t * jac_t.transpose();
        let jte = &jac_t * &e;
        Ok(Self {
            jtj,
            jte,
            weights: DVector::from_column_slice(net.weights()),
            patterns: data.len(),
            targets: e.len(),
            e_d: ed_from_residuals(e.as_slice(), data.len()),
            e_w: sum_squares(net.weights()),
        })
    }

    pub fn patterns(&self) -> usize {
        self.patterns
    }

    /// Total number of target values, `P * M`.
    pub fn target_count(&self) -> usize {
        self.targets
    }

    pub fn num_weights(&self) -> usize {
        self.weights.len()
    }

    /// Gradient of `E_R`: `alpha/P * Jᵀe + 2 beta w`.
    pub fn gradient(&self, alpha: f64, beta: f64) -> DVector<f64> {
        &self.jte * (alpha / self.patterns as f64) + &self.weights * (2.0 * beta)
    }

    /// Gauss-Newton Hessian of `E_R`: `alpha/P * JᵀJ + 2 beta I`.
    pub fn hessian(&self, alpha: f64, beta: f64) -> DMatrix<f64> {
        let mut h = &self.jtj * (alpha / self.patterns as f64);
        for i in 0..h.nrows() {
            h[(i, i)] += 2.0 * beta;
        }
        h
    }

    /// Solves `(H + lambda I) delta = -G` by Cholesky factorization.
    pub fn solve(&self, lambda: f64, alpha: f64, beta: f64) -> Result<LmStep> {
        let h = self.hessian(alpha, beta);
        let g = self.gradient(alpha, beta);
        let mut damped = h.clone();
        for i in 0..damped.nrows() {
            damped[(i, i)] += lambda;
        }
        let chol = damped
            .cholesky()
            .ok_or(Error::StepFailed { lambda })?;
        let delta = chol.solve(&(-&g));
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepFailed { lambda });
        }
        let current = compute_er(alpha, beta, self.e_d, self.e_w);
        let predicted_objective = current + g.dot(&delta) + 0.5 * delta.dot(&(&h * &delta));
        let candidate = &self.weights + &delta;
        Ok(LmStep {
            candidate: candidate.as_slice().to_vec(),
            delta: delta.as_slice().to_vec(),
            predicted_objective,
        })
    }

    /// `tr((H + lambda I)^{-1})`, or `None` if the matrix is not positive definite.
    pub fn inverse_trace(&self, lambda: f64, alpha: f64, beta: f64) -> Option<f64> {
        let mut m = self.hessian(alpha, beta);
        for i in 0..m.nrows() {
            m[(i, i)] += lambda;
        }
        let inv = m.cholesky()?.inverse();
        Some(inv.trace())
    }
}

/// One damped Gauss-Newton step on `E_R = alpha E_D + beta E_W`.
///
/// Returns the candidate weights without committing them.
pub fn lm_step(
    net: &MlpNetwork,
    data: &Dataset,
    lambda: f64,
    alpha: f64,
    beta: f64,
) -> Result<LmStep> {
    NormalEquations::build(net, data)?.solve(lambda, alpha, beta)
}

pub(crate) enum EpochOutcome {
    Accepted {
        lambda_used: f64,
        equations: NormalEquations,
    },
    LambdaOverflow,
}

/// Accept/reject loop shared by all trainers.
pub(crate) struct LmSolver<'a> {
    data: &'a Dataset,
    cfg: &'a LmConfig,
    pub net: MlpNetwork,
    pub lambda: f64,
    pub e_d: f64,
    pub e_w: f64,
}

impl<'a> LmSolver<'a> {
    pub fn new(net: MlpNetwork, data: &'a Dataset, cfg: &'a LmConfig) -> Result<Self> {
        cfg.validate()?;
        let residuals = net.residuals(data)?;
        let e_d = ed_from_residuals(&residuals, data.len());
        let e_w = sum_squares(net.weights());
        Ok(Self {
            data,
            cfg,
            net,
            lambda: cfg.lambda_init,
            e_d,
            e_w,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.e_d.is_finite() && self.e_w.is_finite()
    }

    /// Tries steps with growing damping until `E_R` decreases or damping
    /// exceeds `lambda_max`. Rejected candidates never touch the weights.
    pub fn epoch(&mut self, alpha: f64, beta: f64) -> Result<EpochOutcome> {
        let equations = NormalEquations::build(&self.net, self.data)?;
        let current = compute_er(alpha, beta, equations.e_d, equations.e_w);
        while self.lambda <= self.cfg.lambda_max {
            match equations.solve(self.lambda, alpha, beta) {
                Ok(step) => {
                    let candidate = self.net.with_weights(step.candidate);
                    let residuals = candidate.residuals(self.data)?;
                    let e_d = ed_from_residuals(&residuals, self.data.len());
                    let e_w = sum_squares(candidate.weights());
                    let objective = compute_er(alpha, beta, e_d, e_w);
                    if objective.is_finite() && objective < current {
                        let lambda_used = self.lambda;
                        self.net = candidate;
                        self.e_d = e_d;
                        self.e_w = e_w;
                        self.lambda = (self.lambda * self.cfg.lambda_decrease).max(LAMBDA_FLOOR);
                        return Ok(EpochOutcome::Accepted {
                            lambda_used,
                            equations,
                        });
                    }
                }
                Err(Error::StepFailed { .. }) => {}
                Err(e) => return Err(e),
            }
            self.lambda *= self.cfg.lambda_increase;
        }
        Ok(EpochOutcome::LambdaOverflow)
    }
}

pub(crate) fn diverged(reason: &str, report: TrainReport) -> Error {
    Error::TrainingDiverged {
        reason: reason.to_string(),
        report: Box::new(report),
    }
}

/// Plain Levenberg-Marquardt on `E_D`.
pub fn train_lm(
    net: &MlpNetwork,
    data: &Dataset,
    cfg: &LmConfig,
) -> Result<(MlpNetwork, TrainReport)> {
    let mut solver = LmSolver::new(net.clone(), data, cfg)?;
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
    for epoch in 1..=cfg.max_epochs {
        match solver.epoch(1.0, 0.0)? {
            EpochOutcome::LambdaOverflow => {
                report.stop_reason = StopReason::LambdaOverflow;
                break;
            }
            EpochOutcome::Accepted { lambda_used, .. } => {
                report.records.push(EpochRecord {
                    epoch,
                    e_d: solver.e_d,
                    e_d_half_sum: solver.e_d * data.len() as f64,
                    e_w: solver.e_w,
                    e_r: solver.e_d,
                    lambda: lambda_used,
                    alpha: 1.0,
                    beta: 0.0,
                    gamma: None,
                    val_e_d: None,
                });
                report.returned_epoch = epoch;
                if solver.e_d <= cfg.goal_ed {
                    report.stop_reason = StopReason::GoalReached;
                    break;
                }
            }
        }
    }
    report.final_weights = solver.net.flatten();
    Ok((solver.net, report))
}
