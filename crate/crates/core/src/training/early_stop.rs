use serde::{Deserialize, Serialize};

use super::lm::{diverged, EpochOutcome, LmConfig, LmSolver};
use super::report::{EpochRecord, StopReason, TrainReport};
use super::{compute_ed, split_dataset, Dataset};
use crate::error::{Error, Result};
use crate::mlp::MlpNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EarlyStopConfig {
    pub lm: LmConfig,
    pub validation_fraction: f64,
    /// Consecutive epochs with validation error above the best seen so far.
    pub patience: usize,
    pub split_seed: u64,
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        Self {
            lm: LmConfig::default(),
            validation_fraction: 0.3,
            patience: 6,
            split_seed: 0,
        }
    }
}

impl EarlyStopConfig {
    pub fn validate(&self) -> Result<()> {
        self.lm.validate()?;
        if self.patience == 0 {
            return Err(Error::InvalidConfig("patience must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "validation_fraction must lie in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// LM on a training split, returning the weights with the lowest validation
/// error seen. Ties keep the earlier snapshot.
pub fn train_early_stopping(
    net: &MlpNetwork,
    data: &Dataset,
    cfg: &EarlyStopConfig,
) -> Result<(MlpNetwork, TrainReport)> {
    cfg.validate()?;
    let (train, validation) = split_dataset(data, cfg.validation_fraction, cfg.split_seed)?;
    let mut solver = LmSolver::new(net.clone(), &train, &cfg.lm)?;
    let initial_val = compute_ed(net, &validation)?;
    let mut report = TrainReport {
        initial_e_d: solver.e_d,
        initial_e_w: solver.e_w,
        initial_val_e_d: Some(initial_val),
        records: Vec::new(),
        stop_reason: StopReason::MaxEpochs,
        returned_epoch: 0,
        final_weights: net.flatten(),
    };
    if !solver.is_finite() {
        return Err(diverged("initial error is not finite", report));
    }

    let mut best = (initial_val, 0usize, net.clone());
    let mut fails = 0usize;
    for epoch in 1..=cfg.lm.max_epochs {
        match solver.epoch(1.0, 0.0)? {
            EpochOutcome::LambdaOverflow => {
                report.stop_reason = StopReason::LambdaOverflow;
                break;
            }
            EpochOutcome::Accepted { lambda_used, .. } => {
                let val = compute_ed(&solver.net, &validation)?;
                report.records.push(EpochRecord {
                    epoch,
                    e_d: solver.e_d,
                    e_d_half_sum: solver.e_d * train.len() as f64,
                    e_w: solver.e_w,
                    e_r: solver.e_d,
                    lambda: lambda_used,
                    alpha: 1.0,
                    beta: 0.0,
                    gamma: None,
                    val_e_d: Some(val),
                });
                if val < best.0 || !best.0.is_finite() {
                    best = (val, epoch, solver.net.clone());
                    fails = 0;
                } else if val > best.0 {
                    fails += 1;
                }
                if fails >= cfg.patience {
                    report.stop_reason = StopReason::EarlyStop;
                    break;
                }
                if solver.e_d <= cfg.lm.goal_ed {
                    report.stop_reason = StopReason::GoalReached;
                    break;
                }
            }
        }
    }
    let (_, best_epoch, best_net) = best;
    report.returned_epoch = best_epoch;
    report.final_weights = best_net.flatten();
    Ok((best_net, report))
}
