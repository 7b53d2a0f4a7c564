use std::fmt;
use std::io::Write;

use crate::error::Result;

/// Why a trainer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GoalReached,
    MaxEpochs,
    LambdaOverflow,
    EarlyStop,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StopReason::GoalReached => "GoalReached",
            StopReason::MaxEpochs => "MaxEpochs",
            StopReason::LambdaOverflow => "LambdaOverflow",
            StopReason::EarlyStop => "EarlyStop",
        };
        f.write_str(s)
    }
}

/// State after one accepted epoch.
///
/// `alpha` and `beta` are the coefficients the epoch's step was taken with,
/// so `e_r = alpha * e_d + beta * e_w`. `e_d_half_sum` is the unnormalized
/// `(1/2) * sum e^2` used by hyperparameter re-estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub e_d: f64,
    pub e_d_half_sum: f64,
    pub e_w: f64,
    pub e_r: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Option<f64>,
    pub val_e_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_e_d: f64,
    pub initial_e_w: f64,
    /// Validation error of the initial weights (early stopping only).
    pub initial_val_e_d: Option<f64>,
    pub records: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    /// Epoch whose weights were returned; 0 means the initial weights.
    pub returned_epoch: usize,
    pub final_weights: Vec<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrainReport {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// One row per epoch: `epoch,E_D,E_W,E_R,lambda,alpha,beta,gamma,val_ED`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "epoch", "E_D", "E_W", "E_R", "lambda", "alpha", "beta", "gamma", "val_ED",
        ])?;
        for r in &self.records {
            w.write_record([
                r.epoch.to_string(),
                r.e_d.to_string(),
                r.e_w.to_string(),
                r.e_r.to_string(),
                r.lambda.to_string(),
                r.alpha.to_string(),
                r.beta.to_string(),
                opt(r.gamma),
                opt(r.val_e_d),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
