//! Batch second-order training: Levenberg-Marquardt, Bayesian regularization
//! and LM with early stopping.
//!
//! Every trainer minimizes the regularized error
//!
//! ```text
//! E_R = alpha * E_D + beta * E_W
//! E_D = 1/(2P) * sum_p sum_k (d_pk - y_pk)^2
//! E_W = sum_n w_n^2
//! ```
//!
//! with `alpha` weighting the data term and `beta` the weight term. Plain LM
//! is the special case `alpha = 1, beta = 0`.

mod bayes;
mod dataset;
mod early_stop;
mod lm;
mod report;

pub use bayes::{train_br, BrConfig};
pub use dataset::{split_dataset, Dataset};
pub use early_stop::{train_early_stopping, EarlyStopConfig};
pub use lm::{lm_step, train_lm, LmConfig, LmStep, NormalEquations};
pub use report::{EpochRecord, StopReason, TrainReport};

use crate::error::Result;
use crate::mlp::MlpNetwork;

/// Mean squared error with the `1/(2P)` normalization.
pub fn compute_ed(net: &MlpNetwork, data: &Dataset) -> Result<f64> {
    let residuals = net.residuals(data)?;
    Ok(ed_from_residuals(&residuals, data.len()))
}

pub(crate) fn ed_from_residuals(residuals: &[f64], patterns: usize) -> f64 {
    residuals.iter().map(|e| e * e).sum::<f64>() / (2.0 * patterns as f64)
}

/// Sum of squared weights, biases included.
pub fn compute_ew(net: &MlpNetwork) -> f64 {
    sum_squares(net.weights())
}

pub(crate) fn sum_squares(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum()
}

pub fn compute_er(alpha: f64, beta: f64, ed: f64, ew: f64) -> f64 {
    alpha * ed + beta * ew
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{init_weights, ActivationKind};

    fn linear(weights: Vec<f64>) -> MlpNetwork {
        MlpNetwork::unflatten(&[1, 1], &[ActivationKind::Linear], weights).unwrap()
    }

    #[test]
    fn ed_perfect_fit_is_zero() {
        let net = linear(vec![2.0, 1.0]);
        let data = Dataset::unscaled(vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(compute_ed(&net, &data).unwrap(), 0.0);
    }

    #[test]
    fn ed_single_unit_error() {
        let net = linear(vec![0.0, 0.0]);
        let data = Dataset::unscaled(vec![vec![0.0]], vec![vec![1.0]]).unwrap();
        assert_eq!(compute_ed(&net, &data).unwrap(), 0.5);
    }

    #[test]
    fn ed_two_patterns_opposite_errors() {
        // e = {1, -1}: (1/4)(1 + 1)
        let net = linear(vec![0.0, 0.0]);
        let data = Dataset::unscaled(vec![vec![0.0], vec![0.0]], vec![vec![1.0], vec![-1.0]]).unwrap();
        assert_eq!(compute_ed(&net, &data).unwrap(), 0.5);
    }

    #[test]
    fn ew_examples() {
        assert_eq!(compute_ew(&linear(vec![0.0, 0.0])), 0.0);
        assert_eq!(compute_ew(&linear(vec![1.0, 2.0])), 5.0);
        let net = init_weights(
            &[5, 10, 1],
            &[ActivationKind::TanhSigmoid, ActivationKind::Linear],
            4,
            0.7,
        )
        .unwrap();
        let norm2: f64 = net.flatten().iter().map(|w| w * w).sum();
        assert_eq!(compute_ew(&net), norm2);
    }

    #[test]
    fn er_examples() {
        assert_eq!(compute_er(1.0, 0.0, 0.3, 7.0), 0.3);
        assert_eq!(compute_er(0.0, 1.0, 0.3, 7.0), 7.0);
        assert_eq!(compute_er(2.0, 3.0, 0.5, 5.0), 16.0);
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(Dataset::unscaled(vec![], vec![]).is_err());
    }
}
