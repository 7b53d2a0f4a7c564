//! Glue between the experiment, trainers and closed-loop evaluation.

use serde::{Deserialize, Serialize};

use crate::control::{
    compare_controllers, ComparisonReport, ComparisonRow, Controller, ReferenceProfile,
};
use crate::error::{Error, Result};
use crate::experiment::{build_inverse_dataset, run_step_experiment, IoLog, StepExperimentConfig};
use crate::mlp::{init_weights, ActivationKind, RegressorVector};
use crate::network_file::TrainedNetwork;
use crate::plant::MotorParams;
use crate::training::{
    train_br, train_early_stopping, train_lm, BrConfig, EarlyStopConfig, LmConfig, TrainReport,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<ActivationKind>,
    /// Initial weights are drawn from `U[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            layer_sizes: vec![RegressorVector::WIDTH, 10, 1],
            activations: vec![ActivationKind::TanhSigmoid, ActivationKind::Linear],
            init_scale: 0.5,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.first() != Some(&RegressorVector::WIDTH)
            || self.layer_sizes.last() != Some(&1)
        {
            return Err(Error::InvalidConfig(format!(
                "network.layer_sizes must start with {} inputs and end with 1 output, got {:?}",
                RegressorVector::WIDTH,
                self.layer_sizes
            )));
        }
        // Architecture checks proper live in init_weights.
        init_weights(&self.layer_sizes, &self.activations, 0, self.init_scale).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainerKind {
    Lm,
    Br,
    EarlyStop,
}

impl TrainerKind {
    pub fn name(self) -> &'static str {
        match self {
            TrainerKind::Lm => "lm",
            TrainerKind::Br => "br",
            TrainerKind::EarlyStop => "early_stop",
        }
    }
}

/// Settings for every trainer plus which one `train` uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub kind: TrainerKind,
    pub lm: LmConfig,
    pub br: BrConfig,
    pub early_stop: EarlyStopConfig,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            kind: TrainerKind::Br,
            lm: LmConfig::default(),
            br: BrConfig::default(),
            early_stop: EarlyStopConfig::default(),
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        self.lm.validate()?;
        self.br.validate()?;
        self.early_stop.validate()
    }
}

/// Builds the inverse dataset from `log` and trains a fresh network.
pub fn train_inverse_controller(
    log: &IoLog,
    network: &NetworkConfig,
    trainer: &TrainerConfig,
    kind: TrainerKind,
    seed: u64,
) -> Result<(TrainedNetwork, TrainReport)> {
    network.validate()?;
    let data = build_inverse_dataset(log)?;
    let net = init_weights(&network.layer_sizes, &network.activations, seed, network.init_scale)?;
    let (trained, report) = match kind {
        TrainerKind::Lm => train_lm(&net, &data, &trainer.lm)?,
        TrainerKind::Br => train_br(&net, &data, &trainer.br)?,
        TrainerKind::EarlyStop => {
            let cfg = EarlyStopConfig {
                split_seed: trainer.early_stop.split_seed ^ seed,
                ..trainer.early_stop.clone()
            };
            train_early_stopping(&net, &data, &cfg)?
        }
    };
    Ok((TrainedNetwork::new(trained, data.scaling().clone())?, report))
}

/// One replicate of the full LM-versus-BR pipeline.
#[derive(Debug, Clone)]
pub struct PairedRun {
    pub seed: u64,
    pub lm: (TrainedNetwork, TrainReport),
    pub br: (TrainedNetwork, TrainReport),
    pub comparison: ComparisonReport,
}

/// Collects data, trains LM and BR controllers from the same initial
/// weights, and evaluates both on the given closed-loop seeds. `seed` drives
/// the step amplitudes, the tachometer noise and the weight initialization.
pub fn paired_lm_br_run(
    plant: &MotorParams,
    experiment: &StepExperimentConfig,
    network: &NetworkConfig,
    trainer: &TrainerConfig,
    profile: &ReferenceProfile,
    seed: u64,
    eval_seeds: &[u64],
) -> Result<PairedRun> {
    let exp = StepExperimentConfig {
        seed,
        ..experiment.clone()
    };
    let log = run_step_experiment(plant, &exp)?;
    let lm = train_inverse_controller(&log, network, trainer, TrainerKind::Lm, seed)?;
    let br = train_inverse_controller(&log, network, trainer, TrainerKind::Br, seed)?;
    let controllers: [(&str, &dyn Controller); 2] = [("lm", &lm.0), ("br", &br.0)];
    let comparison = compare_controllers(plant, &controllers, profile, eval_seeds)?;
    Ok(PairedRun {
        seed,
        lm,
        br,
        comparison,
    })
}

/// The full LM-versus-BR study: one [`paired_lm_br_run`] per seed, each pair
/// evaluated in closed loop on its own seed, with all rows pooled into one
/// report.
pub fn lm_vs_br_study(
    plant: &MotorParams,
    experiment: &StepExperimentConfig,
    network: &NetworkConfig,
    trainer: &TrainerConfig,
    profile: &ReferenceProfile,
    seeds: &[u64],
) -> Result<(Vec<PairedRun>, ComparisonReport)> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("no evaluation seeds given".into()));
    }
    let runs = seeds
        .iter()
        .map(|&seed| paired_lm_br_run(plant, experiment, network, trainer, profile, seed, &[seed]))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<ComparisonRow> = runs
        .iter()
        .flat_map(|r| r.comparison.rows.iter().cloned())
        .collect();
    // Group by controller, keeping seed order within each.
    rows.sort_by_key(|r| if r.controller == "lm" { 0 } else { 1 });
    Ok((runs, ComparisonReport::from_rows(rows)))
}
