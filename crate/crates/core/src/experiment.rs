//! Open-loop step experiment and general inverse-model dataset construction.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{MotorParams, PlantState};
use crate::training::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepExperimentConfig {
    pub num_steps: usize,
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    /// Samples each level is held for.
    pub dwell_samples: usize,
    pub seed: u64,
}

impl Default for StepExperimentConfig {
    fn default() -> Self {
        Self {
            num_steps: 40,
            amplitude_min: 2.5,
            amplitude_max: 6.5,
            dwell_samples: 100,
            seed: 0,
        }
    }
}

impl StepExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_steps == 0 {
            return Err(Error::InvalidConfig(
                "experiment.num_steps must be positive".into(),
            ));
        }
        if self.dwell_samples == 0 {
            return Err(Error::InvalidConfig(
                "experiment.dwell_samples must be positive".into(),
            ));
        }
        if !(self.amplitude_min.is_finite()
            && self.amplitude_max.is_finite()
            && self.amplitude_min < self.amplitude_max)
        {
            return Err(Error::InvalidConfig(format!(
                "experiment.amplitude_min ({}) must be less than experiment.amplitude_max ({})",
                self.amplitude_min, self.amplitude_max
            )));
        }
        if self.num_steps * self.dwell_samples < 4 {
            return Err(Error::InvalidConfig(
                "experiment must record at least 4 samples".into(),
            ));
        }
        Ok(())
    }

    /// Whether each dwell spans at least five time constants.
    pub fn settles(&self, params: &MotorParams) -> bool {
        self.dwell_samples as f64 * params.ts >= 5.0 * params.tau
    }
}

/// Recorded input/output pairs: `y[k]` is the measurement taken just before
/// `u[k]` is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct IoLog {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub ts: f64,
}

impl IoLog {
    pub fn new(u: Vec<f64>, y: Vec<f64>, ts: f64) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                actual: y.len(),
            });
        }
        if u.len() < 3 {
            return Err(Error::LogTooShort {
                len: u.len(),
                min: 3,
            });
        }
        Ok(Self { u, y, ts })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// CSV with header `k,u,y`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "u", "y"])?;
        for (k, (u, y)) in self.u.iter().zip(&self.y).enumerate() {
            w.write_record([k.to_string(), u.to_string(), y.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads a `k,u,y` CSV. Rows are taken in file order; `ts` is not stored
    /// in the file and must be supplied.
    pub fn read_csv<R: Read>(input: R, ts: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::parse("io log", format!("missing column `{name}`")))
        };
        let (cu, cy) = (col("u")?, col("y")?);
        col("k")?;
        let mut u = Vec::new();
        let mut y = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |c: usize| -> Result<f64> {
                let s = rec.get(c).unwrap_or("").trim();
                s.parse::<f64>().map_err(|_| {
                    Error::parse("io log", format!("row {}: `{s}` is not a number", line + 1))
                })
            };
            u.push(field(cu)?);
            y.push(field(cy)?);
        }
        Self::new(u, y, ts)
    }
}

/// Drives the plant with random step levels and records its response.
pub fn run_step_experiment(params: &MotorParams, cfg: &StepExperimentConfig) -> Result<IoLog> {
    params.validate()?;
    cfg.validate()?;
    let mut levels_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    noise_rng.set_stream(1);
    let mut plant = PlantState::with_rng(0.0, noise_rng);

    let total = cfg.num_steps * cfg.dwell_samples;
    let mut u = Vec::with_capacity(total);
    let mut y = Vec::with_capacity(total);
    let mut measured = plant.measure(params);
    for _ in 0..cfg.num_steps {
        let level = levels_rng.random_range(cfg.amplitude_min..=cfg.amplitude_max);
        for _ in 0..cfg.dwell_samples {
            u.push(level);
            y.push(measured);
            measured = plant.step(params, level);
        }
    }
    IoLog::new(u, y, params.ts)
}

/// Patterns `[y(k+1), y(k), y(k-1), u(k-1), u(k-2)] -> u(k)` for every `k`
/// with all lags inside the log, scaled to `[-1, 1]`.
///
/// The reference slot holds the realized next output; in closed loop it
/// receives the reference instead.
pub fn build_inverse_dataset(log: &IoLog) -> Result<Dataset> {
    let (inputs, targets) = inverse_rows(log)?;
    Dataset::from_raw(inputs, targets)
}

/// Unscaled regressor rows and targets for [`build_inverse_dataset`].
pub fn inverse_rows(log: &IoLog) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let n = log.len();
    if n < 4 {
        return Err(Error::LogTooShort { len: n, min: 4 });
    }
    let (u, y) = (&log.u, &log.y);
    let inputs = (2..n - 1)
        .map(|k| vec![y[k + 1], y[k], y[k - 1], u[k - 1], u[k - 2]])
        .collect();
    let targets = (2..n - 1).map(|k| vec![u[k]]).collect();
    Ok((inputs, targets))
}
