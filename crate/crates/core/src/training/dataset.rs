use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scaling::Scaling;

/// Training patterns in network space, plus the scaling that produced them.
///
/// Inputs and targets are stored row-major. Values are already scaled; the
/// `scaling` field maps raw volts to these values and back.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    input_width: usize,
    target_width: usize,
    scaling: Scaling,
}

fn check_rows(inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<(usize, usize)> {
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            actual: targets.len(),
        });
    }
    let iw = inputs[0].len();
    let tw = targets[0].len();
    if iw == 0 || tw == 0 {
        return Err(Error::InvalidConfig("dataset rows must be non-empty".into()));
    }
    for row in inputs {
        if row.len() != iw {
            return Err(Error::DimensionMismatch {
                expected: iw,
                actual: row.len(),
            });
        }
    }
    for row in targets {
        if row.len() != tw {
            return Err(Error::DimensionMismatch {
                expected: tw,
                actual: row.len(),
            });
        }
    }
    Ok((iw, tw))
}

impl Dataset {
    /// Uses the rows as-is with identity scaling.
    pub fn unscaled(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        let (iw, tw) = check_rows(&inputs, &targets)?;
        Ok(Self {
            inputs: inputs.concat(),
            targets: targets.concat(),
            input_width: iw,
            target_width: tw,
            scaling: Scaling::identity(iw, tw),
        })
    }

    /// Fits min/max scaling to `[-1, 1]` on the raw rows and stores scaled values.
    pub fn from_raw(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        check_rows(&inputs, &targets)?;
        let scaling = Scaling::fit(&inputs, &targets);
        Self::with_scaling(&inputs, &targets, scaling)
    }

    /// Applies a given scaling to raw rows.
    pub fn with_scaling(
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
        scaling: Scaling,
    ) -> Result<Self> {
        let (iw, tw) = check_rows(inputs, targets)?;
        if scaling.inputs.len() != iw || scaling.targets.len() != tw {
            return Err(Error::DimensionMismatch {
                expected: iw + tw,
                actual: scaling.inputs.len() + scaling.targets.len(),
            });
        }
        let inputs = inputs.iter().flat_map(|r| scaling.scale_input(r)).collect();
        let targets = targets.iter().flat_map(|r| scaling.scale_target(r)).collect();
        Ok(Self {
            inputs,
            targets,
            input_width: iw,
            target_width: tw,
            scaling,
        })
    }

    /// Pattern count `P`.
    pub fn len(&self) -> usize {
        self.inputs.len() / self.input_width
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    /// Output count `M`.
    pub fn target_width(&self) -> usize {
        self.target_width
    }

    pub fn input(&self, p: usize) -> &[f64] {
        &self.inputs[p * self.input_width..(p + 1) * self.input_width]
    }

    pub fn target(&self, p: usize) -> &[f64] {
        &self.targets[p * self.target_width..(p + 1) * self.target_width]
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    /// Patterns at `indices`, in that order, sharing this dataset's scaling.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut inputs = Vec::with_capacity(indices.len() * self.input_width);
        let mut targets = Vec::with_capacity(indices.len() * self.target_width);
        for &i in indices {
            inputs.extend_from_slice(self.input(i));
            targets.extend_from_slice(self.target(i));
        }
        Self {
            inputs,
            targets,
            input_width: self.input_width,
            target_width: self.target_width,
            scaling: self.scaling.clone(),
        }
    }
}

/// Seeded shuffled partition into `(train, validation)`.
///
/// The validation part receives `round(fraction * P)` patterns.
pub fn split_dataset(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "validation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let p = data.len();
    let n_val = (fraction * p as f64).round() as usize;
    if n_val == 0 || n_val >= p {
        return Err(Error::InvalidConfig(format!(
            "splitting {p} patterns with fraction {fraction} leaves an empty partition"
        )));
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (val_idx, train_idx) = order.split_at(n_val);
    Ok((data.subset(train_idx), data.subset(val_idx)))
}
