//! Per-column affine maps between raw volts and the network's working range.

use crate::error::{Error, Result};

/// `scaled = (raw - offset) * gain`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub offset: f64,
    pub gain: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine {
        offset: 0.0,
        gain: 1.0,
    };

    pub fn new(offset: f64, gain: f64) -> Result<Self> {
        if !offset.is_finite() || !gain.is_finite() || gain == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "affine scaling needs finite offset and non-zero finite gain, got offset={offset}, gain={gain}"
            )));
        }
        Ok(Self { offset, gain })
    }

    /// Maps `[min, max]` onto `[-1, 1]`. A constant column only gets centred.
    pub fn to_unit_interval(min: f64, max: f64) -> Self {
        let span = max - min;
        let gain = if span > 0.0 && span.is_finite() {
            2.0 / span
        } else {
            1.0
        };
        Self {
            offset: 0.5 * (min + max),
            gain,
        }
    }

    #[inline]
    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.offset) * self.gain
    }

    #[inline]
    pub fn invert(&self, scaled: f64) -> f64 {
        scaled / self.gain + self.offset
    }
}

/// Scaling metadata for every input and target column.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub inputs: Vec<Affine>,
    pub targets: Vec<Affine>,
}

impl Scaling {
    pub fn identity(input_width: usize, target_width: usize) -> Self {
        Self {
            inputs: vec![Affine::IDENTITY; input_width],
            targets: vec![Affine::IDENTITY; target_width],
        }
    }

    /// Min/max scaling fitted on row-major data.
    pub fn fit(inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Self {
        Self {
            inputs: fit_columns(inputs),
            targets: fit_columns(targets),
        }
    }

    pub fn scale_input(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(&self.inputs)
            .map(|(x, a)| a.apply(*x))
            .collect()
    }

    pub fn scale_target(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(&self.targets)
            .map(|(x, a)| a.apply(*x))
            .collect()
    }

    pub fn unscale_target(&self, scaled: &[f64]) -> Vec<f64> {
        scaled
            .iter()
            .zip(&self.targets)
            .map(|(x, a)| a.invert(*x))
            .collect()
    }
}

fn fit_columns(rows: &[Vec<f64>]) -> Vec<Affine> {
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|c| {
            let (lo, hi) = rows
                .iter()
                .map(|r| r[c])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            Affine::to_unit_interval(lo, hi)
        })
        .collect()
}
