//! Feed-forward multilayer perceptron with an exact error Jacobian.
//!
//! # Weight layout
//!
//! All connection weights and biases live in one flat vector. The canonical
//! order is layer-major, then neuron-major; each neuron stores its incoming
//! weights (in input order) followed by its bias:
//!
//! ```text
//! layer 1: [w(1,0,0) .. w(1,0,n0-1), b(1,0), w(1,1,0) .. b(1,1), ...]
//! layer 2: [w(2,0,0) .. w(2,0,n1-1), b(2,0), ...]
//! ```
//!
//! so a layer with `fan_in` inputs and `fan_out` neurons occupies
//! `(fan_in + 1) * fan_out` consecutive entries. The serialized network
//! format and every trainer rely on this order.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::Dataset;

/// Neuron transfer function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    TanhSigmoid,
    Linear,
}

impl ActivationKind {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            ActivationKind::TanhSigmoid => z.tanh(),
            ActivationKind::Linear => z,
        }
    }

    /// Derivative expressed through the activation value `a = apply(z)`.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            ActivationKind::TanhSigmoid => 1.0 - a * a,
            ActivationKind::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::TanhSigmoid => "tanh",
            ActivationKind::Linear => "linear",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tanh" | "tanh_sigmoid" => Some(ActivationKind::TanhSigmoid),
            "linear" => Some(ActivationKind::Linear),
            _ => None,
        }
    }
}

/// The five controller inputs `[ref(k), y(k), y(k-1), u(k-1), u(k-2)]`, in volts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressorVector {
    pub reference: f64,
    pub y_now: f64,
    pub y_prev: f64,
    pub u_prev1: f64,
    pub u_prev2: f64,
}

impl RegressorVector {
    pub const WIDTH: usize = 5;

    pub fn to_array(&self) -> [f64; Self::WIDTH] {
        [
            self.reference,
            self.y_now,
            self.y_prev,
            self.u_prev1,
            self.u_prev2,
        ]
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        match *values {
            [reference, y_now, y_prev, u_prev1, u_prev2] => Ok(Self {
                reference,
                y_now,
                y_prev,
                u_prev1,
                u_prev2,
            }),
            _ => Err(Error::DimensionMismatch {
                expected: Self::WIDTH,
                actual: values.len(),
            }),
        }
    }
}

/// A fully connected feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layer_sizes: Vec<usize>,
    activations: Vec<ActivationKind>,
    weights: Vec<f64>,
}

/// Number of flat weights (biases included) for the given layer sizes.
pub fn weight_count(layer_sizes: &[usize]) -> usize {
    layer_sizes
        .windows(2)
        .map(|pair| (pair[0] + 1) * pair[1])
        .sum()
}

fn validate_architecture(layer_sizes: &[usize], activations: &[ActivationKind]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidArchitecture(format!(
            "need at least an input and an output layer, got {} layer(s)",
            layer_sizes.len()
        )));
    }
    if let Some(pos) = layer_sizes.iter().position(|&n| n == 0) {
        return Err(Error::InvalidArchitecture(format!(
            "layer {pos} has zero width"
        )));
    }
    if activations.len() != layer_sizes.len() - 1 {
        return Err(Error::InvalidArchitecture(format!(
            "{} activations given for {} non-input layers",
            activations.len(),
            layer_sizes.len() - 1
        )));
    }
    Ok(())
}

/// Builds a network with weights drawn i.i.d. from `U[-scale, scale]`.
///
/// The generator is seeded from `seed`, so equal seeds give bit-identical
/// weights.
pub fn init_weights(
    layer_sizes: &[usize],
    activations: &[ActivationKind],
    seed: u64,
    scale: f64,
) -> Result<MlpNetwork> {
    validate_architecture(layer_sizes, activations)?;
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "initialization scale must be finite and non-negative, got {scale}"
        )));
    }
    let n = weight_count(layer_sizes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..n)
        .map(|_| {
            if scale == 0.0 {
                0.0
            } else {
                rng.random_range(-scale..=scale)
            }
        })
        .collect();
    Ok(MlpNetwork {
        layer_sizes: layer_sizes.to_vec(),
        activations: activations.to_vec(),
        weights,
    })
}

/// Reusable buffers for forward and reverse passes.
struct Scratch {
    /// Per-layer activations; entry 0 is the input.
    layers: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Scratch {
    fn new(layer_sizes: &[usize]) -> Self {
        let widest = layer_sizes.iter().copied().max().unwrap_or(0);
        Self {
            layers: layer_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            delta: Vec::with_capacity(widest),
            delta_prev: Vec::with_capacity(widest),
        }
    }

    fn output(&self) -> &[f64] {
        self.layers.last().expect("output layer")
    }
}

impl MlpNetwork {
    /// Rebuilds a network from its flat weight vector.
    pub fn unflatten(
        layer_sizes: &[usize],
        activations: &[ActivationKind],
        weights: Vec<f64>,
    ) -> Result<Self> {
        validate_architecture(layer_sizes, activations)?;
        let expected = weight_count(layer_sizes);
        if weights.len() != expected {
            return Err(Error::WeightLength {
                expected,
                actual: weights.len(),
            });
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            activations: activations.to_vec(),
            weights,
        })
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.weights.clone()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Replaces the weight vector, keeping the architecture.
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(Error::WeightLength {
                expected: self.weights.len(),
                actual: weights.len(),
            });
        }
        self.weights.copy_from_slice(weights);
        Ok(())
    }

    pub(crate) fn with_weights(&self, weights: Vec<f64>) -> Self {
        debug_assert_eq!(weights.len(), self.weights.len());
        Self {
            layer_sizes: self.layer_sizes.clone(),
            activations: self.activations.clone(),
            weights,
        }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activations(&self) -> &[ActivationKind] {
        &self.activations
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_sizes.last().expect("validated non-empty")
    }

    /// Total weight count `N`, biases included.
    pub fn num_weights(&self) -> usize {
        self.weights.len()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_width() {
            return Err(Error::DimensionMismatch {
                expected: self.input_width(),
                actual: input.len(),
            });
        }
        Ok(())
    }

    fn forward_into(&self, input: &[f64], scratch: &mut Scratch) {
        scratch.layers[0].copy_from_slice(input);
        let mut offset = 0;
        for (l, pair) in self.layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let act = self.activations[l];
            let (done, rest) = scratch.layers.split_at_mut(l + 1);
            let prev = &done[l];
            let out = &mut rest[0];
            for (j, o) in out.iter_mut().enumerate() {
                let base = offset + j * (fan_in + 1);
                let row = &self.weights[base..base + fan_in];
                let z = row.iter().zip(prev).map(|(w, x)| w * x).sum::<f64>()
                    + self.weights[base + fan_in];
                *o = act.apply(z);
            }
            offset += (fan_in + 1) * fan_out;
        }
    }

    /// Evaluates every output of the network.
    pub fn evaluate(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut scratch = Scratch::new(&self.layer_sizes);
        self.forward_into(input, &mut scratch);
        Ok(scratch.output().to_vec())
    }

    /// Evaluates a single-output network.
    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        if self.output_width() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: self.output_width(),
            });
        }
        Ok(self.evaluate(input)?[0])
    }

    /// Per-pattern errors `e = d - y`, pattern-major, `P * M` entries.
    pub fn residuals(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_dataset(data)?;
        let mut out = Vec::with_capacity(data.len() * data.target_width());
        let mut scratch = Scratch::new(&self.layer_sizes);
        for p in 0..data.len() {
            self.forward_into(data.input(p), &mut scratch);
            out.extend(
                data.target(p)
                    .iter()
                    .zip(scratch.output())
                    .map(|(d, y)| d - y),
            );
        }
        Ok(out)
    }

    fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.input_width() != self.input_width() {
            return Err(Error::DimensionMismatch {
                expected: self.input_width(),
                actual: data.input_width(),
            });
        }
        if data.target_width() != self.output_width() {
            return Err(Error::DimensionMismatch {
                expected: self.output_width(),
                actual: data.target_width(),
            });
        }
        Ok(())
    }

    /// Jacobian of the errors `e = d - y` with respect to every flat weight.
    ///
    /// Row `p * M + k` holds `de_{p,k} / dw` for pattern `p`, output `k`.
    pub fn error_jacobian(&self, data: &Dataset) -> Result<DMatrix<f64>> {
        Ok(self.residuals_and_jacobian_t(data)?.1.transpose())
    }

    /// Residuals and the transposed Jacobian (`N x PM`, one column per error)
    /// from a single sweep over the data. Columns are contiguous, so this is
    /// the cheap layout to assemble.
    pub fn residuals_and_jacobian_t(&self, data: &Dataset) -> Result<(Vec<f64>, DMatrix<f64>)> {
        self.check_dataset(data)?;
        let m = self.output_width();
        let n = self.num_weights();
        let rows = data.len() * m;
        let mut jac_t = DMatrix::<f64>::zeros(n, rows);
        let mut residuals = Vec::with_capacity(rows);
        let mut scratch = Scratch::new(&self.layer_sizes);
        for p in 0..data.len() {
            self.forward_into(data.input(p), &mut scratch);
            for k in 0..m {
                residuals.push(data.target(p)[k] - scratch.output()[k]);
                let r = p * m + k;
                let col = &mut jac_t.as_mut_slice()[r * n..(r + 1) * n];
                self.backprop_output(&mut scratch, k, col);
            }
        }
        Ok((residuals, jac_t))
    }

    /// Writes `d(d_k - y_k)/dw` into `out` by reverse accumulation.
    fn backprop_output(&self, scratch: &mut Scratch, k: usize, out: &mut [f64]) {
        let n_layers = self.layer_sizes.len() - 1;
        let Scratch {
            layers,
            delta,
            delta_prev,
        } = scratch;
        let last = &layers[n_layers];
        // d e_k / d a_out = -1 for output k, 0 elsewhere.
        delta.clear();
        delta.extend((0..last.len()).map(|j| {
            if j == k {
                -self.activations[n_layers - 1].derivative_from_output(last[j])
            } else {
                0.0
            }
        }));

        let mut offset = self.weights.len();
        for l in (0..n_layers).rev() {
            let fan_in = self.layer_sizes[l];
            let fan_out = self.layer_sizes[l + 1];
            offset -= (fan_in + 1) * fan_out;
            let prev = &layers[l];
            for (j, &dj) in delta.iter().enumerate() {
                let base = offset + j * (fan_in + 1);
                for (o, x) in out[base..base + fan_in].iter_mut().zip(prev) {
                    *o = dj * x;
                }
                out[base + fan_in] = dj;
            }
            if l > 0 {
                let act = self.activations[l - 1];
                delta_prev.clear();
                delta_prev.extend((0..fan_in).map(|i| {
                    let s: f64 = delta
                        .iter()
                        .enumerate()
                        .map(|(j, dj)| self.weights[offset + j * (fan_in + 1) + i] * dj)
                        .sum();
                    s * act.derivative_from_output(prev[i])
                }));
                std::mem::swap(delta, delta_prev);
            }
        }
    }
}
