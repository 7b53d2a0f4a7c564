//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use servoneuro::mlp::{init_weights, ActivationKind, MlpNetwork};
use servoneuro::training::Dataset;

pub const HIDDEN: [ActivationKind; 2] = [ActivationKind::TanhSigmoid, ActivationKind::Linear];

/// `[1, 10, 1]` tanh/linear network with weights from `U[-0.5, 0.5]`.
pub fn small_net(seed: u64) -> MlpNetwork {
    init_weights(&[1, 10, 1], &HIDDEN, seed, 0.5).unwrap()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn dataset(xs: &[f64], f: impl Fn(f64) -> f64, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = xs.iter().map(|&x| vec![x]).collect();
    let targets = xs
        .iter()
        .map(|&x| {
            let n: f64 = StandardNormal.sample(&mut rng);
            vec![f(x) + noise * n]
        })
        .collect();
    Dataset::unscaled(inputs, targets).unwrap()
}

/// `sin(x)` at 50 evenly spaced points on `[-pi, pi]`, noise-free.
pub fn sine() -> Dataset {
    let xs = linspace(-std::f64::consts::PI, std::f64::consts::PI, 50);
    dataset(&xs, f64::sin, 0.0, 0)
}

/// `x^2` at 40 evenly spaced points on `[-1, 1]` plus `N(0, 0.1^2)` noise.
pub fn noisy_quadratic(seed: u64) -> Dataset {
    dataset(&linspace(-1.0, 1.0, 40), |x| x * x, 0.1, seed)
}

/// `sin(x)` at 40 evenly spaced points on `[-pi, pi]` plus `N(0, 0.1^2)` noise.
pub fn noisy_sine(seed: u64) -> Dataset {
    let xs = linspace(-std::f64::consts::PI, std::f64::consts::PI, 40);
    dataset(&xs, f64::sin, 0.1, seed)
}

/// Random dataset with inputs and targets from `U[-1, 1]`.
pub fn random_dataset(inputs: usize, outputs: usize, patterns: usize, seed: u64) -> Dataset {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row = |n: usize| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    let x = (0..patterns).map(|_| row(inputs)).collect();
    let d = (0..patterns).map(|_| row(outputs)).collect();
    Dataset::unscaled(x, d).unwrap()
}

/// Central-difference Jacobian of the residuals `d - y`, row-major `P*M x N`.
pub fn fd_jacobian(net: &MlpNetwork, data: &Dataset, h: f64) -> Vec<Vec<f64>> {
    let w0 = net.flatten();
    let n = w0.len();
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let mut plus = w0.clone();
        plus[i] += h;
        let mut minus = w0.clone();
        minus[i] -= h;
        let rp = net_with(net, plus).residuals(data).unwrap();
        let rm = net_with(net, minus).residuals(data).unwrap();
        cols.push(
            rp.iter()
                .zip(&rm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let rows = cols[0].len();
    (0..rows).map(|r| (0..n).map(|i| cols[i][r]).collect()).collect()
}

pub fn net_with(net: &MlpNetwork, weights: Vec<f64>) -> MlpNetwork {
    MlpNetwork::unflatten(net.layer_sizes(), net.activations(), weights).unwrap()
}

/// Largest element-wise discrepancy, relative to `max(|a|, |b|, 1)`.
pub fn max_rel_error(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}
