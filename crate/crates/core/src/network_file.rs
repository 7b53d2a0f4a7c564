//! Trained network plus scaling, and its portable text format.
//!
//! ```text
//! servoneuro-network 1
//! layer_sizes 5 10 1
//! activations tanh linear
//! input_scaling <offset> <gain>      # one line per input column
//! target_scaling <offset> <gain>     # one line per output
//! weights 71
//! <w_0>
//! ...
//! ```
//!
//! Reals are written in shortest round-trip exponent form, so a file read
//! back yields bit-identical weights.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mlp::{ActivationKind, MlpNetwork};
use crate::scaling::{Affine, Scaling};

const MAGIC: &str = "servoneuro-network";
const VERSION: u32 = 1;

/// A network together with the raw-volts <-> network-range maps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedNetwork {
    pub network: MlpNetwork,
    pub scaling: Scaling,
}

impl TrainedNetwork {
    pub fn new(network: MlpNetwork, scaling: Scaling) -> Result<Self> {
        if scaling.inputs.len() != network.input_width()
            || scaling.targets.len() != network.output_width()
        {
            return Err(Error::DimensionMismatch {
                expected: network.input_width() + network.output_width(),
                actual: scaling.inputs.len() + scaling.targets.len(),
            });
        }
        Ok(Self { network, scaling })
    }

    /// Raw regressor in, raw (de-scaled) output out.
    pub fn predict(&self, raw_input: &[f64]) -> Result<Vec<f64>> {
        if raw_input.len() != self.network.input_width() {
            return Err(Error::DimensionMismatch {
                expected: self.network.input_width(),
                actual: raw_input.len(),
            });
        }
        let scaled = self.scaling.scale_input(raw_input);
        let out = self.network.evaluate(&scaled)?;
        Ok(self.scaling.unscale_target(&out))
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let net = &self.network;
        writeln!(out, "{MAGIC} {VERSION}")?;
        let sizes: Vec<String> = net.layer_sizes().iter().map(usize::to_string).collect();
        writeln!(out, "layer_sizes {}", sizes.join(" "))?;
        let acts: Vec<&str> = net.activations().iter().map(|a| a.name()).collect();
        writeln!(out, "activations {}", acts.join(" "))?;
        for a in &self.scaling.inputs {
            writeln!(out, "input_scaling {:e} {:e}", a.offset, a.gain)?;
        }
        for a in &self.scaling.targets {
            writeln!(out, "target_scaling {:e} {:e}", a.offset, a.gain)?;
        }
        writeln!(out, "weights {}", net.num_weights())?;
        for w in net.weights() {
            writeln!(out, "{w:e}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let mut next_line = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(s))) => Ok((n, s)),
                Some((n, Err(e))) => Err(Error::parse("network file", format!("line {n}: {e}"))),
                None => Err(Error::parse(
                    "network file",
                    format!("unexpected end of file, expected {what}"),
                )),
            }
        };
        let err = |n: usize, msg: String| Error::parse("network file", format!("line {n}: {msg}"));
        let num = |n: usize, s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| err(n, format!("`{s}` is not a number")))
        };

        let (n, header) = next_line("header")?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(err(n, format!("missing `{MAGIC}` header")));
        }
        match parts.next().map(str::parse::<u32>) {
            Some(Ok(VERSION)) => {}
            other => return Err(err(n, format!("unsupported version {other:?}"))),
        }

        let (n, line) = next_line("layer_sizes")?;
        let rest = line
            .strip_prefix("layer_sizes")
            .ok_or_else(|| err(n, "expected `layer_sizes`".into()))?;
        let layer_sizes = rest
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|_| err(n, format!("bad layer size `{s}`"))))
            .collect::<Result<Vec<_>>>()?;

        let (n, line) = next_line("activations")?;
        let rest = line
            .strip_prefix("activations")
            .ok_or_else(|| err(n, "expected `activations`".into()))?;
        let activations = rest
            .split_whitespace()
            .map(|s| ActivationKind::from_name(s).ok_or_else(|| err(n, format!("unknown activation `{s}`"))))
            .collect::<Result<Vec<_>>>()?;

        if layer_sizes.len() < 2 {
            return Err(Error::InvalidArchitecture(format!(
                "network file declares {} layer(s)",
                layer_sizes.len()
            )));
        }
        let mut read_affine = |key: &str| -> Result<Affine> {
            let (n, line) = next_line(key)?;
            let rest = line
                .strip_prefix(key)
                .ok_or_else(|| err(n, format!("expected `{key}`")))?;
            let vals: Vec<&str> = rest.split_whitespace().collect();
            if vals.len() != 2 {
                return Err(err(n, format!("`{key}` needs offset and gain")));
            }
            Affine::new(num(n, vals[0])?, num(n, vals[1])?)
        };
        let inputs = (0..layer_sizes[0])
            .map(|_| read_affine("input_scaling"))
            .collect::<Result<Vec<_>>>()?;
        let targets = (0..*layer_sizes.last().unwrap())
            .map(|_| read_affine("target_scaling"))
            .collect::<Result<Vec<_>>>()?;

        let (n, line) = next_line("weights")?;
        let count: usize = line
            .strip_prefix("weights")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| err(n, "expected `weights <count>`".into()))?;
        let mut weights = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = next_line("weight value")?;
            weights.push(num(n, line.trim())?);
        }
        if let Ok((n, _)) = next_line("") {
            return Err(err(n, "trailing content after weights".into()));
        }
        let network = MlpNetwork::unflatten(&layer_sizes, &activations, weights)?;
        Self::new(network, Scaling { inputs, targets })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
