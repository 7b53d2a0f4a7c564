//! Discrete-time DC servo: a first-order lag driven through a dead-zone /
//! saturation nonlinearity, observed by a noisy tachometer.
//!
//! ```text
//! y(k+1) = a y(k) + (1 - a) gain f(u(k)),     a = exp(-ts / tau)
//! f(u)   = clamp(u, dead_zone, saturation) - dead_zone
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotorParams {
    /// Tachometer volts per effective drive volt at steady state.
    pub gain: f64,
    /// Dominant time constant, seconds.
    pub tau: f64,
    /// Sample period, seconds.
    pub ts: f64,
    pub dead_zone: f64,
    pub saturation: f64,
    /// Standard deviation of the tachometer noise, volts.
    pub noise_sigma: f64,
}

impl Default for MotorParams {
    fn default() -> Self {
        Self {
            gain: 1.0,
            tau: 0.5,
            ts: 0.05,
            dead_zone: 2.5,
            saturation: 6.5,
            noise_sigma: 0.02,
        }
    }
}

impl MotorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !self.gain.is_finite() {
            return bad(format!("plant.gain must be finite, got {}", self.gain));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("plant.tau must be positive, got {}", self.tau));
        }
        if !(self.ts > 0.0 && self.ts < self.tau) {
            return bad(format!(
                "plant.ts must be positive and below tau ({}), got {}",
                self.tau, self.ts
            ));
        }
        if !(self.dead_zone >= 0.0 && self.saturation > self.dead_zone) {
            return bad(format!(
                "plant.saturation ({}) must exceed plant.dead_zone ({}) >= 0",
                self.saturation, self.dead_zone
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "plant.noise_sigma must be non-negative, got {}",
                self.noise_sigma
            ));
        }
        Ok(())
    }

    /// Pole of the discrete lag, `exp(-ts / tau)`.
    pub fn pole(&self) -> f64 {
        (-self.ts / self.tau).exp()
    }

    /// Effective drive after the dead zone and saturation. Negative input is
    /// treated like any input below the dead zone.
    pub fn static_map(&self, u: f64) -> f64 {
        u.clamp(self.dead_zone, self.saturation) - self.dead_zone
    }

    /// Noise-free fixed point of the lag under constant input.
    pub fn steady_state(&self, u: f64) -> f64 {
        self.gain * self.static_map(u)
    }

    /// Output range reachable at steady state, `[0, gain * (sat - dz)]`
    /// (ordered low to high).
    pub fn output_range(&self) -> (f64, f64) {
        let top = self.steady_state(self.saturation);
        (top.min(0.0), top.max(0.0))
    }

    pub fn clamp_input(&self, u: f64) -> f64 {
        u.clamp(self.dead_zone, self.saturation)
    }
}

/// Internal speed plus the noise generator.
#[derive(Debug, Clone)]
pub struct PlantState {
    y: f64,
    rng: ChaCha8Rng,
}

impl PlantState {
    pub fn new(y: f64, seed: u64) -> Self {
        Self::with_rng(y, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(y: f64, rng: ChaCha8Rng) -> Self {
        Self { y, rng }
    }

    /// Noise-free internal output.
    pub fn y(&self) -> f64 {
        self.y
    }

    /// Applies `u` for one sample; returns the measured (noisy) new output.
    pub fn step(&mut self, params: &MotorParams, u: f64) -> f64 {
        let a = params.pole();
        self.y = a * self.y + (1.0 - a) * params.steady_state(u);
        self.measure(params)
    }

    /// Reads the tachometer without advancing the dynamics.
    pub fn measure(&mut self, params: &MotorParams) -> f64 {
        let n: f64 = self.rng.sample(StandardNormal);
        self.y + params.noise_sigma * n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> MotorParams {
        MotorParams {
            noise_sigma: 0.0,
            ..MotorParams::default()
        }
    }

    #[test]
    fn dead_zone_and_saturation() {
        let p = MotorParams::default();
        assert_eq!(p.static_map(2.0), 0.0);
        assert_eq!(p.static_map(2.5), 0.0);
        assert_eq!(p.static_map(-3.0), 0.0);
        assert_eq!(p.static_map(7.0), p.static_map(6.5));
        assert_eq!(p.static_map(4.5), 2.0);
    }

    #[test]
    fn steady_state_examples() {
        let p = MotorParams::default();
        assert_eq!(p.steady_state(2.5), 0.0);
        assert_eq!(p.steady_state(6.5), p.steady_state(8.0));
    }

    #[test]
    fn pole_value() {
        // exp(-0.1)
        assert!((MotorParams::default().pole() - 0.904_837_418_035_959_6).abs() < 1e-15);
    }

    #[test]
    fn dead_zone_input_keeps_motor_still() {
        let p = quiet();
        let mut s = PlantState::new(0.0, 1);
        for _ in 0..500 {
            assert_eq!(s.step(&p, 2.0), 0.0);
        }
    }

    #[test]
    fn constant_input_converges_monotonically() {
        let p = quiet();
        let mut s = PlantState::new(0.0, 1);
        let target = p.gain * (4.5 - 2.5);
        let mut prev = 0.0;
        for _ in 0..200 {
            let y = s.step(&p, 4.5);
            assert!(y >= prev && y <= target + 1e-12);
            prev = y;
        }
        assert!((prev - target).abs() < 1e-6);
        assert!((prev - p.steady_state(4.5)).abs() < 1e-6);
    }

    #[test]
    fn noiseless_measurement_equals_state() {
        let p = quiet();
        let mut s = PlantState::new(0.3, 4);
        let m = s.step(&p, 5.0);
        assert_eq!(m, s.y());
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let p = MotorParams::default();
        let run = |seed| {
            let mut s = PlantState::new(0.0, seed);
            (0..50).map(|_| s.step(&p, 5.0)).collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn validation() {
        assert!(MotorParams::default().validate().is_ok());
        let p = MotorParams {
            saturation: 2.0,
            ..MotorParams::default()
        };
        assert!(p.validate().is_err());
        let p = MotorParams {
            ts: 1.0,
            ..MotorParams::default()
        };
        assert!(p.validate().is_err());
    }
}
