mod common;

use proptest::prelude::*;
use servoneuro::control::{
    compute_indices, run_closed_loop, ClosedLoopTrace, Controller, ProfileSegment, ReferenceProfile,
};
use servoneuro::experiment::{run_step_experiment, StepExperimentConfig};
use servoneuro::mlp::{weight_count, ActivationKind, MlpNetwork, RegressorVector};
use servoneuro::network_file::TrainedNetwork;
use servoneuro::plant::{MotorParams, PlantState};
use servoneuro::scaling::{Affine, Scaling};
use servoneuro::training::{split_dataset, Dataset};

fn activation() -> impl Strategy<Value = ActivationKind> {
    prop_oneof![Just(ActivationKind::TanhSigmoid), Just(ActivationKind::Linear)]
}

fn network() -> impl Strategy<Value = MlpNetwork> {
    prop::collection::vec(1usize..6, 2..5)
        .prop_flat_map(|sizes| {
            let n = weight_count(&sizes);
            let acts = prop::collection::vec(activation(), sizes.len() - 1);
            (Just(sizes), acts, prop::collection::vec(-1e3f64..1e3, n))
        })
        .prop_map(|(sizes, acts, w)| MlpNetwork::unflatten(&sizes, &acts, w).unwrap())
}

fn motor() -> impl Strategy<Value = MotorParams> {
    (0.2f64..3.0, 0.1f64..2.0, 0.0f64..3.0, 0.5f64..5.0).prop_map(|(gain, tau, dz, band)| {
        MotorParams {
            gain,
            tau,
            ts: tau / 10.0,
            dead_zone: dz,
            saturation: dz + band,
            noise_sigma: 0.0,
        }
    })
}

/// Affine controller with arbitrary coefficients; it may command anything.
struct Affine5([f64; 6]);

impl Controller for Affine5 {
    fn control(&self, reg: &RegressorVector) -> servoneuro::Result<f64> {
        let x = reg.to_array();
        Ok(self.0[5] + x.iter().zip(&self.0).map(|(a, b)| a * b).sum::<f64>())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn flatten_unflatten_round_trips(net in network()) {
        let back = MlpNetwork::unflatten(net.layer_sizes(), net.activations(), net.flatten()).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(net.num_weights(), weight_count(net.layer_sizes()));
        let mut short = net.flatten();
        short.pop();
        prop_assert!(MlpNetwork::unflatten(net.layer_sizes(), net.activations(), short).is_err());
    }

    #[test]
    fn network_file_round_trips_bit_exactly(net in network()) {
        let m = *net.layer_sizes().last().unwrap();
        let n = net.layer_sizes()[0];
        let scaling = Scaling {
            inputs: (0..n).map(|i| Affine::new(i as f64 * 0.37, 1.0 / (i as f64 + 3.0)).unwrap()).collect(),
            targets: (0..m).map(|_| Affine::new(4.5, 0.5).unwrap()).collect(),
        };
        let t = TrainedNetwork::new(net, scaling).unwrap();
        let back = TrainedNetwork::read(t.to_text().as_bytes()).unwrap();
        let bits = |t: &TrainedNetwork| t.network.weights().iter().map(|w| w.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&t));
        prop_assert_eq!(back, t);
    }

    #[test]
    fn static_map_is_monotone_and_flat_outside_band(p in motor(), a in -10.0f64..15.0, b in -10.0f64..15.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p.static_map(lo) <= p.static_map(hi));
        if hi <= p.dead_zone {
            prop_assert_eq!(p.static_map(hi), 0.0);
        }
        if lo >= p.saturation {
            prop_assert_eq!(p.static_map(lo), p.static_map(p.saturation));
        }
    }

    #[test]
    fn noiseless_step_response_is_monotone_and_bounded(p in motor(), u in -1.0f64..10.0, y0 in 0.0f64..4.0) {
        let target = p.steady_state(u);
        let mut state = PlantState::new(y0, 0);
        let mut prev = y0;
        let rising = target >= y0;
        for _ in 0..200 {
            let y = state.step(&p, u);
            if rising {
                prop_assert!(y >= prev - 1e-12 && y <= target + 1e-12);
            } else {
                prop_assert!(y <= prev + 1e-12 && y >= target - 1e-12);
            }
            prev = y;
        }
    }

    #[test]
    fn closed_loop_actions_stay_in_band(
        coef in prop::array::uniform6(-50.0f64..50.0),
        levels in prop::collection::vec((0.0f64..4.0, 1usize..60), 1..5),
        seed in any::<u64>(),
    ) {
        let params = MotorParams::default();
        let profile = ReferenceProfile::new(
            levels.into_iter().map(|(level, duration)| ProfileSegment { level, duration }).collect(),
        ).unwrap();
        let trace = run_closed_loop(&params, &Affine5(coef), &profile, seed).unwrap();
        prop_assert_eq!(trace.len(), profile.len());
        for &u in &trace.u {
            prop_assert!((params.dead_zone..=params.saturation).contains(&u));
        }
    }

    #[test]
    fn indices_ignore_time_order(rows in prop::collection::vec((0.0f64..5.0, -1.0f64..5.0, 2.5f64..6.5), 1..200)) {
        let trace = ClosedLoopTrace {
            r: rows.iter().map(|x| x.0).collect(),
            y: rows.iter().map(|x| x.1).collect(),
            u: rows.iter().map(|x| x.2).collect(),
            ts: 0.05,
        };
        let reversed = ClosedLoopTrace {
            r: trace.r.iter().rev().copied().collect(),
            y: trace.y.iter().rev().copied().collect(),
            u: trace.u.iter().rev().copied().collect(),
            ts: 0.05,
        };
        let a = compute_indices(&trace).unwrap();
        let b = compute_indices(&reversed).unwrap();
        prop_assert!((a.mean_abs_error - b.mean_abs_error).abs() <= 1e-12 * (1.0 + a.mean_abs_error));
        prop_assert!((a.control_effort - b.control_effort).abs() <= 1e-12 * (1.0 + a.control_effort));
        prop_assert!(a.mean_abs_error >= 0.0 && a.control_effort >= 0.0);
    }

    #[test]
    fn split_partitions_the_patterns(p in 2usize..80, fraction in 0.05f64..0.95, seed in any::<u64>()) {
        let data = Dataset::unscaled(
            (0..p).map(|i| vec![i as f64]).collect(),
            (0..p).map(|i| vec![-(i as f64)]).collect(),
        ).unwrap();
        match split_dataset(&data, fraction, seed) {
            Ok((train, val)) => {
                prop_assert!(!train.is_empty() && !val.is_empty());
                let mut seen: Vec<f64> = (0..train.len()).map(|i| train.input(i)[0])
                    .chain((0..val.len()).map(|i| val.input(i)[0]))
                    .collect();
                seen.sort_by(f64::total_cmp);
                prop_assert_eq!(seen, (0..p).map(|i| i as f64).collect::<Vec<_>>());
                for i in 0..val.len() {
                    prop_assert_eq!(val.target(i)[0], -val.input(i)[0]);
                }
            }
            Err(_) => {
                let n_val = (fraction * p as f64).round() as usize;
                prop_assert!(n_val == 0 || n_val == p);
            }
        }
    }

    #[test]
    fn affine_scaling_inverts(lo in -100.0f64..100.0, width in 1e-3f64..100.0, x in -200.0f64..200.0) {
        let a = Affine::to_unit_interval(lo, lo + width);
        prop_assert!((a.apply(lo) + 1.0).abs() < 1e-9);
        prop_assert!((a.apply(lo + width) - 1.0).abs() < 1e-9);
        prop_assert!((a.invert(a.apply(x)) - x).abs() <= 1e-9 * (1.0 + x.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn step_experiment_is_seed_deterministic(seed in any::<u64>(), steps in 1usize..6) {
        let cfg = StepExperimentConfig { num_steps: steps, dwell_samples: 30, seed, ..Default::default() };
        let params = MotorParams::default();
        let a = run_step_experiment(&params, &cfg).unwrap();
        let b = run_step_experiment(&params, &cfg).unwrap();
        prop_assert_eq!(a.len(), steps * 30);
        prop_assert!(a.u.iter().all(|u| (2.5..=6.5).contains(u)));
        prop_assert_eq!(a, b);
    }
}
