//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{fd_jacobian, max_rel_error, median, noisy_quadratic, noisy_sine, random_dataset, sine, small_net, HIDDEN};
use servoneuro::control::{compute_indices, run_closed_loop, AnalyticInverse, ReferenceProfile};
use servoneuro::mlp::init_weights;
use servoneuro::plant::{MotorParams, PlantState};
use servoneuro::training::{
    compute_ed, split_dataset, train_br, train_early_stopping, train_lm, BrConfig,
    EarlyStopConfig, LmConfig, StopReason, TrainReport,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn lm_cfg(epochs: usize) -> LmConfig {
    LmConfig {
        max_epochs: epochs,
        ..LmConfig::default()
    }
}

fn ed_non_increasing(r: &TrainReport) -> bool {
    let mut prev = r.initial_e_d;
    r.records.iter().all(|rec| {
        let ok = rec.e_d <= prev;
        prev = rec.e_d;
        ok
    })
}

fn jacobian() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let net = init_weights(&[5, 10, 1], &HIDDEN, seed, 1.0).unwrap();
        let data = random_dataset(5, 1, 20, 1000 + seed);
        let j = net.error_jacobian(&data).unwrap();
        let rows: Vec<Vec<f64>> = (0..j.nrows())
            .map(|r| (0..j.ncols()).map(|c| j[(r, c)]).collect())
            .collect();
        worst = worst.max(max_rel_error(&rows, &fd_jacobian(&net, &data, 1e-6)));
    }
    check(worst < 1e-6, format!("100 seeds, max relative error {worst:.2e} (< 1e-6)"))
}

fn lm_contract() -> Outcome {
    let mut monotone = true;
    for seed in 0..10 {
        for data in [sine(), noisy_quadratic(seed), noisy_sine(seed)] {
            let (_, r) = train_lm(&small_net(seed), &data, &lm_cfg(200)).unwrap();
            monotone &= ed_non_increasing(&r);
        }
    }
    let (_, r) = train_lm(&small_net(0), &sine(), &lm_cfg(200)).unwrap();
    monotone &= ed_non_increasing(&r);
    let ed = r.last().unwrap().e_d;
    check(
        monotone && ed < 1e-3 && r.records.len() <= 200,
        format!(
            "E_D monotone on 31 runs: {monotone}; sine fixture E_D {ed:.2e} (< 1e-3) after {} epochs",
            r.records.len()
        ),
    )
}

fn br_effect() -> Outcome {
    let (mut ew_lm, mut ew_br) = (Vec::new(), Vec::new());
    let mut gamma_ok = true;
    let br = BrConfig {
        lm: lm_cfg(200),
        ..BrConfig::default()
    };
    for seed in 0..10 {
        let data = noisy_quadratic(seed);
        let net = small_net(seed);
        let n = net.num_weights() as f64;
        let (_, lm) = train_lm(&net, &data, &lm_cfg(200)).unwrap();
        let (_, r) = train_br(&net, &data, &br).unwrap();
        ew_lm.push(lm.last().unwrap().e_w);
        ew_br.push(r.last().unwrap().e_w);
        gamma_ok &= r
            .records
            .iter()
            .all(|rec| rec.gamma.is_some_and(|g| (0.0..=n).contains(&g)));
    }
    let (m_lm, m_br) = (median(ew_lm), median(ew_br));
    check(
        m_br < m_lm && gamma_ok,
        format!("median E_W BR {m_br:.4} < LM {m_lm:.4}; gamma in [0, N] every epoch: {gamma_ok}"),
    )
}

fn early_stopping() -> Outcome {
    let mut snapshot_ok = true;
    let mut early = 0;
    for seed in 0..10 {
        let data = noisy_sine(seed);
        let cfg = EarlyStopConfig {
            split_seed: seed,
            ..EarlyStopConfig::default()
        };
        let (net, r) = train_early_stopping(&small_net(seed), &data, &cfg).unwrap();
        let (_, val) = split_dataset(&data, cfg.validation_fraction, cfg.split_seed).unwrap();
        let returned = compute_ed(&net, &val).unwrap();
        snapshot_ok &= r
            .last()
            .and_then(|rec| rec.val_e_d)
            .is_some_and(|last| returned <= last);
        if r.stop_reason == StopReason::EarlyStop && r.records.len() < cfg.lm.max_epochs {
            early += 1;
        }
    }
    check(
        snapshot_ok && early >= 8,
        format!("returned val E_D <= final on every run: {snapshot_ok}; early stops {early}/10 (>= 8)"),
    )
}

fn harness_soundness() -> Outcome {
    let p = MotorParams {
        noise_sigma: 0.0,
        ..MotorParams::default()
    };
    let profile = ReferenceProfile::default();
    let trace = run_closed_loop(&p, &AnalyticInverse::new(&p), &profile, 0).unwrap();
    let mae = compute_indices(&trace).unwrap().mean_abs_error;
    // Last half of every segment: settled, error exactly zero.
    let mut start = 0;
    let mut settled_exact = true;
    for seg in &profile.segments {
        let tail = start + seg.duration / 2..start + seg.duration;
        settled_exact &= tail.clone().all(|k| trace.r[k] == trace.y[k]);
        start += seg.duration;
    }
    check(
        mae < 0.01 && settled_exact,
        format!("oracle mean |r-y| {mae:.5} V (< 0.01); zero settled error: {settled_exact}"),
    )
}

fn run_compare(out: &Path) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_servoneuro"))
        .args(["compare", "--out", out.to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&o.stderr).into_owned())
    }
}

fn summary_medians(out: &Path) -> Option<[(f64, f64); 2]> {
    let text = std::fs::read_to_string(out.join("comparison_summary.csv")).ok()?;
    let get = |name: &str| -> Option<(f64, f64)> {
        let line = text.lines().find(|l| l.split(',').nth(1) == Some(name))?;
        let cells: Vec<&str> = line.split(',').collect();
        Some((cells[2].parse().ok()?, cells[3].parse().ok()?))
    };
    Some([get("lm")?, get("br")?])
}

fn headline(out: &Path) -> Outcome {
    if let Err(e) = run_compare(out) {
        return check(false, format!("compare failed: {e}"));
    }
    let Some([(mae_lm, eff_lm), (mae_br, eff_br)]) = summary_medians(out) else {
        return check(false, "comparison_summary.csv unreadable".into());
    };
    check(
        mae_br < mae_lm && eff_br <= eff_lm,
        format!(
            "median mean |r-y| BR {mae_br:.4} vs LM {mae_lm:.4} ({}); median mean |u| BR {eff_br:.4} vs LM {eff_lm:.4} ({})",
            if mae_br < mae_lm { "BR lower" } else { "BR not lower" },
            if eff_br <= eff_lm { "BR not higher" } else { "BR higher" },
        ),
    )
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    if let Err(e) = run_compare(second) {
        return check(false, format!("second compare failed: {e}"));
    }
    let mut same = true;
    let mut files = 0;
    for name in ["comparison.csv", "comparison_summary.csv"] {
        let a = std::fs::read(first.join(name));
        let b = std::fs::read(second.join(name));
        same &= matches!((&a, &b), (Ok(a), Ok(b)) if a == b);
        files += 1;
    }
    for entry in std::fs::read_dir(first.join("study")).into_iter().flatten().flatten() {
        let name = entry.file_name();
        same &= std::fs::read(entry.path()).ok() == std::fs::read(second.join("study").join(&name)).ok();
        files += 1;
    }
    check(same && files > 2, format!("{files} files byte-identical across two runs: {same}"))
}

fn plant_properties() -> Outcome {
    let p = MotorParams::default();
    let grid: Vec<f64> = (0..=1000).map(|i| -2.0 + 12.0 * i as f64 / 1000.0).collect();
    let monotone = grid.windows(2).all(|w| p.static_map(w[0]) <= p.static_map(w[1]));
    let flat = grid.iter().all(|&u| {
        if u <= 2.5 {
            p.static_map(u) == 0.0
        } else if u >= 6.5 {
            p.static_map(u) == p.static_map(6.5)
        } else {
            true
        }
    });
    let quiet = MotorParams {
        noise_sigma: 0.0,
        ..p
    };
    let mut responses_ok = true;
    for i in 0..=40 {
        let u = 8.0 * i as f64 / 40.0;
        let target = quiet.steady_state(u);
        let mut s = PlantState::new(0.0, 0);
        let mut prev = 0.0;
        for _ in 0..200 {
            let y = s.step(&quiet, u);
            responses_ok &= y >= prev && y <= target + 1e-12;
            prev = y;
        }
        responses_ok &= (prev - target).abs() < 1e-6;
    }
    check(
        monotone && flat && responses_ok,
        format!("static map monotone: {monotone}; flat outside [2.5, 6.5]: {flat}; 41 step responses monotone and within 1e-6 after 200 samples: {responses_ok}"),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let (first, second) = (dir.path().join("run1"), dir.path().join("run2"));
    type Criterion<'a> = (&'a str, Option<Duration>, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("Jacobian correctness", Some(Duration::from_secs(10)), Box::new(jacobian)),
        ("LM contract", Some(Duration::from_secs(30)), Box::new(lm_contract)),
        ("BR regularization effect", None, Box::new(br_effect)),
        ("Early-stopping contract", None, Box::new(early_stopping)),
        ("Harness soundness", Some(Duration::from_secs(5)), Box::new(harness_soundness)),
        ("LM vs BR ordering", Some(Duration::from_secs(300)), Box::new(|| headline(&first))),
        ("Compare determinism", None, Box::new(|| determinism(&first, &second))),
        ("Plant properties", None, Box::new(plant_properties)),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed < l);
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(" / {} s", l.as_secs()));
        println!(
            "{} [{}] {name}: {} ({:.2} s{budget})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail,
            elapsed.as_secs_f64(),
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
