use std::path::{Path, PathBuf};

use super::config::WorkbenchConfig;
use super::svg::{Chart, Series};
use super::{Failure, EXIT_NUMERIC, EXIT_USAGE};
use crate::control::{
    compare_controllers, compute_indices, run_closed_loop, AnalyticInverse, ComparisonReport,
    Controller, PerformanceIndices,
};
use crate::error::{Error, Result};
use crate::experiment::{run_step_experiment, IoLog};
use crate::network_file::TrainedNetwork;
use crate::pipeline::{lm_vs_br_study, train_inverse_controller, TrainerKind};
use crate::plant::MotorParams;
use crate::training::TrainReport;

pub(super) struct Context {
    pub cfg: WorkbenchConfig,
    pub svg: bool,
}

impl Context {
    fn out(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    fn ensure_out_dir(&self) -> Result<()> {
        let dir = &self.cfg.output_dir;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
    }
}

/// Renders into memory, then writes the file in one go.
fn write_with(path: &Path, render: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    render(&mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn range(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn times(n: usize, ts: f64) -> Vec<f64> {
    (0..n).map(|k| k as f64 * ts).collect()
}

pub(super) fn collect(ctx: &Context) -> std::result::Result<(), Failure> {
    let cfg = &ctx.cfg;
    let log = run_step_experiment(&cfg.plant, &cfg.experiment)?;
    ctx.ensure_out_dir()?;
    let path = ctx.out("iolog.csv");
    write_with(&path, |buf| log.write_csv(buf))?;
    let (u_lo, u_hi) = range(&log.u);
    let (y_lo, y_hi) = range(&log.y);
    println!("wrote {} ({} samples)", path.display(), log.len());
    println!("u range [{u_lo:.4}, {u_hi:.4}] V");
    println!("y range [{y_lo:.4}, {y_hi:.4}] V");
    if ctx.svg {
        let t = times(log.len(), log.ts);
        let chart = Chart {
            title: "Open-loop step experiment",
            x_label: "time [s]",
            y_label: "volts",
            series: vec![
                Series { label: "u", x: &t, y: &log.u },
                Series { label: "y", x: &t, y: &log.y },
            ],
        };
        write_text(&ctx.out("iolog.svg"), &chart.render())?;
    }
    Ok(())
}

fn write_report(ctx: &Context, report: &TrainReport, path: &Path) -> Result<()> {
    write_with(path, |buf| report.write_csv(buf))?;
    if ctx.svg {
        let epochs: Vec<f64> = report.records.iter().map(|r| r.epoch as f64).collect();
        let ed: Vec<f64> = report.records.iter().map(|r| r.e_d.log10()).collect();
        let val: Vec<f64> = report
            .records
            .iter()
            .map(|r| r.val_e_d.map_or(f64::NAN, f64::log10))
            .collect();
        let mut series = vec![Series { label: "log10 E_D", x: &epochs, y: &ed }];
        if report.records.iter().any(|r| r.val_e_d.is_some()) {
            series.push(Series { label: "log10 val E_D", x: &epochs, y: &val });
        }
        let chart = Chart {
            title: "Training error",
            x_label: "epoch",
            y_label: "log10 E_D",
            series,
        };
        write_text(&path.with_extension("svg"), &chart.render())?;
    }
    Ok(())
}

pub(super) fn train(
    ctx: &Context,
    log_path: Option<PathBuf>,
    kind: Option<TrainerKind>,
) -> std::result::Result<(), Failure> {
    let cfg = &ctx.cfg;
    let log_path = log_path.unwrap_or_else(|| ctx.out("iolog.csv"));
    let file = std::fs::File::open(&log_path).map_err(|e| {
        Failure::new(EXIT_USAGE, format!("cannot read {}: {e}", log_path.display()))
    })?;
    let log = IoLog::read_csv(file, cfg.plant.ts)?;
    let kind = kind.unwrap_or(cfg.trainer.kind);
    ctx.ensure_out_dir()?;
    let report_path = ctx.out("train_report.csv");
    let seed = cfg.experiment.seed;
    match train_inverse_controller(&log, &cfg.network, &cfg.trainer, kind, seed) {
        Ok((trained, report)) => {
            let net_path = ctx.out("controller.net");
            trained.save(&net_path)?;
            write_report(ctx, &report, &report_path)?;
            let (e_d, e_w) = report
                .last()
                .map_or((report.initial_e_d, report.initial_e_w), |r| (r.e_d, r.e_w));
            println!("trainer {} ({} epochs)", kind.name(), report.records.len());
            println!("final E_D {e_d:.6e}");
            println!("final E_W {e_w:.6e}");
            println!("stop reason {}", report.stop_reason);
            println!("wrote {} and {}", net_path.display(), report_path.display());
            Ok(())
        }
        Err(Error::TrainingDiverged { reason, report }) => {
            write_report(ctx, &report, &report_path)?;
            Err(Failure::new(
                EXIT_NUMERIC,
                format!(
                    "training diverged after {} epochs: {reason} (partial report in {})",
                    report.records.len(),
                    report_path.display()
                ),
            ))
        }
        Err(e) => Err(e.into()),
    }
}

fn load_network(path: &Path) -> std::result::Result<TrainedNetwork, Failure> {
    TrainedNetwork::load(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot load network {}: {e}", path.display())))
}

pub(super) fn control(
    ctx: &Context,
    network: Option<PathBuf>,
    oracle: bool,
) -> std::result::Result<(), Failure> {
    let cfg = &ctx.cfg;
    let profile = &cfg.evaluation.profile;
    let (plant, controller): (MotorParams, Box<dyn Controller>) = if oracle {
        let quiet = MotorParams {
            noise_sigma: 0.0,
            ..cfg.plant.clone()
        };
        let inverse = AnalyticInverse::new(&quiet);
        (quiet, Box::new(inverse))
    } else {
        let path = network.unwrap_or_else(|| ctx.out("controller.net"));
        let net = load_network(&path)?;
        let (inputs, outputs) = (net.network.input_width(), net.network.output_width());
        if inputs != 5 || outputs != 1 {
            return Err(Failure::new(
                EXIT_USAGE,
                format!(
                    "{} has {inputs} inputs and {outputs} outputs; a controller needs 5 and 1",
                    path.display()
                ),
            ));
        }
        (cfg.plant.clone(), Box::new(net))
    };
    profile.check_reachable(&plant)?;
    ctx.ensure_out_dir()?;
    let mut rows: Vec<(u64, PerformanceIndices)> = Vec::new();
    for &seed in &cfg.evaluation.seeds {
        let trace = run_closed_loop(&plant, controller.as_ref(), profile, seed)?;
        let ix = compute_indices(&trace)?;
        write_with(&ctx.out(&format!("trace_{seed}.csv")), |buf| trace.write_csv(buf))?;
        if ctx.svg {
            let t = times(trace.len(), trace.ts);
            let chart = Chart {
                title: &format!("Closed loop, seed {seed}"),
                x_label: "time [s]",
                y_label: "volts",
                series: vec![
                    Series { label: "r", x: &t, y: &trace.r },
                    Series { label: "y", x: &t, y: &trace.y },
                    Series { label: "u", x: &t, y: &trace.u },
                ],
            };
            write_text(&ctx.out(&format!("trace_{seed}.svg")), &chart.render())?;
        }
        println!(
            "seed {seed}: mean |r-y| {:.6} V, mean |u| {:.6} V",
            ix.mean_abs_error, ix.control_effort
        );
        rows.push((seed, ix));
    }
    let path = ctx.out("indices.csv");
    write_with(&path, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["seed", "mean_abs_error", "control_effort"])?;
        for (seed, ix) in &rows {
            w.write_record([
                seed.to_string(),
                ix.mean_abs_error.to_string(),
                ix.control_effort.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    })?;
    println!("wrote {}", path.display());
    if oracle {
        let tol = cfg.evaluation.oracle_tolerance;
        let worst = rows.iter().map(|(_, ix)| ix.mean_abs_error).fold(0.0, f64::max);
        if worst < tol {
            println!("oracle self-test passed: worst mean |r-y| {worst:.6} < {tol}");
        } else {
            return Err(Failure::new(
                EXIT_NUMERIC,
                format!("oracle self-test failed: worst mean |r-y| {worst:.6} >= {tol}"),
            ));
        }
    }
    Ok(())
}

fn write_comparison(ctx: &Context, report: &ComparisonReport) -> Result<()> {
    let rows_path = ctx.out("comparison.csv");
    let summary_path = ctx.out("comparison_summary.csv");
    write_with(&rows_path, |buf| report.write_csv(buf))?;
    write_with(&summary_path, |buf| report.write_summary_csv(buf))?;
    if ctx.svg {
        let data: Vec<(String, Vec<f64>, Vec<f64>)> = report
            .summaries
            .iter()
            .map(|s| {
                let (x, y) = report
                    .rows
                    .iter()
                    .filter(|r| r.controller == s.controller)
                    .map(|r| {
                        let mae = r.outcome.as_ref().map_or(f64::NAN, |ix| ix.mean_abs_error);
                        (r.seed as f64, mae)
                    })
                    .unzip();
                (s.controller.clone(), x, y)
            })
            .collect();
        let chart = Chart {
            title: "Mean absolute tracking error per seed",
            x_label: "seed",
            y_label: "mean |r-y| [V]",
            series: data
                .iter()
                .map(|(label, x, y)| Series { label, x, y })
                .collect(),
        };
        write_text(&ctx.out("comparison.svg"), &chart.render())?;
    }
    print!("{report}");
    println!("wrote {} and {}", rows_path.display(), summary_path.display());
    Ok(())
}

pub(super) fn compare(ctx: &Context, networks: &[PathBuf]) -> std::result::Result<(), Failure> {
    let cfg = &ctx.cfg;
    match networks.len() {
        0 => study(ctx),
        1 => Err(Failure::new(
            EXIT_USAGE,
            "need at least two networks to compare (or none for the full LM/BR study)",
        )),
        _ => {
            let mut loaded = Vec::new();
            let mut unreadable = Vec::new();
            for path in networks {
                match TrainedNetwork::load(path) {
                    Ok(net) => loaded.push((path, net)),
                    Err(e) => unreadable.push(format!("{}: {e}", path.display())),
                }
            }
            if !unreadable.is_empty() {
                return Err(Failure::new(
                    EXIT_USAGE,
                    format!("cannot load network(s):\n  {}", unreadable.join("\n  ")),
                ));
            }
            let names: Vec<String> = loaded
                .iter()
                .map(|(path, _)| {
                    path.file_stem()
                        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into())
                })
                .collect();
            let controllers: Vec<(&str, &dyn Controller)> = names
                .iter()
                .zip(&loaded)
                .map(|(name, (_, net))| (name.as_str(), net as &dyn Controller))
                .collect();
            cfg.evaluation.profile.check_reachable(&cfg.plant)?;
            let report = compare_controllers(
                &cfg.plant,
                &controllers,
                &cfg.evaluation.profile,
                &cfg.evaluation.seeds,
            )?;
            ctx.ensure_out_dir()?;
            write_comparison(ctx, &report)?;
            Ok(())
        }
    }
}

/// The zero-argument `compare`: one LM/BR pair per evaluation seed `s`, with
/// pair seed `experiment.seed + s`.
fn study(ctx: &Context) -> std::result::Result<(), Failure> {
    let cfg = &ctx.cfg;
    cfg.evaluation.profile.check_reachable(&cfg.plant)?;
    let seeds: Vec<u64> = cfg
        .evaluation
        .seeds
        .iter()
        .map(|s| cfg.experiment.seed.wrapping_add(*s))
        .collect();
    eprintln!(
        "running LM/BR study over {} seeds ({} epochs per trainer)",
        seeds.len(),
        cfg.trainer.lm.max_epochs.max(cfg.trainer.br.lm.max_epochs)
    );
    let (runs, report) = lm_vs_br_study(
        &cfg.plant,
        &cfg.experiment,
        &cfg.network,
        &cfg.trainer,
        &cfg.evaluation.profile,
        &seeds,
    )?;
    ctx.ensure_out_dir()?;
    let dir = ctx.out("study");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for run in &runs {
        for (name, (net, report)) in [("lm", &run.lm), ("br", &run.br)] {
            net.save(&dir.join(format!("{name}_{}.net", run.seed)))?;
            let path = dir.join(format!("{name}_{}_report.csv", run.seed));
            write_with(&path, |buf| report.write_csv(buf))?;
        }
    }
    write_comparison(ctx, &report)?;
    Ok(())
}
