//! Closed-loop evaluation of inverse-model controllers.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::RegressorVector;
use crate::network_file::TrainedNetwork;
use crate::plant::{MotorParams, PlantState};

/// Anything that maps the regressor `[r(k), y(k), y(k-1), u(k-1), u(k-2)]`
/// to a control action `u(k)` in volts.
pub trait Controller {
    fn control(&self, regressor: &RegressorVector) -> Result<f64>;
}

impl Controller for TrainedNetwork {
    fn control(&self, regressor: &RegressorVector) -> Result<f64> {
        Ok(self.predict(&regressor.to_array())?[0])
    }
}

/// Exact inverse of the noise-free first-order plant inside its linear band:
/// the `u` that would take `y(k)` to `r(k)` in one sample.
#[derive(Debug, Clone)]
pub struct AnalyticInverse {
    params: MotorParams,
}

impl AnalyticInverse {
    pub fn new(params: &MotorParams) -> Self {
        Self {
            params: params.clone(),
        }
    }
}

impl Controller for AnalyticInverse {
    fn control(&self, reg: &RegressorVector) -> Result<f64> {
        let p = &self.params;
        let a = p.pole();
        Ok(p.dead_zone + (reg.reference - a * reg.y_now) / ((1.0 - a) * p.gain))
    }
}

/// Ignores its inputs.
#[derive(Debug, Clone, Copy)]
pub struct ConstantController(pub f64);

impl Controller for ConstantController {
    fn control(&self, _: &RegressorVector) -> Result<f64> {
        Ok(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSegment {
    pub level: f64,
    pub duration: usize,
}

/// Piecewise-constant reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferenceProfile {
    pub segments: Vec<ProfileSegment>,
}

impl Default for ReferenceProfile {
    /// Four levels across the default plant's `[0, 4]` V output band, each held
    /// for 50 time constants.
    fn default() -> Self {
        let seg = |level| ProfileSegment {
            level,
            duration: 500,
        };
        Self {
            segments: vec![seg(1.0), seg(2.5), seg(1.5), seg(3.0)],
        }
    }
}

impl ReferenceProfile {
    pub fn new(segments: Vec<ProfileSegment>) -> Result<Self> {
        let p = Self { segments };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidConfig("reference profile is empty".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if s.duration == 0 {
                return Err(Error::InvalidConfig(format!(
                    "reference segment {i} has zero duration"
                )));
            }
            if !s.level.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "reference segment {i} has non-finite level"
                )));
            }
        }
        Ok(())
    }

    /// Checks every level lies inside the plant's reachable output band.
    pub fn check_reachable(&self, params: &MotorParams) -> Result<()> {
        let (lo, hi) = params.output_range();
        match self.segments.iter().find(|s| s.level < lo || s.level > hi) {
            Some(s) => Err(Error::InvalidConfig(format!(
                "reference level {} outside reachable output range [{lo}, {hi}]",
                s.level
            ))),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.level, s.duration))
    }
}

/// Reference, measured output and applied input at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopTrace {
    pub r: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub ts: f64,
}

impl ClosedLoopTrace {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// CSV with header `k,r,y,u`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "r", "y", "u"])?;
        for k in 0..self.len() {
            w.write_record([
                k.to_string(),
                self.r[k].to_string(),
                self.y[k].to_string(),
                self.u[k].to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Runs `controller` against the plant, starting at rest.
///
/// History before the first sample is `y(-1) = y(0)` and
/// `u(-1) = u(-2) = dead_zone`. Every action is clamped to
/// `[dead_zone, saturation]` before it reaches the plant.
pub fn run_closed_loop(
    params: &MotorParams,
    controller: &dyn Controller,
    profile: &ReferenceProfile,
    seed: u64,
) -> Result<ClosedLoopTrace> {
    params.validate()?;
    profile.validate()?;
    let mut plant = PlantState::new(0.0, seed);
    let n = profile.len();
    let mut trace = ClosedLoopTrace {
        r: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        ts: params.ts,
    };
    let mut y_now = plant.y();
    let mut y_prev = y_now;
    let (mut u1, mut u2) = (params.dead_zone, params.dead_zone);
    for (k, r) in profile.samples().enumerate() {
        let reg = RegressorVector {
            reference: r,
            y_now,
            y_prev,
            u_prev1: u1,
            u_prev2: u2,
        };
        let raw = controller.control(&reg)?;
        if !raw.is_finite() {
            return Err(Error::NonFiniteControl {
                sample: k,
                regressor: reg.to_array(),
            });
        }
        let u = params.clamp_input(raw);
        trace.r.push(r);
        trace.y.push(y_now);
        trace.u.push(u);
        let y_next = plant.step(params, u);
        y_prev = y_now;
        y_now = y_next;
        u2 = u1;
        u1 = u;
    }
    Ok(trace)
}

/// Mean absolute tracking error and mean absolute control action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceIndices {
    pub mean_abs_error: f64,
    pub control_effort: f64,
}

pub fn compute_indices(trace: &ClosedLoopTrace) -> Result<PerformanceIndices> {
    if trace.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let t = trace.len() as f64;
    let mae = trace
        .r
        .iter()
        .zip(&trace.y)
        .map(|(r, y)| (r - y).abs())
        .sum::<f64>()
        / t;
    let effort = trace.u.iter().map(|u| u.abs()).sum::<f64>() / t;
    Ok(PerformanceIndices {
        mean_abs_error: mae,
        control_effort: effort,
    })
}

/// Median of a non-empty slice; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 0 {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub controller: String,
    pub seed: u64,
    pub outcome: std::result::Result<PerformanceIndices, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSummary {
    pub controller: String,
    pub median_mean_abs_error: Option<f64>,
    pub median_control_effort: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    /// In the order the controllers were given.
    pub summaries: Vec<ControllerSummary>,
    /// Indices into `summaries`, best median tracking error first; controllers
    /// without any successful run come last.
    pub ranking: Vec<usize>,
}

/// Evaluates every controller on every seed. A failing run is recorded in
/// its row and does not stop the others.
pub fn compare_controllers(
    params: &MotorParams,
    controllers: &[(&str, &dyn Controller)],
    profile: &ReferenceProfile,
    seeds: &[u64],
) -> Result<ComparisonReport> {
    if controllers.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least two controllers to compare, got {}",
            controllers.len()
        )));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("no evaluation seeds given".into()));
    }
    let mut rows = Vec::with_capacity(controllers.len() * seeds.len());
    let mut names: Vec<String> = Vec::with_capacity(controllers.len());
    for (name, ctrl) in controllers {
        // Repeated names get a `#n` suffix so each entry keeps its own summary.
        let mut unique = name.to_string();
        let mut n = 1;
        while names.contains(&unique) {
            n += 1;
            unique = format!("{name}#{n}");
        }
        names.push(unique.clone());
        for &seed in seeds {
            let outcome = run_closed_loop(params, *ctrl, profile, seed)
                .and_then(|t| compute_indices(&t))
                .map_err(|e| e.to_string());
            rows.push(ComparisonRow {
                controller: unique.clone(),
                seed,
                outcome,
            });
        }
    }
    Ok(ComparisonReport::from_rows(rows))
}

impl ComparisonReport {
    /// Aggregates per-run rows; controllers are summarized in order of first
    /// appearance.
    pub fn from_rows(rows: Vec<ComparisonRow>) -> Self {
        let mut names: Vec<&str> = Vec::new();
        for row in &rows {
            if !names.contains(&row.controller.as_str()) {
                names.push(&row.controller);
            }
        }
        let summaries: Vec<ControllerSummary> = names
            .iter()
            .map(|&name| {
                let mut maes = Vec::new();
                let mut efforts = Vec::new();
                let mut failures = 0;
                for row in rows.iter().filter(|r| r.controller == name) {
                    match &row.outcome {
                        Ok(ix) => {
                            maes.push(ix.mean_abs_error);
                            efforts.push(ix.control_effort);
                        }
                        Err(_) => failures += 1,
                    }
                }
                ControllerSummary {
                    controller: name.to_string(),
                    median_mean_abs_error: median(&maes),
                    median_control_effort: median(&efforts),
                    failures,
                }
            })
            .collect();
        let mut ranking: Vec<usize> = (0..summaries.len()).collect();
        ranking.sort_by(|&a, &b| {
            let key = |i: usize| summaries[i].median_mean_abs_error.unwrap_or(f64::INFINITY);
            key(a).total_cmp(&key(b))
        });
        Self {
            rows,
            summaries,
            ranking,
        }
    }

    /// Per-run rows: `controller,seed,mean_abs_error,control_effort,error`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["controller", "seed", "mean_abs_error", "control_effort", "error"])?;
        for row in &self.rows {
            let (mae, effort, err) = match &row.outcome {
                Ok(ix) => (
                    ix.mean_abs_error.to_string(),
                    ix.control_effort.to_string(),
                    String::new(),
                ),
                Err(e) => (String::new(), String::new(), e.clone()),
            };
            w.write_record([row.controller.clone(), row.seed.to_string(), mae, effort, err])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// `rank,controller,median_mean_abs_error,median_control_effort,failures`.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "rank",
            "controller",
            "median_mean_abs_error",
            "median_control_effort",
            "failures",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (rank, &i) in self.ranking.iter().enumerate() {
            let s = &self.summaries[i];
            w.write_record([
                (rank + 1).to_string(),
                s.controller.clone(),
                opt(s.median_mean_abs_error),
                opt(s.median_control_effort),
                s.failures.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn summary(&self, controller: &str) -> Option<&ControllerSummary> {
        self.summaries.iter().find(|s| s.controller == controller)
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .summaries
            .iter()
            .map(|s| s.controller.len())
            .max()
            .unwrap_or(0)
            .max("controller".len());
        writeln!(
            f,
            "{:>4}  {:<width$}  {:>16}  {:>16}  {:>8}",
            "rank", "controller", "median |r-y| [V]", "median |u| [V]", "failures"
        )?;
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
        for (rank, &i) in self.ranking.iter().enumerate() {
            let s = &self.summaries[i];
            writeln!(
                f,
                "{:>4}  {:<width$}  {:>16}  {:>16}  {:>8}",
                rank + 1,
                s.controller,
                cell(s.median_mean_abs_error),
                cell(s.median_control_effort),
                s.failures
            )?;
        }
        Ok(())
    }
}
