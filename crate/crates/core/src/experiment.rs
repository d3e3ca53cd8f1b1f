//! Experiment configuration, scenario generation and the replication sweep.
//!
//! A run builds one scenario from the master seed, solves it offline,
//! simulates `replications` independent episodes in parallel and reduces
//! them into a regret report. Artifacts written by [`write_artifacts`]:
//!
//! | file           | contents                                          |
//! |----------------|---------------------------------------------------|
//! | `episode.csv`  | per-slot record of replication 0                  |
//! | `regret.csv`   | per-slot ensemble regret and price statistics     |
//! | `summary.json` | constants, fitted slopes, log bound, checks       |

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, AnalysisConfig, GapEstimator, RegretReport};
use crate::error::{Error, Result};
use crate::model::{DemandProfile, Population, Scenario, UserParams};
use crate::offline::{self, OfflineSolution};
use crate::online::{self, LambdaInit, OnlineConfig, Trajectory};
use crate::rng;

/// Price tracking: median relative error bound and the first slot it applies to.
pub const TRACKING_TOLERANCE: f64 = 0.05;
pub const TRACKING_FROM: usize = 50;
/// Accepted range for fitted log–log decay slopes.
pub const DECAY_SLOPE_RANGE: (f64, f64) = (-1.3, -0.7);
/// First slot of the squared-bias < variance comparison.
pub const BIAS_VARIANCE_FROM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExperimentKind {
    Baseline,
    ParamSet2,
    /// A fraction of slots share a single demand value.
    RepeatedDt(f64),
    /// Demand held constant over consecutive blocks of this length.
    BlockedDt(usize),
}

impl ExperimentKind {
    /// The four demand-pattern families at their reference settings.
    pub fn sweep_grid() -> Vec<Self> {
        vec![
            Self::Baseline,
            Self::ParamSet2,
            Self::RepeatedDt(0.2),
            Self::RepeatedDt(0.3),
            Self::RepeatedDt(0.4),
            Self::BlockedDt(4),
        ]
    }

    /// Directory-safe name.
    pub fn slug(&self) -> String {
        self.to_string().replace(':', "-")
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Baseline => f.write_str("baseline"),
            Self::ParamSet2 => f.write_str("paramset2"),
            Self::RepeatedDt(p) => write!(f, "repeated-dt:{p}"),
            Self::BlockedDt(b) => write!(f, "blocked-dt:{b}"),
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown experiment kind {s:?}"));
        match s.split_once(':') {
            None => match s {
                "baseline" => Ok(Self::Baseline),
                "paramset2" => Ok(Self::ParamSet2),
                _ => Err(bad()),
            },
            Some(("repeated-dt", p)) => {
                let p: f64 = p.parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Config(format!(
                        "repeated-dt fraction must be in [0, 1], got {p}"
                    )));
                }
                Ok(Self::RepeatedDt(p))
            }
            Some(("blocked-dt", b)) => {
                let b: usize = b.parse().map_err(|_| bad())?;
                if b == 0 {
                    return Err(Error::Config("blocked-dt block length must be >= 1".into()));
                }
                Ok(Self::BlockedDt(b))
            }
            Some(_) => Err(bad()),
        }
    }
}

impl Serialize for ExperimentKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExperimentKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Flat experiment description; every key is optional in the TOML text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub users: usize,
    pub horizon: usize,
    pub alpha_i_min: f64,
    pub alpha_i_max: f64,
    pub beta_i_min: f64,
    pub beta_i_max: f64,
    pub d_min: f64,
    pub d_max: f64,
    /// Revenue price is `revenue_c · max_t d_t`.
    pub revenue_c: f64,
    pub noise_sd: f64,
    pub ridge: f64,
    pub replications: usize,
    #[serde(with = "seed_repr")]
    pub seed: u64,
    pub coupled_noise: bool,
    pub gap_estimator: GapEstimator,
    /// Committed capacity; `Y*` of the generated scenario when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_capacity: Option<f64>,
    /// Slot-1 price; uniform on `[0, 2α/N]` per replication when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_init: Option<f64>,
    pub log_bound_t0: usize,
    pub log_bound_ratio_cap: f64,
    pub fit_window_start: f64,
    pub fit_window_end: f64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(ExperimentKind::Baseline)
    }
}

impl ExperimentConfig {
    /// Reference configuration for `kind`: 100 users over 100 slots, the
    /// second parameter set for [`ExperimentKind::ParamSet2`] and the first
    /// one otherwise.
    pub fn preset(kind: ExperimentKind) -> Self {
        let mut cfg = Self {
            kind,
            users: 100,
            horizon: 100,
            alpha_i_min: 1.0,
            alpha_i_max: 2.0,
            beta_i_min: 4.0,
            beta_i_max: 8.0,
            d_min: 3.0,
            d_max: 6.0,
            revenue_c: 1.0,
            noise_sd: 1.0,
            ridge: crate::estimator::DEFAULT_RIDGE,
            replications: 1000,
            seed: 0,
            coupled_noise: false,
            gap_estimator: GapEstimator::Expected,
            y_capacity: None,
            lambda_init: None,
            log_bound_t0: 10,
            log_bound_ratio_cap: 20.0,
            fit_window_start: 10.0,
            fit_window_end: 100.0,
            out_dir: PathBuf::from("out"),
        };
        cfg.apply_parameter_set(kind);
        cfg
    }

    /// Switches to `kind`, resetting the sampling intervals to its preset.
    pub fn retarget(&self, kind: ExperimentKind) -> Self {
        let mut cfg = self.clone();
        cfg.kind = kind;
        cfg.apply_parameter_set(kind);
        cfg
    }

    fn apply_parameter_set(&mut self, kind: ExperimentKind) {
        let (a, b, d) = match kind {
            ExperimentKind::ParamSet2 => ((1.0, 3.0), (3.0, 10.0), (2.0, 5.0)),
            _ => ((1.0, 2.0), (4.0, 8.0), (3.0, 6.0)),
        };
        (self.alpha_i_min, self.alpha_i_max) = a;
        (self.beta_i_min, self.beta_i_max) = b;
        (self.d_min, self.d_max) = d;
    }

    /// Parses a TOML configuration. Keys that are absent take the preset
    /// values of the file's `kind` (baseline when `kind` is absent too).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config_err = |e: &dyn std::fmt::Display| Error::Config(e.to_string());
        let user: toml::Table = text.parse().map_err(|e| config_err(&e))?;
        let kind = match user.get("kind") {
            Some(v) => ExperimentKind::deserialize(v.clone()).map_err(|e| config_err(&e))?,
            None => ExperimentKind::Baseline,
        };
        let mut merged = toml::Table::try_from(Self::preset(kind)).map_err(|e| config_err(&e))?;
        merged.extend(user);
        let cfg: Self = merged.try_into().map_err(|e| config_err(&e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, lo, hi) in [
            ("alpha_i", self.alpha_i_min, self.alpha_i_max),
            ("beta_i", self.beta_i_min, self.beta_i_max),
            ("d", self.d_min, self.d_max),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(Error::Config(format!(
                    "{name} interval [{lo}, {hi}] must be ordered and strictly positive"
                )));
            }
        }
        if self.users == 0 || self.horizon == 0 {
            return Err(Error::Config("users and horizon must be >= 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if !(self.revenue_c.is_finite() && self.revenue_c > 0.0) {
            return Err(Error::Config(format!(
                "revenue_c must be > 0, got {}",
                self.revenue_c
            )));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sd must be >= 0, got {}",
                self.noise_sd
            )));
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::Config(format!(
                "ridge must be >= 0, got {}",
                self.ridge
            )));
        }
        if self.log_bound_t0 < 3 {
            return Err(Error::Config("log_bound_t0 must be >= 3".into()));
        }
        if !(self.fit_window_start > 0.0 && self.fit_window_start < self.fit_window_end) {
            return Err(Error::Config(
                "fit window must satisfy 0 < start < end".into(),
            ));
        }
        if let ExperimentKind::RepeatedDt(p) = self.kind {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!(
                    "repeated-dt fraction must be in [0, 1], got {p}"
                )));
            }
        }
        if let ExperimentKind::BlockedDt(0) = self.kind {
            return Err(Error::Config("blocked-dt block length must be >= 1".into()));
        }
        Ok(())
    }

    pub fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig {
            gap_estimator: self.gap_estimator,
            t0: self.log_bound_t0,
            ratio_cap: self.log_bound_ratio_cap,
            window: (self.fit_window_start, self.fit_window_end),
        }
    }
}

/// TOML integers are signed 64-bit, so seeds above `i64::MAX` are written as
/// decimal strings; either form is accepted on input.
mod seed_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.collect_str(seed),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Number of slots overwritten by a repeated-demand transform: `⌈pT⌉`.
pub fn repeated_slots(fraction: f64, horizon: usize) -> usize {
    // absorb representation error such as 0.3 * 100 = 30.000000000000004
    let raw = fraction * horizon as f64;
    let rounded = raw.round();
    let k = if (raw - rounded).abs() < 1e-9 {
        rounded
    } else {
        raw.ceil()
    };
    (k as usize).min(horizon)
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Samples users and demand i.i.d. uniform from the configured intervals,
/// then applies the kind's demand transform.
///
/// Draw order: all α_i, all β_i, all d_t, then the transform's draws.
pub fn build_scenario<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Result<Scenario> {
    config.validate()?;
    let alphas: Vec<f64> = (0..config.users)
        .map(|_| uniform(rng, config.alpha_i_min, config.alpha_i_max))
        .collect();
    let betas: Vec<f64> = (0..config.users)
        .map(|_| uniform(rng, config.beta_i_min, config.beta_i_max))
        .collect();
    let users = alphas
        .into_iter()
        .zip(betas)
        .map(|(a, b)| UserParams::new(a, b))
        .collect::<Result<Vec<_>>>()?;
    let mut d: Vec<f64> = (0..config.horizon)
        .map(|_| uniform(rng, config.d_min, config.d_max))
        .collect();

    match config.kind {
        ExperimentKind::Baseline | ExperimentKind::ParamSet2 => {}
        ExperimentKind::RepeatedDt(p) => {
            let k = repeated_slots(p, config.horizon);
            let shared = uniform(rng, config.d_min, config.d_max);
            for slot in index::sample(rng, config.horizon, k) {
                d[slot] = shared;
            }
        }
        ExperimentKind::BlockedDt(block) => {
            let blocks = config.horizon.div_ceil(block);
            let values: Vec<f64> = (0..blocks)
                .map(|_| uniform(rng, config.d_min, config.d_max))
                .collect();
            for (slot, v) in d.iter_mut().enumerate() {
                *v = values[slot / block];
            }
        }
    }

    let demand = DemandProfile::new(d)?;
    let alpha_rev = config.revenue_c * demand.max();
    Scenario::new(
        Population::new(users)?,
        demand,
        alpha_rev,
        config.noise_sd,
        config.seed,
    )
}

/// In-memory result of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub scenario: Scenario,
    pub offline: OfflineSolution,
    /// Capacity the online loop committed to.
    pub y_capacity: f64,
    pub trajectories: Vec<Trajectory>,
    /// Regret analysis, or the reason it could not be run.
    pub report: std::result::Result<RegretReport, String>,
    pub checks: Option<Checks>,
}

/// Pass/fail evaluation of the reference behavior on one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checks {
    /// Largest median `|λ_t − λ*_t|/λ*_t` over `t ≥ TRACKING_FROM`.
    pub max_median_tracking_error: f64,
    pub price_tracking: bool,
    pub gap_decay: bool,
    pub log_bound: bool,
    pub bias_below_variance: bool,
    pub lambda_var_decay: bool,
}

impl Checks {
    pub fn all(&self) -> bool {
        self.price_tracking
            && self.gap_decay
            && self.log_bound
            && self.bias_below_variance
            && self.lambda_var_decay
    }
}

fn in_slope_range(slope: Option<f64>) -> bool {
    slope.is_some_and(|s| (DECAY_SLOPE_RANGE.0..=DECAY_SLOPE_RANGE.1).contains(&s))
}

/// Median over replications of `|λ_t − λ*_t| / |λ*_t|`, per slot.
pub fn median_tracking_error(trajectories: &[Trajectory]) -> Vec<f64> {
    let Some(first) = trajectories.first() else {
        return Vec::new();
    };
    (0..first.records.len())
        .map(|slot| {
            let mut errs: Vec<f64> = trajectories
                .iter()
                .map(|t| {
                    let r = &t.records[slot];
                    (r.lambda - r.lambda_star).abs() / r.lambda_star.abs()
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            let m = errs.len();
            if m % 2 == 1 {
                errs[m / 2]
            } else {
                0.5 * (errs[m / 2 - 1] + errs[m / 2])
            }
        })
        .collect()
}

pub fn evaluate_checks(trajectories: &[Trajectory], report: &RegretReport) -> Checks {
    let tracking = median_tracking_error(trajectories);
    let max_median_tracking_error = tracking
        .iter()
        .skip(TRACKING_FROM - 1)
        .copied()
        .fold(0.0, f64::max);
    let bias_below_variance = report
        .rows
        .iter()
        .skip(BIAS_VARIANCE_FROM - 1)
        .all(|r| r.lambda_bias * r.lambda_bias < r.lambda_var);
    Checks {
        max_median_tracking_error,
        price_tracking: tracking.len() >= TRACKING_FROM
            && max_median_tracking_error < TRACKING_TOLERANCE,
        gap_decay: in_slope_range(report.summary.gap_slope),
        log_bound: report.summary.log_bound.pass,
        bias_below_variance,
        lambda_var_decay: in_slope_range(report.summary.lambda_var_slope),
    }
}

/// Online configuration used for every replication of `config`.
pub fn online_config(config: &ExperimentConfig, y_capacity: f64) -> OnlineConfig {
    let mut online = OnlineConfig::new(y_capacity);
    online.ridge = config.ridge;
    online.coupled_noise = config.coupled_noise;
    if let Some(l) = config.lambda_init {
        online.lambda_init = LambdaInit::Fixed(l);
    }
    online
}

/// Simulates replications `0..config.replications` of `scenario`.
pub fn simulate_replications(
    config: &ExperimentConfig,
    scenario: &Scenario,
    y_capacity: f64,
) -> Result<Vec<Trajectory>> {
    let online = online_config(config, y_capacity);
    (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::replication_rng(config.seed, rep);
            online::run_episode(scenario, &online, &mut rng)
        })
        .collect()
}

/// Builds the scenario, runs the sweep and analyses it (no I/O).
pub fn run(config: &ExperimentConfig) -> Result<ExperimentRun> {
    config.validate()?;
    let scenario = build_scenario(config, &mut rng::scenario_rng(config.seed))?;
    let offline = offline::solve_optimal(&scenario);
    let y_capacity = config.y_capacity.unwrap_or(offline.y_star);
    let trajectories = simulate_replications(config, &scenario, y_capacity)?;
    let (report, checks) =
        match analysis::regret_report(&trajectories, &scenario.population, &config.analysis()) {
            Ok(report) => {
                let checks = evaluate_checks(&trajectories, &report);
                (Ok(report), Some(checks))
            }
            Err(e) => (Err(e.to_string()), None),
        };
    Ok(ExperimentRun {
        config: config.clone(),
        scenario,
        offline,
        y_capacity,
        trajectories,
        report,
        checks,
    })
}

/// Per-slot CSV row of a single episode.
#[derive(Debug, Serialize)]
struct EpisodeRow {
    t: usize,
    d_t: f64,
    lambda_online: f64,
    lambda_star: f64,
    gamma1_hat: f64,
    gamma2_hat: f64,
    #[serde(rename = "Q_online")]
    q_online: f64,
    #[serde(rename = "Q_star")]
    q_star: f64,
    cost_online: f64,
    cost_star: f64,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

pub fn write_episode_csv<W: Write>(trajectory: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &trajectory.records {
        w.serialize(EpisodeRow {
            t: r.t,
            d_t: r.d,
            lambda_online: r.lambda,
            lambda_star: r.lambda_star,
            gamma1_hat: r.gamma1_hat,
            gamma2_hat: r.gamma2_hat,
            q_online: r.q_online,
            q_star: r.q_star,
            cost_online: r.cost_online,
            cost_star: r.cost_star,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

pub fn write_regret_csv<W: Write>(report: &RegretReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &report.rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

#[derive(Debug, Serialize)]
struct OfflineRow {
    t: usize,
    d_t: f64,
    lambda_star: f64,
    #[serde(rename = "Q_star")]
    q_star: f64,
    stage_cost: f64,
}

/// `key,value` summary lines followed by the per-slot optimal path.
pub fn write_offline_csv<W: Write>(
    scenario: &Scenario,
    solution: &OfflineSolution,
    mut out: W,
) -> Result<()> {
    let n = scenario.users() as f64;
    let y = solution.y_star;
    let consts = analysis::regret_constants(&scenario.population);
    let stage_costs: Vec<f64> = scenario
        .demand
        .values()
        .iter()
        .enumerate()
        .map(|(slot, &d)| {
            let q = solution.q_star[slot];
            let user: f64 = scenario
                .population
                .users()
                .iter()
                .zip(&solution.x_star)
                .map(|(u, row)| u.cost(row[slot]))
                .sum();
            user / n + (q - y * d).powi(2) / (2.0 * n)
        })
        .collect();
    let total_cost: f64 = stage_costs.iter().sum();
    let revenue = scenario.revenue_per_slot(y) * scenario.horizon() as f64;
    let lambda = &solution.lambda_star;
    let summary = [
        ("users", scenario.users() as f64),
        ("horizon", scenario.horizon() as f64),
        ("alpha_rev", scenario.alpha_rev),
        ("gamma1", scenario.population.gamma1()),
        ("gamma2", scenario.population.gamma2()),
        ("y_star", y),
        (
            "lambda_star_min",
            lambda.iter().copied().fold(f64::INFINITY, f64::min),
        ),
        (
            "lambda_star_max",
            lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
        (
            "lambda_star_mean",
            lambda.iter().sum::<f64>() / lambda.len() as f64,
        ),
        ("c1", consts.c1),
        ("c2", consts.c2),
        ("total_stage_cost", total_cost),
        ("revenue", revenue),
        ("objective", total_cost - revenue),
    ];
    let io = |e| Error::io("<offline output>", e);
    writeln!(out, "key,value").map_err(io)?;
    for (k, v) in summary {
        writeln!(out, "{k},{v}").map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    let mut w = csv::Writer::from_writer(&mut out);
    for (slot, (&d, &cost)) in scenario
        .demand
        .values()
        .iter()
        .zip(&stage_costs)
        .enumerate()
    {
        w.serialize(OfflineRow {
            t: slot + 1,
            d_t: d,
            lambda_star: lambda[slot],
            q_star: solution.q_star[slot],
            stage_cost: cost,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    users: usize,
    horizon: usize,
    alpha_rev: f64,
    gamma1: f64,
    gamma2: f64,
    y_star: f64,
    y_capacity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    regret: Option<&'a analysis::RegretSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regret_error: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    checks: Option<&'a Checks>,
}

pub fn summary_json(run: &ExperimentRun) -> Result<String> {
    let summary = Summary {
        config: &run.config,
        users: run.scenario.users(),
        horizon: run.scenario.horizon(),
        alpha_rev: run.scenario.alpha_rev,
        gamma1: run.scenario.population.gamma1(),
        gamma2: run.scenario.population.gamma2(),
        y_star: run.offline.y_star,
        y_capacity: run.y_capacity,
        regret: run.report.as_ref().ok().map(|r| &r.summary),
        regret_error: run.report.as_ref().err().map(String::as_str),
        checks: run.checks.as_ref(),
    };
    serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))
}

/// Paths of the files written for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub episode_csv: PathBuf,
    pub regret_csv: Option<PathBuf>,
    pub summary_json: PathBuf,
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn with_path(path: &Path, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_artifacts(run: &ExperimentRun, dir: &Path) -> Result<Artifacts> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let episode_csv = dir.join("episode.csv");
    with_path(
        &episode_csv,
        write_episode_csv(&run.trajectories[0], create(&episode_csv)?),
    )?;
    let regret_csv = match &run.report {
        Ok(report) => {
            let path = dir.join("regret.csv");
            with_path(&path, write_regret_csv(report, create(&path)?))?;
            Some(path)
        }
        Err(_) => None,
    };
    let summary_path = dir.join("summary.json");
    let mut text = summary_json(run)?;
    text.push('\n');
    fs::write(&summary_path, text).map_err(|e| Error::io(&summary_path, e))?;
    Ok(Artifacts {
        episode_csv,
        regret_csv,
        summary_json: summary_path,
    })
}

/// Runs `config` and writes its artifacts under `config.out_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(ExperimentRun, Artifacts)> {
    let run = run(config)?;
    let artifacts = write_artifacts(&run, &config.out_dir)?;
    Ok((run, artifacts))
}

/// One line of the sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub kind: String,
    pub y_star: f64,
    pub gap_slope: Option<f64>,
    pub lambda_var_slope: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub max_median_tracking_error: Option<f64>,
    pub all_checks_pass: bool,
}

/// Runs every kind of [`ExperimentKind::sweep_grid`] with the base
/// configuration's shared settings, writing each under `out_dir/<kind>/`
/// and the table to `out_dir/sweep.csv`.
pub fn run_sweep(base: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for kind in ExperimentKind::sweep_grid() {
        let mut cfg = base.retarget(kind);
        cfg.out_dir = base.out_dir.join(kind.slug());
        let (run, _) = run_experiment(&cfg)?;
        let summary = run.report.as_ref().ok().map(|r| &r.summary);
        rows.push(SweepRow {
            kind: kind.to_string(),
            y_star: run.offline.y_star,
            gap_slope: summary.and_then(|s| s.gap_slope),
            lambda_var_slope: summary.and_then(|s| s.lambda_var_slope),
            k1: summary.map(|s| s.log_bound.k1),
            k2: summary.map(|s| s.log_bound.k2),
            max_median_tracking_error: run.checks.as_ref().map(|c| c.max_median_tracking_error),
            all_checks_pass: run.checks.as_ref().is_some_and(Checks::all),
        });
    }
    let path = base.out_dir.join("sweep.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    for row in &rows {
        w.serialize(row).map_err(|e| Error::csv(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
