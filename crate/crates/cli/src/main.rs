use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use drprice::analysis::GapEstimator;
use drprice::experiment::{self, ExperimentConfig, ExperimentKind};
use drprice::{offline, online, rng};

const CONFIG_KEYS: &str = "\
Config file keys (TOML, all optional):
  kind                 experiment kind, same syntax as --experiment
  users                number of users N [100]
  horizon              number of slots T [100]
  alpha_i_min/max      uniform interval of the linear cost coefficients
  beta_i_min/max       uniform interval of the quadratic cost coefficients
  d_min, d_max         uniform interval of the per-slot demand d_t
  revenue_c            revenue price is revenue_c * max d_t [1.0]
  noise_sd             standard deviation of each user's response noise [1.0]
  ridge                ridge penalty of the estimator [0.001]
  replications         Monte Carlo replications [1000]
  seed                 master seed [0]
  coupled_noise        reuse online noise for the benchmark [false]
  gap_estimator        expected | realized [expected]
  y_capacity           committed capacity (default: optimal Y*)
  lambda_init          slot-1 price (default: uniform on [0, 2 alpha_rev / N])
  log_bound_t0         first slot of the logarithmic bound fit [10]
  log_bound_ratio_cap  upper limit on k2/k1 [20]
  fit_window_start/end slots used for the decay slope fits [10, 100]
  out_dir              output directory [out]

Absent interval keys take the preset of the file's kind.
Precedence: config file < environment < command-line flags.";

#[derive(Debug, Parser)]
#[command(name = "drprice", version, about = "Online demand-response pricing experiments", after_help = CONFIG_KEYS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print Y*, the optimal price path and summary statistics as CSV.
    Offline(Overrides),
    /// Run one episode and print its per-slot CSV.
    Simulate(Overrides),
    /// Run the replication sweep and write per-slot, regret and summary files.
    Regret(Overrides),
    /// Run every experiment kind and write a comparison table.
    Sweep(Overrides),
}

#[derive(Debug, Clone, Args)]
struct Overrides {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, value_name = "U64", env = "DRPRICE_SEED")]
    seed: Option<u64>,
    /// Number of replications.
    #[arg(long, value_name = "INT")]
    reps: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR", env = "DRPRICE_OUT")]
    out: Option<PathBuf>,
    /// baseline, paramset2, repeated-dt:P or blocked-dt:B; also resets the
    /// sampling intervals to that kind's preset.
    #[arg(long, value_name = "KIND")]
    experiment: Option<ExperimentKind>,
    /// Drive the benchmark with the online episode's noise draws.
    #[arg(long)]
    coupled_noise: bool,
    /// Committed capacity instead of the optimal Y*.
    #[arg(long, value_name = "FLOAT")]
    y_capacity: Option<f64>,
    /// expected or realized.
    #[arg(long, value_name = "EST")]
    gap_estimator: Option<GapEstimator>,
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(kind) = self.experiment {
            cfg = cfg.retarget(kind);
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(reps) = self.reps {
            cfg.replications = reps;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if self.coupled_noise {
            cfg.coupled_noise = true;
        }
        if let Some(y) = self.y_capacity {
            cfg.y_capacity = Some(y);
        }
        if let Some(est) = self.gap_estimator {
            cfg.gap_estimator = est;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn offline_cmd(cfg: &ExperimentConfig) -> Result<()> {
    let scenario = experiment::build_scenario(cfg, &mut rng::scenario_rng(cfg.seed))?;
    let solution = offline::solve_optimal(&scenario);
    let stdout = io::stdout();
    experiment::write_offline_csv(&scenario, &solution, stdout.lock())?;
    Ok(())
}

fn simulate_cmd(cfg: &ExperimentConfig) -> Result<()> {
    let scenario = experiment::build_scenario(cfg, &mut rng::scenario_rng(cfg.seed))?;
    let y = match cfg.y_capacity {
        Some(y) => y,
        None => offline::compute_y_star(&scenario),
    };
    let online_cfg = experiment::online_config(cfg, y);
    let trajectory = online::run_episode(
        &scenario,
        &online_cfg,
        &mut rng::replication_rng(cfg.seed, 0),
    )?;
    let stdout = io::stdout();
    experiment::write_episode_csv(&trajectory, stdout.lock())?;
    Ok(())
}

fn regret_cmd(cfg: &ExperimentConfig) -> Result<bool> {
    let (run, artifacts) = experiment::run_experiment(cfg)?;
    log::info!("wrote {}", artifacts.episode_csv.display());
    let mut out = io::stdout().lock();
    writeln!(out, "{}", experiment::summary_json(&run)?)?;
    match &run.report {
        Ok(_) => Ok(run.checks.as_ref().is_some_and(|c| c.all())),
        Err(e) => anyhow::bail!("regret analysis failed: {e}"),
    }
}

fn sweep_cmd(cfg: &ExperimentConfig) -> Result<bool> {
    let rows = experiment::run_sweep(cfg)?;
    let mut out = io::stdout().lock();
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    writeln!(
        out,
        "{:<18} {:>10} {:>10} {:>10} {:>8} {:>10} {:>10}  pass",
        "kind", "y_star", "gap_slope", "var_slope", "k1", "k2", "track"
    )?;
    for r in &rows {
        writeln!(
            out,
            "{:<18} {:>10.4} {:>10} {:>10} {:>8} {:>10} {:>10}  {}",
            r.kind,
            r.y_star,
            fmt(r.gap_slope),
            fmt(r.lambda_var_slope),
            fmt(r.k1),
            fmt(r.k2),
            fmt(r.max_median_tracking_error),
            r.all_checks_pass
        )?;
    }
    Ok(rows.iter().all(|r| r.all_checks_pass))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Offline(o) => o.resolve().and_then(|c| offline_cmd(&c).map(|_| true)),
        Command::Simulate(o) => o.resolve().and_then(|c| simulate_cmd(&c).map(|_| true)),
        Command::Regret(o) => o.resolve().and_then(|c| regret_cmd(&c)),
        Command::Sweep(o) => o.resolve().and_then(|c| sweep_cmd(&c)),
    }
    .context("drprice");
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("drprice: one or more acceptance checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
