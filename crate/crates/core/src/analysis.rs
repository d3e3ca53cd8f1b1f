//! Regret and price statistics over a set of replicated episodes.
//!
//! Ensemble quantities are taken across replications at a fixed slot. Two
//! per-replication gap estimators are available: the realized stage-cost
//! difference recorded by the episode, and the noise-integrated difference
//! `E C(λ_t) − E C(λ*_t)` given the price actually broadcast. Both are
//! unbiased for the one-step gap `R_t`; the second removes the current-slot
//! noise entirely.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Population;
use crate::online::Trajectory;

/// Coefficients of the one-step gap decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretConstants {
    /// `(N/2)(γ1 + γ1²)`: curvature of the expected stage cost in λ.
    pub c1: f64,
    /// `(Σ α_i/β_i)(γ1 − 1)`, the coefficient on the price bias.
    pub c2: f64,
}

impl RegretConstants {
    /// The expected stage cost is a quadratic in λ minimized at λ*, so its
    /// first-order term vanishes and the exact gap is `C1 E(λ − λ*)²`.
    /// This returns the constants with the bias-linear coefficient zeroed.
    pub fn stationary(self) -> Self {
        Self { c2: 0.0, ..self }
    }
}

pub fn regret_constants(population: &Population) -> RegretConstants {
    let n = population.len() as f64;
    let g1 = population.gamma1();
    RegretConstants {
        c1: 0.5 * n * (g1 + g1 * g1),
        c2: population.alpha_over_beta() * (g1 - 1.0),
    }
}

/// First and second moments of λ_t across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceMoments {
    pub mean: f64,
    pub second: f64,
}

impl PriceMoments {
    pub fn from_samples(samples: &[f64]) -> Self {
        let m = samples.len() as f64;
        Self {
            mean: samples.iter().sum::<f64>() / m,
            second: samples.iter().map(|l| l * l).sum::<f64>() / m,
        }
    }

    pub fn variance(&self) -> f64 {
        self.second - self.mean * self.mean
    }
}

/// `C1 (E λ² − (E λ)²) + C1 (E λ − λ*)² + C2 (E λ − λ*)`.
pub fn analytic_gap(c1: f64, c2: f64, moments: PriceMoments, lambda_star: f64) -> f64 {
    let bias = moments.mean - lambda_star;
    c1 * moments.variance() + c1 * bias * bias + c2 * bias
}

/// Mean and standard error of a per-replication quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::NeedReplications { got: samples.len() });
        }
        let m = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / m;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        Ok(Self {
            mean,
            se: (var / m).sqrt(),
        })
    }
}

/// Which per-replication quantity estimates `R_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapEstimator {
    /// Noise-integrated cost difference at the broadcast price.
    #[default]
    Expected,
    /// Realized `cost_online − cost_star`.
    Realized,
}

impl std::str::FromStr for GapEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expected" => Ok(Self::Expected),
            "realized" => Ok(Self::Realized),
            other => Err(Error::Config(format!("unknown gap estimator {other:?}"))),
        }
    }
}

impl std::fmt::Display for GapEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Expected => "expected",
            Self::Realized => "realized",
        })
    }
}

fn check_replications(trajectories: &[Trajectory]) -> Result<usize> {
    if trajectories.len() < 2 {
        return Err(Error::NeedReplications {
            got: trajectories.len(),
        });
    }
    let horizon = trajectories[0].records.len();
    if trajectories.iter().any(|t| t.records.len() != horizon) {
        return Err(Error::InvalidParameter(
            "replications have different horizons".into(),
        ));
    }
    Ok(horizon)
}

fn slot_column(
    trajectories: &[Trajectory],
    slot: usize,
    f: impl Fn(&crate::online::SlotRecord) -> f64,
) -> Result<Vec<f64>> {
    let horizon = check_replications(trajectories)?;
    if slot >= horizon {
        return Err(Error::SlotOutOfRange { slot, horizon });
    }
    Ok(trajectories.iter().map(|t| f(&t.records[slot])).collect())
}

/// Mean realized cost difference at `slot` with its standard error.
pub fn empirical_gap(trajectories: &[Trajectory], slot: usize) -> Result<MeanSe> {
    MeanSe::from_samples(&slot_column(trajectories, slot, |r| {
        r.cost_online - r.cost_star
    })?)
}

/// Mean noise-integrated cost difference at `slot` with its standard error.
pub fn expected_gap(trajectories: &[Trajectory], slot: usize) -> Result<MeanSe> {
    MeanSe::from_samples(&slot_column(trajectories, slot, |r| r.expected_gap)?)
}

pub fn gap(trajectories: &[Trajectory], slot: usize, estimator: GapEstimator) -> Result<MeanSe> {
    match estimator {
        GapEstimator::Expected => expected_gap(trajectories, slot),
        GapEstimator::Realized => empirical_gap(trajectories, slot),
    }
}

/// Plug-in price moments at `slot`.
pub fn price_moments(trajectories: &[Trajectory], slot: usize) -> Result<PriceMoments> {
    Ok(PriceMoments::from_samples(&slot_column(
        trajectories,
        slot,
        |r| r.lambda,
    )?))
}

/// Least-squares slope of `ln value` against `ln t` for points with
/// `t` in `[window.0, window.1]`.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, v) in series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
    {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NonPositiveInWindow { t, value: v });
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    if xs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "fit window [{}, {}] holds {} points",
            window.0,
            window.1,
            xs.len()
        )));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Envelope `k1 log t ≤ R(t) ≤ k2 log t` over `t ≥ t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogBound {
    pub k1: f64,
    pub k2: f64,
    pub t0: usize,
    pub ratio_cap: f64,
    pub pass: bool,
}

/// `cum_regret[s]` is the cumulative regret through slot `s` (t = s + 1).
pub fn log_bound_check(cum_regret: &[f64], t0: usize, ratio_cap: f64) -> Result<LogBound> {
    if t0 < 3 {
        return Err(Error::InvalidParameter(format!(
            "t0 must be >= 3, got {t0}"
        )));
    }
    if t0 > cum_regret.len() {
        return Err(Error::InvalidParameter(format!(
            "t0 = {t0} exceeds horizon {}",
            cum_regret.len()
        )));
    }
    let (mut k1, mut k2) = (f64::INFINITY, f64::NEG_INFINITY);
    for (slot, &r) in cum_regret.iter().enumerate().skip(t0 - 1) {
        let k = r / ((slot + 1) as f64).ln();
        k1 = k1.min(k);
        k2 = k2.max(k);
    }
    let pass = k1 > 0.0 && k2.is_finite() && k1 <= k2 && k2 / k1 < ratio_cap;
    Ok(LogBound {
        k1,
        k2,
        t0,
        ratio_cap,
        pass,
    })
}

/// Per-slot price bias against λ*_t and sample variance across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasVariance {
    pub bias: f64,
    pub variance: f64,
}

pub fn price_bias_variance(trajectories: &[Trajectory]) -> Result<Vec<BiasVariance>> {
    let horizon = check_replications(trajectories)?;
    (0..horizon)
        .map(|slot| {
            let lambda_star = trajectories[0].records[slot].lambda_star;
            bias_variance(&slot_column(trajectories, slot, |r| r.lambda)?, lambda_star)
        })
        .collect()
}

/// Bias and variance of the slope estimate γ̂1 used at each slot.
pub fn gamma1_bias_variance(trajectories: &[Trajectory], gamma1: f64) -> Result<Vec<BiasVariance>> {
    let horizon = check_replications(trajectories)?;
    (0..horizon)
        .map(|slot| bias_variance(&slot_column(trajectories, slot, |r| r.gamma1_hat)?, gamma1))
        .collect()
}

fn bias_variance(samples: &[f64], truth: f64) -> Result<BiasVariance> {
    let MeanSe { mean, se } = MeanSe::from_samples(samples)?;
    let m = samples.len() as f64;
    Ok(BiasVariance {
        bias: mean - truth,
        variance: se * se * m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub gap_estimator: GapEstimator,
    pub t0: usize,
    pub ratio_cap: f64,
    /// Inclusive `t` range for the decay fits.
    pub window: (f64, f64),
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            gap_estimator: GapEstimator::Expected,
            t0: 10,
            ratio_cap: 20.0,
            window: (10.0, 100.0),
        }
    }
}

/// One row of the regret CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretRow {
    pub t: usize,
    #[serde(rename = "R_t_mean")]
    pub r_mean: f64,
    #[serde(rename = "R_t_se")]
    pub r_se: f64,
    pub cum_regret: f64,
    pub lambda_bias: f64,
    pub lambda_var: f64,
    pub gamma1_bias: f64,
    pub gamma1_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretSummary {
    pub replications: usize,
    pub gap_estimator: GapEstimator,
    pub constants: RegretConstants,
    pub window: (f64, f64),
    /// Log–log slope of the mean gap over the window.
    pub gap_slope: Option<f64>,
    /// Log–log slope of the price variance over the window.
    pub lambda_var_slope: Option<f64>,
    pub log_bound: LogBound,
    pub total_recoveries: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub rows: Vec<RegretRow>,
    pub summary: RegretSummary,
}

impl RegretReport {
    pub fn cumulative(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.cum_regret).collect()
    }

    pub fn gap_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t as f64, r.r_mean)).collect()
    }

    pub fn lambda_var_series(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .map(|r| (r.t as f64, r.lambda_var))
            .collect()
    }
}

pub fn regret_report(
    trajectories: &[Trajectory],
    population: &Population,
    config: &AnalysisConfig,
) -> Result<RegretReport> {
    let horizon = check_replications(trajectories)?;
    let prices = price_bias_variance(trajectories)?;
    let gammas = gamma1_bias_variance(trajectories, population.gamma1())?;
    let mut rows = Vec::with_capacity(horizon);
    let mut cum = 0.0;
    for slot in 0..horizon {
        let g = gap(trajectories, slot, config.gap_estimator)?;
        cum += g.mean;
        rows.push(RegretRow {
            t: slot + 1,
            r_mean: g.mean,
            r_se: g.se,
            cum_regret: cum,
            lambda_bias: prices[slot].bias,
            lambda_var: prices[slot].variance,
            gamma1_bias: gammas[slot].bias,
            gamma1_var: gammas[slot].variance,
        });
    }

    let mut notes = Vec::new();
    let gap_series: Vec<(f64, f64)> = rows.iter().map(|r| (r.t as f64, r.r_mean)).collect();
    let var_series: Vec<(f64, f64)> = rows.iter().map(|r| (r.t as f64, r.lambda_var)).collect();
    let gap_slope = fit_decay(&gap_series, config.window)
        .map_err(|e| notes.push(format!("gap slope: {e}")))
        .ok();
    let lambda_var_slope = fit_decay(&var_series, config.window)
        .map_err(|e| notes.push(format!("price variance slope: {e}")))
        .ok();
    let cumulative: Vec<f64> = rows.iter().map(|r| r.cum_regret).collect();
    let log_bound = log_bound_check(&cumulative, config.t0, config.ratio_cap)?;

    Ok(RegretReport {
        rows,
        summary: RegretSummary {
            replications: trajectories.len(),
            gap_estimator: config.gap_estimator,
            constants: regret_constants(population),
            window: config.window,
            gap_slope,
            lambda_var_slope,
            log_bound,
            total_recoveries: trajectories.iter().map(|t| t.recoveries).sum(),
            notes,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UserParams;

    fn pop(users: &[(f64, f64)]) -> Population {
        Population::new(
            users
                .iter()
                .map(|&(a, b)| UserParams::new(a, b).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constants_by_hand() {
        let c = regret_constants(&pop(&[(0.0, 1.0), (0.0, 1.0)]));
        assert_eq!((c.c1, c.c2), (6.0, 0.0));
        let c = regret_constants(&pop(&[(1.0, 1.0), (1.0, 1.0)]));
        assert_eq!(c.c2, 2.0);
        assert_eq!(regret_constants(&pop(&[(0.0, 3.7)])).c2, 0.0);
        assert_eq!(c.stationary().c2, 0.0);
        assert!(c.c1 >= 0.0);
    }

    #[test]
    fn analytic_gap_cases() {
        let at_star = PriceMoments {
            mean: 0.5,
            second: 0.25,
        };
        assert_eq!(analytic_gap(3.0, 1.5, at_star, 0.5), 0.0);
        let v = 0.01;
        let m = PriceMoments {
            mean: 0.4,
            second: 0.16 + v,
        };
        assert!((analytic_gap(3.0, 0.0, m, 0.4) - 3.0 * v).abs() < 1e-12);
    }

    #[test]
    fn decay_fits() {
        let inv: Vec<(f64, f64)> = (1..=200).map(|t| (t as f64, 1.0 / t as f64)).collect();
        assert!((fit_decay(&inv, (10.0, 100.0)).unwrap() + 1.0).abs() < 1e-9);
        let flat: Vec<(f64, f64)> = (1..=200).map(|t| (t as f64, 4.2)).collect();
        assert!(fit_decay(&flat, (10.0, 100.0)).unwrap().abs() < 1e-12);
        let mut bad = inv.clone();
        bad[49].1 = -1.0;
        assert!(matches!(
            fit_decay(&bad, (10.0, 100.0)),
            Err(Error::NonPositiveInWindow { .. })
        ));
        // out-of-window nonpositive values are ignored
        bad[49].1 = 1.0 / 50.0;
        bad[0].1 = 0.0;
        assert!(fit_decay(&bad, (10.0, 100.0)).is_ok());
    }

    #[test]
    fn log_bound_exact_log_curve() {
        let cum: Vec<f64> = (1..=100).map(|t| 5.0 * (t as f64).ln()).collect();
        let b = log_bound_check(&cum, 10, 20.0).unwrap();
        assert!((b.k1 - 5.0).abs() < 1e-12 && (b.k2 - 5.0).abs() < 1e-12);
        assert!(b.pass);
    }

    #[test]
    fn log_bound_rejects_linear_regret() {
        let cum: Vec<f64> = (1..=1000).map(|t| t as f64).collect();
        let b = log_bound_check(&cum, 10, 20.0).unwrap();
        assert!(b.k2 / b.k1 > 20.0);
        assert!(!b.pass);
        assert!(log_bound_check(&cum, 2, 20.0).is_err());
    }

    #[test]
    fn mean_se_needs_two() {
        assert!(matches!(
            MeanSe::from_samples(&[1.0]),
            Err(Error::NeedReplications { got: 1 })
        ));
        let s = MeanSe::from_samples(&[1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gap_estimator_parse() {
        assert_eq!(
            "expected".parse::<GapEstimator>().unwrap(),
            GapEstimator::Expected
        );
        assert_eq!(
            "realized".parse::<GapEstimator>().unwrap(),
            GapEstimator::Realized
        );
        assert!("other".parse::<GapEstimator>().is_err());
    }
}
