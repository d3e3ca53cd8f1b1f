//! Closed-loop pricing: estimate, price, broadcast, observe, repeat.
//!
//! At slot `t` the utility fits the aggregate response line on slots
//! `1..t−1`, prices at `λ_t = (Y d_t − γ̂2)/(N γ̂1 + N)` (the certainty
//! equivalent of `λ*_t`, since `γ2 = −Σ α_i/β_i`), and feeds the observed
//! aggregate back into the regression. Slot 1 uses an initial price.

use log::warn;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{RidgeEstimator, DEFAULT_RIDGE};
use crate::model::Scenario;
use crate::offline::compute_lambda_star;

/// Price denominators closer to zero than this are rejected.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-9;

/// Certainty-equivalent price from an estimated slope `gamma1_hat` and
/// intercept `gamma2_hat` of the aggregate response line.
pub fn next_price(gamma1_hat: f64, gamma2_hat: f64, y: f64, d: f64, n: usize) -> Result<f64> {
    let n = n as f64;
    let denominator = n * gamma1_hat + n;
    if denominator.is_nan() || denominator.abs() <= DEGENERATE_DENOMINATOR {
        return Err(Error::DegenerateEstimate { denominator });
    }
    Ok((y * d - gamma2_hat) / denominator)
}

/// How the slot-1 price is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LambdaInit {
    /// Uniform on `[0, 2α/N]`.
    #[default]
    Default,
    Fixed(f64),
    Uniform {
        low: f64,
        high: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineConfig {
    /// Committed capacity Y.
    pub y_capacity: f64,
    pub lambda_init: LambdaInit,
    pub ridge: f64,
    /// Ridge weight for slots with fewer than two observations when `ridge`
    /// is zero.
    pub cold_start_ridge: f64,
    /// Ridge prior mean for `(γ1, γ2)`.
    pub prior_mean: [f64; 2],
    /// Keep per-user responses in the trajectory.
    pub record_users: bool,
    /// Evaluate the optimal counterfactual on the same noise draws.
    pub coupled_noise: bool,
}

impl OnlineConfig {
    pub fn new(y_capacity: f64) -> Self {
        Self {
            y_capacity,
            lambda_init: LambdaInit::Default,
            ridge: DEFAULT_RIDGE,
            cold_start_ridge: DEFAULT_RIDGE,
            prior_mean: [0.0, 0.0],
            record_users: false,
            coupled_noise: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.cold_start_ridge.is_finite() && self.cold_start_ridge >= 0.0) {
            return Err(Error::InvalidParameter(
                "cold_start_ridge must be >= 0".into(),
            ));
        }
        if !self.y_capacity.is_finite() {
            return Err(Error::InvalidParameter("y_capacity must be finite".into()));
        }
        match self.lambda_init {
            LambdaInit::Fixed(l) if !l.is_finite() => {
                Err(Error::InvalidParameter("lambda_init must be finite".into()))
            }
            LambdaInit::Uniform { low, high }
                if !(low.is_finite() && high.is_finite() && low <= high) =>
            {
                Err(Error::InvalidParameter(format!(
                    "bad lambda_init interval [{low}, {high}]"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// One slot of an episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    /// One-based slot number.
    pub t: usize,
    pub d: f64,
    pub lambda: f64,
    pub lambda_star: f64,
    /// Slope estimate used to set `lambda` (NaN when none was available).
    pub gamma1_hat: f64,
    /// Intercept estimate used to set `lambda`.
    pub gamma2_hat: f64,
    pub q_online: f64,
    pub q_star: f64,
    /// Realized stage cost under the online price.
    pub cost_online: f64,
    /// Realized stage cost under λ*_t.
    pub cost_star: f64,
    /// Noise-integrated cost difference `E C(λ_t) − E C(λ*_t)` given `λ_t`.
    pub expected_gap: f64,
    #[serde(skip)]
    pub responses: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<SlotRecord>,
    /// Estimator after the last observation.
    pub estimator: RidgeEstimator,
    /// Slots where the estimate or price was unusable and the previous
    /// price was reused.
    pub recoveries: usize,
}

impl Trajectory {
    pub fn prices(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.lambda)
    }
}

/// Runs one episode over the scenario's full horizon.
///
/// Random draws per slot, in order: the slot-1 price (slot 1 only), the
/// online noise vector, then the counterfactual noise vector unless noise is
/// coupled. The trajectory is a pure function of `(scenario, config, rng)`.
pub fn run_episode<R: Rng + ?Sized>(
    scenario: &Scenario,
    config: &OnlineConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    config.validate()?;
    let n = scenario.users();
    let y = config.y_capacity;
    let mut estimator = RidgeEstimator::new(config.ridge, n)?
        .with_prior_mean(config.prior_mean[0], config.prior_mean[1]);
    let mut records = Vec::with_capacity(scenario.horizon());
    let mut recoveries = 0;
    let mut previous: Option<f64> = None;

    for (slot, &d) in scenario.demand.values().iter().enumerate() {
        let lambda_star = compute_lambda_star(scenario, y, slot)?;
        let estimate = if config.ridge == 0.0 && estimator.len() < 2 {
            estimator.estimate_with_ridge(config.cold_start_ridge)
        } else {
            estimator.estimate()
        };
        let (gamma1_hat, gamma2_hat) = match &estimate {
            Ok(e) => (e.gamma1, e.gamma2),
            Err(_) => (f64::NAN, f64::NAN),
        };

        let lambda = match previous {
            None => initial_price(scenario, config.lambda_init, rng),
            Some(prev) => match estimate.and_then(|e| next_price(e.gamma1, e.gamma2, y, d, n)) {
                Ok(price) => price,
                Err(err) => {
                    warn!("slot {}: {err}; reusing previous price {prev}", slot + 1);
                    recoveries += 1;
                    prev
                }
            },
        };

        let noise = scenario.draw_noise(rng);
        let online = scenario.respond(lambda, &noise);
        let optimal = if config.coupled_noise {
            scenario.respond(lambda_star, &noise)
        } else {
            let fresh = scenario.draw_noise(rng);
            scenario.respond(lambda_star, &fresh)
        };

        let cost_online = scenario.stage_cost(y, slot, &online)?;
        let cost_star = scenario.stage_cost(y, slot, &optimal)?;
        let expected_gap = scenario.expected_stage_cost(y, slot, lambda)?
            - scenario.expected_stage_cost(y, slot, lambda_star)?;

        estimator.update(lambda, online.aggregate)?;
        previous = Some(lambda);

        records.push(SlotRecord {
            t: slot + 1,
            d,
            lambda,
            lambda_star,
            gamma1_hat,
            gamma2_hat,
            q_online: online.aggregate,
            q_star: optimal.aggregate,
            cost_online,
            cost_star,
            expected_gap,
            responses: config.record_users.then_some(online.responses),
        });
    }

    Ok(Trajectory {
        records,
        estimator,
        recoveries,
    })
}

fn initial_price<R: Rng + ?Sized>(scenario: &Scenario, init: LambdaInit, rng: &mut R) -> f64 {
    let (low, high) = match init {
        LambdaInit::Fixed(l) => return l,
        LambdaInit::Uniform { low, high } => (low, high),
        LambdaInit::Default => (0.0, 2.0 * scenario.alpha_rev / scenario.users() as f64),
    };
    low + (high - low) * rng.random::<f64>()
}
