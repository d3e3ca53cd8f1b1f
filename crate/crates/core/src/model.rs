//! Users, demand targets and the per-slot cost seen by the utility.
//!
//! Each user `i` has a quadratic cost `u_i(x) = ½ β_i x² + α_i x` for a
//! response `x` (positive means consumption reduction). Given a broadcast
//! price `λ` the user picks the minimizer of `u_i(x) − Nλx` and the utility
//! observes it corrupted by i.i.d. Gaussian noise.
//!
//! Slot indices are zero-based throughout the library; CSV output reports
//! `t = slot + 1`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cost coefficients of a single user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserParams {
    /// Linear coefficient α_i.
    pub alpha: f64,
    /// Quadratic coefficient β_i, strictly positive.
    pub beta: f64,
}

impl UserParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha_i must be finite, got {alpha}"
            )));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta_i must be > 0, got {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// `½ β x² + α x`
    pub fn cost(&self, x: f64) -> f64 {
        0.5 * self.beta * x * x + self.alpha * x
    }

    /// Observed response to price `lambda` in a population of `n` users:
    /// the minimizer `(Nλ − α)/β` of the user's net cost plus `eps`.
    pub fn response(&self, lambda: f64, n: usize, eps: f64) -> f64 {
        (n as f64 * lambda - self.alpha) / self.beta + eps
    }
}

/// Ordered, non-empty set of users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    users: Vec<UserParams>,
}

impl Population {
    pub fn new(users: Vec<UserParams>) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::InvalidParameter(
                "population needs at least one user".into(),
            ));
        }
        let pop = Self { users };
        if !(pop.gamma1().is_finite() && pop.gamma2().is_finite()) {
            return Err(Error::InvalidParameter(
                "population aggregates are not finite".into(),
            ));
        }
        Ok(pop)
    }

    pub fn users(&self) -> &[UserParams] {
        &self.users
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// γ1 = Σ 1/β_i
    pub fn gamma1(&self) -> f64 {
        self.users.iter().map(|u| 1.0 / u.beta).sum()
    }

    /// γ2 = −Σ α_i/β_i, the intercept of the aggregate response line.
    pub fn gamma2(&self) -> f64 {
        -self.alpha_over_beta()
    }

    /// Σ α_i/β_i
    pub fn alpha_over_beta(&self) -> f64 {
        self.users.iter().map(|u| u.alpha / u.beta).sum()
    }
}

/// Normalized demand-reduction targets `d_t`, all strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    d: Vec<f64>,
}

impl DemandProfile {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidParameter("demand profile is empty".into()));
        }
        if let Some((t, v)) = d
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "d_t must be finite and > 0, got {v} at slot {t}"
            )));
        }
        Ok(Self { d })
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    pub fn horizon(&self) -> usize {
        self.d.len()
    }

    pub fn get(&self, slot: usize) -> Result<f64> {
        self.d.get(slot).copied().ok_or(Error::SlotOutOfRange {
            slot,
            horizon: self.d.len(),
        })
    }

    pub fn max(&self) -> f64 {
        self.d.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.d.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.d.iter().sum()
    }

    pub fn sum_sq(&self) -> f64 {
        self.d.iter().map(|d| d * d).sum()
    }
}

/// Everything needed to simulate one demand-response program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub population: Population,
    pub demand: DemandProfile,
    /// Revenue per standardized unit of committed reduction (α).
    pub alpha_rev: f64,
    /// Per-user response noise standard deviation σ.
    pub noise_sd: f64,
    /// Master seed the scenario's replication streams derive from.
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        population: Population,
        demand: DemandProfile,
        alpha_rev: f64,
        noise_sd: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(alpha_rev.is_finite() && alpha_rev > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_rev must be > 0, got {alpha_rev}"
            )));
        }
        if !(noise_sd.is_finite() && noise_sd >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_sd must be >= 0, got {noise_sd}"
            )));
        }
        Ok(Self {
            population,
            demand,
            alpha_rev,
            noise_sd,
            seed,
        })
    }

    pub fn users(&self) -> usize {
        self.population.len()
    }

    pub fn horizon(&self) -> usize {
        self.demand.horizon()
    }

    /// Draws one noise term per user, in user index order.
    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.users())
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                self.noise_sd * z
            })
            .collect()
    }

    /// Responses of every user to `lambda` under the given noise draws.
    pub fn respond(&self, lambda: f64, noise: &[f64]) -> StageOutcome {
        debug_assert_eq!(noise.len(), self.users());
        let n = self.users();
        let responses: Vec<f64> = self
            .population
            .users()
            .iter()
            .zip(noise)
            .map(|(u, &eps)| u.response(lambda, n, eps))
            .collect();
        let aggregate = responses.iter().sum();
        StageOutcome {
            lambda,
            responses,
            aggregate,
        }
    }

    /// Broadcasts `lambda` and samples the noisy user responses.
    pub fn aggregate_response<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> StageOutcome {
        let noise = self.draw_noise(rng);
        self.respond(lambda, &noise)
    }

    /// Realized cost of slot `slot` at capacity `y`:
    /// `(1/N) Σ u_i(x̂_i) + (1/2N)(Q̂ − Y d_t)²`.
    ///
    /// The revenue term `αYT/N` does not depend on prices and is left out.
    pub fn stage_cost(&self, y: f64, slot: usize, outcome: &StageOutcome) -> Result<f64> {
        let d = self.demand.get(slot)?;
        let n = self.users() as f64;
        let user_cost: f64 = self
            .population
            .users()
            .iter()
            .zip(&outcome.responses)
            .map(|(u, &x)| u.cost(x))
            .sum();
        let mismatch = outcome.aggregate - y * d;
        Ok(user_cost / n + mismatch * mismatch / (2.0 * n))
    }

    /// Stage cost integrated over the response noise for a fixed price.
    ///
    /// Includes the price-independent noise contribution
    /// `(1/N) Σ ½ β_i σ² + σ²/2`, which cancels in any regret difference.
    pub fn expected_stage_cost(&self, y: f64, slot: usize, lambda: f64) -> Result<f64> {
        let d = self.demand.get(slot)?;
        let users = self.users();
        let n = users as f64;
        let var = self.noise_sd * self.noise_sd;
        let mut user_cost = 0.0;
        let mut aggregate = 0.0;
        for u in self.population.users() {
            let x = u.response(lambda, users, 0.0);
            user_cost += u.cost(x) + 0.5 * u.beta * var;
            aggregate += x;
        }
        let mismatch = aggregate - y * d;
        Ok(user_cost / n + (mismatch * mismatch + n * var) / (2.0 * n))
    }

    /// Revenue `αY` per slot, scaled by `1/N` like the costs.
    pub fn revenue_per_slot(&self, y: f64) -> f64 {
        self.alpha_rev * y / self.users() as f64
    }
}

/// Result of broadcasting one price.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub lambda: f64,
    /// Realized response x̂_i of every user, in user index order.
    pub responses: Vec<f64>,
    /// Q̂ = Σ x̂_i, accumulated in user index order.
    pub aggregate: f64,
}
