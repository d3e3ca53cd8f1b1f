//! Full-information optimum.
//!
//! With every `(α_i, β_i)` known, each slot is a strictly convex QP in the
//! user responses. Its equality-constraint dual is the optimal price
//! `λ*_t = (Y d_t + Σ α_i/β_i) / (N + N γ1)`, and minimizing the reduced
//! objective over the capacity gives `Y*` in closed form. [`oracle_solve`]
//! solves the same QP numerically from its KKT system and is kept as an
//! independent check on the closed forms.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{Scenario, UserParams};

/// Optimal capacity, prices and allocations for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineSolution {
    pub y_star: f64,
    /// λ*_t per slot.
    pub lambda_star: Vec<f64>,
    /// Allocations indexed `[user][slot]`.
    pub x_star: Vec<Vec<f64>>,
    /// Q*_t = Σ_i x*_{i,t}.
    pub q_star: Vec<f64>,
}

/// Capacity minimizing the total noiseless cost minus revenue.
///
/// `Y* = [Tα(1+γ1)² − Σ_t S(1+γ1) d_t] / [Σ_t d_t² (1+γ1)]` with
/// `S = Σ α_i/β_i`. Negative values are returned with a warning: they arise
/// when the revenue price is small relative to the users' linear costs.
pub fn compute_y_star(scenario: &Scenario) -> f64 {
    let g1 = scenario.population.gamma1();
    let s = scenario.population.alpha_over_beta();
    let horizon = scenario.horizon() as f64;
    let demand = &scenario.demand;
    let num = horizon * scenario.alpha_rev * (1.0 + g1).powi(2) - s * (1.0 + g1) * demand.sum();
    let y = num / (demand.sum_sq() * (1.0 + g1));
    if y < 0.0 {
        warn!(
            "optimal capacity is negative (Y* = {y}); revenue price alpha = {} is small",
            scenario.alpha_rev
        );
    }
    y
}

/// Optimal broadcast price for `slot` at capacity `y`.
pub fn compute_lambda_star(scenario: &Scenario, y: f64, slot: usize) -> Result<f64> {
    let d = scenario.demand.get(slot)?;
    let n = scenario.users() as f64;
    let g1 = scenario.population.gamma1();
    Ok((y * d + scenario.population.alpha_over_beta()) / (n + n * g1))
}

/// Optimal response of `user` to `lambda_star`.
pub fn compute_x_star(user: &UserParams, lambda_star: f64, n: usize) -> f64 {
    user.response(lambda_star, n, 0.0)
}

/// Closed-form solution at capacity `y`.
pub fn solve(scenario: &Scenario, y: f64) -> OfflineSolution {
    let n = scenario.users();
    let lambda_star: Vec<f64> = (0..scenario.horizon())
        .map(|slot| compute_lambda_star(scenario, y, slot).expect("slot within horizon"))
        .collect();
    let x_star: Vec<Vec<f64>> = scenario
        .population
        .users()
        .iter()
        .map(|u| {
            lambda_star
                .iter()
                .map(|&l| compute_x_star(u, l, n))
                .collect()
        })
        .collect();
    let q_star = (0..scenario.horizon())
        .map(|slot| x_star.iter().map(|row| row[slot]).sum())
        .collect();
    OfflineSolution {
        y_star: y,
        lambda_star,
        x_star,
        q_star,
    }
}

/// Closed-form solution at the optimal capacity.
pub fn solve_optimal(scenario: &Scenario) -> OfflineSolution {
    solve(scenario, compute_y_star(scenario))
}

/// Noiseless total cost minus revenue at capacity `y`, evaluated at the
/// closed-form allocations. This is the scalar function `Y*` minimizes.
pub fn reduced_objective(scenario: &Scenario, y: f64) -> f64 {
    let sol = solve(scenario, y);
    objective_at(scenario, y, &sol)
}

/// Noiseless total cost minus revenue for a given allocation.
pub fn objective_at(scenario: &Scenario, y: f64, sol: &OfflineSolution) -> f64 {
    let n = scenario.users() as f64;
    let users = scenario.population.users();
    let mut total = 0.0;
    for (slot, &d) in scenario.demand.values().iter().enumerate() {
        let user_cost: f64 = users
            .iter()
            .zip(&sol.x_star)
            .map(|(u, row)| u.cost(row[slot]))
            .sum();
        let q: f64 = sol.x_star.iter().map(|row| row[slot]).sum();
        total += user_cost / n + (q - y * d).powi(2) / (2.0 * n);
    }
    total - scenario.alpha_rev * y * scenario.horizon() as f64 / n
}

/// Maximum absolute KKT residual accepted from the dense solve.
pub const KKT_RESIDUAL_TOL: f64 = 1e-10;

/// Solves every slot's QP through its KKT system.
///
/// Unknowns per slot are `x_1..x_N` and the dual `λ` (with `Q = Σ x_i`
/// eliminated):
///
/// ```text
/// (β_i/N) x_i − λ = −α_i/N        i = 1..N
///   Σ_i x_i   + Nλ = Y d_t
/// ```
///
/// solved by LU with partial pivoting. The returned `lambda_star` is the
/// dual of the normalized problem, i.e. the utility-side price; the per-unit
/// payment seen by users is `N λ`.
pub fn oracle_solve(scenario: &Scenario, y: f64) -> Result<OfflineSolution> {
    let users = scenario.population.users();
    let n = users.len();
    let nf = n as f64;
    let horizon = scenario.horizon();

    let mut kkt = DMatrix::<f64>::zeros(n + 1, n + 1);
    for (i, u) in users.iter().enumerate() {
        kkt[(i, i)] = u.beta / nf;
        kkt[(i, n)] = -1.0;
        kkt[(n, i)] = 1.0;
    }
    kkt[(n, n)] = nf;
    let lu = kkt.clone().lu();

    let mut lambda_star = Vec::with_capacity(horizon);
    let mut x_star = vec![Vec::with_capacity(horizon); n];
    let mut q_star = Vec::with_capacity(horizon);
    for (slot, &d) in scenario.demand.values().iter().enumerate() {
        let mut rhs = DVector::<f64>::zeros(n + 1);
        for (i, u) in users.iter().enumerate() {
            rhs[i] = -u.alpha / nf;
        }
        rhs[n] = y * d;
        let sol = lu.solve(&rhs).ok_or(Error::SingularSystem { slot })?;
        let residual = (&kkt * &sol - &rhs).amax();
        let scale = 1.0f64.max(rhs.amax()).max(sol.amax());
        if !residual.is_finite() || residual > KKT_RESIDUAL_TOL * scale {
            return Err(Error::SingularSystem { slot });
        }
        for (row, xi) in x_star.iter_mut().zip(sol.iter()) {
            row.push(*xi);
        }
        q_star.push(sol.rows(0, n).iter().sum());
        lambda_star.push(sol[n]);
    }
    Ok(OfflineSolution {
        y_star: y,
        lambda_star,
        x_star,
        q_star,
    })
}
