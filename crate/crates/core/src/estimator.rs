//! Iterative linear regression of aggregate response on price.
//!
//! The aggregate response follows `Z_s = γ1 (N λ_s) + γ2 + noise`, so each
//! observation contributes a regressor row `[N λ_s, 1]`. The estimator solves
//! the ridge system `(X'X + r I) γ̂ = X'Z + r m` with prior mean `m` (zero by
//! default). It keeps running means and centered co-moments of the regressor
//! and response instead of raw sums, so nearly equal prices far from zero do
//! not cancel catastrophically.

use serde::Serialize;

use crate::error::{Error, Result};

/// Condition number above which the normal matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Ridge weight used by the online loop unless overridden.
pub const DEFAULT_RIDGE: f64 = 1e-3;

type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeEstimator {
    ridge: f64,
    n_scale: f64,
    prior_mean: [f64; 2],
    history: Vec<(f64, f64)>,
    count: f64,
    mean_r: f64,
    mean_z: f64,
    /// `Σ (r − r̄)²`.
    srr: f64,
    /// `Σ (r − r̄)(z − z̄)`.
    srz: f64,
}

/// Point estimate of `(γ1, γ2)` plus the inverse regularized normal matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaEstimate {
    /// Estimate of γ1 = Σ 1/β_i.
    pub gamma1: f64,
    /// Estimate of the intercept γ2 = −Σ α_i/β_i.
    pub gamma2: f64,
    /// `(X'X + r I)⁻¹`.
    pub inverse_normal: Mat2,
}

impl GammaEstimate {
    /// Estimator covariance for aggregate noise variance `noise_variance`
    /// (N σ² for N users with per-user sd σ).
    pub fn covariance(&self, noise_variance: f64) -> Mat2 {
        let m = self.inverse_normal;
        [
            [m[0][0] * noise_variance, m[0][1] * noise_variance],
            [m[1][0] * noise_variance, m[1][1] * noise_variance],
        ]
    }
}

impl RidgeEstimator {
    /// Empty estimator for a population of `n_scale` users.
    pub fn new(ridge: f64, n_scale: usize) -> Result<Self> {
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ridge must be >= 0, got {ridge}"
            )));
        }
        if n_scale == 0 {
            return Err(Error::InvalidParameter("n_scale must be >= 1".into()));
        }
        Ok(Self {
            ridge,
            n_scale: n_scale as f64,
            prior_mean: [0.0, 0.0],
            history: Vec::new(),
            count: 0.0,
            mean_r: 0.0,
            mean_z: 0.0,
            srr: 0.0,
            srz: 0.0,
        })
    }

    /// Shrink toward `(gamma1, gamma2)` instead of zero.
    pub fn with_prior_mean(mut self, gamma1: f64, gamma2: f64) -> Self {
        self.prior_mean = [gamma1, gamma2];
        self
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn history(&self) -> &[(f64, f64)] {
        &self.history
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Unregularized `X'X`.
    pub fn normal_matrix(&self) -> Mat2 {
        let (n, r) = (self.count, self.mean_r);
        [[self.srr + n * r * r, n * r], [n * r, n]]
    }

    /// `X'Z`.
    pub fn moment_vector(&self) -> [f64; 2] {
        let n = self.count;
        [self.srz + n * self.mean_r * self.mean_z, n * self.mean_z]
    }

    /// Records the broadcast price and the observed aggregate response.
    pub fn update(&mut self, lambda: f64, aggregate: f64) -> Result<()> {
        if !(lambda.is_finite() && aggregate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite observation (lambda = {lambda}, Z = {aggregate})"
            )));
        }
        let r = self.n_scale * lambda;
        self.count += 1.0;
        let dr = r - self.mean_r;
        self.mean_r += dr / self.count;
        self.mean_z += (aggregate - self.mean_z) / self.count;
        self.srr += dr * (r - self.mean_r);
        self.srz += dr * (aggregate - self.mean_z);
        self.history.push((lambda, aggregate));
        Ok(())
    }

    pub fn estimate(&self) -> Result<GammaEstimate> {
        self.estimate_with_ridge(self.ridge)
    }

    /// Estimate under ridge weight `ridge` instead of the configured one.
    pub fn estimate_with_ridge(&self, ridge: f64) -> Result<GammaEstimate> {
        if ridge == 0.0 && self.history.len() < 2 {
            return Err(Error::InsufficientData);
        }
        let (n, rb, zb) = (self.count, self.mean_r, self.mean_z);
        let [m1, m2] = self.prior_mean;
        // A = X'X + ridge I written in centered form; its determinant is a
        // sum of nonnegative terms
        let a11 = self.srr + n * rb * rb + ridge;
        let a12 = n * rb;
        let a22 = n + ridge;
        let det = (self.srr + ridge) * a22 + ridge * n * rb * rb;
        let condition = condition_number(a11, a12, a22, det);
        if condition.is_nan() || condition > MAX_CONDITION {
            return Err(Error::Unidentifiable { condition });
        }
        // eliminate γ2 from the second normal equation
        let shrink = ridge / a22;
        let gamma1 = (self.srz + ridge * m1 + n * rb * (zb - m2) * shrink)
            / (self.srr + ridge + n * rb * rb * shrink);
        let gamma2 = (n * (zb - rb * gamma1) + ridge * m2) / a22;
        Ok(GammaEstimate {
            gamma1,
            gamma2,
            inverse_normal: [[a22 / det, -a12 / det], [-a12 / det, a11 / det]],
        })
    }
}

/// Spectral condition number of the symmetric positive semidefinite matrix
/// `[[a11, a12], [a12, a22]]` with determinant `det`; infinite when singular.
fn condition_number(a11: f64, a12: f64, a22: f64, det: f64) -> f64 {
    let hi = 0.5 * (a11 + a22) + (0.25 * (a11 - a22).powi(2) + a12 * a12).sqrt();
    if det.is_nan() || det <= 0.0 {
        return f64::INFINITY;
    }
    // the smaller eigenvalue is det / hi
    hi * hi / det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_ridge_is_prior_mean() {
        let e = RidgeEstimator::new(0.001, 10).unwrap().estimate().unwrap();
        assert_eq!((e.gamma1, e.gamma2), (0.0, 0.0));
    }

    #[test]
    fn empty_ols_needs_data() {
        let err = RidgeEstimator::new(0.0, 10)
            .unwrap()
            .estimate()
            .unwrap_err();
        assert!(matches!(err, Error::InsufficientData));
        assert!(err.to_string().starts_with("insufficient data"));
    }

    #[test]
    fn one_sample_ridge_by_hand() {
        let mut est = RidgeEstimator::new(0.001, 1).unwrap();
        est.update(1.0, 1.0).unwrap();
        let e = est.estimate().unwrap();
        // ([[1,1],[1,1]] + 0.001 I) b = [1,1]
        let expected = 1.0 / 2.001;
        assert!((e.gamma1 - expected).abs() < 1e-12);
        assert!((e.gamma2 - expected).abs() < 1e-12);
    }

    #[test]
    fn normal_matrix_by_hand() {
        let mut est = RidgeEstimator::new(0.0, 1).unwrap();
        est.update(1.0, 1.0).unwrap();
        est.update(2.0, 3.0).unwrap();
        assert_eq!(est.normal_matrix(), [[5.0, 3.0], [3.0, 2.0]]);
        assert_eq!(est.moment_vector(), [7.0, 4.0]);
        assert_eq!(est.len(), 2);
    }

    #[test]
    fn two_point_exact_fit() {
        let mut est = RidgeEstimator::new(0.0, 1).unwrap();
        est.update(1.0, 1.0).unwrap();
        est.update(2.0, 3.0).unwrap();
        let e = est.estimate().unwrap();
        assert!((e.gamma1 - 2.0).abs() < 1e-14);
        assert!((e.gamma2 + 1.0).abs() < 1e-14);
    }

    #[test]
    fn identical_prices_are_unidentifiable() {
        let mut est = RidgeEstimator::new(0.0, 7).unwrap();
        for z in [1.0, 1.5, 0.7, 1.1] {
            est.update(0.3, z).unwrap();
        }
        let err = est.estimate().unwrap_err();
        assert!(matches!(err, Error::Unidentifiable { .. }));
        assert!(err
            .to_string()
            .starts_with("unidentifiable: insufficient price variation"));
    }

    #[test]
    fn ridge_shrinkage_is_small_on_spread_design() {
        let (g1, g2, n) = (17.0, -25.0, 100usize);
        let mut est = RidgeEstimator::new(0.001, n).unwrap();
        for k in 0..50 {
            let lambda = 0.3 + 0.3 * k as f64 / 49.0;
            est.update(lambda, g1 * n as f64 * lambda + g2).unwrap();
        }
        let e = est.estimate().unwrap();
        assert!((e.gamma1 - g1).abs() <= 1e-2 * g1.abs());
        assert!((e.gamma2 - g2).abs() <= 1e-2 * g2.abs());
    }

    #[test]
    fn prior_mean_fixed_point() {
        let (g1, g2) = (2.0, -1.0);
        let mut est = RidgeEstimator::new(0.5, 1).unwrap().with_prior_mean(g1, g2);
        let e = est.estimate().unwrap();
        assert_eq!((e.gamma1, e.gamma2), (g1, g2));
        est.update(0.7, g1 * 0.7 + g2).unwrap();
        let e = est.estimate().unwrap();
        assert!((e.gamma1 - g1).abs() < 1e-14 && (e.gamma2 - g2).abs() < 1e-14);
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let mut est = RidgeEstimator::new(0.001, 3).unwrap();
        for (l, z) in [(0.2, 1.0), (0.5, 2.0), (0.4, 1.4)] {
            est.update(l, z).unwrap();
        }
        let c = est.estimate().unwrap().covariance(3.0);
        assert!((c[0][1] - c[1][0]).abs() < 1e-12);
        assert!(c[0][0] > 0.0 && c[1][1] > 0.0);
        assert!(c[0][0] * c[1][1] - c[0][1] * c[1][0] >= 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(RidgeEstimator::new(-1.0, 1).is_err());
        assert!(RidgeEstimator::new(0.1, 0).is_err());
        let mut est = RidgeEstimator::new(0.1, 1).unwrap();
        assert!(est.update(f64::NAN, 1.0).is_err());
        assert!(est.is_empty());
    }
}
