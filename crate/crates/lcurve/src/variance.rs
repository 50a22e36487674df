//! Per-size error variance: sigma_i^2 = sigma0_sq + sigma_hat_sq / n_i.
//!
//! sigma0_sq is the run-to-run floor (random initialization and optimization);
//! sigma_hat_sq / n_i is the variance from sampling the training set. Pooling
//! a single sigma_hat_sq across sizes keeps the estimate usable even where a
//! size has only one or two folds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::observations::ObservationSet;

/// The two-component noise model. Units are percent^2 (and percent^2 * samples
/// for sigma_hat_sq).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceModel {
    pub sigma0_sq: f64,
    pub sigma_hat_sq: f64,
}

impl VarianceModel {
    /// Validating constructor: sigma0_sq > 0, sigma_hat_sq >= 0, both finite.
    pub fn new(sigma0_sq: f64, sigma_hat_sq: f64) -> Result<Self> {
        if !sigma0_sq.is_finite() || sigma0_sq <= 0.0 {
            return Err(Error::Config(format!("sigma0_sq must be > 0, got {sigma0_sq}")));
        }
        if !sigma_hat_sq.is_finite() || sigma_hat_sq < 0.0 {
            return Err(Error::Config(format!("sigma_hat_sq must be >= 0, got {sigma_hat_sq}")));
        }
        Ok(Self { sigma0_sq, sigma_hat_sq })
    }

    /// sigma_i^2 at training size n.
    pub fn predict(&self, n: u64) -> Result<f64> {
        if n < 1 {
            return Err(Error::Domain("variance prediction requires n >= 1".into()));
        }
        Ok(self.sigma0_sq + self.sigma_hat_sq / n as f64)
    }
}

/// Least-squares estimate of sigma_hat_sq with the intercept pinned to
/// sigma0_sq: regresses per-size unbiased sample variances s_i^2 on
/// x_i = 1/n_i over groups with F_i >= 2,
/// sigma_hat_sq = max(0, sum x_i (s_i^2 - sigma0_sq) / sum x_i^2).
///
/// With no replicated size the coefficient defaults to 0 and a warning is
/// returned; negative solutions are clamped to 0.
pub fn fit_sigma_hat(
    obs: &ObservationSet,
    sigma0_sq: f64,
) -> Result<(VarianceModel, Vec<Warning>)> {
    if !sigma0_sq.is_finite() || sigma0_sq <= 0.0 {
        return Err(Error::Config(format!("sigma0_sq must be > 0, got {sigma0_sq}")));
    }
    let mut sum_xy = 0.0;
    let mut sum_xx = 0.0;
    let mut replicated = false;
    for g in obs.groups() {
        if let Some(s_sq) = g.sample_variance() {
            replicated = true;
            let x = 1.0 / g.n() as f64;
            sum_xy += x * (s_sq - sigma0_sq);
            sum_xx += x * x;
        }
    }
    let mut warnings = Vec::new();
    let sigma_hat_sq = if replicated {
        (sum_xy / sum_xx).max(0.0)
    } else {
        warnings.push(Warning::NoReplicatedSizes);
        0.0
    };
    Ok((VarianceModel { sigma0_sq, sigma_hat_sq }, warnings))
}
