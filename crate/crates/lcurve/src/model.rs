//! Learning-curve functional forms, the (e_N, beta_N) characterization, and
//! the linearized extrapolation predictor.
//!
//! Errors are percentages in [0, 100] throughout the crate; the curve itself
//! is e(n) = alpha + eta * n^gamma (+ delta * n^(2 gamma) for the
//! three-term variant) with gamma strictly inside (-1, 0).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// n^gamma computed as exp(gamma * ln n).
///
/// Every curve evaluation in the crate goes through this helper so fitted,
/// predicted, and plotted values agree bit for bit. Callers guarantee n > 0.
pub fn pow(n: f64, gamma: f64) -> f64 {
    (gamma * n.ln()).exp()
}

/// Which terms of alpha + eta * n^gamma + delta * n^(2 gamma) are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    /// Free alpha and eta, gamma chosen by grid search.
    Std,
    /// Free alpha and eta, gamma pinned to -0.5.
    FixedGamma,
    /// Free eta only; alpha pinned to zero.
    NoAsymptote,
    /// Free alpha, eta, and delta.
    Full3,
}

impl ModelVariant {
    /// Number of free linear parameters (design-matrix columns).
    pub fn linear_params(self) -> usize {
        match self {
            ModelVariant::Std | ModelVariant::FixedGamma => 2,
            ModelVariant::NoAsymptote => 1,
            ModelVariant::Full3 => 3,
        }
    }

    /// Whether gamma is chosen by grid search rather than pinned.
    pub fn gamma_is_free(self) -> bool {
        !matches!(self, ModelVariant::FixedGamma)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Std => "std",
            ModelVariant::FixedGamma => "fixed-gamma",
            ModelVariant::NoAsymptote => "no-asymptote",
            ModelVariant::Full3 => "full3",
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "std" => Ok(ModelVariant::Std),
            "fixed-gamma" => Ok(ModelVariant::FixedGamma),
            "no-asymptote" => Ok(ModelVariant::NoAsymptote),
            "full3" => Ok(ModelVariant::Full3),
            other => Err(Error::Config(format!(
                "unknown variant {other:?}; expected std, fixed-gamma, no-asymptote, or full3"
            ))),
        }
    }
}

/// Raw curve parameters. alpha may be negative after an unconstrained fit;
/// that condition carries a warning, never a silent clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawParams {
    pub variant: ModelVariant,
    /// Asymptotic error in percent; exactly 0 for NoAsymptote.
    pub alpha: f64,
    /// Data-sensitivity coefficient in percent.
    pub eta: f64,
    /// Decay exponent, strictly inside (-1, 0); exactly -0.5 for FixedGamma.
    pub gamma: f64,
    /// Coefficient of n^(2 gamma); exactly 0 unless Full3.
    pub delta: f64,
}

impl PowerLawParams {
    pub fn new(variant: ModelVariant, alpha: f64, eta: f64, gamma: f64, delta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("eta", eta), ("gamma", gamma), ("delta", delta)] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite, got {v}")));
            }
        }
        if !(gamma > -1.0 && gamma < 0.0) {
            return Err(Error::Domain(format!("gamma = {gamma} outside (-1, 0)")));
        }
        if variant == ModelVariant::FixedGamma && gamma != -0.5 {
            return Err(Error::Domain(format!("fixed-gamma requires gamma = -0.5, got {gamma}")));
        }
        if variant == ModelVariant::NoAsymptote && alpha != 0.0 {
            return Err(Error::Domain(format!("no-asymptote requires alpha = 0, got {alpha}")));
        }
        if variant != ModelVariant::Full3 && delta != 0.0 {
            return Err(Error::Domain(format!("delta = {delta} only allowed for full3")));
        }
        Ok(Self { variant, alpha, eta, gamma, delta })
    }

    pub fn std(alpha: f64, eta: f64, gamma: f64) -> Result<Self> {
        Self::new(ModelVariant::Std, alpha, eta, gamma, 0.0)
    }

    pub fn fixed_gamma(alpha: f64, eta: f64) -> Result<Self> {
        Self::new(ModelVariant::FixedGamma, alpha, eta, -0.5, 0.0)
    }

    pub fn no_asymptote(eta: f64, gamma: f64) -> Result<Self> {
        Self::new(ModelVariant::NoAsymptote, 0.0, eta, gamma, 0.0)
    }

    pub fn full3(alpha: f64, eta: f64, gamma: f64, delta: f64) -> Result<Self> {
        Self::new(ModelVariant::Full3, alpha, eta, gamma, delta)
    }
}

/// The reference-size characterization (e_N, beta_N, gamma, N).
///
/// beta_ref is the data-reliance: N^(-0.5) times the curve slope in
/// n^(-0.5) coordinates at n = N. It predicts the error change under
/// dataset rescaling and, unlike alpha and eta, stays stable across
/// refits of the same data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    /// Curve value at n_ref, percent.
    pub e_ref: f64,
    /// Data-reliance at n_ref, percent.
    pub beta_ref: f64,
    pub gamma: f64,
    pub n_ref: u64,
    /// Variant of the source parameters; Full3 summaries cannot be inverted
    /// back to parameters.
    pub variant: ModelVariant,
}

/// Curve value at training size n: alpha + eta * n^gamma + delta * n^(2 gamma).
pub fn evaluate(params: &PowerLawParams, n: f64) -> Result<f64> {
    if !n.is_finite() || n <= 0.0 {
        return Err(Error::Domain(format!("training size n = {n} must be positive")));
    }
    let mut e = params.alpha + params.eta * pow(n, params.gamma);
    if params.delta != 0.0 {
        e += params.delta * pow(n, 2.0 * params.gamma);
    }
    Ok(e)
}

/// Characterizes a curve at reference size n_ref.
///
/// beta_ref = -2 * eta * gamma * N^gamma, extended for Full3 by the chain
/// rule on the same definition to -2*eta*gamma*N^gamma - 4*delta*gamma*N^(2 gamma).
pub fn summarize(params: &PowerLawParams, n_ref: u64) -> Result<CurveSummary> {
    if n_ref < 1 {
        return Err(Error::Domain("reference size n_ref must be >= 1".into()));
    }
    let nf = n_ref as f64;
    let e_ref = evaluate(params, nf)?;
    let mut beta_ref = -2.0 * params.eta * params.gamma * pow(nf, params.gamma);
    if params.variant == ModelVariant::Full3 {
        beta_ref -= 4.0 * params.delta * params.gamma * pow(nf, 2.0 * params.gamma);
    }
    Ok(CurveSummary { e_ref, beta_ref, gamma: params.gamma, n_ref, variant: params.variant })
}

/// Inverts summarize for the two-term variants:
/// eta = -beta_ref / (2 gamma N^gamma), alpha = e_ref - eta * N^gamma.
pub fn unsummarize(summary: &CurveSummary) -> Result<PowerLawParams> {
    if summary.variant == ModelVariant::Full3 {
        return Err(Error::UnsupportedVariant(
            "full3 summaries are not invertible: delta cannot be recovered from (e_ref, beta_ref)"
                .into(),
        ));
    }
    if summary.n_ref < 1 {
        return Err(Error::Domain("reference size n_ref must be >= 1".into()));
    }
    let t = pow(summary.n_ref as f64, summary.gamma);
    let eta = -summary.beta_ref / (2.0 * summary.gamma * t);
    let alpha = match summary.variant {
        ModelVariant::NoAsymptote => 0.0,
        _ => summary.e_ref - eta * t,
    };
    PowerLawParams::new(summary.variant, alpha, eta, summary.gamma, 0.0)
}

/// First-order prediction of the error after scaling the dataset by d:
/// e_ref + (1/sqrt(d) - 1) * beta_ref.
///
/// Exact for gamma = -0.5 (the curve is linear in n^(-0.5)); a local
/// approximation otherwise. d = 4 reduces the error by exactly beta_ref/2,
/// d = 1/4 increases it by exactly beta_ref.
pub fn extrapolate_linearized(summary: &CurveSummary, d: f64) -> Result<f64> {
    if !d.is_finite() || d <= 0.0 {
        return Err(Error::Domain(format!("size multiplier d = {d} must be positive")));
    }
    Ok(summary.e_ref + (1.0 / d.sqrt() - 1.0) * summary.beta_ref)
}

/// d -> infinity limit of the linearized predictor: e_ref - beta_ref.
///
/// Equals alpha exactly when gamma = -0.5; an approximation of the true
/// asymptote for other exponents.
pub fn asymptote_linearized(summary: &CurveSummary) -> f64 {
    summary.e_ref - summary.beta_ref
}
