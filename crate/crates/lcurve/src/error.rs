//! Error and warning types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation
    /// (e.g. a non-positive training size).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration (empty gamma grid, unknown size, bad flag value).
    #[error("config error: {0}")]
    Config(String),

    /// Malformed input data. Carries a 1-based line number when known.
    #[error("parse error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<u64>, msg: String },

    /// The weighted normal equations are too ill-conditioned to solve.
    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    /// The estimator covariance violated its positive-semidefinite contract.
    #[error("covariance error: {0}")]
    Covariance(String),

    /// The requested operation is not defined for this model variant.
    #[error("unsupported variant: {0}")]
    UnsupportedVariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for this error: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnsupportedVariant(_) => 1,
            Error::Parse { .. } | Error::Io(_) | Error::Json(_) => 2,
            Error::Domain(_) | Error::IllConditioned(_) | Error::Covariance(_) => 3,
        }
    }
}

/// Non-fatal diagnostics attached to fits and reports.
///
/// Warnings never change numeric results; they flag conditions the user
/// should look at before trusting a curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The unconstrained fit produced a negative asymptotic error.
    NegativeAlpha { alpha: f64 },
    /// The fitted exponent fell outside the typical well-trained range.
    GammaOutsideTypicalRange { gamma: f64, lo: f64, hi: f64 },
    /// Weighted R-squared below the poor-hyperparameter threshold.
    PoorFit { r_squared: f64, threshold: f64 },
    /// No size group had two or more folds, so the size-dependent variance
    /// coefficient defaulted to zero.
    NoReplicatedSizes,
    /// Fewer distinct training sizes than recommended for a free-exponent fit.
    FewDistinctSizes { have: usize, want: usize },
    /// Synthetic draws were clipped into the valid error range.
    ClippedSamples { count: usize },
    /// A held-out size was skipped because the remaining data was unfittable.
    SkippedSize { n: u64, reason: String },
    /// Paired differences had zero spread around a nonzero mean.
    ZeroVarianceDiffs,
    /// Prediction requested beyond the trusted extrapolation range.
    ExtrapolationBeyondRange { n: f64, limit: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::NegativeAlpha { alpha } => {
                write!(f, "negative fitted asymptotic error alpha = {alpha:.6}")
            }
            Warning::GammaOutsideTypicalRange { gamma, lo, hi } => {
                write!(f, "gamma = {gamma:.2} outside typical range [{lo:.2}, {hi:.2}]")
            }
            Warning::PoorFit { r_squared, threshold } => {
                write!(f, "weighted R^2 = {r_squared:.4} below {threshold:.2}; check hyperparameters")
            }
            Warning::NoReplicatedSizes => {
                write!(f, "no size has >= 2 folds; sigma_hat_sq defaulted to 0")
            }
            Warning::FewDistinctSizes { have, want } => {
                write!(f, "only {have} distinct sizes; {want} recommended for a free-gamma fit")
            }
            Warning::ClippedSamples { count } => {
                write!(f, "{count} synthetic draw(s) clipped into [0, 100]")
            }
            Warning::SkippedSize { n, reason } => {
                write!(f, "size {n} skipped: {reason}")
            }
            Warning::ZeroVarianceDiffs => {
                write!(f, "paired differences have zero variance and nonzero mean; p = 0 by convention")
            }
            Warning::ExtrapolationBeyondRange { n, limit } => {
                write!(f, "n = {n} beyond the trusted extrapolation limit {limit}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Error::Config("x".into()).exit_code(), 1);
        assert_eq!(Error::Parse { line: Some(3), msg: "x".into() }.exit_code(), 2);
        assert_eq!(Error::IllConditioned("x".into()).exit_code(), 3);
    }

    #[test]
    fn parse_error_mentions_line() {
        let e = Error::Parse { line: Some(7), msg: "bad number".into() };
        assert!(e.to_string().contains("line 7"));
    }
}
