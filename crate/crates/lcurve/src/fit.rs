//! Weighted least-squares estimation of curve parameters, the penalized
//! grid search over gamma, the estimator covariance, and confidence bands.
//!
//! For a fixed gamma the model is linear: e = A theta with design columns
//! [1, n^gamma] (two-term variants), [n^gamma] (no-asymptote), or
//! [1, n^gamma, n^(2 gamma)] (three-term). The estimator is theta = M e with
//! M = (A' W A)^{-1} A' W formed explicitly, and its covariance is the
//! sandwich M Sigma_e M' rather than the textbook (A' Sigma_e^{-1} A)^{-1}:
//! the two coincide only when W = Sigma_e^{-1}, which the fold-count
//! weighting deliberately breaks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::model::{self, ModelVariant, PowerLawParams};
use crate::observations::ObservationSet;
use crate::smat::{self, M3};
use crate::variance::{self, VarianceModel};

/// Default run-to-run variance floor in percent^2. An alternative of 0.01
/// is in circulation for cases with little replication; pass it via
/// `sigma0_sq` explicitly.
pub const DEFAULT_SIGMA0_SQ: f64 = 0.02;

/// Per-observation weights w_ij in the least-squares objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightingScheme {
    /// w_ij = 1.
    #[serde(rename = "none")]
    Unweighted,
    /// w_ij = 1 / sigma_i^2.
    #[serde(rename = "invvar")]
    InvVar,
    /// w_ij = 1 / (F_i sigma_i^2): every size contributes equal total weight.
    #[serde(rename = "folds")]
    InvVarFolds,
}

impl WeightingScheme {
    pub fn name(self) -> &'static str {
        match self {
            WeightingScheme::Unweighted => "none",
            WeightingScheme::InvVar => "invvar",
            WeightingScheme::InvVarFolds => "folds",
        }
    }
}

impl std::fmt::Display for WeightingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for WeightingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(WeightingScheme::Unweighted),
            "invvar" => Ok(WeightingScheme::InvVar),
            "folds" => Ok(WeightingScheme::InvVarFolds),
            other => Err(Error::Config(format!(
                "unknown weighting {other:?}; expected folds, invvar, or none"
            ))),
        }
    }
}

/// The penalized search grid: gamma ranges over lo, lo+step, ..., hi and the
/// selected point minimizes G(gamma) + lambda * |gamma - prior_center|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSearchConfig {
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_step: f64,
    /// Penalty weight in percent^2; scale-sensitive, tuned for percent errors.
    pub lambda: f64,
    pub prior_center: f64,
}

impl Default for GammaSearchConfig {
    fn default() -> Self {
        Self { grid_lo: -0.99, grid_hi: -0.01, grid_step: 0.01, lambda: 5.0, prior_center: -0.5 }
    }
}

impl GammaSearchConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("grid_lo", self.grid_lo),
            ("grid_hi", self.grid_hi),
            ("grid_step", self.grid_step),
            ("lambda", self.lambda),
            ("prior_center", self.prior_center),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        if self.grid_lo > self.grid_hi {
            return Err(Error::Config(format!(
                "empty gamma grid: lo {} above hi {}",
                self.grid_lo, self.grid_hi
            )));
        }
        if !(self.grid_lo > -1.0 && self.grid_hi < 0.0) {
            return Err(Error::Config("gamma grid must lie strictly inside (-1, 0)".into()));
        }
        if self.grid_step <= 0.0 {
            return Err(Error::Config(format!("grid step must be > 0, got {}", self.grid_step)));
        }
        if self.lambda < 0.0 {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Grid points lo + k * step up to hi (with half-step slack against
    /// floating-point drift in the endpoint).
    pub fn grid(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let mut points = Vec::new();
        for k in 0.. {
            let g = self.grid_lo + k as f64 * self.grid_step;
            if g > self.grid_hi + 0.5 * self.grid_step {
                break;
            }
            points.push(g);
        }
        Ok(points)
    }
}

/// Thresholds for the poor-hyperparameter warnings; defaults reflect the
/// typical well-trained-classifier range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticThresholds {
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub min_r_squared: f64,
}

impl Default for DiagnosticThresholds {
    fn default() -> Self {
        Self { gamma_lo: -0.8, gamma_hi: -0.2, min_r_squared: 0.95 }
    }
}

/// Everything needed to reproduce a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub variant: ModelVariant,
    pub weighting: WeightingScheme,
    pub sigma0_sq: f64,
    pub search: GammaSearchConfig,
    pub thresholds: DiagnosticThresholds,
    /// Fixed gamma = -0.5 on only the three largest sizes; cheap preset for
    /// scans where most curves get only a handful of measurements.
    pub lightweight: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            variant: ModelVariant::Std,
            weighting: WeightingScheme::InvVarFolds,
            sigma0_sq: DEFAULT_SIGMA0_SQ,
            search: GammaSearchConfig::default(),
            thresholds: DiagnosticThresholds::default(),
            lightweight: false,
        }
    }
}

/// Symmetric k x k covariance of the free linear parameters, k <= 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance {
    k: usize,
    m: M3,
}

impl Covariance {
    pub(crate) fn new(k: usize, m: M3) -> Self {
        Self { k, m }
    }

    pub fn zero(k: usize) -> Self {
        assert!((1..=3).contains(&k));
        Self { k, m: smat::ZERO }
    }

    /// Builds from row-major nested vectors (as serialized in reports).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if !(1..=3).contains(&k) || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Config("covariance must be square, 1x1 to 3x3".into()));
        }
        let mut m = smat::ZERO;
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Config("covariance entries must be finite".into()));
                }
                m[i][j] = *v;
            }
        }
        Ok(Self { k, m })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.k && j < self.k);
        self.m[i][j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.k).map(|i| self.m[i][..self.k].to_vec()).collect()
    }

    /// x Sigma x' for a length-k row vector x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.k);
        let mut acc = 0.0;
        for i in 0..self.k {
            for j in 0..self.k {
                acc += x[i] * self.m[i][j] * x[j];
            }
        }
        acc
    }
}

/// Output of a fit: parameters plus everything needed to judge them.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: PowerLawParams,
    pub covariance: Covariance,
    pub variance_model: VarianceModel,
    pub weighting: WeightingScheme,
    /// Weighted residual sum G(gamma) at the returned parameters, percent^2.
    pub objective: f64,
    /// Weighted R^2 over all observations.
    pub r_squared: f64,
    pub warnings: Vec<Warning>,
}

/// Solution of the linear subproblem at one fixed gamma.
#[derive(Debug, Clone)]
pub struct LinearFit {
    /// Free linear parameters in design-column order.
    pub theta: Vec<f64>,
    pub covariance: Covariance,
    pub objective: f64,
}

fn observation_weight(weighting: WeightingScheme, sigma_sq: f64, fold_count: f64) -> f64 {
    match weighting {
        WeightingScheme::Unweighted => 1.0,
        WeightingScheme::InvVar => 1.0 / sigma_sq,
        WeightingScheme::InvVarFolds => 1.0 / (fold_count * sigma_sq),
    }
}

/// Per-observation weights in canonical row order. Exposed so the weighting
/// invariants (per-group totals, fold-replication behavior) can be asserted
/// on exactly the numbers the solver uses.
pub fn weight_vector(
    obs: &ObservationSet,
    weighting: WeightingScheme,
    vm: &VarianceModel,
) -> Result<Vec<f64>> {
    let mut weights = Vec::with_capacity(obs.num_observations());
    for g in obs.groups() {
        let sigma_sq = vm.predict(g.n())?;
        let w = observation_weight(weighting, sigma_sq, g.fold_count() as f64);
        if !w.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite weight at n = {}: variance {sigma_sq} too small",
                g.n()
            )));
        }
        weights.extend(std::iter::repeat_n(w, g.fold_count()));
    }
    Ok(weights)
}

struct Row {
    x: [f64; 3],
    w: f64,
    sigma_sq: f64,
    e: f64,
}

fn design_row(n: f64, gamma: f64, variant: ModelVariant) -> [f64; 3] {
    let t = model::pow(n, gamma);
    match variant {
        ModelVariant::Std | ModelVariant::FixedGamma => [1.0, t, 0.0],
        ModelVariant::NoAsymptote => [t, 0.0, 0.0],
        ModelVariant::Full3 => [1.0, t, model::pow(n, 2.0 * gamma)],
    }
}

fn build_rows(
    obs: &ObservationSet,
    gamma: f64,
    variant: ModelVariant,
    weighting: WeightingScheme,
    vm: &VarianceModel,
) -> Result<Vec<Row>> {
    let mut rows = Vec::with_capacity(obs.num_observations());
    for g in obs.groups() {
        let x = design_row(g.n() as f64, gamma, variant);
        let sigma_sq = vm.predict(g.n())?;
        let w = observation_weight(weighting, sigma_sq, g.fold_count() as f64);
        if !w.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite weight at n = {}: variance {sigma_sq} too small",
                g.n()
            )));
        }
        for o in g.observations() {
            rows.push(Row { x, w, sigma_sq, e: o.error });
        }
    }
    Ok(rows)
}

/// Solves the weighted normal equations (A' W A) theta = A' W e at a fixed
/// gamma and returns the estimator, its sandwich covariance, and the weighted
/// residual objective.
pub fn solve_linear(
    obs: &ObservationSet,
    gamma: f64,
    variant: ModelVariant,
    weighting: WeightingScheme,
    vm: &VarianceModel,
) -> Result<LinearFit> {
    if !(gamma > -1.0 && gamma < 0.0) {
        return Err(Error::Domain(format!("gamma = {gamma} outside (-1, 0)")));
    }
    let k = variant.linear_params();
    if obs.num_sizes() < k {
        return Err(Error::IllConditioned(format!(
            "{} distinct size(s) cannot identify {k} linear parameter(s)",
            obs.num_sizes()
        )));
    }
    let rows = build_rows(obs, gamma, variant, weighting, vm)?;

    let mut ata = smat::ZERO;
    for r in &rows {
        for i in 0..k {
            for j in i..k {
                ata[i][j] += r.w * r.x[i] * r.x[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            ata[i][j] = ata[j][i];
        }
    }
    let inv = smat::invert_spd(k, &ata)?;

    // Columns of M = (A' W A)^{-1} A' W, one per observation; then
    // theta = M e and Sigma_theta = M Sigma_e M'.
    let m_cols: Vec<[f64; 3]> = rows
        .iter()
        .map(|r| {
            let mut m = [0.0; 3];
            for i in 0..k {
                let mut acc = 0.0;
                for j in 0..k {
                    acc += inv[i][j] * r.x[j];
                }
                m[i] = r.w * acc;
            }
            m
        })
        .collect();

    let mut theta = [0.0; 3];
    for (r, m) in rows.iter().zip(&m_cols) {
        for i in 0..k {
            theta[i] += m[i] * r.e;
        }
    }

    let mut cov = smat::ZERO;
    for (r, m) in rows.iter().zip(&m_cols) {
        for i in 0..k {
            for j in i..k {
                cov[i][j] += r.sigma_sq * m[i] * m[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            cov[i][j] = cov[j][i];
        }
    }

    let mut objective = 0.0;
    for r in &rows {
        let mut pred = 0.0;
        for i in 0..k {
            pred += r.x[i] * theta[i];
        }
        objective += r.w * (r.e - pred) * (r.e - pred);
    }

    Ok(LinearFit { theta: theta[..k].to_vec(), covariance: Covariance::new(k, cov), objective })
}

/// The weighted residual sum at arbitrary parameters; lets callers verify
/// that a reported objective really is the objective of the reported curve.
pub fn objective_at(
    obs: &ObservationSet,
    params: &PowerLawParams,
    weighting: WeightingScheme,
    vm: &VarianceModel,
) -> Result<f64> {
    let weights = weight_vector(obs, weighting, vm)?;
    let mut acc = 0.0;
    for ((n, _, e), w) in obs.rows().zip(weights) {
        let r = e - model::evaluate(params, n as f64)?;
        acc += w * r * r;
    }
    Ok(acc)
}

fn weighted_r_squared(obs: &ObservationSet, weights: &[f64], ss_res: f64) -> f64 {
    let mut sum_w = 0.0;
    let mut sum_we = 0.0;
    for ((_, _, e), w) in obs.rows().zip(weights) {
        sum_w += w;
        sum_we += w * e;
    }
    let mean = sum_we / sum_w;
    let mut ss_tot = 0.0;
    for ((_, _, e), w) in obs.rows().zip(weights) {
        ss_tot += w * (e - mean) * (e - mean);
    }
    if ss_tot == 0.0 {
        // Constant data: the fit either reproduces the constant (residuals at
        // rounding scale) or cannot represent it at all.
        return if ss_res < 1e-12 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

/// Full fit: estimates the variance model, searches gamma over the penalized
/// grid (unless the variant pins it), and packages diagnostics.
pub fn fit_curve(
    obs: &ObservationSet,
    variant: ModelVariant,
    weighting: WeightingScheme,
    sigma0_sq: f64,
    search: &GammaSearchConfig,
) -> Result<FitResult> {
    let cfg = FitConfig {
        variant,
        weighting,
        sigma0_sq,
        search: *search,
        ..FitConfig::default()
    };
    fit_with_config(obs, &cfg)
}

/// As [`fit_curve`], driven by a [`FitConfig`] (which adds the diagnostic
/// thresholds and the lightweight preset).
pub fn fit_with_config(obs: &ObservationSet, cfg: &FitConfig) -> Result<FitResult> {
    let (variant, working) = if cfg.lightweight {
        (ModelVariant::FixedGamma, obs.restrict_to(&obs.largest_sizes(3)))
    } else {
        (cfg.variant, obs.clone())
    };

    let (vm, mut warnings) = variance::fit_sigma_hat(&working, cfg.sigma0_sq)?;
    let k = variant.linear_params();
    if variant.gamma_is_free() && working.num_sizes() < k + 1 {
        warnings.push(Warning::FewDistinctSizes { have: working.num_sizes(), want: k + 1 });
    }

    let (gamma_hat, linear) = if !variant.gamma_is_free() {
        (-0.5, solve_linear(&working, -0.5, variant, cfg.weighting, &vm)?)
    } else {
        let grid = cfg.search.grid()?;
        if grid.is_empty() {
            return Err(Error::Config("empty gamma grid".into()));
        }
        let lambda = cfg.search.lambda;
        let mut best: Option<(f64, f64, f64, LinearFit)> = None;
        for g in grid {
            let lf = solve_linear(&working, g, variant, cfg.weighting, &vm)?;
            let dist = (g - cfg.search.prior_center).abs();
            let total = lf.objective + lambda * dist;
            // Ties by smaller distance to the prior, then by the more
            // negative gamma (which ascending iteration reaches first).
            let better = match &best {
                None => true,
                Some((bt, bd, _, _)) => total < *bt || (total == *bt && dist < *bd),
            };
            if better {
                best = Some((total, dist, g, lf));
            }
        }
        let (_, _, g, lf) = best.expect("non-empty grid always yields a candidate");
        (g, lf)
    };

    let theta = &linear.theta;
    let params = match variant {
        ModelVariant::Std | ModelVariant::FixedGamma => {
            PowerLawParams::new(variant, theta[0], theta[1], gamma_hat, 0.0)?
        }
        ModelVariant::NoAsymptote => PowerLawParams::new(variant, 0.0, theta[0], gamma_hat, 0.0)?,
        ModelVariant::Full3 => {
            PowerLawParams::new(variant, theta[0], theta[1], gamma_hat, theta[2])?
        }
    };

    let weights = weight_vector(&working, cfg.weighting, &vm)?;
    let r_squared = weighted_r_squared(&working, &weights, linear.objective);

    if variant != ModelVariant::NoAsymptote && params.alpha < 0.0 {
        warnings.push(Warning::NegativeAlpha { alpha: params.alpha });
    }
    let thr = &cfg.thresholds;
    if !(thr.gamma_lo..=thr.gamma_hi).contains(&gamma_hat) {
        warnings.push(Warning::GammaOutsideTypicalRange {
            gamma: gamma_hat,
            lo: thr.gamma_lo,
            hi: thr.gamma_hi,
        });
    }
    if r_squared < thr.min_r_squared {
        warnings.push(Warning::PoorFit { r_squared, threshold: thr.min_r_squared });
    }

    Ok(FitResult {
        params,
        covariance: linear.covariance,
        variance_model: vm,
        weighting: cfg.weighting,
        objective: linear.objective,
        r_squared,
        warnings,
    })
}

/// 95% confidence band at size n for the fitted curve: e_hat(n) -+ 1.96 *
/// sqrt(x Sigma_theta x') with x the design row at the chosen gamma. The
/// band reflects estimator variance at that fixed gamma only; grid
/// uncertainty in gamma itself is not propagated.
pub fn confidence_band(fit: &FitResult, n: f64) -> Result<(f64, f64)> {
    confidence_band_at(&fit.params, &fit.covariance, n)
}

/// Same band from the pieces a serialized report carries.
pub fn confidence_band_at(
    params: &PowerLawParams,
    covariance: &Covariance,
    n: f64,
) -> Result<(f64, f64)> {
    if !n.is_finite() || n <= 0.0 {
        return Err(Error::Domain(format!("band requested at invalid size n = {n}")));
    }
    let x = design_row(n, params.gamma, params.variant);
    let k = covariance.dim();
    let var = covariance.quadratic_form(&x[..k]);
    if var < -1e-12 {
        return Err(Error::Covariance(format!(
            "negative predictive variance {var} at n = {n}; covariance is not PSD"
        )));
    }
    let half = 1.96 * var.max(0.0).sqrt();
    let center = model::evaluate(params, n)?;
    Ok((center - half, center + half))
}
