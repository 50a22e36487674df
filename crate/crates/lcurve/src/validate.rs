//! Validation protocols: leave-one-size-out prediction, paired t-tests
//! between configurations, and Monte-Carlo stability resampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::fit::{self, FitConfig};
use crate::model;
use crate::observations::ObservationSet;
use crate::rng::NormalSource;
use crate::stats;
use crate::variance;

/// One held-out size in a LOSO run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosoSizeResult {
    pub held_out_n: u64,
    /// Curve prediction at the held-out size, fit without that size.
    pub predicted_mean: f64,
    /// Empirical mean of the held-out group.
    pub empirical_mean: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosoReport {
    pub per_size: Vec<LosoSizeResult>,
    /// Root mean square of (predicted - empirical); None when no size could
    /// be held out and refit.
    pub rmse: Option<f64>,
    pub warnings: Vec<String>,
}

/// For each distinct size: fit on the remaining sizes, predict the held-out
/// group's mean, and aggregate the prediction errors. Sizes whose removal
/// leaves an unfittable subset are skipped with a warning.
pub fn leave_one_size_out(obs: &ObservationSet, cfg: &FitConfig) -> Result<LosoReport> {
    let mut per_size = Vec::new();
    let mut warnings = Vec::new();
    for n in obs.sizes().collect::<Vec<_>>() {
        let subset = obs.without_size(n);
        match fit::fit_with_config(&subset, cfg) {
            Ok(f) => {
                let predicted_mean = model::evaluate(&f.params, n as f64)?;
                let empirical_mean = obs.group(n).expect("size taken from obs").mean();
                per_size.push(LosoSizeResult {
                    held_out_n: n,
                    predicted_mean,
                    empirical_mean,
                    abs_error: (predicted_mean - empirical_mean).abs(),
                });
            }
            Err(e @ (Error::IllConditioned(_) | Error::Domain(_))) => {
                warnings.push(Warning::SkippedSize { n, reason: e.to_string() }.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    let rmse = if per_size.is_empty() {
        None
    } else {
        let ms = per_size.iter().map(|r| r.abs_error * r.abs_error).sum::<f64>()
            / per_size.len() as f64;
        Some(ms.sqrt())
    };
    Ok(LosoReport { per_size, rmse, warnings })
}

/// Result of a two-sided paired t-test.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedTTest {
    /// Infinite when the differences share a nonzero value exactly.
    pub t: f64,
    pub p: f64,
    pub warnings: Vec<Warning>,
}

/// t = mean(d) / (sd(d)/sqrt(k)) with unbiased sd; two-sided p from the
/// Student t distribution with k-1 degrees of freedom.
///
/// Degenerate cases by convention: all differences exactly zero gives
/// (t, p) = (0, 1); zero spread around a nonzero mean gives t = +-infinity
/// and p = 0 with a warning.
pub fn paired_t_test(diffs: &[f64]) -> Result<PairedTTest> {
    let k = diffs.len();
    if k < 2 {
        return Err(Error::Domain(format!("paired t-test needs >= 2 differences, got {k}")));
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::Domain("paired differences must be finite".into()));
    }
    if diffs.iter().all(|&d| d == 0.0) {
        return Ok(PairedTTest { t: 0.0, p: 1.0, warnings: vec![] });
    }
    let kf = k as f64;
    let mean = diffs.iter().sum::<f64>() / kf;
    let ss: f64 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum();
    let sd = (ss / (kf - 1.0)).sqrt();
    if sd == 0.0 {
        let t = if mean > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        return Ok(PairedTTest { t, p: 0.0, warnings: vec![Warning::ZeroVarianceDiffs] });
    }
    let t = mean / (sd / kf.sqrt());
    let p = stats::student_t_two_sided_p(t, kf - 1.0)?;
    Ok(PairedTTest { t, p, warnings: vec![] })
}

/// Predictions at one probe size across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeStat {
    pub n: u64,
    /// Empirical mean at this size in the source data; None when the size
    /// was never observed (then abs_errors stays empty).
    pub truth: Option<f64>,
    pub predictions: Vec<f64>,
    pub abs_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub replicates: usize,
    /// Reference size for (e_ref, beta_ref): the largest resampled size.
    pub n_ref: u64,
    pub std_e_ref: f64,
    pub std_beta_ref: f64,
    pub std_gamma: f64,
    pub std_alpha: f64,
    pub mean_e_ref: f64,
    pub mean_beta_ref: f64,
    pub mean_gamma: f64,
    pub mean_alpha: f64,
    pub probes: Vec<ProbeStat>,
    pub warnings: Vec<String>,
}

fn mean_and_sample_std(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (k - 1.0)).sqrt())
}

/// Quantifies refit scatter: per replicate, draws ONE observation per
/// requested size (Normal around the group mean, with the sample std when
/// the group is replicated and the pooled variance model's std otherwise),
/// refits, and records (e_ref, beta_ref, gamma, alpha) plus predictions at
/// the probe sizes.
///
/// Replicate r uses its own derived stream (seed, r), so results do not
/// depend on evaluation order.
pub fn stability_resample(
    obs: &ObservationSet,
    sizes: &[u64],
    replicates: usize,
    seed: u64,
    cfg: &FitConfig,
    probes: &[u64],
) -> Result<StabilityReport> {
    if replicates < 2 {
        return Err(Error::Config(format!("stability needs >= 2 replicates, got {replicates}")));
    }
    if sizes.is_empty() {
        return Err(Error::Config("stability needs at least one size".into()));
    }
    let mut sorted_sizes = sizes.to_vec();
    sorted_sizes.sort_unstable();
    sorted_sizes.dedup();

    let (vm, _) = variance::fit_sigma_hat(obs, cfg.sigma0_sq)?;
    let mut per_size = Vec::with_capacity(sorted_sizes.len());
    for &n in &sorted_sizes {
        let g = obs
            .group(n)
            .ok_or_else(|| Error::Config(format!("size {n} not present in the data")))?;
        let std = match g.sample_variance() {
            Some(v) => v.sqrt(),
            None => vm.predict(n)?.sqrt(),
        };
        per_size.push((n, g.mean(), std));
    }
    let n_ref = *sorted_sizes.last().expect("sizes checked non-empty");

    let mut e_refs = Vec::with_capacity(replicates);
    let mut beta_refs = Vec::with_capacity(replicates);
    let mut gammas = Vec::with_capacity(replicates);
    let mut alphas = Vec::with_capacity(replicates);
    let mut predictions: Vec<Vec<f64>> = probes.iter().map(|_| Vec::new()).collect();
    let mut clipped = 0usize;

    for r in 0..replicates {
        let mut src = NormalSource::new(seed, r as u64);
        let mut rows = Vec::with_capacity(per_size.len());
        for &(n, mean, std) in &per_size {
            let raw = mean + std * src.next_normal();
            let e = raw.clamp(0.0, 100.0);
            if e != raw {
                clipped += 1;
            }
            rows.push((n, None, e));
        }
        let sample = ObservationSet::from_rows(rows)?;
        let f = fit::fit_with_config(&sample, cfg)?;
        let s = model::summarize(&f.params, n_ref)?;
        e_refs.push(s.e_ref);
        beta_refs.push(s.beta_ref);
        gammas.push(s.gamma);
        alphas.push(f.params.alpha);
        for (slot, &pn) in predictions.iter_mut().zip(probes) {
            slot.push(model::evaluate(&f.params, pn as f64)?);
        }
    }

    let probes_out = probes
        .iter()
        .zip(predictions)
        .map(|(&pn, preds)| {
            let truth = obs.group(pn).map(|g| g.mean());
            let abs_errors = match truth {
                Some(t) => preds.iter().map(|p| (p - t).abs()).collect(),
                None => Vec::new(),
            };
            ProbeStat { n: pn, truth, predictions: preds, abs_errors }
        })
        .collect();

    let mut warnings = Vec::new();
    if clipped > 0 {
        warnings.push(Warning::ClippedSamples { count: clipped }.to_string());
    }
    let (mean_e_ref, std_e_ref) = mean_and_sample_std(&e_refs);
    let (mean_beta_ref, std_beta_ref) = mean_and_sample_std(&beta_refs);
    let (mean_gamma, std_gamma) = mean_and_sample_std(&gammas);
    let (mean_alpha, std_alpha) = mean_and_sample_std(&alphas);
    Ok(StabilityReport {
        replicates,
        n_ref,
        std_e_ref,
        std_beta_ref,
        std_gamma,
        std_alpha,
        mean_e_ref,
        mean_beta_ref,
        mean_gamma,
        mean_alpha,
        probes: probes_out,
        warnings,
    })
}
