//! Acceptance gate: one test per criterion, each printing a PASS/FAIL line
//! (visible with --nocapture). Checks are exact algebra, independent
//! oracles, or Monte-Carlo statistics on synthetic data; no external data.

use std::f64::consts::PI;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use lcurve::fit::{self, FitConfig, GammaSearchConfig, WeightingScheme};
use lcurve::model::{self, ModelVariant, PowerLawParams};
use lcurve::observations::ObservationSet;
use lcurve::synth::{self, SyntheticSpec};
use lcurve::validate;
use lcurve::variance::{self, VarianceModel};

fn check(criterion: &str, ok: bool, detail: String) {
    if ok {
        println!("PASS: {criterion} [{detail}]");
    } else {
        println!("FAIL: {criterion} [{detail}]");
        panic!("{criterion} failed: {detail}");
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn reference_spec(params: PowerLawParams, sigma_hat_sq: f64, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        params,
        noise: VarianceModel::new(0.02, sigma_hat_sq).unwrap(),
        schedule: synth::reference_schedule(),
        seed,
    }
}

#[test]
fn criterion_01_exact_interpolation() {
    // Two sizes, gamma fixed at -0.5: e(25) = 50, e(400) = 20 comes from
    // alpha = 10, eta = 200. Hand-solved 2x2 system as the oracle.
    let (u1, u2) = (0.2, 0.05);
    let (e1, e2) = (50.0, 20.0);
    let eta_oracle = (e1 - e2) / (u1 - u2);
    let alpha_oracle = e2 - eta_oracle * u2;

    let obs = ObservationSet::from_rows([(25u64, None, e1), (400, None, e2)]).unwrap();
    let cfg = FitConfig { variant: ModelVariant::FixedGamma, ..FitConfig::default() };
    let result = fit::fit_with_config(&obs, &cfg).unwrap();

    let mut best = f64::INFINITY;
    for _ in 0..10 {
        let start = Instant::now();
        let _ = fit::fit_with_config(&obs, &cfg).unwrap();
        best = best.min(start.elapsed().as_secs_f64());
    }

    let ok = (result.params.alpha - 10.0).abs() < 1e-9
        && (result.params.eta - 200.0).abs() < 1e-9
        && (alpha_oracle - 10.0).abs() < 1e-9
        && (eta_oracle - 200.0).abs() < 1e-9
        && best < 1e-3;
    check(
        "criterion 1: exact two-point interpolation, < 1 ms",
        ok,
        format!(
            "alpha = {}, eta = {}, fastest fit {:.3} ms",
            result.params.alpha,
            result.params.eta,
            best * 1e3
        ),
    );
}

#[test]
fn criterion_02_reparameterization_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let alpha = 0.1 + 39.9 * uniform(&mut rng);
        let eta = 1.0 + 299.0 * uniform(&mut rng);
        let gamma = -0.95 + 0.90 * uniform(&mut rng);
        let n_ref = 10 + (uniform(&mut rng) * 1e6) as u64;
        let params = PowerLawParams::std(alpha, eta, gamma).unwrap();
        let summary = model::summarize(&params, n_ref).unwrap();
        let back = model::unsummarize(&summary).unwrap();
        worst = worst
            .max(rel(back.alpha, alpha))
            .max(rel(back.eta, eta))
            .max(rel(back.gamma, gamma));
    }
    check(
        "criterion 2: 1000 summarize/unsummarize round trips to 1e-10",
        worst < 1e-10,
        format!("worst relative error {worst:.3e}"),
    );
}

#[test]
fn criterion_03_linearized_extrapolation_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut worst = 0.0f64;
    let mut literal_ok = true;
    for _ in 0..100 {
        let alpha = 0.1 + 30.0 * uniform(&mut rng);
        let eta = 5.0 + 200.0 * uniform(&mut rng);
        let n_ref = 16 + (uniform(&mut rng) * 1e6) as u64;
        let params = PowerLawParams::fixed_gamma(alpha, eta).unwrap();
        let summary = model::summarize(&params, n_ref).unwrap();
        for d in [1.0 / 16.0, 0.25, 1.0, 4.0, 16.0] {
            let linearized = model::extrapolate_linearized(&summary, d).unwrap();
            let exact = model::evaluate(&params, d * n_ref as f64).unwrap();
            worst = worst.max(rel(linearized, exact));
        }
        // Literal claims: 4x the data removes 0.5 beta_N; 1/4 adds beta_N.
        let gain = summary.e_ref - model::extrapolate_linearized(&summary, 4.0).unwrap();
        let loss = model::extrapolate_linearized(&summary, 0.25).unwrap() - summary.e_ref;
        literal_ok &= rel(gain, 0.5 * summary.beta_ref) < 1e-10;
        literal_ok &= rel(loss, summary.beta_ref) < 1e-10;
    }
    check(
        "criterion 3: linearized rule exact for gamma = -0.5, d in {1/16..16}",
        worst < 1e-10 && literal_ok,
        format!("worst relative gap {worst:.3e}, literal checks {literal_ok}"),
    );
}

#[test]
fn criterion_04_gamma_search_matches_brute_force() {
    // Independently coded selection loop: same public linear solver per
    // grid point, but its own penalty, comparison, and tie-break logic.
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let cfg = FitConfig::default();
    let grid = GammaSearchConfig::default().grid().unwrap();
    let mut agree = 0;
    for seed in 0..50u64 {
        let truth = PowerLawParams::std(
            2.0 + 13.0 * uniform(&mut rng),
            50.0 + 200.0 * uniform(&mut rng),
            -0.8 + 0.6 * uniform(&mut rng),
        )
        .unwrap();
        let spec = reference_spec(truth, 6.0 * uniform(&mut rng), seed);
        let (obs, _) = synth::generate(&spec).unwrap();

        let fitted = fit::fit_with_config(&obs, &cfg).unwrap();

        let (vm, _) = variance::fit_sigma_hat(&obs, 0.02).unwrap();
        let mut best: Option<(f64, f64, f64)> = None;
        for &g in &grid {
            let lf =
                fit::solve_linear(&obs, g, ModelVariant::Std, WeightingScheme::InvVarFolds, &vm)
                    .unwrap();
            let dist = (g - (-0.5)).abs();
            let total = lf.objective + 5.0 * dist;
            let take = match best {
                None => true,
                Some((bt, bd, _)) => total < bt || (total == bt && dist < bd),
            };
            if take {
                best = Some((total, dist, g));
            }
        }
        let oracle_gamma = best.unwrap().2;
        if oracle_gamma.to_bits() == fitted.params.gamma.to_bits() {
            agree += 1;
        }
    }
    check(
        "criterion 4: gamma grid argmin matches brute-force oracle on 50 datasets",
        agree == 50,
        format!("{agree}/50 agreements"),
    );
}

#[test]
fn criterion_05_noiseless_recovery() {
    let cfg = FitConfig::default();
    let mut failures = Vec::new();
    for (gamma_true, gamma_tol) in [(-0.30, 0.01 + 1e-12), (-0.50, 1e-12)] {
        let truth = PowerLawParams::std(5.0, 100.0, gamma_true).unwrap();
        let spec = SyntheticSpec {
            params: truth,
            // Zero noise: every draw equals the curve exactly.
            noise: VarianceModel { sigma0_sq: 0.0, sigma_hat_sq: 0.0 },
            schedule: synth::reference_schedule(),
            seed: 0,
        };
        let (obs, _) = synth::generate(&spec).unwrap();
        let fitted = fit::fit_with_config(&obs, &cfg).unwrap();
        if (fitted.params.gamma - gamma_true).abs() > gamma_tol
            || rel(fitted.params.alpha, 5.0) > 1e-6
            || rel(fitted.params.eta, 100.0) > 1e-6
        {
            failures.push(format!(
                "gamma_true {gamma_true}: got ({}, {}, {})",
                fitted.params.alpha, fitted.params.eta, fitted.params.gamma
            ));
        }
    }
    check(
        "criterion 5: noiseless recovery of (5, 100, -0.30) and (5, 100, -0.50)",
        failures.is_empty(),
        failures.join("; "),
    );
}

#[test]
fn criterion_06_band_coverage() {
    let start = Instant::now();
    let truth = PowerLawParams::fixed_gamma(8.0, 150.0).unwrap();
    let true_e400 = model::evaluate(&truth, 400.0).unwrap();
    let cfg = FitConfig { variant: ModelVariant::FixedGamma, ..FitConfig::default() };
    let mut covered = 0;
    for seed in 0..1000u64 {
        let (obs, _) = synth::generate(&reference_spec(truth, 4.0, seed)).unwrap();
        let fitted = fit::fit_with_config(&obs, &cfg).unwrap();
        let (lo, hi) = fit::confidence_band(&fitted, 400.0).unwrap();
        if (lo..=hi).contains(&true_e400) {
            covered += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let rate = covered as f64 / 1000.0;
    check(
        "criterion 6: 95% band covers true e(400) in 95% +- 3% of 1000 seeds, < 60 s",
        (0.92..=0.98).contains(&rate) && elapsed < 60.0,
        format!("coverage {rate:.3}, elapsed {elapsed:.1} s"),
    );
}

#[test]
fn criterion_07_alpha_less_stable_than_e400() {
    let truth = PowerLawParams::std(6.0, 120.0, -0.35).unwrap();
    let cfg = FitConfig::default();
    let mut wins = 0;
    for seed in 0..100u64 {
        let (obs, _) = synth::generate(&reference_spec(truth, 4.0, seed)).unwrap();
        let sizes: Vec<u64> = obs.sizes().collect();
        let report = validate::stability_resample(&obs, &sizes, 100, seed, &cfg, &[]).unwrap();
        let cv_alpha = report.std_alpha / report.mean_alpha.abs();
        let cv_e = report.std_e_ref / report.mean_e_ref.abs();
        if cv_alpha > cv_e {
            wins += 1;
        }
    }
    check(
        "criterion 7: CV(alpha) exceeds CV(e_400) in >= 90 of 100 stability runs",
        wins >= 90,
        format!("{wins}/100 master seeds"),
    );
}

#[test]
fn criterion_08_fold_weighting_totals_exact() {
    let vm = VarianceModel::new(0.02, 4.0).unwrap();
    let mut rows = Vec::new();
    let schedule = [(25u64, 16u32), (50, 8), (200, 2), (400, 1)];
    for &(n, folds) in &schedule {
        for j in 0..folds {
            rows.push((n, Some(j), 20.0 + j as f64));
        }
    }
    let obs = ObservationSet::from_rows(rows).unwrap();
    let weights = fit::weight_vector(&obs, WeightingScheme::InvVarFolds, &vm).unwrap();

    let mut ok = true;
    let mut detail = String::new();
    let mut offset = 0;
    for &(n, folds) in &schedule {
        let w = weights[offset];
        ok &= weights[offset..offset + folds as usize].iter().all(|&wi| wi == w);
        // Bitwise equality: fold counts are powers of two, so the group
        // total w * F is an exact scaling of 1 / sigma^2.
        let total = w * folds as f64;
        let expect = 1.0 / vm.predict(n).unwrap();
        ok &= total.to_bits() == expect.to_bits();
        detail.push_str(&format!("F={folds}: total={total:.6e} want={expect:.6e}; "));
        offset += folds as usize;
    }
    check(
        "criterion 8: group weight totals equal 1/sigma^2 exactly for F in {1,2,8,16}",
        ok,
        detail,
    );
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// CDF by quadrature alone: substituting x = sqrt(df) tan(theta) turns the
/// density into cos^(df-1), and normalizing numerically avoids any shared
/// gamma-function code with the implementation under test.
fn t_cdf_oracle(t: f64, df: f64) -> f64 {
    let integrand = |theta: f64| theta.cos().powf(df - 1.0);
    let upper = (t / df.sqrt()).atan();
    let num = simpson(integrand, -PI / 2.0, upper, 20_000);
    let den = simpson(integrand, -PI / 2.0, PI / 2.0, 20_000);
    num / den
}

#[test]
fn criterion_09_t_distribution_numerics() {
    let mut worst = 0.0f64;
    for df in [1.0, 4.0, 30.0, 100.0] {
        for t in [-8.0, -2.0, -0.5, 0.0, 0.7, 2.5, 6.0] {
            let got = lcurve::stats::student_t_cdf(t, df).unwrap();
            worst = worst.max((got - t_cdf_oracle(t, df)).abs());
        }
    }
    let example = validate::paired_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    let ok = worst < 1e-6
        && (example.t - 4.2426).abs() < 1e-4
        && (example.p - 0.0132).abs() < 5e-4;
    check(
        "criterion 9: t CDF matches quadrature oracle to 1e-6; worked example",
        ok,
        format!("worst cdf gap {worst:.3e}, t = {}, p = {}", example.t, example.p),
    );
}

/// P(X >= k) for X ~ Binomial(n, 1/2), by direct summation.
fn sign_test_tail(n: u64, k: u64) -> f64 {
    let mut coeff = 1.0f64;
    let mut total = 0.0f64;
    for i in 0..=n {
        if i >= k {
            total += coeff;
        }
        coeff = coeff * (n - i) as f64 / (i + 1) as f64;
    }
    total / 2.0f64.powi(n as i32)
}

#[test]
fn criterion_10_loso_ranks_std_above_no_asymptote() {
    let truth = PowerLawParams::std(8.0, 150.0, -0.45).unwrap();
    let cfg_std = FitConfig::default();
    let cfg_na = FitConfig { variant: ModelVariant::NoAsymptote, ..FitConfig::default() };
    let mut wins = 0u64;
    for seed in 0..100u64 {
        let (obs, _) = synth::generate(&reference_spec(truth, 4.0, seed)).unwrap();
        let rmse_std = validate::leave_one_size_out(&obs, &cfg_std).unwrap().rmse.unwrap();
        let rmse_na = validate::leave_one_size_out(&obs, &cfg_na).unwrap().rmse.unwrap();
        if rmse_std < rmse_na {
            wins += 1;
        }
    }
    let p = sign_test_tail(100, wins);
    check(
        "criterion 10: std variant beats no-asymptote on LOSO (sign test p < 0.01)",
        p < 0.01,
        format!("{wins}/100 wins, sign-test p = {p:.3e}"),
    );
}

#[test]
fn criterion_11_lightweight_agrees_with_full_fit() {
    let truth = PowerLawParams::std(8.0, 150.0, -0.5).unwrap();
    let cfg_full = FitConfig::default();
    let cfg_light = FitConfig { lightweight: true, ..FitConfig::default() };
    let mut sq_e = 0.0;
    let mut sq_beta = 0.0;
    for seed in 0..100u64 {
        let (obs, _) = synth::generate(&reference_spec(truth, 4.0, seed)).unwrap();
        let full = fit::fit_with_config(&obs, &cfg_full).unwrap();
        let light = fit::fit_with_config(&obs, &cfg_light).unwrap();
        let s_full = model::summarize(&full.params, 400).unwrap();
        let s_light = model::summarize(&light.params, 400).unwrap();
        sq_e += (s_full.e_ref - s_light.e_ref).powi(2);
        sq_beta += (s_full.beta_ref - s_light.beta_ref).powi(2);
    }
    let rms_e = (sq_e / 100.0).sqrt();
    let rms_beta = (sq_beta / 100.0).sqrt();
    check(
        "criterion 11: lightweight preset within RMS 1.0 (e_400) and 2.0 (beta_400)",
        rms_e < 1.0 && rms_beta < 2.0,
        format!("rms e_400 gap {rms_e:.3}, rms beta_400 gap {rms_beta:.3}"),
    );
}

#[test]
fn criterion_12_pipeline_is_byte_deterministic() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_lcurve");
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name);

    let run_pipeline = |tag: &str| {
        let csv = path(&format!("sim_{tag}.csv"));
        let json = path(&format!("report_{tag}.json"));
        let svg = path(&format!("plot_{tag}.svg"));
        let sim = Command::new(bin)
            .args(["simulate", "--alpha", "8", "--eta", "150", "--gamma", "-0.5"])
            .args(["--sigma-hat-sq", "4", "--seed", "5", "--output"])
            .arg(&csv)
            .output()
            .unwrap();
        assert!(sim.status.success(), "simulate failed: {sim:?}");
        let fit = Command::new(bin)
            .arg("fit")
            .arg("--input")
            .arg(&csv)
            .arg("--output")
            .arg(&json)
            .arg("--plot")
            .arg(&svg)
            .output()
            .unwrap();
        assert!(fit.status.success(), "fit failed: {fit:?}");
        (
            std::fs::read(&csv).unwrap(),
            std::fs::read(&json).unwrap(),
            std::fs::read(&svg).unwrap(),
        )
    };

    let (csv_a, json_a, svg_a) = run_pipeline("a");
    let (csv_b, json_b, svg_b) = run_pipeline("b");
    let ok = !csv_a.is_empty()
        && !json_a.is_empty()
        && !svg_a.is_empty()
        && csv_a == csv_b
        && json_a == json_b
        && svg_a == svg_b;
    check(
        "criterion 12: simulate -> fit -> plot twice gives identical bytes",
        ok,
        format!(
            "csv {} vs {} bytes, json {} vs {}, svg {} vs {}",
            csv_a.len(),
            csv_b.len(),
            json_a.len(),
            json_b.len(),
            svg_a.len(),
            svg_b.len()
        ),
    );
}
