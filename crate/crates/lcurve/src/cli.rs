//! Command-line surface. Subcommands cover the full workflow: simulate a
//! dataset, fit it, compare and validate fits, extrapolate a report, and
//! render SVG figures. Outputs are deterministic given identical inputs.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Read;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result, Warning};
use crate::fit::{self, FitConfig, GammaSearchConfig, WeightingScheme};
use crate::io::{self, Report};
use crate::model::{self, ModelVariant, PowerLawParams};
use crate::observations::ObservationSet;
use crate::plot::{self, PlotCurve, PlotSpec, DEFAULT_PALETTE};
use crate::synth::{self, SyntheticSpec};
use crate::validate;
use crate::variance::VarianceModel;

/// Parses argv, dispatches, and maps errors to exit codes: 0 success,
/// 1 usage, 2 data, 3 numerical failure. All errors go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    check_thread_env();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// A single worker is always within any requested cap, so the variable only
/// needs validating.
fn check_thread_env() {
    if let Ok(v) = std::env::var("LCURVE_THREADS") {
        match v.parse::<usize>() {
            Ok(k) if k >= 1 => {}
            _ => eprintln!("warning: ignoring invalid LCURVE_THREADS value {v:?}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "lcurve",
    version,
    about = "Fit, compare, validate, and extrapolate classifier learning curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit curves to a CSV dataset and emit JSON reports
    Fit(FitCmd),
    /// Evaluate a fitted report at a new size, exact and linearized
    Extrapolate(ExtrapolateCmd),
    /// Fit several curves and print a comparison table
    Compare(CompareCmd),
    /// Leave-one-size-out validation of fit quality
    ValidateLoso(ValidateLosoCmd),
    /// Measure refit scatter under resampled observations
    Stability(StabilityCmd),
    /// Generate a synthetic dataset from known curve parameters
    Simulate(SimulateCmd),
    /// Render fitted curves to SVG
    Plot(PlotCmd),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV dataset path; "-" reads stdin
    #[arg(long, default_value = "-")]
    input: String,
    /// Error column holds fractions in [0, 1] instead of percent
    #[arg(long)]
    fraction: bool,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output path; stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitFlags {
    /// Model variant: std, fixed-gamma, no-asymptote, or full3
    #[arg(long, default_value = "std")]
    variant: String,
    /// Observation weighting: folds, invvar, or none
    #[arg(long, default_value = "folds")]
    weighting: String,
    /// Fold-count-independent variance floor, percent^2
    #[arg(long = "sigma0-sq", default_value_t = fit::DEFAULT_SIGMA0_SQ)]
    sigma0_sq: f64,
    /// Strength of the penalty pulling gamma toward -0.5
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    lambda: f64,
    /// Gamma search grid as LO:HI:STEP
    #[arg(long = "gamma-grid", default_value = "-0.99:-0.01:0.01", allow_hyphen_values = true)]
    gamma_grid: String,
    /// Fix gamma = -0.5 and fit only the 3 largest sizes
    #[arg(long)]
    lightweight: bool,
}

#[derive(Args, Debug)]
struct FitCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    out: OutputArgs,
    #[command(flatten)]
    fit: FitFlags,
    /// Reference size for (e_N, beta_N); default: largest observed size
    #[arg(long = "n-ref")]
    n_ref: Option<u64>,
    /// Also render the fits to this SVG file
    #[arg(long, value_name = "FILE")]
    plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExtrapolateCmd {
    /// Fit report (JSON) path; "-" reads stdin
    #[arg(long, default_value = "-")]
    input: String,
    #[command(flatten)]
    out: OutputArgs,
    /// Target training set size
    #[arg(long)]
    n: u64,
    /// Re-reference the summary to this size before linearizing
    #[arg(long = "n-ref")]
    n_ref: Option<u64>,
}

#[derive(Args, Debug)]
struct CompareCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    out: OutputArgs,
    #[command(flatten)]
    fit: FitFlags,
    /// Reference size for (e_N, beta_N); default: largest observed size
    #[arg(long = "n-ref")]
    n_ref: Option<u64>,
    /// Add pairwise paired t-tests on leave-one-size-out errors
    #[arg(long)]
    paired: bool,
}

#[derive(Args, Debug)]
struct ValidateLosoCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    out: OutputArgs,
    #[command(flatten)]
    fit: FitFlags,
}

#[derive(Args, Debug)]
struct StabilityCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    out: OutputArgs,
    #[command(flatten)]
    fit: FitFlags,
    /// Number of resampled refits
    #[arg(long, default_value_t = 50)]
    replicates: usize,
    /// Base seed for the replicate streams
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sizes to resample, comma-separated; default: all observed sizes
    #[arg(long)]
    sizes: Option<String>,
    /// Sizes at which to record predictions, comma-separated
    #[arg(long)]
    probes: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateCmd {
    #[command(flatten)]
    out: OutputArgs,
    /// Asymptotic error, percent
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Power-law scale
    #[arg(long, allow_hyphen_values = true)]
    eta: f64,
    /// Power-law exponent in (-1, 0)
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    /// Second-order coefficient; nonzero selects the full3 variant
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta: f64,
    /// Fold-count-independent variance floor, percent^2
    #[arg(long = "sigma0-sq", default_value_t = fit::DEFAULT_SIGMA0_SQ)]
    sigma0_sq: f64,
    /// Between-fold variance scale, percent^2
    #[arg(long = "sigma-hat-sq", default_value_t = 0.0)]
    sigma_hat_sq: f64,
    /// Fold schedule as comma-separated n:folds pairs, sizes increasing
    #[arg(long, default_value = "25:16,50:8,100:4,200:2,400:1")]
    schedule: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// curve_id written to the CSV
    #[arg(long = "curve-id", default_value = "synthetic")]
    curve_id: String,
}

#[derive(Args, Debug)]
struct PlotCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    out: OutputArgs,
    #[command(flatten)]
    fit: FitFlags,
    /// Reference size for the legend summary; default: largest observed
    #[arg(long = "n-ref")]
    n_ref: Option<u64>,
    /// Draw translucent 95% confidence bands
    #[arg(long)]
    band: bool,
    /// Vertical dashed marker at this size
    #[arg(long = "marker-n")]
    marker_n: Option<f64>,
    /// Lower end of the plotted size range; default: smallest observed
    #[arg(long = "x-min")]
    x_min: Option<f64>,
    /// Upper end of the plotted size range; default: largest observed
    #[arg(long = "x-max")]
    x_max: Option<f64>,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 500)]
    height: u32,
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(cmd) => run_fit(cmd),
        Command::Extrapolate(cmd) => run_extrapolate(cmd),
        Command::Compare(cmd) => run_compare(cmd),
        Command::ValidateLoso(cmd) => run_validate_loso(cmd),
        Command::Stability(cmd) => run_stability(cmd),
        Command::Simulate(cmd) => run_simulate(cmd),
        Command::Plot(cmd) => run_plot(cmd),
    }
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        Ok(fs::read_to_string(path)?)
    }
}

fn write_output(out: &OutputArgs, content: &str) -> Result<()> {
    match &out.output {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn load_curves(data: &DataArgs) -> Result<BTreeMap<String, ObservationSet>> {
    let text = read_input(&data.input)?;
    let curves = io::parse_dataset(text.as_bytes(), data.fraction)?;
    if curves.is_empty() {
        return Err(Error::Parse { line: None, msg: "input contains no data rows".into() });
    }
    Ok(curves)
}

fn parse_gamma_grid(text: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Config(format!("gamma grid must be LO:HI:STEP, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let step: f64 = parts[2].parse().map_err(|_| bad())?;
    Ok((lo, hi, step))
}

fn parse_size_list(text: &str) -> Result<Vec<u64>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("invalid size {p:?} in list {text:?}")))
        })
        .collect()
}

fn parse_schedule(text: &str) -> Result<Vec<(u64, u32)>> {
    text.split(',')
        .map(|pair| {
            let bad =
                || Error::Config(format!("schedule entries must be n:folds, got {pair:?}"));
            let (n, folds) = pair.trim().split_once(':').ok_or_else(bad)?;
            Ok((n.parse().map_err(|_| bad())?, folds.parse().map_err(|_| bad())?))
        })
        .collect()
}

fn fit_config_from(flags: &FitFlags) -> Result<FitConfig> {
    let variant: ModelVariant = flags.variant.parse()?;
    let weighting: WeightingScheme = flags.weighting.parse()?;
    let (grid_lo, grid_hi, grid_step) = parse_gamma_grid(&flags.gamma_grid)?;
    let search = GammaSearchConfig {
        grid_lo,
        grid_hi,
        grid_step,
        lambda: flags.lambda,
        ..GammaSearchConfig::default()
    };
    search.validate()?;
    Ok(FitConfig {
        variant,
        weighting,
        sigma0_sq: flags.sigma0_sq,
        search,
        lightweight: flags.lightweight,
        ..FitConfig::default()
    })
}

fn to_pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}

/// One curve serializes as a single object, several as curve_id-keyed map.
fn singleton_or_map<T: serde::Serialize>(items: BTreeMap<String, T>) -> String {
    if items.len() == 1 {
        to_pretty_json(items.values().next().expect("len checked"))
    } else {
        to_pretty_json(&items)
    }
}

fn fit_all(
    curves: &BTreeMap<String, ObservationSet>,
    cfg: &FitConfig,
    n_ref: Option<u64>,
) -> Result<Vec<Report>> {
    let mut reports = Vec::with_capacity(curves.len());
    for (id, obs) in curves {
        let result = fit::fit_with_config(obs, cfg)?;
        let n_ref = n_ref
            .or_else(|| obs.max_n())
            .ok_or_else(|| Error::Domain(format!("curve {id} has no observations")))?;
        let report = Report::from_fit(id, obs, &result, cfg, n_ref)?;
        for w in &report.warnings {
            eprintln!("warning [{id}]: {w}");
        }
        reports.push(report);
    }
    Ok(reports)
}

fn plot_spec_for(
    curves: &BTreeMap<String, ObservationSet>,
    reports: &[Report],
    x_range: (f64, f64),
    band: bool,
    marker_n: Option<f64>,
    width: u32,
    height: u32,
) -> PlotSpec {
    let plot_curves = reports
        .iter()
        .enumerate()
        .map(|(i, report)| PlotCurve {
            observations: curves.get(&report.curve_id).cloned(),
            label: report.curve_id.clone(),
            color: DEFAULT_PALETTE[i % DEFAULT_PALETTE.len()].to_string(),
            report: report.clone(),
        })
        .collect();
    PlotSpec { curves: plot_curves, x_range, band, marker_n, width, height }
}

fn observed_range(curves: &BTreeMap<String, ObservationSet>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for obs in curves.values() {
        for n in obs.sizes() {
            lo = lo.min(n as f64);
            hi = hi.max(n as f64);
        }
    }
    (lo, hi)
}

fn run_fit(cmd: FitCmd) -> Result<()> {
    let curves = load_curves(&cmd.data)?;
    let cfg = fit_config_from(&cmd.fit)?;
    let reports = fit_all(&curves, &cfg, cmd.n_ref)?;
    let table = io::render_summary_table(&reports);

    let by_id: BTreeMap<String, Report> =
        reports.iter().map(|r| (r.curve_id.clone(), r.clone())).collect();
    let json = singleton_or_map(by_id);
    match &cmd.out.output {
        Some(path) => {
            fs::write(path, json)?;
            print!("{table}");
        }
        None => {
            print!("{json}");
            eprint!("{table}");
        }
    }

    if let Some(svg_path) = &cmd.plot {
        let spec =
            plot_spec_for(&curves, &reports, observed_range(&curves), true, None, 800, 500);
        fs::write(svg_path, plot::render_svg(&spec)?)?;
    }
    Ok(())
}

fn run_extrapolate(cmd: ExtrapolateCmd) -> Result<()> {
    let report = Report::from_json(&read_input(&cmd.input)?)?;
    let summary = match cmd.n_ref {
        Some(n_ref) => model::summarize(&report.params, n_ref)?,
        None => report.summary,
    };
    let n = cmd.n as f64;
    let exact = model::evaluate(&report.params, n)?;
    let linearized = model::extrapolate_linearized(&summary, n / summary.n_ref as f64)?;
    let limit = 4.0 * report.max_observed_n as f64;
    if n > limit {
        eprintln!("warning: {}", Warning::ExtrapolationBeyondRange { n, limit });
    }
    write_output(&cmd.out, &format!("exact = {exact}\nlinearized = {linearized}\n"))
}

fn run_compare(cmd: CompareCmd) -> Result<()> {
    let curves = load_curves(&cmd.data)?;
    if cmd.paired && curves.len() < 2 {
        return Err(Error::Config("--paired needs at least two curves".into()));
    }
    let cfg = fit_config_from(&cmd.fit)?;
    let mut reports = fit_all(&curves, &cfg, cmd.n_ref)?;
    reports.sort_by(|a, b| {
        a.summary
            .e_ref
            .total_cmp(&b.summary.e_ref)
            .then_with(|| a.curve_id.cmp(&b.curve_id))
    });
    let mut out = io::render_summary_table(&reports);

    if cmd.paired {
        let mut loso_errors: BTreeMap<&str, BTreeMap<u64, f64>> = BTreeMap::new();
        for report in &reports {
            let obs = &curves[&report.curve_id];
            let loso = validate::leave_one_size_out(obs, &cfg)?;
            loso_errors.insert(
                report.curve_id.as_str(),
                loso.per_size.iter().map(|r| (r.held_out_n, r.abs_error)).collect(),
            );
        }
        out.push('\n');
        for i in 0..reports.len() {
            for j in i + 1..reports.len() {
                let a = reports[i].curve_id.as_str();
                let b = reports[j].curve_id.as_str();
                let ea = &loso_errors[a];
                let eb = &loso_errors[b];
                let diffs: Vec<f64> = ea
                    .iter()
                    .filter_map(|(n, va)| eb.get(n).map(|vb| va - vb))
                    .collect();
                if diffs.len() < 2 {
                    out.push_str(&format!(
                        "{a} vs {b}: not enough shared sizes for a paired test\n"
                    ));
                    continue;
                }
                let test = validate::paired_t_test(&diffs)?;
                out.push_str(&format!("{a} vs {b}: t = {:.4}, p = {:.4}\n", test.t, test.p));
            }
        }
    }
    write_output(&cmd.out, &out)
}

fn run_validate_loso(cmd: ValidateLosoCmd) -> Result<()> {
    let curves = load_curves(&cmd.data)?;
    let cfg = fit_config_from(&cmd.fit)?;
    let mut results = BTreeMap::new();
    for (id, obs) in &curves {
        results.insert(id.clone(), validate::leave_one_size_out(obs, &cfg)?);
    }
    write_output(&cmd.out, &singleton_or_map(results))
}

fn run_stability(cmd: StabilityCmd) -> Result<()> {
    let curves = load_curves(&cmd.data)?;
    let cfg = fit_config_from(&cmd.fit)?;
    let probes = match &cmd.probes {
        Some(text) => parse_size_list(text)?,
        None => Vec::new(),
    };
    let mut results = BTreeMap::new();
    for (id, obs) in &curves {
        let sizes = match &cmd.sizes {
            Some(text) => parse_size_list(text)?,
            None => obs.sizes().collect(),
        };
        let report =
            validate::stability_resample(obs, &sizes, cmd.replicates, cmd.seed, &cfg, &probes)?;
        results.insert(id.clone(), report);
    }
    write_output(&cmd.out, &singleton_or_map(results))
}

fn run_simulate(cmd: SimulateCmd) -> Result<()> {
    let params = if cmd.delta != 0.0 {
        PowerLawParams::full3(cmd.alpha, cmd.eta, cmd.gamma, cmd.delta)?
    } else {
        PowerLawParams::std(cmd.alpha, cmd.eta, cmd.gamma)?
    };
    let spec = SyntheticSpec {
        params,
        noise: VarianceModel::new(cmd.sigma0_sq, cmd.sigma_hat_sq)?,
        schedule: parse_schedule(&cmd.schedule)?,
        seed: cmd.seed,
    };
    let (obs, warnings) = synth::generate(&spec)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut curves = BTreeMap::new();
    curves.insert(cmd.curve_id.clone(), obs);
    let mut buf = Vec::new();
    io::write_dataset(&mut buf, &curves)?;
    let text = String::from_utf8(buf).expect("CSV output is UTF-8");
    write_output(&cmd.out, &text)
}

fn run_plot(cmd: PlotCmd) -> Result<()> {
    let curves = load_curves(&cmd.data)?;
    let cfg = fit_config_from(&cmd.fit)?;
    let reports = fit_all(&curves, &cfg, cmd.n_ref)?;
    let (lo, hi) = observed_range(&curves);
    let x_range = (cmd.x_min.unwrap_or(lo), cmd.x_max.unwrap_or(hi));
    let spec = plot_spec_for(
        &curves,
        &reports,
        x_range,
        cmd.band,
        cmd.marker_n,
        cmd.width,
        cmd.height,
    );
    write_output(&cmd.out, &plot::render_svg(&spec)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_grid_parses_and_rejects() {
        assert_eq!(parse_gamma_grid("-0.99:-0.01:0.01").unwrap(), (-0.99, -0.01, 0.01));
        assert_eq!(parse_gamma_grid("-0.5:-0.5:1").unwrap(), (-0.5, -0.5, 1.0));
        assert!(parse_gamma_grid("-0.99:-0.01").is_err());
        assert!(parse_gamma_grid("a:b:c").is_err());
        assert!(parse_gamma_grid("").is_err());
    }

    #[test]
    fn schedule_parses_and_rejects() {
        assert_eq!(
            parse_schedule("25:16,50:8,100:4,200:2,400:1").unwrap(),
            vec![(25, 16), (50, 8), (100, 4), (200, 2), (400, 1)]
        );
        assert_eq!(parse_schedule("10:1").unwrap(), vec![(10, 1)]);
        assert!(parse_schedule("10").is_err());
        assert!(parse_schedule("10:x").is_err());
        assert!(parse_schedule("").is_err());
    }

    #[test]
    fn size_lists_parse() {
        assert_eq!(parse_size_list("25, 50,100").unwrap(), vec![25, 50, 100]);
        assert!(parse_size_list("25,-50").is_err());
        assert!(parse_size_list("").is_err());
    }

    #[test]
    fn default_flags_reproduce_the_default_fit_config() {
        let flags = FitFlags {
            variant: "std".into(),
            weighting: "folds".into(),
            sigma0_sq: fit::DEFAULT_SIGMA0_SQ,
            lambda: 5.0,
            gamma_grid: "-0.99:-0.01:0.01".into(),
            lightweight: false,
        };
        assert_eq!(fit_config_from(&flags).unwrap(), FitConfig::default());
        let bad = FitFlags { variant: "quadratic".into(), ..flags };
        assert!(matches!(fit_config_from(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn help_and_version_exit_zero_without_a_subcommand_error() {
        assert_eq!(run(["lcurve", "--help"]), 0);
        assert_eq!(run(["lcurve", "--version"]), 0);
        assert_eq!(run(["lcurve", "no-such-command"]), 1);
        assert_eq!(run(["lcurve", "fit", "--no-such-flag"]), 1);
    }
}
