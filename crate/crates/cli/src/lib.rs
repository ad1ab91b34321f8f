//! The `skewcast` command line: fit, forecast, sensitivity and report.
//!
//! Exit codes: 0 success, 1 data or usage error, 2 sampler failure,
//! 3 convergence failure (some R-hat above 1.01).

// `!(x <= y)` is used on purpose so that NaN takes the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;

use std::fs;
use std::path::Path;

use clap::Parser;
use skewcast::dataio::{self, QuantityRow, RunArtifacts, ScenarioRow};
use skewcast::model::{to_reporting_scale, DeathSeries, Posterior, PriorSpec};
use skewcast::plot::{self, Layer};
use skewcast::quantities::{self, ForecastSummary, DEFAULT_HORIZON};
use skewcast::sampler::diagnostics::{diagnostics, ParamDiagnostics};
use skewcast::sampler::{nuts_sample, sample_initials_best_of, stream_rng};
use skewcast::{DrawMatrix, Execution, SamplerConfig};

pub use args::{expand_config, Cli, Command};
use args::{DataArgs, FitArgs, ForecastArgs, ReportArgs, SamplerArgs, SensitivityArgs};

/// Largest R-hat accepted without `--allow-unconverged`.
pub const RHAT_LIMIT: f64 = 1.01;

const INIT_STREAM: u64 = 1 << 40;
/// Prior draws scored per chain when choosing initial values.
pub const INIT_CANDIDATES: usize = 10;
const BAND_SALT: u64 = 0xb4d5_b4d5_b4d5_b4d5;

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Usage(String),
    Data(String),
    Sampler(String),
    Unconverged(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Data(_) => 1,
            Failure::Sampler(_) => 2,
            Failure::Unconverged(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Data(m) => write!(f, "data: {m}"),
            Failure::Sampler(m) => write!(f, "sampler: {m}"),
            Failure::Unconverged(m) => write!(f, "diagnostics: {m}"),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Forecast(a) => cmd_forecast(&a),
        Command::Sensitivity(a) => cmd_sensitivity(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

/// Reads, corrects (China) and indexes the series named by the data flags.
pub fn load_series(data: &DataArgs) -> Result<DeathSeries, Failure> {
    let bytes =
        fs::read(&data.data).map_err(|e| Failure::Data(format!("{}: {e}", data.data.display())))?;
    let mut rows = dataio::parse_ecdc_csv(&bytes)
        .map_err(|e| Failure::Data(format!("{}: {e}", data.data.display())))?;
    if data.country == "China" && !data.no_correction {
        dataio::apply_china_correction_rows(&mut rows);
    }
    let built = dataio::build_series_with_population(
        &rows,
        &data.country,
        data.origin,
        data.population_millions,
    )
    .map_err(|e| Failure::Data(e.to_string()))?;
    Ok(built.series)
}

pub fn sampler_config(s: &SamplerArgs) -> SamplerConfig {
    SamplerConfig {
        chains: s.chains,
        warmup: s.warmup,
        samples: s.samples,
        target_accept: s.target_accept,
        max_tree_depth: s.max_tree_depth,
        seed: s.seed,
        ..SamplerConfig::default()
    }
}

/// Output of one fit.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Sampling scale (`log_p, log_alpha, log_beta, eta`).
    pub draws: DrawMatrix,
    /// Reporting scale (`log_p, log_alpha, beta, eta`).
    pub reporting: DrawMatrix,
    pub diagnostics: Option<Vec<ParamDiagnostics>>,
    pub forecast: ForecastSummary,
}

impl FitOutcome {
    /// Largest R-hat, `None` without diagnostics.
    pub fn max_rhat(&self) -> Option<f64> {
        self.diagnostics
            .as_ref()
            .map(|d| d.iter().map(|p| p.rhat).fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Samples the posterior of `series` under `prior`, then computes the
/// forecast summary over `horizon` days. Each chain starts from the best of
/// [`INIT_CANDIDATES`] prior draws.
pub fn fit_series(
    series: &DeathSeries,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
    horizon: usize,
) -> Result<FitOutcome, Failure> {
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let mut rng = stream_rng(cfg.seed, INIT_STREAM);
    let posterior = Posterior::new(series, prior);
    let init: Vec<Vec<f64>> =
        sample_initials_best_of(prior, &posterior, cfg.chains, INIT_CANDIDATES, &mut rng)
            .map_err(|e| Failure::Sampler(e.to_string()))?
            .into_iter()
            .map(|t| t.to_array().to_vec())
            .collect();
    let draws = nuts_sample(&posterior, &init, cfg).map_err(|e| Failure::Sampler(e.to_string()))?;
    let reporting = to_reporting_scale(&draws);
    let diagnostics = if reporting.n_chains() >= 2 {
        Some(diagnostics(&reporting).map_err(|e| Failure::Sampler(e.to_string()))?)
    } else {
        log::warn!("R-hat unavailable with a single chain");
        None
    };
    let forecast = quantities::forecast(
        &draws,
        series.population_millions(),
        horizon,
        cfg.seed ^ BAND_SALT,
        Execution::default(),
    )
    .map_err(|e| Failure::Sampler(format!("forecast: {e}")))?;
    Ok(FitOutcome {
        draws,
        reporting,
        diagnostics,
        forecast,
    })
}

fn write_fit(out: &Path, series: &DeathSeries, fit: &FitOutcome) -> Result<(), Failure> {
    dataio::write_outputs(
        out,
        &RunArtifacts {
            draws: &fit.reporting,
            forecast: &fit.forecast,
            diagnostics: fit.diagnostics.as_deref(),
            observed: series,
        },
    )
    .map_err(|e| Failure::Data(e.to_string()))
}

fn check_convergence(fit: &FitOutcome, allow: bool, context: &str) -> Result<(), Failure> {
    match fit.max_rhat() {
        Some(r) if !(r <= RHAT_LIMIT) => {
            let msg = format!("{context}max R-hat {r:.4} exceeds {RHAT_LIMIT}");
            if allow {
                log::warn!("{msg}");
                Ok(())
            } else {
                Err(Failure::Unconverged(msg))
            }
        }
        _ => Ok(()),
    }
}

pub fn cmd_fit(a: &FitArgs) -> Result<(), Failure> {
    let series = load_series(&a.data)?;
    let horizon = a.horizon.unwrap_or(DEFAULT_HORIZON.max(series.len()));
    let fit = fit_series(
        &series,
        &PriorSpec::flat(),
        &sampler_config(&a.sampler),
        horizon,
    )?;
    write_fit(&a.out, &series, &fit)?;
    check_convergence(&fit, a.sampler.allow_unconverged, "")
}

/// Transfer prior from a summary.csv.
pub fn load_prior(path: &Path, inflation: f64, p_free: bool) -> Result<PriorSpec, Failure> {
    let rows = dataio::read_summary(path).map_err(|e| Failure::Data(e.to_string()))?;
    dataio::prior_from_summary(&rows, inflation, p_free)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

pub fn cmd_forecast(a: &ForecastArgs) -> Result<(), Failure> {
    let series = load_series(&a.data)?;
    let prior = load_prior(&a.transfer.prior, a.inflate, a.transfer.p_free)?;
    let fit = fit_series(
        &series,
        &prior,
        &sampler_config(&a.sampler),
        a.transfer.horizon,
    )?;
    write_fit(&a.out, &series, &fit)?;
    check_convergence(&fit, a.sampler.allow_unconverged, "")
}

/// I, II, III, ... for scenario `k` (0-based).
pub fn scenario_name(k: usize) -> String {
    const NUMERALS: [(usize, &str); 9] = [
        (100, "C"),
        (90, "XC"),
        (50, "L"),
        (40, "XL"),
        (10, "X"),
        (9, "IX"),
        (5, "V"),
        (4, "IV"),
        (1, "I"),
    ];
    let mut n = k + 1;
    let mut s = String::new();
    for (value, numeral) in NUMERALS {
        while n >= value {
            s.push_str(numeral);
            n -= value;
        }
    }
    s
}

pub const SENSITIVITY_FILE: &str = "sensitivity.csv";
pub const SENSITIVITY_PLOT: &str = "sensitivity.svg";

pub fn cmd_sensitivity(a: &SensitivityArgs) -> Result<(), Failure> {
    if a.factors.is_empty() || a.factors.iter().any(|f| !(*f > 0.0)) {
        return Err(Failure::Usage("--factors must be positive numbers".into()));
    }
    let series = load_series(&a.data)?;
    let cfg = sampler_config(&a.sampler);
    let mut rows = Vec::new();
    for (k, &factor) in a.factors.iter().enumerate() {
        let name = scenario_name(k);
        let context = format!("scenario {name} (factor {factor}): ");
        let named = |f: Failure| match f {
            Failure::Usage(m) => Failure::Usage(format!("{context}{m}")),
            Failure::Data(m) => Failure::Data(format!("{context}{m}")),
            Failure::Sampler(m) => Failure::Sampler(format!("{context}{m}")),
            Failure::Unconverged(m) => Failure::Unconverged(format!("{context}{m}")),
        };
        let prior = load_prior(&a.transfer.prior, factor, a.transfer.p_free).map_err(named)?;
        let fit = fit_series(&series, &prior, &cfg, a.transfer.horizon).map_err(named)?;
        write_fit(&a.out.join(format!("scenario_{name}")), &series, &fit).map_err(named)?;
        check_convergence(&fit, a.sampler.allow_unconverged, &context)?;
        rows.extend(
            dataio::quantity_rows(&fit.forecast)
                .into_iter()
                .map(|row| ScenarioRow {
                    scenario: name.clone(),
                    row,
                }),
        );
    }
    dataio::write_sensitivity(&a.out.join(SENSITIVITY_FILE), &rows)
        .map_err(|e| Failure::Data(e.to_string()))?;
    render_sensitivity(&a.out, a.factors.len())
}

/// Overlay of the cumulative bands of every scenario directory.
fn render_sensitivity(out: &Path, scenarios: usize) -> Result<(), Failure> {
    let mut bands = Vec::new();
    for k in 0..scenarios {
        let path = out
            .join(format!("scenario_{}", scenario_name(k)))
            .join(dataio::BANDS_CUMULATIVE_FILE);
        bands.push((
            scenario_name(k),
            dataio::read_band(&path).map_err(|e| Failure::Data(e.to_string()))?,
        ));
    }
    let labels: Vec<String> = bands.iter().map(|(n, _)| format!("scenario {n}")).collect();
    let layers: Vec<Layer> = bands
        .iter()
        .zip(&labels)
        .map(|((_, b), label)| Layer { label, band: b })
        .collect();
    let svg = plot::overlay_svg(
        "Cumulative deaths by scenario",
        "cumulative deaths",
        &layers,
    );
    let path = out.join(SENSITIVITY_PLOT);
    fs::write(&path, svg).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

pub fn cmd_report(a: &ReportArgs) -> Result<(), Failure> {
    let sensitivity = a.out.join(SENSITIVITY_FILE);
    if sensitivity.exists() {
        let rows =
            dataio::read_sensitivity(&sensitivity).map_err(|e| Failure::Data(e.to_string()))?;
        let mut scenarios: Vec<&str> = rows.iter().map(|r| r.scenario.as_str()).collect();
        scenarios.dedup();
        for name in &scenarios {
            report_dir(&a.out.join(format!("scenario_{name}")))?;
        }
        return render_sensitivity(&a.out, scenarios.len());
    }
    report_dir(&a.out)
}

fn report_dir(dir: &Path) -> Result<(), Failure> {
    let missing: Vec<String> = dataio::plot_inputs(dir)
        .iter()
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Failure::Data(format!(
            "missing artifacts: {}",
            missing.join(", ")
        )));
    }
    dataio::render_plots(dir).map_err(|e| Failure::Data(e.to_string()))
}

/// Summary rows of the three derived quantities of a fit.
pub fn quantity_rows(fit: &FitOutcome) -> Vec<QuantityRow> {
    dataio::quantity_rows(&fit.forecast)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roman_scenarios() {
        let names: Vec<String> = (0..5).map(scenario_name).collect();
        assert_eq!(names, ["I", "II", "III", "IV", "V"]);
        assert_eq!(scenario_name(13), "XIV");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::Usage(String::new()).exit_code(), 1);
        assert_eq!(Failure::Data(String::new()).exit_code(), 1);
        assert_eq!(Failure::Sampler(String::new()).exit_code(), 2);
        assert_eq!(Failure::Unconverged(String::new()).exit_code(), 3);
    }

    #[test]
    fn missing_data_flag_is_a_usage_error() {
        assert_eq!(
            run(["skewcast", "fit", "--country", "China", "--out", "x"]),
            1
        );
        assert_eq!(run(["skewcast", "--help"]), 0);
    }
}
