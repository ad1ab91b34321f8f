//! Command-line surface and the `--config` key=value file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "skewcast",
    version,
    about = "Bayesian forecasts of epidemic death counts",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a source country with the flat prior.
    Fit(FitArgs),
    /// Fit a target country with a prior transferred from a summary.csv.
    Forecast(ForecastArgs),
    /// Run the forecast once per prior inflation factor.
    Sensitivity(SensitivityArgs),
    /// Regenerate plots from the CSV artifacts of an earlier run.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// ECDC-format CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub country: String,
    /// Day number of the first reported death (0 or 1).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(i64).range(0..=1))]
    pub origin: i64,
    /// Population in millions, replacing the figure in the data.
    #[arg(long)]
    pub population_millions: Option<f64>,
    /// Keep the raw 13-14 Feb 2020 China reports.
    #[arg(long)]
    pub no_correction: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SamplerArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 1000)]
    pub warmup: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.8)]
    pub target_accept: f64,
    #[arg(long, default_value_t = 10)]
    pub max_tree_depth: u32,
    /// Exit 0 even when some R-hat exceeds 1.01.
    #[arg(long)]
    pub allow_unconverged: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Use the flat prior (the only prior for fits).
    #[arg(long)]
    pub flat_prior: bool,
    /// Days of predictive bands; defaults to the longer of 70 and the series.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// key=value file mirroring the flags; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TransferArgs {
    /// summary.csv of the source fit.
    #[arg(long)]
    pub prior: PathBuf,
    /// Use the weak N(0, 10^2) prior on log p instead of the transferred one.
    #[arg(long, default_value = "on", default_missing_value = "on", num_args = 0..=1, value_parser = parse_switch)]
    pub p_free: bool,
    #[arg(long, default_value_t = 70)]
    pub horizon: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub transfer: TransferArgs,
    /// Multiplier of the prior SDs of log p, log alpha and beta.
    #[arg(long, default_value_t = 1.0)]
    pub inflate: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub transfer: TransferArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    pub factors: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected on or off, got `{s}`")),
    }
}

/// Expands `--config <path>` into flags placed right after the subcommand,
/// so flags given on the command line win. Lines are `key = value`; `#`
/// starts a comment; `key = true` becomes a bare `--key` and `key = false`
/// is dropped, except for `p-free`, which takes its value.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(pos) = args
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(args);
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args.get(pos + 1).cloned().ok_or("--config needs a path")?,
    };
    let injected = read_config(Path::new(&path))?;
    let Some(sub) = args
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|i| i + 1)
    else {
        return Ok(args);
    };
    let mut out = args[..=sub].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

fn read_config(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut flags = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), n + 1))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(format!(
                "{}:{}: nested config files are not supported",
                path.display(),
                n + 1
            ));
        }
        match value {
            "true" if key != "p-free" => flags.push(format!("--{key}")),
            "false" if key != "p-free" => {}
            _ => flags.push(format!("--{key}={value}")),
        }
    }
    Ok(flags)
}
