//! Command-line interface.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use simgen_core::analysis::experiment::check_settings;
use simgen_core::analysis::{
    effect_recovery_report, prevalence_report, ExperimentSettings, GbtParams, Learner, SiteEncoding,
};
use simgen_core::simulate;

use crate::bench::{run_experiment, thread_count};
use crate::config_io::{load_config, read_config, violations};
use crate::error::{CliError, CliResult, EXIT_INPUT, EXIT_OK};
use crate::metadata::Metadata;
use crate::reports::{write_degradation, write_prevalence, write_recovery};
use crate::table::{read_dataset, write_dataset};

pub const DATA_FILE: &str = "data.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const DEFAULT_GRID: &str = "0.0,0.3,0.6,0.9,1.2,1.5";
/// Keeps one-hot columns that are empty in a fold from making LR singular.
pub const LR_RIDGE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "simgen", version, about = "Multi-site synthetic clinical data simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset CSV and its metadata JSON.
    Generate(GenerateArgs),
    /// Refit logistic regression and compare with the ground-truth effects.
    RecoverEffects(RecoverArgs),
    /// Observed prevalence per site with bootstrap intervals.
    PrevalenceCheck(PrevalenceArgs),
    /// Held-out-site degradation across site-feature interaction strengths.
    BenchmarkGeneralisability(BenchmarkArgs),
    /// Check a config and list every violation.
    ValidateConfig(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub metadata: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
}

#[derive(Debug, Args)]
pub struct PrevalenceArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub metadata: PathBuf,
    /// Bootstrap resamples; 0 omits intervals.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = DEFAULT_GRID)]
    pub grid: String,
    #[arg(long, default_value_t = 0.2)]
    pub holdout: f64,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value = "lr,gbt")]
    pub learners: String,
    #[arg(long, default_value_t = 5)]
    pub k_folds: usize,
    /// none, code or indicators.
    #[arg(long, default_value = "code")]
    pub site_encoding: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
}

pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("grid value '{s}' is not a number")))
        })
        .collect()
}

pub fn parse_learners(text: &str) -> CliResult<Vec<Learner>> {
    text.split(',')
        .map(|s| match s.trim() {
            "lr" => Ok(Learner::Logistic { ridge: LR_RIDGE }),
            "gbt" => Ok(Learner::Gbt(GbtParams::default())),
            other => Err(CliError::input(format!("unknown learner '{other}' (expected lr or gbt)"))),
        })
        .collect()
}

pub fn parse_site_encoding(text: &str) -> CliResult<SiteEncoding> {
    match text {
        "none" => Ok(SiteEncoding::None),
        "code" => Ok(SiteEncoding::Code),
        "indicators" => Ok(SiteEncoding::Indicators),
        other => Err(CliError::input(format!("unknown site encoding '{other}'"))),
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

pub fn generate(args: &GenerateArgs) -> CliResult<Vec<PathBuf>> {
    let cfg = load_config(&args.config, args.seed)?;
    let sim = simulate(&cfg)?;
    let meta = Metadata::new(&cfg, &sim);
    create_dir(&args.out)?;
    let data = args.out.join(DATA_FILE);
    let metadata = args.out.join(METADATA_FILE);
    write_dataset(&data, &sim.dataset)?;
    fs::write(&metadata, meta.to_json()).map_err(|e| CliError::write(&metadata, e))?;
    for w in &sim.dataset.warnings {
        eprintln!("warning: {w}");
    }
    Ok(vec![data, metadata])
}

pub fn recover_effects(args: &RecoverArgs) -> CliResult<Vec<PathBuf>> {
    let meta = Metadata::read(&args.metadata)?;
    let ds = read_dataset(&args.data, &meta)?;
    let temperature = meta.config_echo.outcome.label_temperature;
    let report = effect_recovery_report(&ds, &meta.ground_truth, temperature, args.ridge)?;
    create_dir(&args.out)?;
    write_recovery(&args.out, &report)
}

pub fn prevalence_check(args: &PrevalenceArgs) -> CliResult<Vec<PathBuf>> {
    let meta = Metadata::read(&args.metadata)?;
    let ds = read_dataset(&args.data, &meta)?;
    let report = prevalence_report(
        &ds,
        &meta.ground_truth.prevalence_targets,
        args.bootstrap,
        args.level,
        meta.seed,
    )
    .map_err(|e| match e {
        simgen_core::Error::InvalidParameter(m) => CliError::input(m),
        other => other.into(),
    })?;
    create_dir(&args.out)?;
    write_prevalence(&args.out, &report)
}

pub fn benchmark(args: &BenchmarkArgs) -> CliResult<Vec<PathBuf>> {
    let cfg = load_config(&args.config, args.seed)?;
    let settings = ExperimentSettings {
        grid: parse_grid(&args.grid)?,
        holdout_fraction: args.holdout,
        n_trials: args.trials,
        learners: parse_learners(&args.learners)?,
        k_folds: args.k_folds,
        site_encoding: parse_site_encoding(&args.site_encoding)?,
    };
    check_settings(&cfg, &settings).map_err(|e| CliError::input(e.to_string()))?;
    let table = run_experiment(&cfg, &settings, thread_count())?;
    create_dir(&args.out)?;
    write_degradation(&args.out, &table)
}

pub fn validate(args: &ValidateArgs) -> CliResult<()> {
    let cfg = read_config(&args.config)?;
    let found = violations(&cfg);
    if found.is_empty() {
        println!("OK");
        return Ok(());
    }
    for v in &found {
        println!("{v}");
    }
    Err(CliError::input(format!("{} violation(s)", found.len())))
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => generate(a).map(|p| print_paths(&p)),
        Command::RecoverEffects(a) => recover_effects(a).map(|p| print_paths(&p)),
        Command::PrevalenceCheck(a) => prevalence_check(a).map(|p| print_paths(&p)),
        Command::BenchmarkGeneralisability(a) => benchmark(a).map(|p| print_paths(&p)),
        Command::ValidateConfig(a) => validate(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_learners() {
        assert_eq!(parse_grid(DEFAULT_GRID).unwrap(), [0.0, 0.3, 0.6, 0.9, 1.2, 1.5]);
        assert!(parse_grid("0.1,x").is_err());
        let l = parse_learners("lr,gbt").unwrap();
        assert_eq!(l.iter().map(|l| l.name()).collect::<Vec<_>>(), ["lr", "gbt"]);
        assert_eq!(parse_learners("rf").unwrap_err().code, EXIT_INPUT);
        assert_eq!(parse_site_encoding("indicators").unwrap(), SiteEncoding::Indicators);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["simgen", "generate"]), EXIT_INPUT);
        assert_eq!(run(["simgen", "frobnicate"]), EXIT_INPUT);
        assert_eq!(run(["simgen", "--help"]), EXIT_OK);
    }
}
