//! Command-line front end: flag parsing, config layering and result files.
//!
//! Precedence for every field is CLI flag, then config file, then built-in
//! default. The seed additionally falls back to `LUCELAB_SEED` when neither
//! the flag nor the file sets it.

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::config::{PartialConfig, Scenario, ScenarioConfig};
use crate::error::Error;
use crate::model::ModelKind;
use crate::policy::PolicyKind;
use crate::sim::{run_experiment, ExperimentSummary};

pub const SEED_ENV: &str = "LUCELAB_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Free,
    Promotion,
    Censorship,
    Unfair,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Free => Scenario::Free,
            ScenarioArg::Promotion => Scenario::Promotion,
            ScenarioArg::Censorship => Scenario::Censorship,
            ScenarioArg::Unfair => Scenario::UnfairComparison,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    DirichletLuce,
    DirichletMultinomial,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::DirichletLuce => ModelKind::DirichletLuce,
            ModelArg::DirichletMultinomial => ModelKind::DirichletMultinomial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Thompson,
    Greedy,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Thompson => PolicyKind::Thompson,
            PolicyArg::Greedy => PolicyKind::Greedy,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| format!("{part:?}: {e}"))
        })
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| format!("{part:?}: {e}"))
        })
        .collect()
}

/// Simulate presentation policies against a Luce-rational user and compare
/// presentation-aware and presentation-blind preference estimates.
#[derive(Debug, Parser)]
#[command(name = "lucelab", version)]
struct Args {
    /// JSON config file with any subset of the experiment fields
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,

    #[arg(long, value_enum)]
    model: Option<ModelArg>,

    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,

    /// Number of options
    #[arg(long = "K", value_name = "K")]
    k: Option<usize>,

    /// Options per presentation
    #[arg(long = "L", value_name = "L")]
    l: Option<usize>,

    /// Interactions per run
    #[arg(long = "T", value_name = "T")]
    t: Option<usize>,

    #[arg(long)]
    runs: Option<usize>,

    /// Master seed; falls back to $LUCELAB_SEED
    #[arg(long)]
    seed: Option<u64>,

    /// True choice probabilities, comma separated, strictly decreasing
    #[arg(long, value_parser = parse_f64_list, value_name = "CSV")]
    theta: Option<::std::vec::Vec<f64>>,

    /// Dirichlet prior pseudo-counts, comma separated
    #[arg(long, value_parser = parse_f64_list, value_name = "CSV")]
    alpha: Option<::std::vec::Vec<f64>>,

    /// 0-based index of the option forced into every presentation
    #[arg(long)]
    promoted_option: Option<usize>,

    #[arg(long)]
    init_phase_length: Option<usize>,

    /// 0-based option indices allowed during the initial phase
    #[arg(long, value_parser = parse_usize_list, value_name = "CSV")]
    init_pool: Option<::std::vec::Vec<usize>>,

    #[arg(long)]
    thompson_sweeps: Option<usize>,

    #[arg(long)]
    estimate_samples: Option<usize>,

    #[arg(long)]
    estimate_burn_in: Option<usize>,

    #[arg(long)]
    thin: Option<usize>,

    /// Worker threads (default: available parallelism)
    #[arg(long)]
    workers: Option<usize>,

    /// Directory for result files; nothing is written when omitted
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Also write the per-interaction log
    #[arg(long)]
    keep_trajectories: bool,
}

impl Args {
    fn flags(&self) -> PartialConfig {
        PartialConfig {
            scenario: self.scenario.map(Into::into),
            k: self.k,
            l: self.l,
            t: self.t,
            runs: self.runs,
            theta_true: self.theta.clone(),
            model: self.model.map(Into::into),
            policy: self.policy.map(Into::into),
            alpha: self.alpha.clone(),
            promoted_option: self.promoted_option,
            init_phase_length: self.init_phase_length,
            init_pool: self.init_pool.clone(),
            thompson_sweeps: self.thompson_sweeps,
            estimate_samples: self.estimate_samples,
            estimate_burn_in: self.estimate_burn_in,
            thin: self.thin,
            master_seed: self.seed,
        }
    }
}

/// A fully parsed command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub config: ScenarioConfig,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub keep_trajectories: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(#[from] clap::Error),
    #[error("{0}")]
    Invalid(Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Run(Error),
}

impl CliError {
    /// 0 success, 2 usage or validation, 3 I/O, 4 sampler divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) => e.exit_code(),
            CliError::Invalid(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Run(e) => match e.root_cause() {
                Error::SamplerDivergence { .. } => 4,
                _ => 2,
            },
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Parses `argv` (program name first), reading `LUCELAB_SEED` from the environment.
pub fn parse_invocation<I, T>(argv: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    parse_invocation_with_env(argv, std::env::var(SEED_ENV).ok())
}

pub fn parse_invocation_with_env<I, T>(
    argv: I,
    seed_env: Option<String>,
) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(argv)?;
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str::<PartialConfig>(&text).map_err(|e| {
                CliError::Invalid(Error::InvalidConfig(format!("{}: {e}", path.display())))
            })?
        }
        None => PartialConfig::default(),
    };
    let env = PartialConfig {
        master_seed: match seed_env {
            Some(s) => Some(s.trim().parse::<u64>().map_err(|e| {
                CliError::Invalid(Error::InvalidConfig(format!("{SEED_ENV}={s:?}: {e}")))
            })?),
            None => None,
        },
        ..Default::default()
    };
    let config = args
        .flags()
        .over(file)
        .over(env)
        .resolve()
        .map_err(CliError::Invalid)?;
    if args.workers == Some(0) {
        return Err(CliError::Invalid(Error::InvalidConfig(
            "workers must be at least 1".into(),
        )));
    }
    Ok(Invocation {
        config,
        workers: args.workers,
        out_dir: args.out_dir,
        format: args.format,
        keep_trajectories: args.keep_trajectories,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub wall_time_seconds: f64,
    pub std_convention: &'static str,
    pub option_indexing: &'static str,
    pub late_window: usize,
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputBundle {
    pub config: ScenarioConfig,
    pub summary: ExperimentSummary,
    pub metadata: RunMetadata,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    metadata: &'a RunMetadata,
    config: &'a ScenarioConfig,
    summary: &'a ExperimentSummary,
}

#[derive(Serialize)]
struct EstimateRow {
    run: usize,
    option: usize,
    theta_true: f64,
    theta_hat: f64,
    abs_error: f64,
}

#[derive(Serialize)]
struct TrajectoryRow {
    run: usize,
    t: usize,
    presentation: String,
    choice: usize,
}

/// Formats `x` with 17 significant digits, which round-trips any `f64`.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.16e}");
    let exponent: i32 = sci[sci.find('e').expect("scientific format") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..17).contains(&exponent) {
        format!("{:.*}", (16 - exponent) as usize, x)
    } else {
        sci
    }
}

fn estimate_rows(bundle: &OutputBundle) -> Vec<EstimateRow> {
    let theta = &bundle.config.theta_true;
    bundle
        .summary
        .final_estimates
        .iter()
        .enumerate()
        .flat_map(|(run, est)| {
            est.as_slice()
                .iter()
                .zip(theta)
                .enumerate()
                .map(move |(option, (hat, truth))| EstimateRow {
                    run,
                    option,
                    theta_true: *truth,
                    theta_hat: *hat,
                    abs_error: (hat - truth).abs(),
                })
        })
        .collect()
}

fn trajectory_rows(summary: &ExperimentSummary) -> Option<Vec<TrajectoryRow>> {
    summary.trajectories.as_ref().map(|trajectories| {
        trajectories
            .iter()
            .flat_map(|traj| {
                traj.records.iter().map(|r| TrajectoryRow {
                    run: traj.run_index,
                    t: r.t,
                    presentation: r.presented.to_string(),
                    choice: r.chosen.0,
                })
            })
            .collect()
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    text
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Writes `summary.json`, `config.echo.json`, the estimates table and, when
/// trajectories were retained, the trajectory table. Returns the written paths.
pub fn emit_results(
    bundle: &OutputBundle,
    format: OutputFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: String| -> Result<(), CliError> {
        let path = out_dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
        Ok(())
    };

    put(
        "summary.json",
        to_json(&SummaryFile {
            metadata: &bundle.metadata,
            config: &bundle.config,
            summary: &bundle.summary,
        }),
    )?;
    put("config.echo.json", bundle.config.to_json() + "\n")?;

    let estimates = estimate_rows(bundle);
    let trajectory = trajectory_rows(&bundle.summary);
    match format {
        OutputFormat::Csv => {
            put(
                "estimates.csv",
                csv_text(
                    &["run", "option", "theta_true", "theta_hat", "abs_error"],
                    estimates.iter().map(|r| {
                        vec![
                            r.run.to_string(),
                            r.option.to_string(),
                            format_f64(r.theta_true),
                            format_f64(r.theta_hat),
                            format_f64(r.abs_error),
                        ]
                    }),
                ),
            )?;
            if let Some(rows) = &trajectory {
                put(
                    "trajectory.csv",
                    csv_text(
                        &["run", "t", "presentation", "choice"],
                        rows.iter().map(|r| {
                            vec![
                                r.run.to_string(),
                                r.t.to_string(),
                                r.presentation.clone(),
                                r.choice.to_string(),
                            ]
                        }),
                    ),
                )?;
            }
        }
        OutputFormat::Json => {
            put("estimates.json", to_json(&estimates))?;
            if let Some(rows) = &trajectory {
                put("trajectory.json", to_json(rows))?;
            }
        }
    }
    Ok(written)
}

fn print_summary(bundle: &OutputBundle) {
    let config = &bundle.config;
    let summary = &bundle.summary;
    println!(
        "scenario={} model={} policy={} K={} L={} T={} runs={} seed={}",
        config.scenario.as_str(),
        config.model.as_str(),
        config.policy.as_str(),
        config.k,
        config.l,
        config.t,
        config.runs,
        config.master_seed
    );
    if let Some(init) = &summary.mean_init_phase_estimate {
        println!(
            "estimate after {} initial interactions:",
            config.init_phase_length
        );
        for (k, v) in init.iter().enumerate() {
            println!("  option {:>2}  {:.4}", k + 1, v);
        }
    }
    println!("option  theta_true  mean_hat    std_hat     presented");
    for k in 0..config.k {
        println!(
            "{:>6}  {:<10.4}  {:<10.4}  {:<10.4}  {:.4}",
            k + 1,
            config.theta_true[k],
            summary.mean_estimate[k],
            summary.std_estimate[k],
            summary.mean_presentation_frequency[k]
        );
    }
    println!(
        "top-{} presented in {:.1}% of the last {} interactions",
        config.l,
        100.0 * summary.late_window_top_l_rate,
        summary.late_window
    );
}

/// Entry point shared by the binary and the tests.
pub fn run<I, T>(argv: I) -> Result<OutputBundle, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let invocation = parse_invocation(argv)?;
    execute(&invocation)
}

pub fn execute(invocation: &Invocation) -> Result<OutputBundle, CliError> {
    let started = Instant::now();
    let config = &invocation.config;
    let summary = run_experiment(config, invocation.workers, invocation.keep_trajectories)
        .map_err(CliError::Run)?;
    let bundle = OutputBundle {
        metadata: RunMetadata {
            tool: "lucelab",
            version: env!("CARGO_PKG_VERSION"),
            master_seed: config.master_seed,
            workers: invocation.workers,
            wall_time_seconds: started.elapsed().as_secs_f64(),
            std_convention: "population",
            option_indexing: "0-based",
            late_window: summary.late_window,
        },
        config: config.clone(),
        summary,
    };
    print_summary(&bundle);
    if let Some(dir) = &invocation.out_dir {
        for path in emit_results(&bundle, invocation.format, dir)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Invocation, CliError> {
        parse_invocation_with_env(std::iter::once("lucelab").chain(args.iter().copied()), None)
    }

    #[test]
    fn empty_argv_is_free_defaults() {
        let inv = parse(&[]).unwrap();
        assert_eq!(inv.config, ScenarioConfig::default());
        assert_eq!(inv.format, OutputFormat::Csv);
        assert!(!inv.keep_trajectories);
    }

    #[test]
    fn promotion_flags() {
        let inv = parse(&[
            "--scenario",
            "promotion",
            "--model",
            "dirichlet-luce",
            "--seed",
            "42",
        ])
        .unwrap();
        let c = inv.config;
        assert_eq!(c.scenario, Scenario::Promotion);
        assert_eq!((c.k, c.l, c.t, c.runs), (5, 2, 10_000, 10));
        assert_eq!(c.promoted_option, 2);
        assert_eq!(c.master_seed, 42);
    }

    #[test]
    fn theta_parsing_and_validation() {
        let inv = parse(&["--theta", "0.4,0.25,0.16,0.11,0.08"]).unwrap();
        assert_eq!(inv.config.theta_true, vec![0.4, 0.25, 0.16, 0.11, 0.08]);
        let err = parse(&["--theta", "0.5,0.5,0.2"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = parse(&["--K", "3", "--theta", "0.5,0.5,0.2"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = parse(&["--theta", "0.4,abc"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let err = parse(&["--bogus"]).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
        assert_eq!(err.exit_code(), 2);
        assert_eq!(parse(&["--scenario", "nope"]).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn seed_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"master_seed": 5, "T": 77}"#).unwrap();
        let p = path.to_str().unwrap();
        let with = |args: &[&str], env: Option<&str>| {
            parse_invocation_with_env(
                std::iter::once("lucelab").chain(args.iter().copied()),
                env.map(String::from),
            )
            .unwrap()
            .config
        };
        assert_eq!(with(&[], Some("9")).master_seed, 9);
        assert_eq!(with(&["--config", p], Some("9")).master_seed, 5);
        assert_eq!(
            with(&["--config", p, "--seed", "1"], Some("9")).master_seed,
            1
        );
        assert_eq!(with(&["--config", p, "--T", "12"], None).t, 12);
        assert_eq!(with(&["--config", p], None).t, 77);
    }

    #[test]
    fn missing_config_file_is_io_error() {
        let err = parse(&["--config", "/nonexistent/lucelab.json"]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn divergence_maps_to_exit_code_4() {
        let err = CliError::Run(Error::EpisodeFailed {
            run: 0,
            t: 3,
            source: Box::new(Error::SamplerDivergence {
                sweeps: 10,
                clamped: 2,
            }),
        });
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_f64(0.4), "0.40000000000000002");
        assert_eq!(format_f64(0.0), "0");
        assert_eq!(format_f64(1.0), "1.0000000000000000");
        assert_eq!(format_f64(1e-7), "9.9999999999999995e-8");
        for x in [0.1, 1.0 / 3.0, 0.16, 123.456, 2.5e-9, 7e20] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
        assert!(!format_f64(0.25).contains(','));
    }
}
