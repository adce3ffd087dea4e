//! The `nptruth` command-line frontend.
//!
//! Each subcommand reads a JSON [`Scenario`], runs one analysis from
//! `nptruth-core` and writes CSV tables with JSON sidecars into `--out`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

pub use config::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] nptruth_core::Error),
}

impl CliError {
    /// 2 for configuration, domain and i/o problems, 3 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_domain() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file (JSON). Defaults are used for anything it omits.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for replicated runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Parser)]
#[command(name = "nptruth", version, about = "Neyman-Pearson decisions, ROC functions and knowledge updating")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate rho(alpha) and rho'(alpha) for the scenario model.
    Roc {
        #[command(flatten)]
        common: Common,
    },
    /// Worked tea-tasting decision and P-value, with l_D and l_P over theta1.
    Tea {
        #[command(flatten)]
        common: Common,
        /// 1 (binomial) or 2 (choose four).
        #[arg(long = "tea-version")]
        version: Option<u8>,
        #[arg(long)]
        count: Option<u64>,
        #[arg(long)]
        u: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Independent two-sample replications updating on decisions and P-values.
    Replicate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Sequential knowledge updating until a verdict or the study budget.
    Sequential {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_studies: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Sequential updating behind a publication gate, with bias summaries.
    Bias {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_studies: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Minimax, Bayes and discrimination levels with risk curves.
    OptimizeLos {
        #[command(flatten)]
        common: Common,
    },
    /// Smallest sample size reaching a log odds ratio of power to size.
    SampleSize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        mu_diff: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Contour grid of l_D or l_P over effect and logit level.
    Profile {
        #[command(flatten)]
        common: Common,
    },
    /// The 24-scenario comparison of alpha_M, alpha_B and alpha_D.
    Table1 {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Roc { common }
            | Command::Tea { common, .. }
            | Command::Replicate { common, .. }
            | Command::Sequential { common, .. }
            | Command::Bias { common, .. }
            | Command::OptimizeLos { common }
            | Command::SampleSize { common, .. }
            | Command::Profile { common }
            | Command::Table1 { common } => common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Roc { .. } => "roc",
            Command::Tea { .. } => "tea",
            Command::Replicate { .. } => "replicate",
            Command::Sequential { .. } => "sequential",
            Command::Bias { .. } => "bias",
            Command::OptimizeLos { .. } => "optimize-los",
            Command::SampleSize { .. } => "sample-size",
            Command::Profile { .. } => "profile",
            Command::Table1 { .. } => "table1",
        }
    }

    /// The scenario with command-line overrides applied.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let common = self.common();
        let mut s = match &common.config {
            Some(p) => Scenario::load(p)?,
            None => Scenario::default(),
        };
        if let Some(seed) = common.seed {
            s.seed = seed;
        }
        match self {
            Command::Tea { version, count, u, alpha, .. } => {
                set(&mut s.tea.version, *version);
                set(&mut s.tea.count, *count);
                set(&mut s.tea.u, *u);
                set(&mut s.tea.alpha, *alpha);
            }
            Command::Replicate { lambda, .. } => {
                if lambda.is_some() {
                    s.replicate.lambda = *lambda;
                }
            }
            Command::Sequential { max_studies, runs, .. } | Command::Bias { max_studies, runs, .. } => {
                set(&mut s.sequential.config.max_studies, *max_studies);
                set(&mut s.sequential.runs, *runs);
            }
            Command::SampleSize { b, mu_diff, sigma, .. } => {
                set(&mut s.sample_size.b, *b);
                set(&mut s.sample_size.mu_diff, *mu_diff);
                set(&mut s.sample_size.sigma, *sigma);
            }
            _ => {}
        }
        Ok(s)
    }
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Runs one parsed command; returns the written CSV paths.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let scenario = cli.command.scenario()?;
    let common = cli.command.common();
    if common.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let tables = pool.install(|| commands::dispatch(&cli.command, &scenario))?;
    tables
        .iter()
        .map(|t| output::write_table(&common.out, cli.command.name(), &scenario, t))
        .collect()
}
