//! `walktail`: expansions of the tail of a random-walk maximum, their
//! oracles, and Monte Carlo checks.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

use config::RunConfig;

pub const SCHEMA: &str = "# walktail-schema v1";

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, specs, files or arguments: exit status 1.
    #[error("{0}")]
    Usage(String),
    /// A validation gate failed: exit status 2.
    #[error("{0}")]
    Gate(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Gate(_) => 2,
            _ => 1,
        }
    }
}

/// Turns any displayable error into a usage error.
pub(crate) fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "walktail", version, about = "Tail expansions for the maximum of a heavy-tailed random walk")]
pub struct Cli {
    /// TOML file with run settings; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the resolved settings (after defaults and overrides) here.
    #[arg(long, global = true)]
    pub emit_config: Option<PathBuf>,
    /// Write the table here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Require an explicit --seed for randomized subcommands.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the expansion operator, symbolically or from a moment file.
    Expand(ExpandArgs),
    /// Estimate p and the ladder-height moments of a step law.
    Moments(MomentsArgs),
    /// Evaluate the expansion of P{M > x} on a grid.
    Evaluate(EvaluateArgs),
    /// Exact lattice computation of P{M > x} with certified bounds.
    Oracle(OracleArgs),
    /// Ruin probability expansion and simulation.
    Ruin(RuinArgs),
    /// Run a validation suite; exit status 2 if any check fails.
    Validate(ValidateArgs),
    /// Renewal-sum ratio diagnostic.
    Lemma1(Lemma1Args),
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[arg(long)]
    pub order: Option<usize>,
    /// Coefficients as polynomials in the moment symbols.
    #[arg(long, conflicts_with = "moments")]
    pub symbolic: bool,
    /// Numeric operator from a moment-set JSON file.
    #[arg(long)]
    pub moments: Option<String>,
    /// Which operator: theorem, fplus or penultimate.
    #[arg(long, default_value = "theorem")]
    pub operator: String,
    /// List all m coefficients instead of the first m-1.
    #[arg(long)]
    pub all_terms: bool,
    /// Rewrite mu[Fm,1] as mu[F,1]/q in symbolic output.
    #[arg(long)]
    pub in_step_mean: bool,
    /// Output format: text or json.
    #[arg(long, default_value = "text")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub barrier: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    pub cap: Option<u64>,
    #[arg(long)]
    pub spitzer_terms: Option<usize>,
    /// `mc` (simulation) or `lattice` (exact on a grid).
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub top: Option<i64>,
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    /// `a:b:n` (linear) or `log:a:b:n`.
    #[arg(long)]
    pub xgrid: Option<String>,
    /// Moment-set JSON; without it, exact lattice moments are used and the
    /// model is evaluated at the bin midpoint offset h/2.
    #[arg(long)]
    pub moments: Option<String>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub top: Option<i64>,
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Highest grid index of the discretized step.
    #[arg(long)]
    pub top: Option<i64>,
    /// Largest x reported.
    #[arg(long)]
    pub xmax: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RuinArgs {
    #[arg(long)]
    pub claims: Option<String>,
    #[arg(long)]
    pub interarrival: Option<String>,
    #[arg(long)]
    pub premium: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub xgrid: Option<String>,
    /// Simulated paths; 0 skips the simulation.
    #[arg(long, value_parser = parse_count)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub barrier: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    pub cap: Option<u64>,
    #[arg(long)]
    pub moments: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// `twopoint` or `paretoshift`.
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long, value_parser = parse_count)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Kill barrier below the start for simulated paths.
    #[arg(long)]
    pub barrier: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    pub cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct Lemma1Args {
    /// Tail spec for f, e.g. `pareto:alpha=2,scale=1`.
    #[arg(long)]
    pub f: Option<String>,
    /// Renewal step: `det:1` or `exp:mean=1`.
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long)]
    pub xgrid: Option<String>,
    #[arg(long, value_parser = parse_count)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated part of each renewal path, as a fraction of x.
    #[arg(long)]
    pub horizon: Option<f64>,
}

impl Command {
    /// Flag values in config form.
    fn flags(&self) -> RunConfig {
        match self {
            Command::Expand(a) => RunConfig {
                order: a.order,
                moments: a.moments.clone(),
                ..Default::default()
            },
            Command::Moments(a) => RunConfig {
                step: a.step.clone(),
                order: a.order,
                reps: a.reps,
                seed: a.seed,
                barrier: a.barrier,
                cap: a.cap,
                spitzer_terms: a.spitzer_terms,
                source: a.source.clone(),
                h: a.h,
                top: a.top,
                eps: a.eps,
                ..Default::default()
            },
            Command::Evaluate(a) => RunConfig {
                step: a.step.clone(),
                order: a.order,
                xgrid: a.xgrid.clone(),
                moments: a.moments.clone(),
                h: a.h,
                top: a.top,
                eps: a.eps,
                ..Default::default()
            },
            Command::Oracle(a) => RunConfig {
                step: a.step.clone(),
                h: a.h,
                eps: a.eps,
                top: a.top,
                xmax: a.xmax,
                ..Default::default()
            },
            Command::Ruin(a) => RunConfig {
                claims: a.claims.clone(),
                interarrival: a.interarrival.clone(),
                premium: a.premium,
                order: a.order,
                xgrid: a.xgrid.clone(),
                reps: a.reps,
                seed: a.seed,
                barrier: a.barrier,
                cap: a.cap,
                moments: a.moments.clone(),
                ..Default::default()
            },
            Command::Validate(a) => RunConfig {
                case: a.case.clone(),
                reps: a.reps,
                seed: a.seed,
                barrier: a.barrier,
                cap: a.cap,
                ..Default::default()
            },
            Command::Lemma1(a) => RunConfig {
                f: a.f.clone(),
                y: a.y.clone(),
                xgrid: a.xgrid.clone(),
                reps: a.reps,
                seed: a.seed,
                horizon: a.horizon,
                ..Default::default()
            },
        }
    }
}

/// Runs the CLI on `argv` (including the program name), writing the
/// primary output to `out` unless `--out` redirects it. Returns the exit
/// status.
/// A nonnegative integer count, also accepted as `1e6` or `2.5e5`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(format!("`{s}` is not a nonnegative integer count")),
    }
}

pub fn run(argv: &[String], out: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("walktail: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut conflicts = Vec::new();
    let cfg = file.overlay(&cli.command.flags(), &mut conflicts);
    for c in &conflicts {
        eprintln!("walktail: note: {c}");
    }
    let mut buf: Vec<u8> = Vec::new();
    let outcome = commands::dispatch(&cli.command, cfg, cli.strict, &mut buf)?;
    if let Some(path) = &cli.emit_config {
        std::fs::write(path, outcome.resolved.to_toml())?;
    }
    match &cli.out {
        Some(path) => std::fs::write(path, &buf)?,
        None => out.write_all(&buf)?,
    }
    match outcome.gate {
        Some(msg) => Err(CliError::Gate(msg)),
        None => Ok(()),
    }
}
