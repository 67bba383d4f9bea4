//! `explore`: replay scripts or run synthetic visitors against a catalog in
//! logical time, writing the final museum and per-tick metrics.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use museum_core::data_space::{Catalog, CatalogError};
use museum_core::explorer::{emit_metrics, run_agent, run_script, MetricsFormat, Policy, RunError, RunResult, Script};
use museum_core::params::{Params, ParamsError};
use thiserror::Error;
use tracing::{info, warn};

#[derive(Debug, Parser)]
#[command(name = "explore", about = "Drive museum explorations headlessly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay a script of timed user events.
    Run {
        #[command(flatten)]
        common: Common,
        /// JSON array of {tick, event}.
        #[arg(long)]
        script: PathBuf,
        /// Logical seconds to simulate.
        #[arg(long)]
        ticks: u64,
    },
    /// Let a synthetic visitor explore.
    Agent {
        #[command(flatten)]
        common: Common,
        /// focused, wanderer or random (focused:<entity> also works).
        #[arg(long)]
        policy: String,
        /// Entity a focused visitor cares about.
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        steps: u64,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    catalog: PathBuf,
    /// Parameter file (.toml or .json); defaults otherwise.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Write metrics as CSV instead of a table.
    #[arg(long)]
    csv: bool,
    /// Reject unknown keys in input files.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("catalog: {0}")]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Write { .. } => 1,
            CliError::Params(ParamsError::Io { .. }) => 1,
            _ => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: PathBuf, contents: &str) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Write { path, source })
}

fn load(common: &Common) -> Result<(Arc<Catalog>, Params), CliError> {
    let loaded = Catalog::from_json_str(&read(&common.catalog)?, common.strict)?;
    for w in &loaded.warnings {
        warn!("catalog: {w}");
    }
    let params = match &common.params {
        Some(p) => Params::from_path(p, common.strict)?,
        None => Params::default(),
    };
    Ok((Arc::new(loaded.catalog), params))
}

fn parse_policy(policy: &str, target: Option<String>) -> Result<Policy, CliError> {
    match (policy, target) {
        ("focused", Some(target)) => Ok(Policy::Focused { target }),
        ("focused", None) => Err(CliError::Usage("focused policy needs --target".into())),
        (p, None) => p.parse().map_err(CliError::Usage),
        (_, Some(_)) => Err(CliError::Usage("--target only applies to the focused policy".into())),
    }
}

fn save(result: &RunResult, common: &Common) -> Result<(), CliError> {
    fs::create_dir_all(&common.out).map_err(|source| CliError::Write {
        path: common.out.clone(),
        source,
    })?;
    let museum = serde_json::to_string_pretty(result.session.museum()).expect("museum serializes");
    write(common.out.join("museum.json"), &(museum + "\n"))?;
    let mut events = String::new();
    for e in &result.events {
        events.push_str(&serde_json::to_string(e).expect("events serialize"));
        events.push('\n');
    }
    write(common.out.join("events.jsonl"), &events)?;
    let (name, format) = if common.csv {
        ("metrics.csv", MetricsFormat::Csv)
    } else {
        ("metrics.txt", MetricsFormat::Table)
    };
    write(common.out.join(name), &emit_metrics(&result.metrics, format))?;
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (result, common) = match cli.command {
        Command::Run { common, script, ticks } => {
            let (catalog, params) = load(&common)?;
            let script = Script::from_json_str(&read(&script)?)?;
            (run_script(catalog, params, &script, common.seed, ticks)?, common)
        }
        Command::Agent {
            common,
            policy,
            target,
            steps,
        } => {
            let policy = parse_policy(&policy, target)?;
            if steps == 0 {
                return Err(CliError::Usage("--steps must be at least 1".into()));
            }
            let (catalog, params) = load(&common)?;
            (run_agent(catalog, params, &policy, steps, common.seed)?, common)
        }
    };
    save(&result, &common)?;
    let m = &result.metrics;
    info!(
        rooms = m.rooms_created(),
        exposed = m.unique_objects_exposed(),
        serendipity = m.serendipity_ratio(),
        "run complete"
    );
    println!(
        "rooms_created={} unique_objects_exposed={} serendipity_ratio={:.4} out={}",
        m.rooms_created(),
        m.unique_objects_exposed(),
        m.serendipity_ratio(),
        common.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("explore: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
