use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use museum_core::data_space::Catalog;
use museum_core::params::Params;
use museum_core::session::ClockMode;
use museum_server::{router, AppState};
use tracing::{error, info, warn};

#[derive(Debug, Parser)]
#[command(
    name = "museum-server",
    about = "Serve adaptive museum exploration sessions over HTTP"
)]
struct Args {
    /// Catalog JSON file.
    #[arg(long)]
    catalog: PathBuf,
    /// Parameter file (.toml or .json).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Reject unknown keys in catalog and parameter files.
    #[arg(long)]
    strict: bool,
    /// Create sessions on a logical clock unless a request says otherwise.
    #[arg(long)]
    logical: bool,
    /// Address to listen on.
    #[arg(long, env = "MUSEUM_BIND", default_value = "127.0.0.1:8080")]
    bind: String,
}

fn load(args: &Args) -> Result<(Catalog, Params), String> {
    let text = std::fs::read_to_string(&args.catalog).map_err(|e| format!("{}: {e}", args.catalog.display()))?;
    let loaded = Catalog::from_json_str(&text, args.strict).map_err(|e| e.to_string())?;
    for w in &loaded.warnings {
        warn!("{w}");
    }
    let params = match &args.params {
        Some(p) => Params::from_path(p, args.strict).map_err(|e| e.to_string())?,
        None => Params::default(),
    };
    Ok((loaded.catalog, params))
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env().add_directive("info".parse().unwrap()))
        .init();
    let args = Args::parse();
    let (catalog, params) = match load(&args) {
        Ok(v) => v,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(2);
        }
    };
    let mode = if args.logical {
        ClockMode::Logical
    } else {
        ClockMode::RealTime
    };
    let app = router(AppState::new(Arc::new(catalog), params, mode));
    let listener = match tokio::net::TcpListener::bind(&args.bind).await {
        Ok(l) => l,
        Err(e) => {
            error!("cannot bind {}: {e}", args.bind);
            return ExitCode::FAILURE;
        }
    };
    info!("listening on {}", args.bind);
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
        error!("{e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
