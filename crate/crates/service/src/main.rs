use std::path::PathBuf;

use anyhow::Context as _;
use clap::Parser;
use tepmon_service::{start, ServiceConfig};

/// Live TEP monitoring service.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Saved PCA model (JSON).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Fit the model from the normal series even if a saved model exists.
    #[arg(long)]
    fit: bool,
    /// Directory containing fault_<k>.csv.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::default(),
    };
    if let Some(model) = cli.model {
        config.model_path = Some(model);
    }
    if cli.fit {
        config.fit_on_start = true;
    }
    if let Some(dir) = cli.data_dir {
        config.data_dir = dir;
    }
    if let Some(port) = cli.port {
        config.port = port;
    }
    let service = start(config, None)
        .await
        .context("service failed to start")?;
    println!("listening on http://{}", service.addr);
    tokio::select! {
        r = tokio::signal::ctrl_c() => r.context("waiting for ctrl-c")?,
        r = &mut { service.server } => r??,
    }
    Ok(())
}
