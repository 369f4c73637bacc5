use std::net::SocketAddr;
use std::time::Duration;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use semmap_service::{router, spawn_reaper, AppState, ServiceConfig};

#[derive(Parser)]
#[command(
    name = "semmap-server",
    version,
    about = "HTTP API for building and editing semantic map models"
)]
struct Args {
    /// Address to listen on
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,

    /// Seconds a session may stay idle before it is dropped
    #[arg(long, default_value_t = 24 * 60 * 60)]
    ttl_secs: u64,

    /// Largest accepted table upload in bytes
    #[arg(long, default_value_t = ServiceConfig::default().max_table_bytes)]
    max_table_bytes: usize,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let state = AppState::new(ServiceConfig {
        max_table_bytes: args.max_table_bytes,
        ttl: Duration::from_secs(args.ttl_secs),
        ..ServiceConfig::default()
    });
    spawn_reaper(state.clone());
    let listener = tokio::net::TcpListener::bind(args.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
