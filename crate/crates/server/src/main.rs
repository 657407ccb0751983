use clap::Parser;
use medley_server::cli::{load_config, run_recommend, Cli, Command};
use medley_server::{router, AppState};
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match cli.command {
        Command::Serve { config } => {
            let cfg = load_config(config.as_ref())?;
            let catalog = cfg.load_catalog()?;
            let addr = format!("{}:{}", cfg.host, cfg.port);
            let state = AppState::restore(cfg, catalog)?;
            let listener = tokio::net::TcpListener::bind(&addr).await?;
            tracing::info!("listening on http://{}", listener.local_addr()?);
            axum::serve(listener, router(state))
                .with_graceful_shutdown(async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await?;
        }
        Command::Recommend(args) => run_recommend(&args)?,
    }
    Ok(())
}
