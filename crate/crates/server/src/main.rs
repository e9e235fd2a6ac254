use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use storyboard_core::model::StoryConfig;
use storyboard_core::provider::{MockProvider, OpenAiCompatible, OpenAiConfig};
use storyboard_core::ModelProvider;
use storyboard_server::{router, AppState, ServerConfig};
use tracing_subscriber::EnvFilter;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProviderKind {
    Mock,
    OpenaiCompatible,
}

/// Storyboard story engine server.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    #[arg(long, default_value_t = 8080)]
    port: u16,

    /// Address to bind.
    #[arg(long, default_value = "127.0.0.1")]
    host: String,

    #[arg(long, default_value = "./data")]
    data_dir: PathBuf,

    #[arg(long, value_enum, default_value_t = ProviderKind::Mock)]
    provider: ProviderKind,

    /// Model name sent to the provider.
    #[arg(long, default_value = "gpt-4o")]
    model: String,

    /// Base URL of the OpenAI-compatible API.
    #[arg(long, default_value = "https://api.openai.com/v1")]
    endpoint: String,

    /// Seconds before a provider request is abandoned.
    #[arg(long, default_value_t = 300)]
    provider_timeout: u64,

    /// Genre list and default actions (JSON); the bundled defaults otherwise.
    #[arg(long)]
    story_config: Option<PathBuf>,

    /// Write full prompts to each project's transcript log.
    #[arg(long)]
    debug_prompts: bool,
}

fn build_provider(cli: &Cli) -> Result<Arc<dyn ModelProvider>, String> {
    Ok(match cli.provider {
        ProviderKind::Mock => Arc::new(MockProvider::new()),
        ProviderKind::OpenaiCompatible => {
            let api_key = std::env::var("PROVIDER_API_KEY")
                .map_err(|_| "PROVIDER_API_KEY must be set for --provider openai-compatible")?;
            Arc::new(OpenAiCompatible::new(OpenAiConfig {
                endpoint: cli.endpoint.clone(),
                model: cli.model.clone(),
                api_key: Some(api_key),
                vision: true,
                timeout: Duration::from_secs(cli.provider_timeout),
            }))
        }
    })
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(cli).await {
        tracing::error!("{e}");
        std::process::exit(1);
    }
}

async fn run(cli: Cli) -> Result<(), String> {
    let provider = build_provider(&cli)?;
    let story = match &cli.story_config {
        Some(path) => StoryConfig::load(path).map_err(|e| e.to_string())?,
        None => StoryConfig::default(),
    };
    let mut config = ServerConfig::new(&cli.data_dir);
    config.debug_prompts = cli.debug_prompts;
    config.story = story;
    let state = AppState::new(config, provider).map_err(|e| e.to_string())?;

    let addr: SocketAddr = format!("{}:{}", cli.host, cli.port)
        .parse()
        .map_err(|e| format!("bad address: {e}"))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| format!("cannot bind {addr}: {e}"))?;
    tracing::info!(%addr, provider = ?cli.provider, data_dir = %cli.data_dir.display(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}
