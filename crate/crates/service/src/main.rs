use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, CommandFactory, Parser, Subcommand};
use feedforge::{FeedService, ServiceConfig, ServiceError};
use feedforge_core::params::from_pairs;
use feedforge_mock_endpoint::MockEndpoint;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "feedforge", version, about = "RSS and Atom feeds from GoodRelations offers over SPARQL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one feed and write it to a file or standard output.
    Gen(Box<GenArgs>),
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides listen_address.
        #[arg(long)]
        listen: Option<SocketAddr>,
    },
    /// Serve a Turtle dataset over the SPARQL protocol.
    MockEndpoint {
        /// Turtle file; the bundled offer fixture when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8890")]
        listen: SocketAddr,
    },
}

/// Feed parameters, named as on `/feed`.
#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides endpoint_url.
    #[arg(long)]
    endpoint: Option<String>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_parser = ["basic", "extended", "expert"])]
    mode: Option<String>,
    #[arg(long, value_parser = ["rss", "atom"])]
    format: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    price_min: Option<String>,
    #[arg(long)]
    price_max: Option<String>,
    #[arg(long)]
    currency: Option<String>,
    #[arg(long, value_parser = ["true", "false"])]
    image: Option<String>,
    #[arg(long, value_parser = ["price_asc", "price_desc"])]
    sort: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lat: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lon: Option<String>,
    #[arg(long)]
    radius_km: Option<String>,
    #[arg(long)]
    limit: Option<String>,
    /// Raw SPARQL for expert mode.
    #[arg(long)]
    query: Option<String>,
}

impl GenArgs {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let fields = [
            ("mode", &self.mode),
            ("format", &self.format),
            ("q", &self.q),
            ("price_min", &self.price_min),
            ("price_max", &self.price_max),
            ("currency", &self.currency),
            ("image", &self.image),
            ("sort", &self.sort),
            ("lat", &self.lat),
            ("lon", &self.lon),
            ("radius_km", &self.radius_km),
            ("limit", &self.limit),
            ("query", &self.query),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect()
    }
}

/// A failure with its process exit code.
struct Failure(u8, String);

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Invalid(v) => {
                let lines: Vec<String> = v.iter().map(|v| format!("  {v}")).collect();
                Failure(2, format!("invalid request:\n{}", lines.join("\n")))
            }
            other => Failure(1, other.to_string()),
        }
    }
}

fn config(path: Option<&std::path::Path>) -> Result<ServiceConfig, Failure> {
    ServiceConfig::load(path).map_err(|e| Failure(2, format!("configuration: {e}")))
}

async fn gen(args: GenArgs) -> Result<(), Failure> {
    let mut cfg = config(args.config.as_deref())?;
    if let Some(ep) = &args.endpoint {
        cfg.set("endpoint_url", ep).map_err(|e| Failure(2, e.to_string()))?;
    }
    let req = from_pairs(&args.pairs()).map_err(|v| Failure::from(ServiceError::Invalid(v)))?;
    let clock = FeedService::clock_for(&cfg);
    let svc = FeedService::uncached(cfg, clock);
    if req.target_currency.is_some() {
        svc.refresh_rates()
            .await
            .map_err(|e| Failure(1, format!("exchange rates: {e}")))?;
    }
    let self_url = svc.self_url(&svc.config().default_base(), &req);
    let body = svc.generate(&req, &self_url).await?;
    match &args.out {
        Some(path) => std::fs::write(path, &body).map_err(|e| Failure(1, format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(&body)
            .map_err(|e| Failure(1, e.to_string())),
    }
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

async fn serve(path: Option<PathBuf>, listen: Option<SocketAddr>) -> Result<(), Failure> {
    let mut cfg = config(path.as_deref())?;
    if let Some(addr) = listen {
        cfg.listen_address = addr;
    }
    let addr = cfg.listen_address;
    let svc = Arc::new(FeedService::new(cfg)?);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Failure(1, format!("cannot listen on {addr}: {e}")))?;
    tracing::info!(%addr, endpoint = %svc.config().endpoint_url, "serving feeds");
    feedforge::serve(svc, listener, shutdown_signal())
        .await
        .map_err(|e| Failure(1, e.to_string()))
}

async fn mock(data: Option<PathBuf>, listen: SocketAddr) -> Result<(), Failure> {
    let ep = match data {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| Failure(1, format!("{}: {e}", path.display())))?;
            MockEndpoint::from_turtle(&text).map_err(|e| Failure(1, e.to_string()))?
        }
        None => MockEndpoint::fixture(),
    };
    let running = feedforge_mock_endpoint::spawn(Arc::new(ep), listen)
        .await
        .map_err(|e| Failure(1, format!("cannot listen on {listen}: {e}")))?;
    tracing::info!(url = %running.url(), "mock endpoint ready");
    shutdown_signal().await;
    running.stop().await;
    Ok(())
}

fn gen_usage() -> String {
    let mut cmd = Cli::command();
    cmd.build();
    cmd.find_subcommand_mut("gen")
        .map(|c| c.render_usage().to_string())
        .unwrap_or_default()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            eprintln!("\n{}", gen_usage());
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let rt = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("feedforge: cannot start runtime: {e}");
            return ExitCode::FAILURE;
        }
    };
    let result = rt.block_on(async {
        match cli.command {
            Command::Gen(args) => gen(*args).await,
            Command::Serve { config, listen } => serve(config, listen).await,
            Command::MockEndpoint { data, listen } => mock(data, listen).await,
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("feedforge: {msg}");
            if code == 2 {
                eprintln!("\n{}", gen_usage());
            }
            ExitCode::from(code)
        }
    }
}
