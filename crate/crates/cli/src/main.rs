use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use fdive_cli::api::{router, AppState};
use fdive_cli::commands::{self, EvaluateArgs, SimulateArgs};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "fdive", version, about = "Similarity-measure advisor and SOM relevance learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Oracle {
    GroundTruth,
}

#[derive(Subcommand)]
enum Command {
    /// Extract every descriptor of an image corpus into a cache directory.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the labeling loop headless, answering queries from ground truth.
    Simulate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "ground-truth")]
        oracle: Oracle,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relevant class; defaults to the first ground-truth class name.
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        sample_size: Option<usize>,
        /// Write the per-iteration steps as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the advisor with feature-selection baselines.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<usize>>,
    },
    /// Serve the HTTP API for one session.
    Serve {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Session file; resumed when it exists, written after every change.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Extract { manifest, out } => {
            for (descriptor, path) in commands::extract(&manifest, &out)? {
                println!("{descriptor}\t{}", path.display());
            }
        }
        Command::Simulate {
            manifest,
            oracle: Oracle::GroundTruth,
            iterations,
            seed,
            target,
            cache,
            sample_size,
            out,
        } => {
            let (target, steps) = commands::simulate_run(&SimulateArgs {
                manifest,
                iterations,
                seed,
                target,
                cache,
                sample_size,
            })?;
            println!("target {target}");
            for s in &steps {
                println!(
                    "iteration {}\tmeasure {}\trelevant {}\tirrelevant {}\tquery {}\ttree {:016x}",
                    s.iteration,
                    s.selected,
                    s.relevant,
                    s.irrelevant,
                    s.query.len(),
                    s.tree_digest
                );
            }
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_vec_pretty(&steps)?)?;
            }
        }
        Command::Evaluate {
            manifest,
            targets,
            out,
            seed,
            cache,
            budgets,
        } => {
            let report = commands::evaluate(&EvaluateArgs {
                manifest,
                targets,
                seed,
                cache,
                budgets,
            })?;
            std::fs::write(&out, report.to_csv()?)?;
            print!("{}", report.to_table());
        }
        Command::Serve {
            manifest,
            port,
            state,
            cache,
            seed,
        } => {
            let session = commands::open_session(&manifest, state.as_deref(), cache.as_deref(), seed)?;
            let app = router(AppState::new(session, state));
            let addr = SocketAddr::from(([127, 0, 0, 1], port));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                tracing::info!("listening on http://{addr}");
                axum::serve(listener, app).await?;
                Ok::<_, anyhow::Error>(())
            })?;
        }
    }
    Ok(())
}
