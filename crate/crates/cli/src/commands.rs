use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fdive_core::evaluation::{run_protocol, ProtocolConfig, ProtocolReport};
use fdive_core::features::{cache_path, load_or_extract};
use fdive_core::session::{
    default_target, features_for, load_session, simulate, start_from_manifest, SessionConfig, SimulationStep,
};
use fdive_core::{load_corpus, CorpusKind};

/// Extracts every descriptor into `out` and returns (descriptor, cache file)
/// pairs.
pub fn extract(manifest: &Path, out: &Path) -> Result<Vec<(String, PathBuf)>> {
    let corpus = load_corpus(manifest)?;
    if corpus.kind() == CorpusKind::Vectors {
        bail!("{} lists inline vectors; there is nothing to extract", manifest.display());
    }
    let features = load_or_extract(&corpus, out)?;
    Ok(features
        .descriptors()
        .map(|d| (d.to_string(), cache_path(out, d)))
        .collect())
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub manifest: PathBuf,
    pub iterations: usize,
    pub seed: u64,
    pub target: Option<String>,
    pub cache: Option<PathBuf>,
    pub sample_size: Option<usize>,
}

/// Headless loop with ground truth as the labeler.
pub fn simulate_run(args: &SimulateArgs) -> Result<(String, Vec<SimulationStep>)> {
    let mut config = SessionConfig {
        seed: args.seed,
        ..Default::default()
    }
    .with_env_seed()?;
    if let Some(size) = args.sample_size {
        config.sample_size = size;
    }
    let mut session = start_from_manifest(&args.manifest, args.cache.as_deref(), config)?;
    let target = match &args.target {
        Some(t) => t.clone(),
        None => default_target(session.corpus()).context("manifest has no ground_truth column values")?,
    };
    let steps = simulate(&mut session, &target, args.iterations)?;
    Ok((target, steps))
}

#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub manifest: PathBuf,
    pub targets: Vec<String>,
    pub seed: u64,
    pub cache: Option<PathBuf>,
    pub budgets: Option<Vec<usize>>,
}

pub fn evaluate(args: &EvaluateArgs) -> Result<ProtocolReport> {
    let corpus = load_corpus(&args.manifest)?;
    let features = features_for(&corpus, args.cache.as_deref())?;
    let mut config = ProtocolConfig {
        seed: args.seed,
        ..Default::default()
    };
    if let Ok(raw) = std::env::var(fdive_core::session::SEED_ENV) {
        config.seed = raw.trim().parse().context("FDIVE_SEED must be an unsigned integer")?;
    }
    if let Some(b) = &args.budgets {
        config.budgets = b.clone();
    }
    Ok(run_protocol(&corpus, &features, &args.targets, &config)?)
}

/// Resumes the session in `state` if it exists, else starts a new one from
/// the manifest.
pub fn open_session(
    manifest: &Path,
    state: Option<&Path>,
    cache: Option<&Path>,
    seed: u64,
) -> Result<fdive_core::Session> {
    if let Some(path) = state.filter(|p| p.exists()) {
        return Ok(load_session(path, cache)?);
    }
    let config = SessionConfig {
        seed,
        ..Default::default()
    }
    .with_env_seed()?;
    Ok(start_from_manifest(manifest, cache, config)?)
}
