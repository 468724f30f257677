//! The iterative labeling loop: label, advise, train, query.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::advisor::{rank_measures, AdvisorRanking, Label, LabelStore, DEFAULT_INTRA_WEIGHT};
use crate::corpus::{draw_sample, load_corpus, Corpus, SamplingStrategy, SamplingVariant};
use crate::error::{Error, Result};
use crate::features::{corpus_features, load_or_extract, DescriptorKind, FeatureSet};
use crate::metric::{build_all_spaces, NormalizedSpace, SimilarityMeasure};
use crate::projection::{mds_embed, overlay, AnnotatedEmbedding, Embedding};
use crate::rng::{derive_seed, seeded_rng, stable_hash};
use crate::som::{build_tree, query_candidates, SomHyperparams, SomTree};

pub const SESSION_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_SAMPLE_SIZE: usize = 40;
pub const DEFAULT_QUERY_BUDGET: usize = 20;
pub const SEED_ENV: &str = "FDIVE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    AwaitingLabels,
    Advising,
    Training,
    Ready,
}

impl Phase {
    /// The only phase reachable from `self`.
    pub fn next(self) -> Phase {
        match self {
            Phase::AwaitingLabels => Phase::Advising,
            Phase::Advising => Phase::Training,
            Phase::Training => Phase::Ready,
            Phase::Ready => Phase::AwaitingLabels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub sample_size: usize,
    pub sampling: SamplingVariant,
    pub query_budget: usize,
    pub som: SomHyperparams,
    pub intra_weight: f64,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            sample_size: DEFAULT_SAMPLE_SIZE,
            sampling: SamplingVariant::MinimumMaximum,
            query_budget: DEFAULT_QUERY_BUDGET,
            som: SomHyperparams::default(),
            intra_weight: DEFAULT_INTRA_WEIGHT,
            seed: 0,
        }
    }
}

impl SessionConfig {
    /// Replaces the seed with `FDIVE_SEED` when it is set to an integer.
    pub fn with_env_seed(mut self) -> Result<Self> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            self.seed = raw
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("{SEED_ENV} must be an unsigned integer, got {raw:?}")))?;
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    pub ranking: AdvisorRanking,
    pub selected: SimilarityMeasure,
    pub overridden: bool,
    pub query: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusSummary {
    pub iteration: u32,
    pub phase: Phase,
    pub current_descriptor: Option<String>,
    pub distance_function: Option<String>,
    pub p: Option<f64>,
    pub relevant: usize,
    pub irrelevant: usize,
    pub neutral: usize,
    pub total: usize,
    pub query_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvanceOutcome {
    pub iteration: u32,
    pub ranking: AdvisorRanking,
    pub selected: SimilarityMeasure,
    pub overridden: bool,
    /// Iteration that produced the current tree.
    pub tree_id: u32,
    pub query: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Overlay {
    Labels,
    Classification,
}

/// What a session file stores; the corpus and features are rebuilt from
/// the manifest on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFile {
    pub version: u32,
    pub manifest: Option<PathBuf>,
    pub config: SessionConfig,
    pub labels: LabelStore,
    pub iteration: u32,
    pub phase: Phase,
    pub history: Vec<IterationRecord>,
    pub query: Vec<String>,
    pub tree: Option<SomTree>,
}

pub struct Session {
    corpus: Corpus,
    features: FeatureSet,
    spaces: Vec<NormalizedSpace>,
    manifest: Option<PathBuf>,
    config: SessionConfig,
    labels: LabelStore,
    iteration: u32,
    phase: Phase,
    history: Vec<IterationRecord>,
    query: Vec<String>,
    tree: Option<SomTree>,
    embedding: Option<Embedding>,
    classification: Option<BTreeMap<String, Label>>,
    persist_to: Option<PathBuf>,
}

/// Features for a manifest's corpus, through a cache directory if given.
pub fn features_for(corpus: &Corpus, cache_dir: Option<&Path>) -> Result<FeatureSet> {
    match cache_dir {
        Some(dir) => load_or_extract(corpus, dir),
        None => corpus_features(corpus, &DescriptorKind::ALL.into_iter().collect()),
    }
}

/// Starts a session in `awaiting-labels` with a representative first query
/// drawn over the concatenated features.
pub fn start_session(corpus: Corpus, features: FeatureSet, config: SessionConfig) -> Result<Session> {
    if features.is_empty() {
        return Err(Error::Parameter("session needs at least one descriptor".into()));
    }
    if !features.ids().iter().map(String::as_str).eq(corpus.ids()) {
        return Err(Error::Parameter("features do not cover the corpus items".into()));
    }
    let strategy = SamplingStrategy {
        variant: config.sampling,
        sample_size: config.sample_size,
        seed: derive_seed(config.seed, &["initial-sample"]),
    };
    let query = draw_sample(&corpus, &features.concatenated()?, &strategy)?;
    let spaces = build_all_spaces(&features);
    Ok(Session {
        corpus,
        features,
        spaces,
        manifest: None,
        config,
        labels: LabelStore::new(),
        iteration: 0,
        phase: Phase::AwaitingLabels,
        history: Vec::new(),
        query,
        tree: None,
        embedding: None,
        classification: None,
        persist_to: None,
    })
}

/// Loads the manifest's corpus and features, then starts a session.
pub fn start_from_manifest(manifest: &Path, cache_dir: Option<&Path>, config: SessionConfig) -> Result<Session> {
    let corpus = load_corpus(manifest)?;
    let features = features_for(&corpus, cache_dir)?;
    let mut session = start_session(corpus, features, config)?;
    session.manifest = Some(manifest.to_path_buf());
    Ok(session)
}

impl Session {
    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn features(&self) -> &FeatureSet {
        &self.features
    }

    pub fn spaces(&self) -> &[NormalizedSpace] {
        &self.spaces
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn labels(&self) -> &LabelStore {
        &self.labels
    }

    pub fn iteration(&self) -> u32 {
        self.iteration
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn history(&self) -> &[IterationRecord] {
        &self.history
    }

    pub fn query(&self) -> &[String] {
        &self.query
    }

    pub fn tree(&self) -> Option<&SomTree> {
        self.tree.as_ref()
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        self.embedding.as_ref()
    }

    pub fn classification(&self) -> Option<&BTreeMap<String, Label>> {
        self.classification.as_ref()
    }

    pub fn manifest(&self) -> Option<&Path> {
        self.manifest.as_deref()
    }

    /// Saves the session to `path` after every completed advance.
    pub fn persist_to(&mut self, path: impl Into<PathBuf>) {
        self.persist_to = Some(path.into());
    }

    pub fn latest_ranking(&self) -> Option<&AdvisorRanking> {
        self.history.last().map(|r| &r.ranking)
    }

    pub fn current_measure(&self) -> Option<&SimilarityMeasure> {
        self.history.last().map(|r| &r.selected)
    }

    pub fn space_for(&self, measure: &SimilarityMeasure) -> Option<&NormalizedSpace> {
        self.spaces.iter().find(|s| s.measure() == measure)
    }

    pub fn status(&self) -> StatusSummary {
        let measure = self.current_measure();
        let relevant = self.labels.count(Label::Relevant);
        let irrelevant = self.labels.count(Label::Irrelevant);
        StatusSummary {
            iteration: self.iteration,
            phase: self.phase,
            current_descriptor: measure.map(|m| m.descriptor.to_string()),
            distance_function: measure.map(|m| m.norm.to_string()),
            p: measure.map(|m| m.norm.p()),
            relevant,
            irrelevant,
            neutral: self.corpus.len() - relevant - irrelevant,
            total: self.corpus.len(),
            query_size: self.query.len(),
            seed: self.config.seed,
        }
    }

    fn transition(&mut self, to: Phase) -> Result<()> {
        if self.phase.next() != to {
            return Err(Error::PhaseTransition { from: self.phase, to });
        }
        self.phase = to;
        Ok(())
    }

    /// Applies every assignment or none: unknown ids reject the whole batch.
    pub fn submit_labels(&mut self, assignments: &BTreeMap<String, Label>) -> Result<StatusSummary> {
        let unknown: Vec<String> = assignments
            .keys()
            .filter(|id| self.corpus.get(id).is_none())
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownIds(unknown));
        }
        if self.phase == Phase::Ready {
            self.transition(Phase::AwaitingLabels)?;
        }
        for (id, &label) in assignments {
            self.labels.set(self.iteration, id.clone(), label);
        }
        Ok(self.status())
    }

    /// One loop step: rank all measures, train the relevance model on the
    /// selected one (the override, else the top-ranked), compute the next
    /// query and the embedding. Fails without changing state when either
    /// label group is empty.
    pub fn advance(&mut self, measure_override: Option<SimilarityMeasure>) -> Result<AdvanceOutcome> {
        if self.phase == Phase::Ready {
            self.transition(Phase::AwaitingLabels)?;
        }
        self.labels.require_both()?;
        if let Some(m) = &measure_override {
            if self.space_for(m).is_none() {
                return Err(Error::Parameter(format!("unknown similarity measure {m}")));
            }
        }
        self.transition(Phase::Advising)?;
        let result = self.run_step(measure_override);
        if result.is_err() {
            self.phase = Phase::AwaitingLabels;
        }
        result
    }

    fn run_step(&mut self, measure_override: Option<SimilarityMeasure>) -> Result<AdvanceOutcome> {
        let next_iteration = self.iteration + 1;
        let round = next_iteration.to_string();
        let mut ranking = rank_measures(&self.spaces, &self.labels, self.config.intra_weight)?;
        ranking.iteration = next_iteration;
        let overridden = measure_override.is_some();
        let selected = measure_override.unwrap_or_else(|| ranking.top().measure.clone());

        self.transition(Phase::Training)?;
        let space = self.space_for(&selected).expect("validated measure").clone();
        let mut hp = self.config.som.clone();
        hp.seed = derive_seed(self.config.seed, &["som-tree", &round]);
        let tree = build_tree(&space, &self.labels, &hp)?;
        let query = self.next_query(&tree, &space);
        let classification = tree.classify_all(&space)?;
        let embedding = mds_embed(&space, space.ids(), derive_seed(self.config.seed, &["embedding", &round]))?;

        self.tree = Some(tree);
        self.classification = Some(classification);
        self.embedding = Some(embedding);
        self.query = query.clone();
        self.iteration = next_iteration;
        self.history.push(IterationRecord {
            iteration: next_iteration,
            ranking: ranking.clone(),
            selected: selected.clone(),
            overridden,
            query: query.clone(),
        });
        self.transition(Phase::Ready)?;
        if let Some(path) = self.persist_to.clone() {
            self.save(&path)?;
        }
        Ok(AdvanceOutcome {
            iteration: next_iteration,
            ranking,
            selected,
            overridden,
            tree_id: next_iteration,
            query,
        })
    }

    /// Low-LabelRatio candidates first; when they run short, the remaining
    /// neutral items of childless cells in the same cell order.
    fn next_query(&self, tree: &SomTree, space: &NormalizedSpace) -> Vec<String> {
        let budget = self.config.query_budget;
        let mut query = query_candidates(tree, space, self.config.som.label_threshold, budget);
        if query.len() < budget {
            let taken: BTreeSet<String> = query.iter().cloned().collect();
            let extra: Vec<String> = query_candidates(tree, space, f64::INFINITY, tree.items.len())
                .into_iter()
                .filter(|id| !taken.contains(id))
                .take(budget - query.len())
                .collect();
            query.extend(extra);
        }
        query
    }

    /// Current embedding annotated with labels or with the model's
    /// classification.
    pub fn projection(&self, overlay_kind: Overlay) -> Option<AnnotatedEmbedding> {
        let embedding = self.embedding.as_ref()?;
        Some(match overlay_kind {
            Overlay::Labels => overlay(embedding, &self.labels, None),
            Overlay::Classification => overlay(embedding, &self.labels, self.classification.as_ref()),
        })
    }

    /// Embedding of any measure's space, annotated with labels.
    pub fn projection_for(&self, measure: &SimilarityMeasure) -> Result<AnnotatedEmbedding> {
        let space = self
            .space_for(measure)
            .ok_or_else(|| Error::Parameter(format!("unknown similarity measure {measure}")))?;
        let seed = derive_seed(self.config.seed, &["embedding", &self.iteration.to_string(), &measure.to_string()]);
        let embedding = mds_embed(space, space.ids(), seed)?;
        Ok(overlay(&embedding, &self.labels, None))
    }

    pub fn to_file(&self) -> SessionFile {
        SessionFile {
            version: SESSION_FORMAT_VERSION,
            manifest: self.manifest.clone(),
            config: self.config.clone(),
            labels: self.labels.clone(),
            iteration: self.iteration,
            phase: self.phase,
            history: self.history.clone(),
            query: self.query.clone(),
            tree: self.tree.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(&self.to_file()).map_err(|e| Error::SessionParse(e.to_string()))?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, json)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Rebuilds a session from its file and the corpus it was created on.
    pub fn restore(file: SessionFile, corpus: Corpus, features: FeatureSet) -> Result<Session> {
        if file.version != SESSION_FORMAT_VERSION {
            return Err(Error::SessionVersion {
                found: file.version,
                expected: SESSION_FORMAT_VERSION,
            });
        }
        let unknown: Vec<String> = file
            .labels
            .labeled()
            .map(|(id, _)| id)
            .filter(|id| corpus.get(id).is_none())
            .map(str::to_string)
            .collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownIds(unknown));
        }
        let spaces = build_all_spaces(&features);
        let mut session = Session {
            corpus,
            features,
            spaces,
            manifest: file.manifest,
            config: file.config,
            labels: file.labels,
            iteration: file.iteration,
            phase: file.phase,
            history: file.history,
            query: file.query,
            tree: file.tree,
            embedding: None,
            classification: None,
            persist_to: None,
        };
        if let Some(tree) = &session.tree {
            let space = session
                .space_for(&tree.measure)
                .ok_or_else(|| Error::SessionParse(format!("tree measure {} is not available", tree.measure)))?;
            let round = session.iteration.to_string();
            let classification = tree.classify_all(space)?;
            let embedding = mds_embed(space, space.ids(), derive_seed(session.config.seed, &["embedding", &round]))?;
            session.classification = Some(classification);
            session.embedding = Some(embedding);
        }
        Ok(session)
    }
}

/// Parses a session file, checking the format version before the body.
pub fn read_session_file(path: &Path) -> Result<SessionFile> {
    let bytes = std::fs::read(path)?;
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| Error::SessionParse(e.to_string()))?;
    let found = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::SessionParse("missing version".into()))?;
    if found != SESSION_FORMAT_VERSION as u64 {
        return Err(Error::SessionVersion {
            found: found as u32,
            expected: SESSION_FORMAT_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| Error::SessionParse(e.to_string()))
}

pub fn save_session(session: &Session, path: &Path) -> Result<()> {
    session.save(path)
}

/// Loads a session file and rebuilds its corpus from the recorded manifest.
pub fn load_session(path: &Path, cache_dir: Option<&Path>) -> Result<Session> {
    let file = read_session_file(path)?;
    let manifest = file
        .manifest
        .clone()
        .ok_or_else(|| Error::SessionParse("session file records no manifest".into()))?;
    let corpus = load_corpus(&manifest)?;
    let features = features_for(&corpus, cache_dir)?;
    Session::restore(file, corpus, features)
}

/// Digest of a tree's JSON form, for cheap equality checks across runs.
pub fn tree_digest(tree: &SomTree) -> u64 {
    stable_hash([serde_json::to_string(tree).expect("tree serializes")])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationStep {
    pub iteration: u32,
    pub selected: SimilarityMeasure,
    pub query: Vec<String>,
    pub tree_digest: u64,
    pub relevant: usize,
    pub irrelevant: usize,
}

/// Labels by ground truth: the target class is relevant, every other class
/// irrelevant, items without ground truth stay neutral.
pub fn ground_truth_label(corpus: &Corpus, id: &str, target: &str) -> Label {
    match corpus.get(id).and_then(|i| i.ground_truth.as_deref()) {
        Some(gt) if gt == target => Label::Relevant,
        Some(_) => Label::Irrelevant,
        None => Label::Neutral,
    }
}

/// Smallest ground-truth class name in the corpus.
pub fn default_target(corpus: &Corpus) -> Option<String> {
    corpus
        .items()
        .iter()
        .filter_map(|i| i.ground_truth.clone())
        .min()
}

/// Runs the loop headless for `iterations` steps, answering every query
/// from ground truth. When the answers so far lack one of the classes,
/// further neutral items are drawn (seeded) and labeled until both exist.
pub fn simulate(session: &mut Session, target: &str, iterations: usize) -> Result<Vec<SimulationStep>> {
    let mut steps = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let answers: BTreeMap<String, Label> = session
            .query
            .iter()
            .map(|id| (id.clone(), ground_truth_label(&session.corpus, id, target)))
            .collect();
        session.submit_labels(&answers)?;
        top_up_labels(session, target)?;
        let outcome = session.advance(None)?;
        steps.push(SimulationStep {
            iteration: outcome.iteration,
            selected: outcome.selected,
            query: outcome.query,
            tree_digest: tree_digest(session.tree.as_ref().expect("tree after advance")),
            relevant: session.labels.count(Label::Relevant),
            irrelevant: session.labels.count(Label::Irrelevant),
        });
    }
    Ok(steps)
}

fn top_up_labels(session: &mut Session, target: &str) -> Result<()> {
    if session.labels.require_both().is_ok() {
        return Ok(());
    }
    let mut neutral: Vec<String> = session
        .corpus
        .ids()
        .filter(|id| session.labels.get(id) == Label::Neutral)
        .map(str::to_string)
        .collect();
    let seed = derive_seed(session.config.seed, &["top-up", &session.iteration.to_string()]);
    neutral.shuffle(&mut seeded_rng(seed));
    for id in neutral {
        let label = ground_truth_label(&session.corpus, &id, target);
        if label == Label::Neutral {
            continue;
        }
        session.labels.set(session.iteration, id, label);
        if session.labels.require_both().is_ok() {
            return Ok(());
        }
    }
    session.labels.require_both()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phases_cycle_in_order() {
        let mut p = Phase::AwaitingLabels;
        let mut seen = vec![p];
        for _ in 0..4 {
            p = p.next();
            seen.push(p);
        }
        assert_eq!(
            seen,
            vec![
                Phase::AwaitingLabels,
                Phase::Advising,
                Phase::Training,
                Phase::Ready,
                Phase::AwaitingLabels
            ]
        );
    }

    #[test]
    fn defaults() {
        let cfg = SessionConfig::default();
        assert_eq!(cfg.sample_size, 40);
        assert_eq!(cfg.query_budget, 20);
    }
}
