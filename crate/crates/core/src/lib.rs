//! Relevance-model learning: ranks (feature descriptor, Lp norm) pairs by
//! how well they separate user-labeled relevant from irrelevant items, and
//! trains an explorable hierarchical self-organizing-map classifier that
//! drives an active-learning labeling loop.

pub mod advisor;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod metric;
pub mod projection;
pub mod rng;
pub mod session;
pub mod som;
pub mod synthetic;

pub use advisor::{
    combined_score, inter_group_distance, intra_group_distance, rank_measures, AdvisorRanking, Label, LabelStore,
    MeasureScore,
};
pub use corpus::{draw_sample, load_corpus, Corpus, CorpusKind, DataItem, ItemSource, SamplingStrategy, SamplingVariant};
pub use error::{Error, LabelSide, Result};
pub use features::{DescriptorId, DescriptorKind, FeatureMatrix, FeatureSet};
pub use metric::{build_all_spaces, lp_distance, NormId, NormalizedSpace, SimilarityMeasure};
pub use projection::{mds_embed, overlay, Embedding};
pub use session::{load_session, save_session, simulate, start_session, Phase, Session, SessionConfig};
pub use som::{build_tree, query_candidates, train_som, SomHyperparams, SomTree};
