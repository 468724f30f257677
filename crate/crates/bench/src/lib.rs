//! Fixtures shared by the benchmarks.

use fdive_core::synthetic::{planted_vector_corpus, PlantedConfig};
use fdive_core::{DescriptorKind, FeatureSet, Label, LabelStore};

/// Planted two-class vector corpus features and labels for every `stride`-th item.
pub fn planted_fixture(per_class: usize, stride: usize) -> (FeatureSet, LabelStore) {
    let corpus = planted_vector_corpus(&PlantedConfig {
        classes: 2,
        per_class,
        signal: DescriptorKind::Haralick,
        separation: 1.0,
        seed: 1,
    })
    .expect("planted corpus");
    let labels = LabelStore::from_pairs(corpus.items().iter().step_by(stride).map(|item| {
        let label = if item.ground_truth.as_deref() == Some("class-0") {
            Label::Relevant
        } else {
            Label::Irrelevant
        };
        (item.id.as_str(), label)
    }));
    (corpus.vector_features().expect("vector features"), labels)
}
