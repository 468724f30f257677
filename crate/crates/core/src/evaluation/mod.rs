//! Offline comparison of the advisor against feature-selection baselines
//! using k-NN classification scored by F1.

mod dataset;
pub mod knn;
pub mod protocol;
pub mod relieff;
pub mod rfe;

pub use dataset::Dataset;
pub use knn::{knn_f1, knn_f1_multi, Confusion, KnnConfig, LabeledRow, RowSource};
pub use protocol::{
    cell_seed, class_pools, draw_split, measure_f1_table, run_protocol, BaselineChoice, BaselineMode, LabelSplit,
    Outcome, ProtocolCell, ProtocolConfig, ProtocolReport, SelectionAlgorithm, SelectionConfig, BUDGETS, KS,
    SUBSET_SIZES,
};
pub use relieff::{relieff_weights, ReliefWeights, DEFAULT_RELIEFF_NEIGHBORS};
pub use rfe::{aggregate_rankings, rfe_ensemble, rfe_rank, train_linear_svm, EnsembleRanking, ENSEMBLE_SIZE};
