//! Hierarchical self-organizing-map relevance classifier.
//!
//! A root map is trained on every item. Cells whose labeled items are mixed
//! beyond `mix_threshold` and that hold more than `count_threshold` items get
//! a child map trained on exactly their items, recursively, up to
//! `max_depth`. Items are classified by descending best-matching cells to a
//! childless cell and taking its majority label.

mod grid;
mod tree;

use serde::{Deserialize, Serialize};

pub use grid::{train_som, SomGrid};
pub use tree::{build_tree, query_candidates, CellLayer, CellView, NodeView, SomNode, SomTree, TreeView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomHyperparams {
    pub width: usize,
    pub height: usize,
    pub epochs: usize,
    /// Initial learning rate.
    pub alpha0: f64,
    /// Initial neighborhood radius; `None` means `max(width, height) / 2`.
    pub radius0: Option<f64>,
    /// m_t: a cell splits only if its MixRatio exceeds this.
    pub mix_threshold: f64,
    /// c_t: a cell splits only if it holds more items than this;
    /// `None` means `2 * width * height`.
    pub count_threshold: Option<usize>,
    /// q_t: childless cells with a LabelRatio below this are query sources.
    pub label_threshold: f64,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for SomHyperparams {
    fn default() -> Self {
        SomHyperparams {
            width: 3,
            height: 3,
            epochs: 20,
            alpha0: 0.5,
            radius0: None,
            mix_threshold: 0.2,
            count_threshold: None,
            label_threshold: 0.1,
            max_depth: 4,
            seed: 0,
        }
    }
}

impl SomHyperparams {
    pub fn radius0(&self) -> f64 {
        self.radius0
            .unwrap_or(self.width.max(self.height) as f64 / 2.0)
    }

    pub fn count_threshold(&self) -> usize {
        self.count_threshold.unwrap_or(2 * self.width * self.height)
    }
}

/// Label statistics of one cell, taken when the tree was trained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub items: usize,
    pub relevant: usize,
    pub irrelevant: usize,
    pub mix_ratio: f64,
    pub label_ratio: f64,
    /// Mean distance of the assigned items to the prototype.
    pub quantization_error: f64,
}

impl CellStats {
    pub fn new(items: usize, relevant: usize, irrelevant: usize, quantization_error: f64) -> Self {
        CellStats {
            items,
            relevant,
            irrelevant,
            mix_ratio: mix_ratio(relevant, irrelevant),
            label_ratio: label_ratio(relevant, irrelevant, items),
            quantization_error,
        }
    }

    pub fn labeled(&self) -> usize {
        self.relevant + self.irrelevant
    }

    pub fn neutral(&self) -> usize {
        self.items - self.labeled()
    }
}

/// `min(|L+| / |L|, |L-| / |L|)`, defined as 0 for a cell without labels.
pub fn mix_ratio(relevant: usize, irrelevant: usize) -> f64 {
    let labeled = relevant + irrelevant;
    if labeled == 0 {
        return 0.0;
    }
    let l = labeled as f64;
    (relevant as f64 / l).min(irrelevant as f64 / l)
}

/// `(|L+| + |L-|) / |E|`, defined as 0 for an empty cell.
pub fn label_ratio(relevant: usize, irrelevant: usize, items: usize) -> f64 {
    if items == 0 {
        return 0.0;
    }
    (relevant + irrelevant) as f64 / items as f64
}
