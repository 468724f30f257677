use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_som, CellStats, SomGrid, SomHyperparams};
use crate::advisor::{Label, LabelStore};
use crate::error::{Error, LabelSide, Result};
use crate::metric::{lp_distance, NormalizedSpace, SimilarityMeasure};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomNode {
    pub id: usize,
    /// Parent node and the parent cell this node refines.
    pub parent: Option<(usize, usize)>,
    pub depth: usize,
    pub grid: SomGrid,
    /// Cell index -> child node id.
    pub children: BTreeMap<usize, usize>,
    pub stats: Vec<CellStats>,
}

/// Per-cell visual layers of a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellLayer {
    /// Relevant share of the labeled items: 0 is all irrelevant, 1 all
    /// relevant, 0.5 mixed or unlabeled.
    pub label_quality: f64,
    /// LabelRatio below q_t.
    pub insufficient_labels: bool,
    pub quantization_error: f64,
    /// Mean distance from the prototype to its 4-neighborhood prototypes.
    pub u_matrix: f64,
    /// The prototype vector.
    pub feature_histogram: Vec<f64>,
}

impl SomNode {
    pub fn is_leaf_cell(&self, cell: usize) -> bool {
        !self.children.contains_key(&cell)
    }

    pub fn u_matrix(&self, norm: crate::metric::NormId) -> Vec<f64> {
        (0..self.grid.cells())
            .map(|c| {
                let nb = self.grid.neighbors(c);
                if nb.is_empty() {
                    return 0.0;
                }
                let sum: f64 = nb
                    .iter()
                    .map(|&n| lp_distance(self.grid.prototype(c), self.grid.prototype(n), norm))
                    .sum();
                sum / nb.len() as f64
            })
            .collect()
    }

    pub fn layers(&self, norm: crate::metric::NormId, label_threshold: f64) -> Vec<CellLayer> {
        let umatrix = self.u_matrix(norm);
        self.stats
            .iter()
            .enumerate()
            .map(|(c, s)| CellLayer {
                label_quality: if s.labeled() == 0 {
                    0.5
                } else {
                    s.relevant as f64 / s.labeled() as f64
                },
                insufficient_labels: s.label_ratio < label_threshold,
                quantization_error: s.quantization_error,
                u_matrix: umatrix[c],
                feature_histogram: self.grid.prototype(c).to_vec(),
            })
            .collect()
    }
}

/// A trained hierarchical classifier. Serializes to JSON with everything
/// needed to classify vectors without retraining.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomTree {
    pub measure: SimilarityMeasure,
    pub hyperparams: SomHyperparams,
    /// Space ids, indexed by the members lists of every grid.
    pub items: Vec<String>,
    /// Label of every item when the tree was trained.
    pub labels: Vec<Label>,
    /// Nodes in breadth-first order; node 0 is the root.
    pub nodes: Vec<SomNode>,
}

fn majority(stats: &CellStats) -> Label {
    if stats.relevant > stats.irrelevant {
        Label::Relevant
    } else {
        Label::Irrelevant
    }
}

fn cell_stats(grid: &SomGrid, space: &NormalizedSpace, labels: &[Label]) -> Vec<CellStats> {
    grid.members
        .iter()
        .enumerate()
        .map(|(c, members)| {
            let relevant = members.iter().filter(|&&i| labels[i] == Label::Relevant).count();
            let irrelevant = members.iter().filter(|&&i| labels[i] == Label::Irrelevant).count();
            let qe = if members.is_empty() {
                0.0
            } else {
                members
                    .iter()
                    .map(|&i| lp_distance(space.row(i), grid.prototype(c), space.norm()))
                    .sum::<f64>()
                    / members.len() as f64
            };
            CellStats::new(members.len(), relevant, irrelevant, qe)
        })
        .collect()
}

pub(crate) fn splits(stats: &CellStats, depth: usize, hp: &SomHyperparams) -> bool {
    stats.mix_ratio > hp.mix_threshold && stats.items > hp.count_threshold() && depth < hp.max_depth
}

/// Trains the root map on every row of `space` and refines mixed, populated
/// cells with child maps, level by level. Siblings train in parallel; node
/// ids follow breadth-first order, so the result is deterministic.
pub fn build_tree(space: &NormalizedSpace, labels: &LabelStore, hp: &SomHyperparams) -> Result<SomTree> {
    let item_labels: Vec<Label> = space.ids().iter().map(|id| labels.get(id)).collect();
    let has = |l: Label| item_labels.contains(&l);
    match (has(Label::Relevant), has(Label::Irrelevant)) {
        (true, true) => {}
        (false, true) => return Err(Error::InsufficientLabels(LabelSide::Relevant)),
        (true, false) => return Err(Error::InsufficientLabels(LabelSide::Irrelevant)),
        (false, false) => return Err(Error::InsufficientLabels(LabelSide::Both)),
    }
    if space.is_empty() {
        return Err(Error::Parameter("cannot train on an empty space".into()));
    }

    struct Job {
        items: Vec<usize>,
        parent: Option<(usize, usize)>,
        depth: usize,
        seed: u64,
    }

    let mut nodes: Vec<SomNode> = Vec::new();
    let mut level = vec![Job {
        items: (0..space.len()).collect(),
        parent: None,
        depth: 0,
        seed: hp.seed,
    }];
    while !level.is_empty() {
        let trained: Vec<(SomGrid, Vec<CellStats>)> = level
            .par_iter()
            .map(|job| {
                let grid = train_som(&job.items, space, hp, job.seed);
                let stats = cell_stats(&grid, space, &item_labels);
                (grid, stats)
            })
            .collect();
        let mut next = Vec::new();
        for (job, (grid, stats)) in level.into_iter().zip(trained) {
            let id = nodes.len();
            if let Some((parent, cell)) = job.parent {
                nodes[parent].children.insert(cell, id);
            }
            for (cell, s) in stats.iter().enumerate() {
                if splits(s, job.depth, hp) {
                    next.push(Job {
                        items: grid.members[cell].clone(),
                        parent: Some((id, cell)),
                        depth: job.depth + 1,
                        seed: derive_seed(hp.seed, &["som-node", &id.to_string(), &cell.to_string()]),
                    });
                }
            }
            nodes.push(SomNode {
                id,
                parent: job.parent,
                depth: job.depth,
                grid,
                children: BTreeMap::new(),
                stats,
            });
        }
        level = next;
    }

    Ok(SomTree {
        measure: space.measure().clone(),
        hyperparams: hp.clone(),
        items: space.ids().to_vec(),
        labels: item_labels,
        nodes,
    })
}

impl SomTree {
    pub fn root(&self) -> &SomNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> Option<&SomNode> {
        self.nodes.get(id)
    }

    /// Node and cell reached by recursive best-matching descent.
    pub fn leaf_of(&self, x: &[f64]) -> (usize, usize) {
        let norm = self.measure.norm;
        let mut node = &self.nodes[0];
        loop {
            let cell = node.grid.best_matching(x, norm);
            match node.children.get(&cell) {
                Some(&child) => node = &self.nodes[child],
                None => return (node.id, cell),
            }
        }
    }

    /// Majority label of the leaf reached by `x`. An unlabeled leaf cell
    /// defers to the other cells of the same map, nearest prototype first.
    pub fn classify_vector(&self, x: &[f64]) -> Option<Label> {
        let (node_id, cell) = self.leaf_of(x);
        let node = &self.nodes[node_id];
        if node.stats[cell].labeled() > 0 {
            return Some(majority(&node.stats[cell]));
        }
        node.grid
            .cells_by_distance(x, self.measure.norm)
            .into_iter()
            .find(|&(c, _)| c != cell && node.stats[c].labeled() > 0)
            .map(|(c, _)| majority(&node.stats[c]))
    }

    pub fn classify(&self, id: &str, space: &NormalizedSpace) -> Result<Label> {
        let row = space
            .position(id)
            .ok_or_else(|| Error::UnknownIds(vec![id.to_string()]))?;
        self.classify_vector(space.row(row))
            .ok_or_else(|| Error::Unclassifiable(id.to_string()))
    }

    /// Classification of every space row, keyed by id.
    pub fn classify_all(&self, space: &NormalizedSpace) -> Result<BTreeMap<String, Label>> {
        space
            .ids()
            .iter()
            .enumerate()
            .map(|(i, id)| {
                self.classify_vector(space.row(i))
                    .map(|l| (id.clone(), l))
                    .ok_or_else(|| Error::Unclassifiable(id.clone()))
            })
            .collect()
    }

    /// Cell indices from the root down to (and including) `cell` of `node`.
    pub fn cell_path(&self, node: usize, cell: usize) -> Vec<usize> {
        let mut path = vec![cell];
        let mut current = &self.nodes[node];
        while let Some((parent, parent_cell)) = current.parent {
            path.push(parent_cell);
            current = &self.nodes[parent];
        }
        path.reverse();
        path
    }

    /// Ids and training-time labels of the items in one cell.
    pub fn cell_items(&self, node: usize, cell: usize) -> Option<Vec<(&str, Label)>> {
        let members = self.nodes.get(node)?.grid.members.get(cell)?;
        Some(members.iter().map(|&i| (self.items[i].as_str(), self.labels[i])).collect())
    }

    pub fn layers(&self, node: usize) -> Option<Vec<CellLayer>> {
        self.nodes
            .get(node)
            .map(|n| n.layers(self.measure.norm, self.hyperparams.label_threshold))
    }

    /// Client view: structure, stats and layers. Prototypes are included
    /// only when `full` is set.
    pub fn view(&self, full: bool) -> TreeView {
        TreeView {
            measure: self.measure.clone(),
            hyperparams: self.hyperparams.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| {
                    let layers = n.layers(self.measure.norm, self.hyperparams.label_threshold);
                    NodeView {
                        id: n.id,
                        parent: n.parent,
                        depth: n.depth,
                        width: n.grid.width,
                        height: n.grid.height,
                        cells: n
                            .stats
                            .iter()
                            .zip(layers)
                            .enumerate()
                            .map(|(c, (s, layer))| CellView {
                                index: c,
                                child: n.children.get(&c).copied(),
                                stats: *s,
                                label_quality: layer.label_quality,
                                insufficient_labels: layer.insufficient_labels && n.is_leaf_cell(c),
                                quantization_error: layer.quantization_error,
                                u_matrix: layer.u_matrix,
                                feature_histogram: full.then_some(layer.feature_histogram),
                            })
                            .collect(),
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellView {
    pub index: usize,
    pub child: Option<usize>,
    pub stats: CellStats,
    pub label_quality: f64,
    /// White-dot marker: childless cell with LabelRatio below q_t.
    pub insufficient_labels: bool,
    pub quantization_error: f64,
    pub u_matrix: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_histogram: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeView {
    pub id: usize,
    pub parent: Option<(usize, usize)>,
    pub depth: usize,
    pub width: usize,
    pub height: usize,
    pub cells: Vec<CellView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeView {
    pub measure: SimilarityMeasure,
    pub hyperparams: SomHyperparams,
    pub nodes: Vec<NodeView>,
}

/// Active-learning query: unlabeled items from childless cells whose
/// LabelRatio is below `label_threshold`.
///
/// Marked cells are visited by ascending LabelRatio, then larger cells
/// first, then by cell path. Items are taken round-robin across the marked
/// cells, nearest-to-prototype first within each cell, until `budget` ids
/// are collected or the candidates run out.
pub fn query_candidates(tree: &SomTree, space: &NormalizedSpace, label_threshold: f64, budget: usize) -> Vec<String> {
    let norm = tree.measure.norm;
    let mut marked: Vec<(f64, usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for node in &tree.nodes {
        for (cell, stats) in node.stats.iter().enumerate() {
            if !node.is_leaf_cell(cell) || stats.label_ratio >= label_threshold {
                continue;
            }
            let proto = node.grid.prototype(cell);
            let mut unlabeled: Vec<(f64, usize)> = node.grid.members[cell]
                .iter()
                .filter(|&&i| tree.labels[i] == Label::Neutral)
                .map(|&i| (lp_distance(space.row(i), proto, norm), i))
                .collect();
            if unlabeled.is_empty() {
                continue;
            }
            unlabeled.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            marked.push((
                stats.label_ratio,
                stats.items,
                tree.cell_path(node.id, cell),
                unlabeled.into_iter().map(|(_, i)| i).collect(),
            ));
        }
    }
    marked.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)).then_with(|| a.2.cmp(&b.2)));

    let available: usize = marked.iter().map(|m| m.3.len()).sum();
    let mut out = Vec::with_capacity(budget.min(available));
    let mut round = 0;
    while out.len() < budget {
        let mut any = false;
        for (_, _, _, items) in &marked {
            if let Some(&i) = items.get(round) {
                any = true;
                out.push(tree.items[i].clone());
                if out.len() == budget {
                    break;
                }
            }
        }
        if !any {
            break;
        }
        round += 1;
    }
    out
}
