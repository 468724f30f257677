mod common;

use std::collections::BTreeMap;

use common::*;
use fdive_core::projection::{mds_embed, overlay, Classified};
use fdive_core::som::{CellStats, SomGrid, SomNode};
use fdive_core::{
    build_tree, query_candidates, train_som, DescriptorId, Label, LabelStore, NormId, NormalizedSpace,
    SimilarityMeasure, SomHyperparams, SomTree,
};
use proptest::prelude::*;

fn space(rows: Vec<Vec<f64>>, norm: NormId) -> NormalizedSpace {
    NormalizedSpace::build(&matrix("t", rows), norm)
}

fn raw_space(rows: Vec<Vec<f64>>) -> NormalizedSpace {
    let n = rows.len();
    NormalizedSpace::from_normalized(SimilarityMeasure::new(DescriptorId::new("t"), NormId::L2), ids(n), rows)
}

/// Single-node tree over 1-D prototypes with the given members and labels.
fn flat_tree(prototypes: Vec<f64>, members: Vec<Vec<usize>>, labels: Vec<Label>, space: &NormalizedSpace) -> SomTree {
    let grid = SomGrid {
        width: prototypes.len(),
        height: 1,
        dim: 1,
        prototypes,
        members,
    };
    let stats = grid
        .members
        .iter()
        .map(|m| {
            let rel = m.iter().filter(|&&i| labels[i] == Label::Relevant).count();
            let irr = m.iter().filter(|&&i| labels[i] == Label::Irrelevant).count();
            CellStats::new(m.len(), rel, irr, 0.0)
        })
        .collect();
    SomTree {
        measure: space.measure().clone(),
        hyperparams: SomHyperparams::default(),
        items: space.ids().to_vec(),
        labels,
        nodes: vec![SomNode {
            id: 0,
            parent: None,
            depth: 0,
            grid,
            children: BTreeMap::new(),
            stats,
        }],
    }
}

fn bmu_oracle(grid: &SomGrid, x: &[f64], p: f64) -> usize {
    let mut best = 0;
    for c in 1..grid.width * grid.height {
        if lp(x, grid.prototype(c), p) < lp(x, grid.prototype(best), p) {
            best = c;
        }
    }
    best
}

#[test]
fn single_item_map_copies_the_item_everywhere() {
    let s = space(vec![vec![0.3, 0.7]], NormId::L2);
    let grid = train_som(&[0], &s, &SomHyperparams::default(), 4);
    for c in 0..grid.cells() {
        assert_eq!(grid.prototype(c), s.row(0));
    }
    assert_eq!(grid.members[0], vec![0]);
    assert!(grid.members[1..].iter().all(Vec::is_empty));
}

#[test]
fn distant_blobs_never_share_a_cell() {
    let mut rng = rng(21);
    let (rows, truth) = two_blobs(&mut rng, 60, 10.0, 0.3);
    let s = space(rows, NormId::L2);
    let all: Vec<usize> = (0..s.len()).collect();
    let grid = train_som(&all, &s, &SomHyperparams::default(), 9);
    for members in &grid.members {
        assert!(members.iter().all(|&i| truth[i]) || members.iter().all(|&i| !truth[i]));
    }
    for (i, c) in grid.assignment() {
        assert_eq!(c, bmu_oracle(&grid, s.row(i), 2.0));
    }
    assert_eq!(grid.assignment().len(), s.len());
}

#[test]
fn mix_threshold_of_one_half_never_splits() {
    let mut rng = rng(22);
    let rows = random_rows(&mut rng, 300, 3, 1.0);
    let truth: Vec<bool> = (0..300).map(|i| i % 2 == 0).collect();
    let labels = partial_labels(&mut rng, &ids(300), &truth, 1.0);
    let hp = SomHyperparams { mix_threshold: 0.5, ..Default::default() };
    let tree = build_tree(&space(rows, NormId::L1), &labels, &hp).unwrap();
    assert_eq!(tree.nodes.len(), 1);
}

#[test]
fn separable_labels_stay_in_the_root() {
    let mut rng = rng(23);
    let (rows, truth) = two_blobs(&mut rng, 80, 12.0, 0.2);
    let labels = partial_labels(&mut rng, &ids(160), &truth, 1.0);
    let s = space(rows, NormId::L2);
    let tree = build_tree(&s, &labels, &SomHyperparams::default()).unwrap();
    assert_eq!(tree.nodes.len(), 1);
    for (i, &t) in truth.iter().enumerate() {
        assert_eq!(tree.classify_vector(s.row(i)), Some(label_of(t)));
    }
}

#[test]
fn classification_examples() {
    let s = raw_space(vec![vec![0.0], vec![0.1], vec![0.2], vec![0.3], vec![0.9], vec![1.0]]);
    use Label::*;
    let labels = vec![Relevant, Relevant, Relevant, Irrelevant, Neutral, Neutral];
    let tree = flat_tree(vec![0.1, 0.95], vec![vec![0, 1, 2, 3], vec![4, 5]], labels, &s);
    assert_eq!(tree.classify_vector(&[0.05]), Some(Relevant));
    // unlabeled cell defers to the nearest labeled one
    assert_eq!(tree.classify_vector(&[1.0]), Some(Relevant));

    let tied = vec![Relevant, Relevant, Irrelevant, Irrelevant, Neutral, Neutral];
    let tree = flat_tree(vec![0.1, 0.95], vec![vec![0, 1, 2, 3], vec![4, 5]], tied, &s);
    assert_eq!(tree.classify_vector(&[0.05]), Some(Irrelevant));

    let none = flat_tree(vec![0.1, 0.95], vec![vec![0, 1, 2, 3], vec![4, 5]], vec![Neutral; 6], &s);
    assert_eq!(none.classify_vector(&[0.0]), None);
}

#[test]
fn query_takes_nearest_neutrals_of_a_marked_cell() {
    // cell 0: five neutrals around 0.5; cell 1: fully labeled
    let s = raw_space(vec![vec![0.9], vec![0.5], vec![0.45], vec![0.7], vec![0.2], vec![0.0], vec![0.05]]);
    use Label::*;
    let labels = vec![Neutral, Neutral, Neutral, Neutral, Neutral, Relevant, Irrelevant];
    let tree = flat_tree(vec![0.5, 0.0], vec![vec![0, 1, 2, 3, 4], vec![5, 6]], labels, &s);
    assert_eq!(query_candidates(&tree, &s, 0.1, 3), vec!["r0001", "r0002", "r0003"]);
    assert_eq!(query_candidates(&tree, &s, 0.1, 3), query_oracle(&tree, &s, 0.1, 3));
    assert_eq!(query_candidates(&tree, &s, 0.1, 100).len(), 5);
}

#[test]
fn query_deals_from_the_least_labeled_cell_first() {
    // cell 0: 20 items, 1 labeled (ratio 0.05); cell 1: 10 neutral (ratio 0)
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..20 {
        rows.push(vec![i as f64 * 0.01]);
        labels.push(if i == 0 { Label::Relevant } else { Label::Neutral });
    }
    for i in 0..10 {
        rows.push(vec![0.9 + i as f64 * 0.01]);
        labels.push(Label::Neutral);
    }
    let s = raw_space(rows);
    let tree = flat_tree(vec![0.0, 0.9], vec![(0..20).collect(), (20..30).collect()], labels, &s);
    assert_eq!(tree.nodes[0].stats[0].label_ratio, 0.05);
    assert_eq!(query_candidates(&tree, &s, 0.1, 3), vec!["r0020", "r0001", "r0021"]);
    // 0.05 is not below a threshold of 0.05
    assert_eq!(query_candidates(&tree, &s, 0.05, 3), vec!["r0020", "r0021", "r0022"]);
    for budget in [1, 7, 40] {
        assert_eq!(query_candidates(&tree, &s, 0.1, budget), query_oracle(&tree, &s, 0.1, budget));
    }
}

fn trained_tree(seed: u64, n: usize, grid: usize) -> (SomTree, NormalizedSpace) {
    let mut rng = rng(seed);
    let rows = random_rows(&mut rng, n, 4, 1.0);
    let truth: Vec<bool> = rows.iter().map(|r| r[0] + 0.3 * r[1] > 0.0).collect();
    let labels = partial_labels(&mut rng, &ids(n), &truth, 0.5);
    let hp = SomHyperparams { width: grid, height: grid, seed, ..Default::default() };
    let s = space(rows, NormId::L1_5);
    (build_tree(&s, &labels, &hp).unwrap(), s)
}

#[test]
fn u_matrix_and_quantization_error_match_brute_force() {
    let (tree, s) = trained_tree(31, 200, 3);
    let p = tree.measure.norm.p();
    for node in &tree.nodes {
        let g = &node.grid;
        let u = node.u_matrix(tree.measure.norm);
        for c in 0..g.cells() {
            let (r, col) = ((c / g.width) as i64, (c % g.width) as i64);
            let mut ds = Vec::new();
            for o in 0..g.cells() {
                let (ro, co) = ((o / g.width) as i64, (o % g.width) as i64);
                if (r - ro).abs() + (col - co).abs() == 1 {
                    ds.push(lp(g.prototype(c), g.prototype(o), p));
                }
            }
            let want = ds.iter().sum::<f64>() / ds.len() as f64;
            assert!((u[c] - want).abs() <= 1e-12);

            let m = &g.members[c];
            let qe = if m.is_empty() { 0.0 } else { m.iter().map(|&i| lp(s.row(i), g.prototype(c), p)).sum::<f64>() / m.len() as f64 };
            assert!((node.stats[c].quantization_error - qe).abs() <= 1e-12);
        }
    }
}

#[test]
fn empty_cells_report_zero_quantization_error() {
    let (tree, _) = trained_tree(32, 5, 4);
    let root = tree.root();
    let empty: Vec<usize> = (0..16).filter(|&c| root.grid.members[c].is_empty()).collect();
    assert!(empty.len() >= 11);
    for c in empty {
        assert_eq!(root.stats[c].quantization_error, 0.0);
        assert_eq!(root.stats[c].label_ratio, 0.0);
        assert_eq!(root.stats[c].mix_ratio, 0.0);
    }
}

#[test]
fn serialized_tree_classifies_identically() {
    let (tree, s) = trained_tree(33, 400, 3);
    let json = serde_json::to_string(&tree).unwrap();
    let back: SomTree = serde_json::from_str(&json).unwrap();
    assert_eq!(back, tree);
    assert_eq!(back.classify_all(&s).unwrap(), tree.classify_all(&s).unwrap());
    for i in 0..s.len() {
        assert_eq!(back.classify_vector(s.row(i)), classify_oracle(&tree, s.row(i)));
    }
}

#[test]
fn embedding_is_repeatable_and_overlays_classification() {
    let (tree, s) = trained_tree(34, 60, 3);
    let a = mds_embed(&s, s.ids(), 5).unwrap();
    let b = mds_embed(&s, s.ids(), 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.ids, s.ids());
    assert!(a.stress_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));

    let labels = LabelStore::from_pairs(tree.items.iter().zip(&tree.labels).map(|(i, &l)| (i.as_str(), l)));
    let classes = tree.classify_all(&s).unwrap();
    let view = overlay(&a, &labels, Some(&classes));
    assert_eq!(view.points.len(), 60);
    for (p, c) in view.points.iter().zip(&a.coords) {
        assert_eq!([p.x, p.y], *c);
        assert_eq!(p.label, labels.get(&p.id));
        let want = match classes[&p.id] {
            Label::Relevant => Classified::Relevant,
            _ => Classified::Irrelevant,
        };
        assert_eq!(p.classified, want);
    }
}

#[test]
fn identical_points_embed_at_the_origin() {
    let s = space(vec![vec![4.0, 4.0]; 7], NormId::L2);
    let e = mds_embed(&s, s.ids(), 1).unwrap();
    assert!(e.degenerate);
    assert!(e.coords.iter().all(|c| *c == [0.0, 0.0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn leaves_partition_the_items(seed in 0u64..10_000, n in 20usize..150, side in 2usize..4) {
        let (tree, s) = trained_tree(seed, n, side);
        let mut owners = vec![0usize; n];
        for node in &tree.nodes {
            for c in 0..node.grid.cells() {
                if node.is_leaf_cell(c) {
                    for &i in &node.grid.members[c] {
                        owners[i] += 1;
                    }
                }
            }
            for (&cell, &child) in &node.children {
                prop_assert_eq!(&tree.nodes[child].grid.assignment().iter().map(|a| a.0).collect::<Vec<_>>(), &node.grid.members[cell]);
            }
        }
        prop_assert!(owners.iter().all(|&o| o == 1));
        for i in 0..n {
            let (node, cell) = tree.leaf_of(s.row(i));
            prop_assert!(tree.nodes[node].is_leaf_cell(cell));
        }
    }
}
