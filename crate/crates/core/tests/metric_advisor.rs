mod common;

use std::collections::BTreeSet;

use common::*;
use fdive_core::synthetic::{planted_vector_corpus, PlantedConfig};
use fdive_core::{
    build_all_spaces, inter_group_distance, lp_distance, rank_measures, DescriptorId, DescriptorKind, Error,
    FeatureSet, Label, LabelSide, LabelStore, NormId, NormalizedSpace,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn normalization_matches_from_scratch_computation() {
    let mut rng = rng(1);
    let rows = random_rows(&mut rng, 50, 8, 10.0);
    let m = matrix("m", rows.clone());
    for norm in NormId::ALL {
        let space = NormalizedSpace::build(&m, norm);
        let (t, s, normalized) = normalize(&rows, norm.p());
        assert!((space.scale() - s).abs() <= 1e-12 * s);
        for (a, b) in space.translation().iter().zip(&t) {
            assert_eq!(a, b);
        }
        for (i, want) in normalized.iter().enumerate() {
            for (a, b) in space.row(i).iter().zip(want) {
                assert!((a - b).abs() <= 1e-12, "{norm} row {i}");
            }
        }
    }
}

#[test]
fn l1_pairwise_distances_scale_back_exactly() {
    let mut rng = rng(2);
    let rows = random_rows(&mut rng, 50, 8, 3.0);
    let space = NormalizedSpace::build(&matrix("m", rows.clone()), NormId::L1);
    for i in 0..50 {
        for j in 0..50 {
            let raw = lp(&rows[i], &rows[j], 1.0);
            assert!((space.scale() * space.distance(i, j) - raw).abs() <= 1e-9);
        }
    }
}

#[test]
fn planted_descriptor_ranks_first_and_scores_match_oracle() {
    let corpus = planted_vector_corpus(&PlantedConfig {
        classes: 2,
        per_class: 60,
        signal: DescriptorKind::LuminanceHistogram,
        separation: 1.0,
        seed: 12,
    })
    .unwrap();
    let features = corpus.vector_features().unwrap();
    let spaces = build_all_spaces(&features);
    let mut rng = rng(12);
    let truth: Vec<bool> = corpus.items().iter().map(|i| i.ground_truth.as_deref() == Some("class-0")).collect();
    let labels = partial_labels(&mut rng, features.ids(), &truth, 0.2);
    let ranking = rank_measures(&spaces, &labels, 0.0).unwrap();

    assert_eq!(ranking.top().measure.descriptor, DescriptorId::from(DescriptorKind::LuminanceHistogram));
    assert_eq!(ranking.scores.len(), 55);
    for score in &ranking.scores {
        let space = spaces.iter().find(|s| s.measure() == &score.measure).unwrap();
        assert!((score.q_inter - inter_oracle(space, &labels)).abs() <= 1e-12, "{}", score.measure);
    }
    assert!(ranking.scores.windows(2).all(|w| w[0].q_comb >= w[1].q_comb - 1e-10));
}

#[test]
fn constant_descriptors_rank_in_tie_break_order() {
    let mut set = FeatureSet::new();
    for name in ["zeta", "alpha", "mu"] {
        set.insert(matrix(name, vec![vec![0.5, 0.5]; 6])).unwrap();
    }
    let labels = LabelStore::from_pairs([("r0000", Label::Relevant), ("r0001", Label::Irrelevant)]);
    let ranking = rank_measures(&build_all_spaces(&set), &labels, 0.0).unwrap();
    assert!(ranking.scores.iter().all(|s| s.degenerate && s.q_comb == 0.0));
    let order: Vec<String> = ranking.order().iter().map(|m| m.to_string()).collect();
    let mut expected = Vec::new();
    for name in ["alpha", "mu", "zeta"] {
        for norm in NormId::ALL {
            expected.push(format!("{name}/{norm}"));
        }
    }
    assert_eq!(order, expected);
}

#[test]
fn rescaling_one_descriptor_keeps_the_order() {
    let mut rng = rng(3);
    let mut set = FeatureSet::new();
    for d in 0..4 {
        set.insert(matrix(&format!("d{d}"), random_rows(&mut rng, 40, 5, 1.0))).unwrap();
    }
    let truth: Vec<bool> = (0..40).map(|i| i < 20).collect();
    let labels = partial_labels(&mut rng, &ids(40), &truth, 0.5);
    let before = rank_measures(&build_all_spaces(&set), &labels, 0.0).unwrap().order();

    let mut scaled = FeatureSet::new();
    for m in set.matrices() {
        let m = if m.descriptor().as_str() == "d2" { m.map_values(|_, v| v * 1000.0).unwrap() } else { m.clone() };
        scaled.insert(m).unwrap();
    }
    let after = rank_measures(&build_all_spaces(&scaled), &labels, 0.0).unwrap().order();
    assert_eq!(before, after);
}

#[test]
fn ranking_needs_both_sides() {
    let set: FeatureSet = [matrix("a", vec![vec![0.0], vec![1.0]])].into_iter().collect::<fdive_core::Result<_>>().unwrap();
    let only_relevant = LabelStore::from_pairs([("r0000", Label::Relevant)]);
    assert!(matches!(
        rank_measures(&build_all_spaces(&set), &only_relevant, 0.0),
        Err(Error::InsufficientLabels(LabelSide::Irrelevant))
    ));
}

fn arb_rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..30, 1usize..8).prop_flat_map(|(n, dim)| prop::collection::vec(prop::collection::vec(-50.0f64..50.0, dim), n))
}

fn arb_norm() -> impl Strategy<Value = NormId> {
    prop::sample::select(NormId::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms_hold(rows in arb_rows(), norm in arb_norm()) {
        let n = rows.len();
        for i in 0..n {
            prop_assert_eq!(lp_distance(&rows[i], &rows[i], norm), 0.0);
            for j in 0..n {
                let dij = lp_distance(&rows[i], &rows[j], norm);
                prop_assert_eq!(dij, lp_distance(&rows[j], &rows[i], norm));
                for k in 0..n.min(6) {
                    let via = lp_distance(&rows[i], &rows[k], norm) + lp_distance(&rows[k], &rows[j], norm);
                    prop_assert!(dij <= via + 1e-12 * via.max(1.0));
                }
            }
        }
    }

    #[test]
    fn normalized_rows_sit_in_the_unit_ball(rows in arb_rows(), norm in arb_norm()) {
        let space = NormalizedSpace::build(&matrix("m", rows.clone()), norm);
        let zero = vec![0.0; space.dim()];
        let lengths: Vec<f64> = (0..space.len()).map(|i| lp_distance(space.row(i), &zero, norm)).collect();
        prop_assert!(lengths.iter().all(|&l| l <= 1.0 + 1e-9));
        if !space.is_degenerate() {
            prop_assert!(lengths.iter().any(|&l| l >= 1.0 - 1e-9));
        }
        for i in 0..space.len() {
            for j in 0..space.len() {
                let raw = lp_distance(&rows[i], &rows[j], norm);
                prop_assert!((space.scale() * space.distance(i, j) - raw).abs() <= 1e-9 * raw.max(1.0));
            }
        }
    }

    #[test]
    fn positive_scaling_leaves_the_space_unchanged(rows in arb_rows(), norm in arb_norm(), c in 1e-3f64..1e3) {
        let a = NormalizedSpace::build(&matrix("m", rows.clone()), norm);
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * c).collect()).collect();
        let b = NormalizedSpace::build(&matrix("m", scaled), norm);
        prop_assert_eq!(a.is_degenerate(), b.is_degenerate());
        for i in 0..a.len() {
            for (x, y) in a.row(i).iter().zip(b.row(i)) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn inter_distance_is_bounded_and_duplicates_move_it_little(
        rows in arb_rows(),
        norm in arb_norm(),
        seed in any::<u64>(),
    ) {
        let n = rows.len();
        let mut rng = rng(seed);
        let truth: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let labels = partial_labels(&mut rng, &ids(n), &truth, 0.7);
        let space = NormalizedSpace::build(&matrix("m", rows.clone()), norm);
        let q = inter_group_distance(&space, &labels).unwrap();
        prop_assert!((0.0..=2.0 + 1e-12).contains(&q));

        // duplicate one labeled row under a fresh id with the same label
        let (dup_id, dup_label) = labels.labeled().next().map(|(i, l)| (i.to_string(), l)).unwrap();
        let dup_row = rows[ids(n).iter().position(|i| *i == dup_id).unwrap()].clone();
        let mut grown = rows.clone();
        grown.push(dup_row);
        let grown_space = NormalizedSpace::build(&matrix("m", grown), norm);
        let mut grown_labels = labels.clone();
        grown_labels.set(1, format!("r{n:04}"), dup_label);
        let q2 = inter_group_distance(&grown_space, &grown_labels).unwrap();

        let side: Vec<&[f64]> = (0..n).filter(|&i| labels.get(&ids(n)[i]) == dup_label).map(|i| space.row(i)).collect();
        let c = centroid(&side);
        let x = space.row(ids(n).iter().position(|i| *i == dup_id).unwrap());
        let bound = lp(x, &c, norm.p()) / (side.len() + 1) as f64;
        prop_assert!((q2 - q).abs() <= bound + 1e-12, "moved {} > bound {}", (q2 - q).abs(), bound);
    }

    #[test]
    fn ranking_covers_every_measure_once(seed in 0u64..500, descriptors in 1usize..5) {
        let mut rng = rng(seed);
        let mut set = FeatureSet::new();
        for d in 0..descriptors {
            let dim = rng.random_range(1..6);
            set.insert(matrix(&format!("d{d}"), random_rows(&mut rng, 12, dim, 1.0))).unwrap();
        }
        let truth: Vec<bool> = (0..12).map(|i| i < 6).collect();
        let labels = partial_labels(&mut rng, &ids(12), &truth, 0.5);
        let spaces = build_all_spaces(&set);
        let ranking = rank_measures(&spaces, &labels, 0.0).unwrap();
        let listed: BTreeSet<String> = ranking.order().iter().map(|m| m.to_string()).collect();
        let expected: BTreeSet<String> = spaces.iter().map(|s| s.measure().to_string()).collect();
        prop_assert_eq!(ranking.scores.len(), descriptors * 5);
        prop_assert_eq!(listed, expected);
    }
}
