mod common;

use common::*;
use fdive_core::evaluation::{
    draw_split, knn_f1, relieff_weights, rfe_ensemble, rfe_rank, run_protocol, BaselineMode, Dataset, KnnConfig,
    Outcome, ProtocolConfig, BUDGETS,
};
use fdive_core::synthetic::{planted_vector_corpus, PlantedConfig};
use fdive_core::{DescriptorKind, Error, NormId};
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn knn_f1_matches_confusion_oracle() {
    let mut rng = rng(41);
    for round in 0..30 {
        let rows = random_rows(&mut rng, 20, 3, 1.0);
        let truth: Vec<bool> = rows.iter().map(|r| r[0] + 0.5 * gaussian(&mut rng) > 0.0).collect();
        let m = matrix("m", rows.clone());
        let mut order: Vec<usize> = (0..20).collect();
        order.shuffle(&mut rng);
        let train: Vec<(usize, bool)> = order[..10].iter().map(|&i| (i, truth[i])).collect();
        let test: Vec<(usize, bool)> = order[10..].iter().map(|&i| (i, truth[i])).collect();
        if !(train.iter().any(|t| t.1) && train.iter().any(|t| !t.1)) {
            continue;
        }
        for norm in NormId::ALL {
            for k in [1, 3, 5] {
                let got = knn_f1(&m, &train, &test, KnnConfig { k, norm }).unwrap();
                let want = knn_f1_oracle(&rows, m.ids(), &train, &test, k, norm);
                assert!((got - want).abs() <= 1e-12, "round {round} {norm} k={k}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn knn_ignores_training_order() {
    let mut rng = rng(42);
    let rows = random_rows(&mut rng, 40, 2, 1.0);
    let truth: Vec<bool> = rows.iter().map(|r| r[1] > 0.1).collect();
    let m = matrix("m", rows);
    let mut train: Vec<(usize, bool)> = (0..20).map(|i| (i, truth[i])).collect();
    let test: Vec<(usize, bool)> = (20..40).map(|i| (i, truth[i])).collect();
    let config = KnnConfig { k: 3, norm: NormId::L1 };
    let first = knn_f1(&m, &train, &test, config).unwrap();
    for _ in 0..10 {
        train.shuffle(&mut rng);
        assert_eq!(knn_f1(&m, &train, &test, config).unwrap(), first);
    }
}

#[test]
fn knn_rejects_bad_inputs() {
    let m = matrix("m", vec![vec![0.0], vec![1.0], vec![2.0]]);
    let one_class = [(0, true), (1, true)];
    assert!(knn_f1(&m, &one_class, &[(2, false)], KnnConfig { k: 1, norm: NormId::L2 }).is_err());
    let overlap = [(0, true), (1, false)];
    assert!(knn_f1(&m, &overlap, &[(1, false)], KnnConfig { k: 1, norm: NormId::L2 }).is_err());
    assert!(knn_f1(&m, &overlap, &[(2, false)], KnnConfig { k: 2, norm: NormId::L2 }).is_err());
}

#[test]
fn label_split_is_balanced_and_disjoint() {
    let positives: Vec<usize> = (0..60).collect();
    let negatives: Vec<usize> = (60..200).collect();
    for budget in BUDGETS.iter().copied().filter(|&b| b <= 60) {
        let split = draw_split(&positives, &negatives, budget, 9).unwrap();
        assert_eq!(split.train.len(), 2 * (budget / 2));
        assert_eq!(split.train.len() + split.test.len(), 2 * budget);
        assert_eq!(split.train.iter().filter(|t| t.1).count(), budget / 2);
        let mut all: Vec<usize> = split.train.iter().chain(&split.test).map(|t| t.0).collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 2 * budget);
        assert!(split.train.iter().chain(&split.test).all(|&(r, rel)| rel == (r < 60)));
        assert_eq!(split, draw_split(&positives, &negatives, budget, 9).unwrap());
    }
    assert!(draw_split(&positives, &negatives, 61, 9).is_err());
}

#[test]
fn relieff_weights_are_bounded_and_repeatable() {
    let mut rng = rng(43);
    for _ in 0..10 {
        let n = rng.random_range(8..40);
        let rows = random_rows(&mut rng, n, 5, 3.0);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let data = Dataset::new(5, rows, labels).unwrap();
        let a = relieff_weights(&data, 10, 7).unwrap();
        assert!(a.weights.iter().all(|w| (-1.0..=1.0).contains(w)));
        assert_eq!(a, relieff_weights(&data, 10, 7).unwrap());
    }
}

#[test]
fn rfe_keeps_signal_ahead_of_noise_with_duplicated_columns() {
    let mut rng = rng(44);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..80 {
        let relevant = i % 2 == 0;
        let signal = if relevant { 1.0 } else { -1.0 } + 0.2 * gaussian(&mut rng);
        rows.push(vec![signal, signal, 0.3 * gaussian(&mut rng)]);
        labels.push(relevant);
    }
    let data = Dataset::new(3, rows, labels).unwrap();
    let ranking = rfe_rank(&data, 3).unwrap();
    assert_eq!(ranking.len(), 3);
    assert_eq!(ranking[2], 2);
    let ensemble = rfe_ensemble(&data, 3).unwrap();
    assert_eq!(ensemble.ranking[2], 2);
    let (mean, order) = mean_rank_oracle(&ensemble.members, 3);
    assert_eq!(ensemble.ranking, order);
    for (a, b) in ensemble.mean_rank.iter().zip(&mean) {
        assert!((a - b).abs() <= 1e-12);
    }
}

fn planted(per_class: usize, seed: u64) -> fdive_core::Corpus {
    planted_vector_corpus(&PlantedConfig {
        classes: 2,
        per_class,
        signal: DescriptorKind::Haralick,
        separation: 1.0,
        seed,
    })
    .unwrap()
}

fn mirror(seed: u64) -> ProtocolConfig {
    ProtocolConfig {
        seed,
        baseline: BaselineMode::MirrorAdvisor,
        ..Default::default()
    }
}

#[test]
fn protocol_grid_is_complete_and_reproducible() {
    let corpus = planted(125, 45);
    let features = corpus.vector_features().unwrap();
    let targets = vec!["class-0".to_string(), "class-1".to_string()];
    let config = mirror(3);
    let report = run_protocol(&corpus, &features, &targets, &config).unwrap();
    assert_eq!(report.cells.len(), 2 * BUDGETS.len() * 3);
    for target in &targets {
        for k in [1, 3, 5] {
            let rows: Vec<usize> = report.cells.iter().filter(|c| &c.target == target && c.k == k).map(|c| c.budget).collect();
            assert_eq!(rows, BUDGETS.to_vec());
        }
    }
    // a mirrored baseline can only tie
    assert_eq!((report.wins, report.losses, report.ties), (0, 0, 30));
    assert!(report.cells.iter().all(|c| c.outcome == Outcome::Tie && c.advisor_f1 == c.baseline_f1));

    for cell in report.cells.iter().filter(|c| c.budget == 125 && c.k == 3) {
        assert_eq!(cell.advisor_measure.descriptor.as_str(), DescriptorKind::Haralick.name());
        assert!(cell.advisor_f1 >= 0.9, "{}: {}", cell.target, cell.advisor_f1);
    }

    let again = run_protocol(&corpus, &features, &targets, &config).unwrap();
    assert_eq!(report.to_csv().unwrap(), again.to_csv().unwrap());
    assert_eq!(report, again);
}

#[test]
fn protocol_checks_class_counts_before_running() {
    let corpus = planted(100, 46);
    let features = corpus.vector_features().unwrap();
    let err = run_protocol(&corpus, &features, &["class-0".to_string()], &mirror(1)).unwrap_err();
    match err {
        Error::ClassCounts { target, needed, positives, negatives } => {
            assert_eq!((target.as_str(), needed, positives, negatives), ("class-0", 125, 100, 100));
        }
        other => panic!("unexpected {other}"),
    }
    let unknown = run_protocol(&corpus, &features, &["class-9".to_string()], &mirror(1)).unwrap_err();
    assert!(matches!(unknown, Error::ClassCounts { positives: 0, .. }));
}
