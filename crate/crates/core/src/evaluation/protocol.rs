use std::fmt::Write as _;

use rand::seq::{index::sample, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knn::{knn_f1_multi, LabeledRow};
use super::relieff::{relieff_weights, DEFAULT_RELIEFF_NEIGHBORS};
use super::rfe::{rfe_ensemble, rfe_rank};
use super::Dataset;
use crate::advisor::{rank_measures, Label, LabelStore, DEFAULT_INTRA_WEIGHT};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::features::{DescriptorId, FeatureMatrix, FeatureSet};
use crate::metric::{build_all_spaces, NormId, NormalizedSpace, SimilarityMeasure};
use crate::rng::{derive_seed, seeded_rng};

pub const BUDGETS: [usize; 5] = [25, 50, 75, 100, 125];
pub const KS: [usize; 3] = [1, 3, 5];
pub const SUBSET_SIZES: [usize; 4] = [5, 10, 15, 20];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionAlgorithm {
    Relieff,
    RfeLinear,
    RfeEnsemble,
}

impl SelectionAlgorithm {
    pub const ALL: [SelectionAlgorithm; 3] = [
        SelectionAlgorithm::Relieff,
        SelectionAlgorithm::RfeLinear,
        SelectionAlgorithm::RfeEnsemble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectionAlgorithm::Relieff => "relieff",
            SelectionAlgorithm::RfeLinear => "rfe-linear",
            SelectionAlgorithm::RfeEnsemble => "rfe-ensemble",
        }
    }

    /// Full dimension ranking (best first) learned from `data`.
    pub fn rank(self, data: &Dataset, seed: u64, relieff_k: usize) -> Result<Vec<usize>> {
        match self {
            SelectionAlgorithm::Relieff => Ok(relieff_weights(data, relieff_k, seed)?.ranking()),
            SelectionAlgorithm::RfeLinear => rfe_rank(data, seed),
            SelectionAlgorithm::RfeEnsemble => Ok(rfe_ensemble(data, seed)?.ranking),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub algorithm: SelectionAlgorithm,
    pub subset_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMode {
    /// Best of every selection config and norm on the concatenated matrix.
    BestOfSelections,
    /// The baseline arm reuses the advisor's measure.
    MirrorAdvisor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub budgets: Vec<usize>,
    pub ks: Vec<usize>,
    pub subset_sizes: Vec<usize>,
    pub relieff_neighbors: usize,
    pub intra_weight: f64,
    pub seed: u64,
    pub baseline: BaselineMode,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            budgets: BUDGETS.to_vec(),
            ks: KS.to_vec(),
            subset_sizes: SUBSET_SIZES.to_vec(),
            relieff_neighbors: DEFAULT_RELIEFF_NEIGHBORS,
            intra_weight: DEFAULT_INTRA_WEIGHT,
            seed: 0,
            baseline: BaselineMode::BestOfSelections,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Loss,
    Tie,
}

impl Outcome {
    pub fn compare(advisor: f64, baseline: f64) -> Self {
        if advisor > baseline {
            Outcome::Win
        } else if advisor < baseline {
            Outcome::Loss
        } else {
            Outcome::Tie
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineChoice {
    pub algorithm: Option<SelectionAlgorithm>,
    pub subset_size: usize,
    pub norm: NormId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolCell {
    pub target: String,
    pub budget: usize,
    pub k: usize,
    pub baseline_f1: f64,
    pub baseline_choice: BaselineChoice,
    pub advisor_f1: f64,
    pub advisor_measure: SimilarityMeasure,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub cells: Vec<ProtocolCell>,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
}

/// Drawn labels of one (target, budget) cell, split for training and testing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSplit {
    pub train: Vec<LabeledRow>,
    pub test: Vec<LabeledRow>,
}

impl LabelSplit {
    pub fn train_labels(&self, ids: &[String]) -> LabelStore {
        LabelStore::from_pairs(
            self.train
                .iter()
                .map(|&(r, rel)| (ids[r].as_str(), if rel { Label::Relevant } else { Label::Irrelevant })),
        )
    }
}

pub fn cell_seed(master: u64, target: &str, budget: usize) -> u64 {
    derive_seed(master, &["protocol-cell", target, &budget.to_string()])
}

/// Draws `budget` rows from each pool and splits each side in half (the
/// smaller half trains).
pub fn draw_split(positives: &[usize], negatives: &[usize], budget: usize, seed: u64) -> Result<LabelSplit> {
    if positives.len() < budget || negatives.len() < budget {
        return Err(Error::Parameter(format!(
            "budget {budget} exceeds pool sizes {}/{}",
            positives.len(),
            negatives.len()
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut split = LabelSplit {
        train: Vec::new(),
        test: Vec::new(),
    };
    for (pool, relevant) in [(positives, true), (negatives, false)] {
        let mut picked: Vec<usize> = sample(&mut rng, pool.len(), budget).into_iter().map(|i| pool[i]).collect();
        picked.shuffle(&mut rng);
        let half = budget / 2;
        split.train.extend(picked[..half].iter().map(|&r| (r, relevant)));
        split.test.extend(picked[half..].iter().map(|&r| (r, relevant)));
    }
    Ok(split)
}

/// Row indices of the target class and of every other class.
pub fn class_pools(corpus: &Corpus, ids: &[String], target: &str) -> Result<(Vec<usize>, Vec<usize>)> {
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (row, id) in ids.iter().enumerate() {
        let item = corpus.get(id).ok_or_else(|| Error::UnknownIds(vec![id.clone()]))?;
        match item.ground_truth.as_deref() {
            Some(gt) if gt == target => pos.push(row),
            Some(_) => neg.push(row),
            None => return Err(Error::Parameter(format!("item {id} has no ground truth"))),
        }
    }
    Ok((pos, neg))
}

/// Held-out k-NN F1 of every measure, in the order of `spaces`.
pub fn measure_f1_table(spaces: &[NormalizedSpace], split: &LabelSplit, k: usize) -> Result<Vec<(SimilarityMeasure, f64)>> {
    spaces
        .par_iter()
        .map(|s| Ok((s.measure().clone(), knn_f1_multi(s, &split.train, &split.test, s.norm(), &[k])?[0])))
        .collect()
}

/// Best F1 per k over every algorithm, subset size and norm.
fn baseline_arm(
    concatenated: &FeatureMatrix,
    split: &LabelSplit,
    config: &ProtocolConfig,
    seed: u64,
) -> Result<Vec<(f64, BaselineChoice)>> {
    let train_data = Dataset::from_matrix(concatenated, &split.train);
    let mut best: Vec<Option<(f64, BaselineChoice)>> = vec![None; config.ks.len()];
    for algorithm in SelectionAlgorithm::ALL {
        let algo_seed = derive_seed(seed, &["selection", algorithm.name()]);
        let ranking = algorithm.rank(&train_data, algo_seed, config.relieff_neighbors)?;
        for &size in &config.subset_sizes {
            let columns = &ranking[..size.min(ranking.len())];
            let subset = concatenated.select_columns(DescriptorId::new("selection"), columns)?;
            for norm in NormId::ALL {
                let f1s = knn_f1_multi(&subset, &split.train, &split.test, norm, &config.ks)?;
                for (slot, f1) in f1s.into_iter().enumerate() {
                    if best[slot].as_ref().is_none_or(|(b, _)| f1 > *b) {
                        best[slot] = Some((
                            f1,
                            BaselineChoice {
                                algorithm: Some(algorithm),
                                subset_size: columns.len(),
                                norm,
                            },
                        ));
                    }
                }
            }
        }
    }
    Ok(best.into_iter().map(|b| b.expect("at least one selection config")).collect())
}

fn run_cell(
    target: &str,
    budget: usize,
    pools: &(Vec<usize>, Vec<usize>),
    ids: &[String],
    spaces: &[NormalizedSpace],
    concatenated: &FeatureMatrix,
    config: &ProtocolConfig,
) -> Result<Vec<ProtocolCell>> {
    let seed = cell_seed(config.seed, target, budget);
    let split = draw_split(&pools.0, &pools.1, budget, seed)?;

    let ranking = rank_measures(spaces, &split.train_labels(ids), config.intra_weight)?;
    let measure = ranking.top().measure.clone();
    let space = spaces.iter().find(|s| s.measure() == &measure).expect("ranked measure has a space");
    let advisor = knn_f1_multi(space, &split.train, &split.test, space.norm(), &config.ks)?;

    let baseline = match config.baseline {
        BaselineMode::BestOfSelections => baseline_arm(concatenated, &split, config, seed)?,
        BaselineMode::MirrorAdvisor => advisor
            .iter()
            .map(|&f1| {
                (
                    f1,
                    BaselineChoice {
                        algorithm: None,
                        subset_size: space.dim(),
                        norm: space.norm(),
                    },
                )
            })
            .collect(),
    };

    Ok(config
        .ks
        .iter()
        .zip(advisor)
        .zip(baseline)
        .map(|((&k, advisor_f1), (baseline_f1, baseline_choice))| ProtocolCell {
            target: target.to_string(),
            budget,
            k,
            baseline_f1,
            baseline_choice,
            advisor_f1,
            advisor_measure: measure.clone(),
            outcome: Outcome::compare(advisor_f1, baseline_f1),
        })
        .collect())
}

/// Advisor-versus-feature-selection comparison over every target, budget and k.
///
/// Per (target, budget) a seeded draw of `budget` relevant and `budget`
/// irrelevant items is split in half; both arms train on the same half and
/// are scored by k-NN F1 on the other. Normalized spaces and the
/// concatenated matrix are built once over the whole corpus.
pub fn run_protocol(
    corpus: &Corpus,
    features: &FeatureSet,
    targets: &[String],
    config: &ProtocolConfig,
) -> Result<ProtocolReport> {
    if config.ks.iter().any(|&k| k == 0 || k % 2 == 0) {
        return Err(Error::Parameter("k values must be odd".into()));
    }
    let needed = config.budgets.iter().copied().max().unwrap_or(0);
    let ids = features.ids().to_vec();
    let mut pools = Vec::with_capacity(targets.len());
    for target in targets {
        let (pos, neg) = class_pools(corpus, &ids, target)?;
        if pos.len() < needed || neg.len() < needed {
            return Err(Error::ClassCounts {
                target: target.clone(),
                needed,
                positives: pos.len(),
                negatives: neg.len(),
            });
        }
        pools.push((pos, neg));
    }

    let spaces = build_all_spaces(features);
    let concatenated = features.concatenated()?;
    let jobs: Vec<(usize, usize)> = (0..targets.len())
        .flat_map(|t| config.budgets.iter().map(move |&b| (t, b)))
        .collect();
    let per_job: Vec<Vec<ProtocolCell>> = jobs
        .par_iter()
        .map(|&(t, budget)| run_cell(&targets[t], budget, &pools[t], &ids, &spaces, &concatenated, config))
        .collect::<Result<_>>()?;

    let cells: Vec<ProtocolCell> = per_job.into_iter().flatten().collect();
    let count = |o: Outcome| cells.iter().filter(|c| c.outcome == o).count();
    Ok(ProtocolReport {
        wins: count(Outcome::Win),
        losses: count(Outcome::Loss),
        ties: count(Outcome::Tie),
        cells,
    })
}

impl ProtocolReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "target",
            "budget",
            "k",
            "baseline_f1",
            "baseline_algorithm",
            "baseline_subset_size",
            "baseline_p",
            "advisor_f1",
            "advisor_descriptor",
            "advisor_p",
            "outcome",
        ])
        .map_err(|e| Error::Parameter(e.to_string()))?;
        for c in &self.cells {
            w.write_record([
                c.target.clone(),
                c.budget.to_string(),
                c.k.to_string(),
                format!("{:.6}", c.baseline_f1),
                c.baseline_choice.algorithm.map_or("advisor-measure", |a| a.name()).to_string(),
                c.baseline_choice.subset_size.to_string(),
                c.baseline_choice.norm.p().to_string(),
                format!("{:.6}", c.advisor_f1),
                c.advisor_measure.descriptor.to_string(),
                c.advisor_measure.norm.p().to_string(),
                format!("{:?}", c.outcome).to_lowercase(),
            ])
            .map_err(|e| Error::Parameter(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parameter(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// One row per (target, budget) with baseline and advisor F1 per k; the
    /// better arm of each pair is marked with `*`.
    pub fn to_table(&self) -> String {
        let mut ks: Vec<usize> = self.cells.iter().map(|c| c.k).collect();
        ks.sort_unstable();
        ks.dedup();
        let mut out = String::new();
        let _ = write!(out, "{:<16} {:>8}", "target", "#labels");
        for k in &ks {
            let _ = write!(out, " {:>9}", format!("base k={k}"));
        }
        for k in &ks {
            let _ = write!(out, " {:>9}", format!("adv k={k}"));
        }
        out.push('\n');

        let mut rows: Vec<(&str, usize)> = Vec::new();
        for c in &self.cells {
            if !rows.contains(&(c.target.as_str(), c.budget)) {
                rows.push((c.target.as_str(), c.budget));
            }
        }
        for (target, budget) in rows {
            let row: Vec<&ProtocolCell> = ks
                .iter()
                .filter_map(|k| self.cells.iter().find(|c| c.target == target && c.budget == budget && c.k == *k))
                .collect();
            let _ = write!(out, "{:<16} {:>8}", target, format!("{budget}/{budget}"));
            for c in &row {
                let mark = if c.outcome == Outcome::Loss { "*" } else { " " };
                let _ = write!(out, " {:>8.3}{mark}", c.baseline_f1);
            }
            for c in &row {
                let mark = if c.outcome == Outcome::Win { "*" } else { " " };
                let _ = write!(out, " {:>8.3}{mark}", c.advisor_f1);
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "advisor wins {} of {} cells ({} losses, {} ties)",
            self.wins,
            self.cells.len(),
            self.losses,
            self.ties
        );
        out
    }
}
