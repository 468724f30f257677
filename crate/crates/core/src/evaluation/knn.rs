use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::metric::{lp_distance, NormId, NormalizedSpace};

/// Anything that exposes id-addressed rows of equal length.
pub trait RowSource {
    fn vector(&self, row: usize) -> &[f64];
    fn row_id(&self, row: usize) -> &str;
}

impl RowSource for FeatureMatrix {
    fn vector(&self, row: usize) -> &[f64] {
        self.row(row)
    }

    fn row_id(&self, row: usize) -> &str {
        &self.ids()[row]
    }
}

impl RowSource for NormalizedSpace {
    fn vector(&self, row: usize) -> &[f64] {
        self.row(row)
    }

    fn row_id(&self, row: usize) -> &str {
        &self.ids()[row]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub norm: NormId,
}

/// A row index with its binary relevance (true = relevant).
pub type LabeledRow = (usize, bool);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// F1 with relevant as the positive class; 0 when precision + recall is 0.
    pub fn f1(&self) -> f64 {
        let precision = if self.tp + self.fp == 0 { 0.0 } else { self.tp as f64 / (self.tp + self.fp) as f64 };
        let recall = if self.tp + self.fn_ == 0 { 0.0 } else { self.tp as f64 / (self.tp + self.fn_) as f64 };
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    }
}

fn validate(train: &[LabeledRow], test: &[LabeledRow]) -> Result<()> {
    if !(train.iter().any(|t| t.1) && train.iter().any(|t| !t.1)) {
        return Err(Error::Parameter("k-NN training set must contain both classes".into()));
    }
    let train_rows: HashSet<usize> = train.iter().map(|t| t.0).collect();
    if test.iter().any(|t| train_rows.contains(&t.0)) {
        return Err(Error::Parameter("k-NN train and test sets overlap".into()));
    }
    Ok(())
}

/// Train rows sorted by distance to `x`; equal distances order by item id.
fn neighbors<S: RowSource + ?Sized>(source: &S, train: &[LabeledRow], x: &[f64], norm: NormId) -> Vec<(f64, usize, bool)> {
    let mut out: Vec<(f64, usize, bool)> = train
        .iter()
        .map(|&(r, rel)| (lp_distance(source.vector(r), x, norm), r, rel))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| source.row_id(a.1).cmp(source.row_id(b.1))));
    out
}

/// F1 for several `k` at once (one neighbor search per test item).
pub fn knn_f1_multi<S: RowSource + ?Sized>(
    source: &S,
    train: &[LabeledRow],
    test: &[LabeledRow],
    norm: NormId,
    ks: &[usize],
) -> Result<Vec<f64>> {
    validate(train, test)?;
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k % 2 == 0) {
        return Err(Error::Parameter(format!("k must be odd and positive, got {k}")));
    }
    let mut confusion = vec![Confusion::default(); ks.len()];
    for &(row, actual) in test {
        let nb = neighbors(source, train, source.vector(row), norm);
        for (slot, &k) in ks.iter().enumerate() {
            let k = k.min(nb.len());
            let votes = nb[..k].iter().filter(|n| n.2).count();
            confusion[slot].record(2 * votes > k, actual);
        }
    }
    Ok(confusion.iter().map(Confusion::f1).collect())
}

/// Majority vote of the `k` nearest training rows, scored by F1 over `test`.
pub fn knn_f1<S: RowSource + ?Sized>(source: &S, train: &[LabeledRow], test: &[LabeledRow], config: KnnConfig) -> Result<f64> {
    Ok(knn_f1_multi(source, train, test, config.norm, &[config.k])?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::DescriptorId;

    fn line(values: &[f64]) -> FeatureMatrix {
        let ids = (0..values.len()).map(|i| format!("i{i:02}")).collect();
        FeatureMatrix::from_rows(DescriptorId::new("x"), ids, values.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn coincident_point_takes_its_label() {
        let m = line(&[0.0, 1.0, 0.0]);
        let f1 = knn_f1(&m, &[(0, true), (1, false)], &[(2, true)], KnnConfig { k: 1, norm: NormId::L2 }).unwrap();
        assert_eq!(f1, 1.0);
    }

    #[test]
    fn single_class_training_is_rejected() {
        let m = line(&[0.0, 1.0, 2.0]);
        assert!(knn_f1(&m, &[(0, true), (1, true)], &[(2, true)], KnnConfig { k: 1, norm: NormId::L1 }).is_err());
    }

    #[test]
    fn overlapping_sets_are_rejected() {
        let m = line(&[0.0, 1.0]);
        assert!(knn_f1(&m, &[(0, true), (1, false)], &[(1, false)], KnnConfig { k: 1, norm: NormId::L1 }).is_err());
    }

    #[test]
    fn distance_ties_prefer_lower_id() {
        // test point 2 sits halfway between a relevant (i00) and an irrelevant (i01) item
        let m = line(&[-1.0, 1.0, 0.0]);
        let f1 = knn_f1(&m, &[(0, true), (1, false)], &[(2, true)], KnnConfig { k: 1, norm: NormId::L1 }).unwrap();
        assert_eq!(f1, 1.0);
    }

    #[test]
    fn no_positive_predictions_gives_zero() {
        let c = Confusion { tp: 0, fp: 0, fn_: 3, tn: 4 };
        assert_eq!(c.f1(), 0.0);
    }
}
