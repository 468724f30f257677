use rand::seq::SliceRandom;
use rand::Rng;

use super::Dataset;
use crate::error::Result;
use crate::rng::{derive_seed, seeded_rng};

pub const SVM_EPOCHS: usize = 200;
pub const SVM_LAMBDA: f64 = 0.01;
pub const ENSEMBLE_SIZE: usize = 10;

/// Linear max-margin classifier trained by stochastic subgradient descent on
/// the regularized hinge loss. The bias is an extra constant-one feature.
/// Step size `1 / (lambda * (t + 1))`.
pub fn train_linear_svm(data: &Dataset, columns: &[usize], seed: u64) -> Vec<f64> {
    let m = columns.len();
    let n = data.len();
    let mut rng = seeded_rng(seed);
    // w = scale * v lets the per-step shrink cost O(1)
    let mut v = vec![0.0; m + 1];
    let mut scale = 1.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut x = vec![0.0; m + 1];
    let mut t = 1usize;
    for _ in 0..SVM_EPOCHS {
        order.shuffle(&mut rng);
        for &i in &order {
            let row = data.row(i);
            for (slot, &c) in x.iter_mut().zip(columns) {
                *slot = row[c];
            }
            x[m] = 1.0;
            let y = if data.label(i) { 1.0 } else { -1.0 };
            let eta = 1.0 / (SVM_LAMBDA * (t + 1) as f64);
            let margin = y * scale * v.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            scale *= 1.0 - eta * SVM_LAMBDA;
            if margin < 1.0 {
                let step = eta * y / scale;
                v.iter_mut().zip(&x).for_each(|(a, b)| *a += step * b);
            }
            if scale < 1e-100 {
                v.iter_mut().for_each(|a| *a *= scale);
                scale = 1.0;
            }
            t += 1;
        }
    }
    v.truncate(m);
    v.iter().map(|a| a * scale).collect()
}

/// Recursive feature elimination: retrain the linear classifier on the
/// surviving dimensions and drop the one with the smallest |weight| (the
/// higher index on ties) until one remains. Returns dimensions best first,
/// i.e. reverse removal order.
pub fn rfe_rank(data: &Dataset, seed: u64) -> Result<Vec<usize>> {
    data.require_both_classes()?;
    let mut alive: Vec<usize> = (0..data.dim()).collect();
    let mut removed = Vec::with_capacity(data.dim());
    while alive.len() > 1 {
        let w = train_linear_svm(data, &alive, seed);
        let mut worst = 0;
        for slot in 1..alive.len() {
            let (a, b) = (w[slot].abs(), w[worst].abs());
            // alive is ascending, so "<=" on ties removes the higher index
            if a <= b {
                worst = slot;
            }
        }
        removed.push(alive.remove(worst));
    }
    removed.extend(alive);
    removed.reverse();
    Ok(removed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRanking {
    /// Rankings of the individual bootstrap members, best first.
    pub members: Vec<Vec<usize>>,
    /// Mean 0-based position of each dimension across members.
    pub mean_rank: Vec<f64>,
    /// Dimensions by ascending mean rank, index order on ties.
    pub ranking: Vec<usize>,
}

/// Mean-rank aggregation of member rankings.
pub fn aggregate_rankings(members: &[Vec<usize>], dim: usize) -> (Vec<f64>, Vec<usize>) {
    let mut mean_rank = vec![0.0; dim];
    for ranking in members {
        for (pos, &d) in ranking.iter().enumerate() {
            mean_rank[d] += pos as f64;
        }
    }
    mean_rank.iter_mut().for_each(|r| *r /= members.len() as f64);
    let mut ranking: Vec<usize> = (0..dim).collect();
    ranking.sort_by(|&a, &b| mean_rank[a].total_cmp(&mean_rank[b]).then(a.cmp(&b)));
    (mean_rank, ranking)
}

/// Ten RFE rankings on seeded bootstrap resamples (each containing both
/// classes), combined by mean rank.
pub fn rfe_ensemble(data: &Dataset, seed: u64) -> Result<EnsembleRanking> {
    data.require_both_classes()?;
    let n = data.len();
    let mut members = Vec::with_capacity(ENSEMBLE_SIZE);
    for member in 0..ENSEMBLE_SIZE {
        let member_seed = derive_seed(seed, &["rfe-ensemble", &member.to_string()]);
        let mut rng = seeded_rng(member_seed);
        let sample = loop {
            let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let resampled = data.resample(&picks);
            if resampled.require_both_classes().is_ok() {
                break resampled;
            }
        };
        members.push(rfe_rank(&sample, member_seed)?);
    }
    let (mean_rank, ranking) = aggregate_rankings(&members, data.dim());
    Ok(EnsembleRanking {
        members,
        mean_rank,
        ranking,
    })
}
