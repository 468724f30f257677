use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::Result;
use crate::rng::seeded_rng;

pub const DEFAULT_RELIEFF_NEIGHBORS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ReliefWeights {
    pub weights: Vec<f64>,
    /// Set when a class had too few members for `k` hits or misses.
    pub clamped: bool,
}

impl ReliefWeights {
    /// Dimensions by descending weight; equal weights keep index order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.weights.len()).collect();
        order.sort_by(|&a, &b| self.weights[b].total_cmp(&self.weights[a]).then(a.cmp(&b)));
        order
    }
}

/// Binary ReliefF over every instance.
///
/// Features are min-max scaled; the per-dimension difference is the scaled
/// absolute difference and neighbor distance is its sum (L1). Each instance
/// pulls weights down by its mean difference to the `k` nearest hits and up
/// by its mean difference to the `k` nearest misses; the result is averaged
/// over instances. `k` is clamped per side when a class is too small.
pub fn relieff_weights(data: &Dataset, k: usize, seed: u64) -> Result<ReliefWeights> {
    data.require_both_classes()?;
    let (n, dim) = (data.len(), data.dim());
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for i in 0..n {
        for (d, &v) in data.row(i).iter().enumerate() {
            lo[d] = lo[d].min(v);
            hi[d] = hi[d].max(v);
        }
    }
    let span: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();
    let diff = |a: usize, b: usize, d: usize| -> f64 {
        if span[d] > 0.0 {
            (data.row(a)[d] - data.row(b)[d]).abs() / span[d]
        } else {
            0.0
        }
    };

    let positives = data.labels().iter().filter(|&&l| l).count();
    let class_size = |label: bool| if label { positives } else { n - positives };

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed));

    let mut weights = vec![0.0; dim];
    let mut clamped = false;
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &i in &order {
        let own = data.label(i);
        let k_hit = k.min(class_size(own) - 1);
        let k_miss = k.min(class_size(!own));
        clamped |= k_hit < k || k_miss < k;

        scratch.clear();
        scratch.extend((0..n).filter(|&j| j != i).map(|j| ((0..dim).map(|d| diff(i, j, d)).sum(), j)));
        scratch.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let hits: Vec<usize> = scratch.iter().filter(|s| data.label(s.1) == own).take(k_hit).map(|s| s.1).collect();
        let misses: Vec<usize> = scratch.iter().filter(|s| data.label(s.1) != own).take(k_miss).map(|s| s.1).collect();

        for (d, w) in weights.iter_mut().enumerate() {
            let mut delta = 0.0;
            if k_hit > 0 {
                delta -= hits.iter().map(|&h| diff(i, h, d)).sum::<f64>() / k_hit as f64;
            }
            if k_miss > 0 {
                delta += misses.iter().map(|&m| diff(i, m, d)).sum::<f64>() / k_miss as f64;
            }
            *w += delta / n as f64;
        }
    }
    if clamped {
        tracing::warn!(k, n, positives, "ReliefF neighbor count clamped to class size");
    }
    Ok(ReliefWeights { weights, clamped })
}
