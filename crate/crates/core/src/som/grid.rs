use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SomHyperparams;
use crate::metric::{lp_distance, NormId, NormalizedSpace};
use crate::rng::seeded_rng;

const FINAL_LEARNING_RATE: f64 = 0.01;
const FINAL_RADIUS: f64 = 0.5;

/// One trained self-organizing map: a `width x height` grid of prototype
/// vectors plus the items assigned to each cell. Cells are indexed
/// row-major (`row * width + col`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomGrid {
    pub width: usize,
    pub height: usize,
    pub dim: usize,
    pub prototypes: Vec<f64>,
    /// Space row indices per cell, ascending.
    pub members: Vec<Vec<usize>>,
}

impl SomGrid {
    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn prototype(&self, cell: usize) -> &[f64] {
        &self.prototypes[cell * self.dim..(cell + 1) * self.dim]
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.width, cell % self.width)
    }

    /// Cell whose prototype is nearest `x`; ties go to the lowest index.
    pub fn best_matching(&self, x: &[f64], norm: NormId) -> usize {
        best_matching(&self.prototypes, self.dim, x, norm)
    }

    /// All cells ordered by prototype distance to `x` (ties by index).
    pub fn cells_by_distance(&self, x: &[f64], norm: NormId) -> Vec<(usize, f64)> {
        let mut order: Vec<(usize, f64)> = (0..self.cells())
            .map(|c| (c, lp_distance(self.prototype(c), x, norm)))
            .collect();
        order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        order
    }

    /// Grid neighbors in the 4-neighborhood.
    pub fn neighbors(&self, cell: usize) -> Vec<usize> {
        let (r, c) = self.coords(cell);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(cell - self.width);
        }
        if c > 0 {
            out.push(cell - 1);
        }
        if c + 1 < self.width {
            out.push(cell + 1);
        }
        if r + 1 < self.height {
            out.push(cell + self.width);
        }
        out
    }

    /// Cell index of every member row.
    pub fn assignment(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .members
            .iter()
            .enumerate()
            .flat_map(|(c, m)| m.iter().map(move |&i| (i, c)))
            .collect();
        out.sort_unstable();
        out
    }
}

pub(crate) fn best_matching(prototypes: &[f64], dim: usize, x: &[f64], norm: NormId) -> usize {
    let mut best = (0, f64::INFINITY);
    for (c, proto) in prototypes.chunks_exact(dim.max(1)).enumerate() {
        let d = if dim == 0 { 0.0 } else { lp_distance(proto, x, norm) };
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

/// Trains one map on the given space rows.
///
/// Prototypes start as seeded picks of input vectors. Each epoch presents
/// the items in a freshly shuffled order; the learning rate decays linearly
/// from `alpha0` to 0.01 and the Gaussian neighborhood radius from `r0` to
/// 0.5 over all presentations. A final pass assigns every item to its
/// best-matching cell.
///
/// Panics if `items` is empty.
pub fn train_som(items: &[usize], space: &NormalizedSpace, hp: &SomHyperparams, seed: u64) -> SomGrid {
    assert!(!items.is_empty(), "train_som: empty item set");
    let (width, height) = (hp.width, hp.height);
    let cells = width * height;
    let dim = space.dim();
    let norm = space.norm();
    let mut rng = seeded_rng(seed);

    let mut prototypes = Vec::with_capacity(cells * dim);
    if items.len() >= cells {
        let mut pool = items.to_vec();
        let (picked, _) = pool.partial_shuffle(&mut rng, cells);
        for &i in picked.iter() {
            prototypes.extend_from_slice(space.row(i));
        }
    } else {
        for _ in 0..cells {
            let i = items[rng.random_range(0..items.len())];
            prototypes.extend_from_slice(space.row(i));
        }
    }

    let alpha0 = hp.alpha0;
    let r0 = hp.radius0();
    let total = hp.epochs * items.len();
    let coords: Vec<(f64, f64)> = (0..cells).map(|c| ((c / width) as f64, (c % width) as f64)).collect();
    let mut order = items.to_vec();
    let mut step = 0usize;
    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let frac = if total > 1 { step as f64 / (total - 1) as f64 } else { 0.0 };
            let alpha = alpha0 + (FINAL_LEARNING_RATE - alpha0) * frac;
            let radius = r0 + (FINAL_RADIUS - r0) * frac;
            let x = space.row(i);
            let bmu = best_matching(&prototypes, dim, x, norm);
            let (br, bc) = coords[bmu];
            for c in 0..cells {
                let (r, col) = coords[c];
                let grid_sq = (r - br).powi(2) + (col - bc).powi(2);
                let h = (-grid_sq / (2.0 * radius * radius)).exp();
                let rate = alpha * h;
                let proto = &mut prototypes[c * dim..(c + 1) * dim];
                for (p, v) in proto.iter_mut().zip(x) {
                    *p += rate * (v - *p);
                }
            }
            step += 1;
        }
    }

    let mut members = vec![Vec::new(); cells];
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    for i in sorted {
        members[best_matching(&prototypes, dim, space.row(i), norm)].push(i);
    }
    SomGrid {
        width,
        height,
        dim,
        prototypes,
        members,
    }
}
