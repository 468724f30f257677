//! Fixtures and brute-force reference implementations shared by the
//! integration tests. The oracles deliberately avoid the crate's own helpers.
#![allow(dead_code)]

use fdive_core::rng::{seeded_rng, SeededRng};
use fdive_core::som::SomTree;
use fdive_core::{DescriptorId, FeatureMatrix, Label, LabelStore, NormId, NormalizedSpace};
use rand::Rng;

pub fn rng(seed: u64) -> SeededRng {
    seeded_rng(seed)
}

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("r{i:04}")).collect()
}

pub fn matrix(name: &str, rows: Vec<Vec<f64>>) -> FeatureMatrix {
    FeatureMatrix::from_rows(DescriptorId::new(name), ids(rows.len()), rows).unwrap()
}

pub fn random_rows(rng: &mut SeededRng, n: usize, dim: usize, spread: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-spread..spread)).collect())
        .collect()
}

pub fn gaussian(rng: &mut SeededRng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Two 2-D Gaussian blobs of `per_blob` points each; the first blob is
/// relevant by ground truth.
pub fn two_blobs(rng: &mut SeededRng, per_blob: usize, gap: f64, sd: f64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for blob in 0..2 {
        let cx = if blob == 0 { -gap / 2.0 } else { gap / 2.0 };
        for _ in 0..per_blob {
            rows.push(vec![cx + sd * gaussian(rng), sd * gaussian(rng)]);
            truth.push(blob == 0);
        }
    }
    (rows, truth)
}

pub fn label_of(relevant: bool) -> Label {
    if relevant {
        Label::Relevant
    } else {
        Label::Irrelevant
    }
}

/// Labels a random `fraction` of rows from `truth`, guaranteeing both sides.
pub fn partial_labels(rng: &mut SeededRng, ids: &[String], truth: &[bool], fraction: f64) -> LabelStore {
    let mut store = LabelStore::new();
    for (id, &t) in ids.iter().zip(truth) {
        if rng.random_bool(fraction) {
            store.set(0, id.clone(), label_of(t));
        }
    }
    for want in [true, false] {
        if store.count(label_of(want)) == 0 {
            let i = truth.iter().position(|&t| t == want).unwrap();
            store.set(0, ids[i].clone(), label_of(want));
        }
    }
    store
}

pub fn lp(x: &[f64], y: &[f64], p: f64) -> f64 {
    assert_eq!(x.len(), y.len());
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += (x[i] - y[i]).abs().powf(p);
    }
    acc.powf(1.0 / p)
}

/// Translation, scale and normalized rows computed from scratch.
pub fn normalize(rows: &[Vec<f64>], p: f64) -> (Vec<f64>, f64, Vec<Vec<f64>>) {
    let dim = rows[0].len();
    let mut t = vec![0.0; dim];
    for d in 0..dim {
        let mut lo = rows[0][d];
        let mut hi = rows[0][d];
        for r in rows {
            lo = lo.min(r[d]);
            hi = hi.max(r[d]);
        }
        t[d] = (lo + hi) / 2.0;
    }
    let zero = vec![0.0; dim];
    let centered: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&t).map(|(a, b)| a - b).collect()).collect();
    let s = centered.iter().map(|c| lp(c, &zero, p)).fold(0.0, f64::max);
    let normalized = centered
        .iter()
        .map(|c| c.iter().map(|v| if s > 0.0 { v / s } else { 0.0 }).collect())
        .collect();
    (t, s, normalized)
}

pub fn centroid(rows: &[&[f64]]) -> Vec<f64> {
    let mut c = vec![0.0; rows[0].len()];
    for r in rows {
        for (a, b) in c.iter_mut().zip(r.iter()) {
            *a += b;
        }
    }
    c.iter().map(|v| v / rows.len() as f64).collect()
}

pub fn inter_oracle(space: &NormalizedSpace, labels: &LabelStore) -> f64 {
    let p = space.norm().p();
    let side = |want: Label| -> Vec<&[f64]> {
        (0..space.len())
            .filter(|&i| labels.get(&space.ids()[i]) == want)
            .map(|i| space.row(i))
            .collect()
    };
    lp(&centroid(&side(Label::Relevant)), &centroid(&side(Label::Irrelevant)), p)
}

pub fn intra_oracle(rows: &[&[f64]], p: f64) -> f64 {
    let mut best = 0.0f64;
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            if i != j {
                best = best.max(lp(rows[i], rows[j], p));
            }
        }
    }
    best
}

fn nearest_cells(tree: &SomTree, node: usize, x: &[f64]) -> Vec<usize> {
    let grid = &tree.nodes[node].grid;
    let p = tree.measure.norm.p();
    let mut cells: Vec<(f64, usize)> = (0..grid.width * grid.height)
        .map(|c| (lp(&grid.prototypes[c * grid.dim..(c + 1) * grid.dim], x, p), c))
        .collect();
    cells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    cells.into_iter().map(|c| c.1).collect()
}

/// (relevant, irrelevant) counts of one cell, recounted from the members.
pub fn cell_counts(tree: &SomTree, node: usize, cell: usize) -> (usize, usize) {
    let members = &tree.nodes[node].grid.members[cell];
    let rel = members.iter().filter(|&&i| tree.labels[i] == Label::Relevant).count();
    let irr = members.iter().filter(|&&i| tree.labels[i] == Label::Irrelevant).count();
    (rel, irr)
}

/// Recursive descent to a childless cell, then its majority label, falling
/// back to the nearest labeled cell of the same map.
pub fn classify_oracle(tree: &SomTree, x: &[f64]) -> Option<Label> {
    fn descend(tree: &SomTree, node: usize, x: &[f64]) -> Option<Label> {
        let order = nearest_cells(tree, node, x);
        let bmu = order[0];
        if let Some(&child) = tree.nodes[node].children.get(&bmu) {
            return descend(tree, child, x);
        }
        for c in order {
            let (rel, irr) = cell_counts(tree, node, c);
            if rel + irr > 0 {
                return Some(if rel > irr { Label::Relevant } else { Label::Irrelevant });
            }
        }
        None
    }
    descend(tree, 0, x)
}

/// Cell path from the root, by walking parents.
pub fn path_of(tree: &SomTree, node: usize, cell: usize) -> Vec<usize> {
    let mut path = vec![cell];
    let mut n = node;
    while let Some((parent, pcell)) = tree.nodes[n].parent {
        path.insert(0, pcell);
        n = parent;
    }
    path
}

/// Query oracle: enumerate every childless cell, recompute its LabelRatio,
/// sort the marked cells and deal neutral items round-robin.
pub fn query_oracle(tree: &SomTree, space: &NormalizedSpace, q_t: f64, budget: usize) -> Vec<String> {
    let p = tree.measure.norm.p();
    let mut marked: Vec<(f64, usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for (n, node) in tree.nodes.iter().enumerate() {
        let grid = &node.grid;
        for cell in 0..grid.width * grid.height {
            if node.children.contains_key(&cell) {
                continue;
            }
            let members = &grid.members[cell];
            let (rel, irr) = cell_counts(tree, n, cell);
            let ratio = if members.is_empty() { 0.0 } else { (rel + irr) as f64 / members.len() as f64 };
            if ratio >= q_t {
                continue;
            }
            let proto = &grid.prototypes[cell * grid.dim..(cell + 1) * grid.dim];
            let mut neutral: Vec<(f64, usize)> = members
                .iter()
                .filter(|&&i| tree.labels[i] == Label::Neutral)
                .map(|&i| (lp(space.row(i), proto, p), i))
                .collect();
            if neutral.is_empty() {
                continue;
            }
            neutral.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            marked.push((ratio, members.len(), path_of(tree, n, cell), neutral.into_iter().map(|x| x.1).collect()));
        }
    }
    marked.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(b.1.cmp(&a.1))
            .then(a.2.cmp(&b.2))
    });
    let longest = marked.iter().map(|m| m.3.len()).max().unwrap_or(0);
    let mut out = Vec::new();
    for round in 0..longest {
        for m in &marked {
            if out.len() < budget {
                if let Some(&i) = m.3.get(round) {
                    out.push(tree.items[i].clone());
                }
            }
        }
    }
    out
}

/// Binary ReliefF by exhaustive neighbor scan, instances in natural order.
pub fn relieff_oracle(rows: &[Vec<f64>], labels: &[bool], k: usize) -> Vec<f64> {
    let n = rows.len();
    let dim = rows[0].len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for r in rows {
        for d in 0..dim {
            lo[d] = lo[d].min(r[d]);
            hi[d] = hi[d].max(r[d]);
        }
    }
    let diff = |a: usize, b: usize, d: usize| {
        let span = hi[d] - lo[d];
        if span == 0.0 {
            0.0
        } else {
            (rows[a][d] - rows[b][d]).abs() / span
        }
    };
    let mut w = vec![0.0; dim];
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| ((0..dim).map(|d| diff(i, j, d)).sum::<f64>(), j))
            .collect();
        others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let hits: Vec<usize> = others.iter().filter(|o| labels[o.1] == labels[i]).map(|o| o.1).take(k).collect();
        let misses: Vec<usize> = others.iter().filter(|o| labels[o.1] != labels[i]).map(|o| o.1).take(k).collect();
        for d in 0..dim {
            let mut delta = 0.0;
            if !hits.is_empty() {
                delta -= hits.iter().map(|&h| diff(i, h, d)).sum::<f64>() / hits.len() as f64;
            }
            if !misses.is_empty() {
                delta += misses.iter().map(|&m| diff(i, m, d)).sum::<f64>() / misses.len() as f64;
            }
            w[d] += delta / n as f64;
        }
    }
    w
}

/// k-NN prediction and F1 through an explicit confusion matrix.
pub fn knn_f1_oracle(
    rows: &[Vec<f64>],
    ids: &[String],
    train: &[(usize, bool)],
    test: &[(usize, bool)],
    k: usize,
    norm: NormId,
) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for &(t, actual) in test {
        let mut nb: Vec<(f64, &str, bool)> = train
            .iter()
            .map(|&(r, rel)| (lp(&rows[r], &rows[t], norm.p()), ids[r].as_str(), rel))
            .collect();
        nb.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)));
        let votes = nb.iter().take(k).filter(|n| n.2).count();
        let predicted = votes * 2 > k;
        match (predicted, actual) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    if tp == 0.0 {
        return 0.0;
    }
    let precision = tp / (tp + fp);
    let recall = tp / (tp + fn_);
    2.0 * precision * recall / (precision + recall)
}

/// Mean 0-based position per dimension and the resulting order.
pub fn mean_rank_oracle(members: &[Vec<usize>], dim: usize) -> (Vec<f64>, Vec<usize>) {
    let mut mean = Vec::with_capacity(dim);
    for d in 0..dim {
        let total: usize = members.iter().map(|m| m.iter().position(|&x| x == d).unwrap()).sum();
        mean.push(total as f64 / members.len() as f64);
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| mean[a].partial_cmp(&mean[b]).unwrap().then(a.cmp(&b)));
    (mean, order)
}
