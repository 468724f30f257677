//! 2-D embeddings of normalized spaces: classical MDS for the start
//! configuration, refined by SMACOF stress majorization on the session
//! norm's distances.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::advisor::{Label, LabelStore};
use crate::error::{Error, Result};
use crate::metric::{lp_distance, NormalizedSpace, SimilarityMeasure};
use crate::rng::seeded_rng;

pub const SMACOF_STEPS: usize = 50;
pub const MAX_POINTS: usize = 2000;
const POWER_ITERATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub measure: Option<SimilarityMeasure>,
    pub ids: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    /// Kruskal stress-1 of the final configuration.
    pub stress: f64,
    /// Stress of the classical start followed by every SMACOF step.
    pub stress_history: Vec<f64>,
    pub degenerate: bool,
}

/// Kruskal stress-1: `sqrt(sum (d_ij - delta_ij)^2 / sum delta_ij^2)` over i < j.
pub fn stress1(coords: &[[f64; 2]], dist: &[f64]) -> f64 {
    let n = coords.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let d = euclid(coords[i], coords[j]);
            let delta = dist[i * n + j];
            num += (d - delta).powi(2);
            den += delta * delta;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

fn euclid(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn mat_vec(m: &[f64], n: usize, v: &[f64], out: &mut [f64]) {
    for i in 0..n {
        out[i] = m[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

fn unit(v: &mut [f64]) -> f64 {
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if len > 0.0 {
        v.iter_mut().for_each(|x| *x /= len);
    }
    len
}

/// Dominant eigenpair of a symmetric matrix by power iteration from a
/// seeded start vector, shifted when needed so the largest algebraic
/// eigenvalue is found.
fn top_eigen(m: &[f64], n: usize, rng: &mut impl Rng) -> (f64, Vec<f64>) {
    let start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let run = |shift: f64| -> (f64, Vec<f64>) {
        let mut v = start.clone();
        unit(&mut v);
        let mut w = vec![0.0; n];
        let mut lambda = 0.0;
        for _ in 0..POWER_ITERATIONS {
            mat_vec(m, n, &v, &mut w);
            w.iter_mut().zip(&v).for_each(|(a, b)| *a += shift * b);
            let next_lambda: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
            if unit(&mut w) == 0.0 {
                return (0.0, v);
            }
            let change: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            std::mem::swap(&mut v, &mut w);
            let settled = (next_lambda - lambda).abs() <= 1e-15 * next_lambda.abs().max(1e-300);
            lambda = next_lambda;
            if change < 1e-13 || settled {
                break;
            }
        }
        (lambda - shift, v)
    };
    let (lambda, v) = run(0.0);
    if lambda >= 0.0 {
        return (lambda, v);
    }
    // a negative eigenvalue dominated; shift the spectrum and retry
    run(-lambda)
}

/// Classical MDS start, then [`SMACOF_STEPS`] Guttman transforms.
/// `dist` is a full symmetric `n x n` distance matrix.
pub fn mds_from_distances(dist: &[f64], n: usize, seed: u64) -> (Vec<[f64; 2]>, Vec<f64>) {
    assert_eq!(dist.len(), n * n, "distance matrix shape");
    let mut rng = seeded_rng(seed);

    let sq: Vec<f64> = dist.iter().map(|d| d * d).collect();
    let row_mean: Vec<f64> = (0..n).map(|i| sq[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (sq[i * n + j] - row_mean[i] - row_mean[j] + grand);
        }
    }
    let mut coords = vec![[0.0; 2]; n];
    for axis in 0..2 {
        let (lambda, v) = top_eigen(&b, n, &mut rng);
        if lambda <= 0.0 {
            break;
        }
        let scale = lambda.sqrt();
        for i in 0..n {
            coords[i][axis] = v[i] * scale;
        }
        for i in 0..n {
            for j in 0..n {
                b[i * n + j] -= lambda * v[i] * v[j];
            }
        }
    }

    let mut history = vec![stress1(&coords, dist)];
    let mut next = vec![[0.0; 2]; n];
    for _ in 0..SMACOF_STEPS {
        for i in 0..n {
            let mut acc = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = euclid(coords[i], coords[j]);
                if d > 0.0 {
                    let ratio = dist[i * n + j] / d;
                    acc[0] += ratio * (coords[i][0] - coords[j][0]);
                    acc[1] += ratio * (coords[i][1] - coords[j][1]);
                }
            }
            next[i] = [acc[0] / n as f64, acc[1] / n as f64];
        }
        std::mem::swap(&mut coords, &mut next);
        history.push(stress1(&coords, dist));
    }
    (coords, history)
}

/// Embeds the given items of `space` in 2-D. More than [`MAX_POINTS`] ids
/// are subsampled (seeded), keeping their original order.
pub fn mds_embed<S: AsRef<str>>(space: &NormalizedSpace, ids: &[S], seed: u64) -> Result<Embedding> {
    if ids.len() < 3 {
        return Err(Error::Parameter(format!("MDS needs at least 3 points, got {}", ids.len())));
    }
    let mut rows: Vec<usize> = Vec::with_capacity(ids.len());
    let mut missing = Vec::new();
    for id in ids {
        match space.position(id.as_ref()) {
            Some(r) => rows.push(r),
            None => missing.push(id.as_ref().to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::UnknownIds(missing));
    }
    if rows.len() > MAX_POINTS {
        let mut rng = seeded_rng(seed ^ 0x5eed_0f_7u64);
        let mut keep = sample(&mut rng, rows.len(), MAX_POINTS).into_vec();
        keep.sort_unstable();
        rows = keep.into_iter().map(|k| rows[k]).collect();
    }
    let ids: Vec<String> = rows.iter().map(|&r| space.ids()[r].clone()).collect();
    let n = rows.len();

    if space.is_degenerate() {
        return Ok(Embedding {
            measure: Some(space.measure().clone()),
            ids,
            coords: vec![[0.0; 2]; n],
            stress: 0.0,
            stress_history: vec![0.0],
            degenerate: true,
        });
    }

    let mut dist = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let d = lp_distance(space.row(rows[a]), space.row(rows[b]), space.norm());
            dist[a * n + b] = d;
            dist[b * n + a] = d;
        }
    }
    let (coords, history) = mds_from_distances(&dist, n, seed);
    Ok(Embedding {
        measure: Some(space.measure().clone()),
        ids,
        coords,
        stress: *history.last().unwrap(),
        stress_history: history,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classified {
    Relevant,
    Irrelevant,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub label: Label,
    pub classified: Classified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedEmbedding {
    pub points: Vec<ProjectedPoint>,
    pub stress: f64,
    pub measure: Option<SimilarityMeasure>,
}

/// Tags every point with its current label and, when given, its
/// classification. Coordinates are copied unchanged.
pub fn overlay(
    embedding: &Embedding,
    labels: &LabelStore,
    classification: Option<&BTreeMap<String, Label>>,
) -> AnnotatedEmbedding {
    let points = embedding
        .ids
        .iter()
        .zip(&embedding.coords)
        .map(|(id, c)| ProjectedPoint {
            id: id.clone(),
            x: c[0],
            y: c[1],
            label: labels.get(id),
            classified: match classification.and_then(|m| m.get(id)) {
                Some(Label::Relevant) => Classified::Relevant,
                Some(Label::Irrelevant) => Classified::Irrelevant,
                _ => Classified::Unclassified,
            },
        })
        .collect();
    AnnotatedEmbedding {
        points,
        stress: embedding.stress,
        measure: embedding.measure.clone(),
    }
}
