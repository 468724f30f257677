//! Lp distances and the translated, rescaled feature spaces that make
//! different (descriptor, norm) pairs comparable.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::features::{DescriptorId, FeatureMatrix, FeatureSet};

/// The supported Minkowski orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NormId {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "1.25")]
    L1_25,
    #[serde(rename = "1.5")]
    L1_5,
    #[serde(rename = "1.75")]
    L1_75,
    #[serde(rename = "2")]
    L2,
}

impl NormId {
    pub const ALL: [NormId; 5] = [NormId::L1, NormId::L1_25, NormId::L1_5, NormId::L1_75, NormId::L2];

    pub fn p(self) -> f64 {
        match self {
            NormId::L1 => 1.0,
            NormId::L1_25 => 1.25,
            NormId::L1_5 => 1.5,
            NormId::L1_75 => 1.75,
            NormId::L2 => 2.0,
        }
    }

    pub fn from_p(p: f64) -> Option<Self> {
        Self::ALL.into_iter().find(|n| n.p() == p)
    }

    /// Length of `v` under this norm.
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormId::L1 => v.iter().map(|x| x.abs()).sum(),
            NormId::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            _ => {
                let p = self.p();
                v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
            }
        }
    }
}

impl fmt::Display for NormId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.p())
    }
}

/// Minkowski distance between equal-length vectors.
///
/// Panics if the lengths differ.
pub fn lp_distance(x: &[f64], y: &[f64], norm: NormId) -> f64 {
    assert_eq!(x.len(), y.len(), "lp_distance: dimension mismatch");
    let diff = x.iter().zip(y);
    match norm {
        NormId::L1 => diff.map(|(a, b)| (a - b).abs()).sum(),
        NormId::L2 => diff.map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        _ => {
            let p = norm.p();
            diff.map(|(a, b)| (a - b).abs().powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

/// A (descriptor, norm) pair: the unit the advisor ranks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SimilarityMeasure {
    pub descriptor: DescriptorId,
    pub norm: NormId,
}

impl SimilarityMeasure {
    pub fn new(descriptor: impl Into<DescriptorId>, norm: NormId) -> Self {
        SimilarityMeasure {
            descriptor: descriptor.into(),
            norm,
        }
    }
}

impl fmt::Display for SimilarityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.descriptor, self.norm)
    }
}

/// A feature space centered on its per-dimension midrange and scaled so the
/// farthest vector has unit length under the measure's norm.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSpace {
    measure: SimilarityMeasure,
    translation: Vec<f64>,
    scale: f64,
    degenerate: bool,
    ids: Vec<String>,
    dim: usize,
    rows: Vec<f64>,
}

impl NormalizedSpace {
    /// Builds the space in O(rows x dim). A zero scale (all vectors equal)
    /// marks the space degenerate; its rows are then all zero.
    pub fn build(matrix: &FeatureMatrix, norm: NormId) -> Self {
        let dim = matrix.dim();
        let (lo, hi) = crate::features::column_ranges(matrix);
        let translation: Vec<f64> = if matrix.is_empty() {
            vec![0.0; dim]
        } else {
            lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
        };
        let mut centered = Vec::with_capacity(matrix.values().len());
        let mut scale: f64 = 0.0;
        let mut buf = vec![0.0; dim];
        for row in matrix.rows() {
            for ((b, v), t) in buf.iter_mut().zip(row).zip(&translation) {
                *b = v - t;
            }
            scale = scale.max(norm.norm(&buf));
            centered.extend_from_slice(&buf);
        }
        let degenerate = scale == 0.0;
        let rows = if degenerate {
            vec![0.0; centered.len()]
        } else {
            centered.into_iter().map(|v| v / scale).collect()
        };
        NormalizedSpace {
            measure: SimilarityMeasure::new(matrix.descriptor().clone(), norm),
            translation,
            scale,
            degenerate,
            ids: matrix.ids().to_vec(),
            dim,
            rows,
        }
    }

    /// Wraps vectors that are already normalized; translation is zero and
    /// scale one.
    pub fn from_normalized(measure: SimilarityMeasure, ids: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == dim), "ragged rows");
        NormalizedSpace {
            measure,
            translation: vec![0.0; dim],
            scale: 1.0,
            degenerate: false,
            ids,
            dim,
            rows: rows.into_iter().flatten().collect(),
        }
    }

    pub fn measure(&self) -> &SimilarityMeasure {
        &self.measure
    }

    pub fn norm(&self) -> NormId {
        self.measure.norm
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        // ids follow corpus order, which is sorted
        match self.ids.binary_search_by(|x| x.as_str().cmp(id)) {
            Ok(i) => Some(i),
            Err(_) => self.ids.iter().position(|x| x == id),
        }
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        lp_distance(self.row(i), self.row(j), self.norm())
    }
}

/// Every registered measure: each descriptor of `features` under every norm,
/// in (descriptor, p) order.
pub fn build_all_spaces(features: &FeatureSet) -> Vec<NormalizedSpace> {
    use rayon::prelude::*;
    let jobs: Vec<(&FeatureMatrix, NormId)> = features
        .matrices()
        .flat_map(|m| NormId::ALL.into_iter().map(move |n| (m, n)))
        .collect();
    jobs.into_par_iter().map(|(m, n)| NormalizedSpace::build(m, n)).collect()
}
