//! Perceptual feature descriptors and the per-descriptor feature matrices.

mod cache;
mod color;
mod edge;
mod gabor;
mod haralick;
mod image_prep;
mod lbp;
mod moments;
mod structure;
mod tamura;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusKind, ItemSource};
use crate::error::{Error, Result};

pub use cache::{cache_path, cache_roundtrip, load_cache, load_or_extract, save_cache, CACHE_FORMAT_VERSION};
pub use image_prep::{WorkImage, WORK_SIZE};

/// Built-in descriptors, each with a fixed output dimensionality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescriptorKind {
    LuminanceHistogram,
    RgbHistogram,
    OpponentHistogram,
    EdgeOrientationHistogram,
    Haralick,
    Tamura,
    Lbp,
    Gabor,
    Blocks,
    Profile,
    HuMoments,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 11] = [
        DescriptorKind::LuminanceHistogram,
        DescriptorKind::RgbHistogram,
        DescriptorKind::OpponentHistogram,
        DescriptorKind::EdgeOrientationHistogram,
        DescriptorKind::Haralick,
        DescriptorKind::Tamura,
        DescriptorKind::Lbp,
        DescriptorKind::Gabor,
        DescriptorKind::Blocks,
        DescriptorKind::Profile,
        DescriptorKind::HuMoments,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::LuminanceHistogram => "luminance-histogram",
            DescriptorKind::RgbHistogram => "rgb-histogram",
            DescriptorKind::OpponentHistogram => "opponent-histogram",
            DescriptorKind::EdgeOrientationHistogram => "edge-orientation-histogram",
            DescriptorKind::Haralick => "haralick",
            DescriptorKind::Tamura => "tamura",
            DescriptorKind::Lbp => "lbp",
            DescriptorKind::Gabor => "gabor",
            DescriptorKind::Blocks => "blocks",
            DescriptorKind::Profile => "profile",
            DescriptorKind::HuMoments => "hu-moments",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            DescriptorKind::LuminanceHistogram => 32,
            DescriptorKind::RgbHistogram => 64,
            DescriptorKind::OpponentHistogram => 64,
            DescriptorKind::EdgeOrientationHistogram => 18,
            DescriptorKind::Haralick => 13,
            DescriptorKind::Tamura => 3,
            DescriptorKind::Lbp => 59,
            DescriptorKind::Gabor => 48,
            DescriptorKind::Blocks => 16,
            DescriptorKind::Profile => 32,
            DescriptorKind::HuMoments => 7,
        }
    }

    /// Canonical parameter record; hashed into cache headers so a cache
    /// written under different parameters is rejected.
    pub fn params(self) -> String {
        let p = match self {
            DescriptorKind::LuminanceHistogram => "bins=32;l1".to_string(),
            DescriptorKind::RgbHistogram => "bins=4x4x4;l1".to_string(),
            DescriptorKind::OpponentHistogram => "bins=4x4x4;l1".to_string(),
            DescriptorKind::EdgeOrientationHistogram => {
                format!("sobel;bins=18;min_mag={}", edge::MIN_MAGNITUDE)
            }
            DescriptorKind::Haralick => "levels=32;distance=1;angles=0,45,90,135;mean".to_string(),
            DescriptorKind::Tamura => "kmax=5;dir_bins=16;dir_threshold=0.047".to_string(),
            DescriptorKind::Lbp => "p=8;r=1;uniform".to_string(),
            DescriptorKind::Gabor => gabor::params(),
            DescriptorKind::Blocks => "grid=4x4".to_string(),
            DescriptorKind::Profile => "bands=16+16".to_string(),
            DescriptorKind::HuMoments => "raw".to_string(),
        };
        format!("{};work={}x{};bilinear", p, WORK_SIZE, WORK_SIZE)
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn extract(self, image: &WorkImage) -> Vec<f64> {
        match self {
            DescriptorKind::LuminanceHistogram => color::luminance_histogram(image),
            DescriptorKind::RgbHistogram => color::rgb_histogram(image),
            DescriptorKind::OpponentHistogram => color::opponent_histogram(image),
            DescriptorKind::EdgeOrientationHistogram => edge::edge_orientation_histogram(image),
            DescriptorKind::Haralick => haralick::haralick(image),
            DescriptorKind::Tamura => tamura::tamura(image),
            DescriptorKind::Lbp => lbp::uniform_lbp_histogram(image),
            DescriptorKind::Gabor => gabor::gabor_energy(image),
            DescriptorKind::Blocks => structure::blocks(image),
            DescriptorKind::Profile => structure::profile(image),
            DescriptorKind::HuMoments => moments::hu_moments(image),
        }
    }

    pub fn is_histogram(self) -> bool {
        matches!(
            self,
            DescriptorKind::LuminanceHistogram
                | DescriptorKind::RgbHistogram
                | DescriptorKind::OpponentHistogram
                | DescriptorKind::EdgeOrientationHistogram
                | DescriptorKind::Lbp
        )
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Name of a descriptor. Built-in descriptors use their kebab-case name;
/// vector corpora carry one identity descriptor per vector block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DescriptorId(String);

impl DescriptorId {
    pub fn new(name: impl Into<String>) -> Self {
        DescriptorId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn kind(&self) -> Option<DescriptorKind> {
        DescriptorKind::from_name(&self.0)
    }

    /// Parameter record used for cache validation.
    pub fn params(&self) -> String {
        match self.kind() {
            Some(kind) => kind.params(),
            None => "identity".to_string(),
        }
    }
}

impl From<DescriptorKind> for DescriptorId {
    fn from(kind: DescriptorKind) -> Self {
        DescriptorId(kind.name().to_string())
    }
}

impl fmt::Display for DescriptorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Row-major matrix of feature vectors, one row per item, in corpus order.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    descriptor: DescriptorId,
    ids: Vec<String>,
    dim: usize,
    values: Vec<f64>,
    index: HashMap<String, usize>,
}

impl PartialEq for FeatureMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.descriptor == other.descriptor
            && self.ids == other.ids
            && self.dim == other.dim
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl FeatureMatrix {
    pub fn new(
        descriptor: DescriptorId,
        ids: Vec<String>,
        dim: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != ids.len() * dim {
            return Err(Error::Parameter(format!(
                "feature matrix {descriptor}: {} values for {} rows of dimension {dim}",
                values.len(),
                ids.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                id: ids[pos / dim.max(1)].clone(),
                descriptor: descriptor.to_string(),
            });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateIds(vec![id.clone()]));
            }
        }
        Ok(FeatureMatrix {
            descriptor,
            ids,
            dim,
            values,
            index,
        })
    }

    pub fn from_rows(descriptor: DescriptorId, ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Parameter(format!(
                "feature matrix {descriptor}: row {} has length {}, expected {dim}",
                ids.get(bad).map_or("?", String::as_str),
                rows[bad].len()
            )));
        }
        let values = rows.into_iter().flatten().collect();
        Self::new(descriptor, ids, dim, values)
    }

    pub fn descriptor(&self) -> &DescriptorId {
        &self.descriptor
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row_by_id(&self, id: &str) -> Option<&[f64]> {
        self.position(id).map(|i| self.row(i))
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, descriptor: DescriptorId, columns: &[usize]) -> Result<Self> {
        if let Some(&c) = columns.iter().find(|&&c| c >= self.dim) {
            return Err(Error::Parameter(format!("column {c} out of range for dimension {}", self.dim)));
        }
        let values = self
            .rows()
            .flat_map(|row| columns.iter().map(move |&c| row[c]))
            .collect();
        Self::new(descriptor, self.ids.clone(), columns.len(), values)
    }

    /// Applies `f(column, value)` to every entry.
    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let dim = self.dim;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i % dim, v))
            .collect();
        Self::new(self.descriptor.clone(), self.ids.clone(), dim, values)
    }

    /// Per-column min-max scaling onto [0, 1]; constant columns become 0.
    pub fn min_max_scaled(&self) -> Result<Self> {
        let (lo, hi) = column_ranges(self);
        self.map_values(|c, v| {
            let span = hi[c] - lo[c];
            if span > 0.0 {
                (v - lo[c]) / span
            } else {
                0.0
            }
        })
    }
}

pub(crate) fn column_ranges(matrix: &FeatureMatrix) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; matrix.dim()];
    let mut hi = vec![f64::NEG_INFINITY; matrix.dim()];
    for row in matrix.rows() {
        for (c, &v) in row.iter().enumerate() {
            lo[c] = lo[c].min(v);
            hi[c] = hi[c].max(v);
        }
    }
    (lo, hi)
}

/// All feature matrices of a corpus, keyed by descriptor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureSet {
    matrices: BTreeMap<DescriptorId, FeatureMatrix>,
}

impl FeatureSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, matrix: FeatureMatrix) -> Result<()> {
        if let Some(first) = self.matrices.values().next() {
            if first.ids() != matrix.ids() {
                return Err(Error::Parameter(format!(
                    "feature matrix {} covers a different item set than {}",
                    matrix.descriptor(),
                    first.descriptor()
                )));
            }
        }
        self.matrices.insert(matrix.descriptor().clone(), matrix);
        Ok(())
    }

    pub fn get(&self, id: &DescriptorId) -> Option<&FeatureMatrix> {
        self.matrices.get(id)
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &DescriptorId> {
        self.matrices.keys()
    }

    pub fn matrices(&self) -> impl Iterator<Item = &FeatureMatrix> {
        self.matrices.values()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        self.matrices.values().next().map_or(&[], |m| m.ids())
    }

    /// Concatenation of every descriptor (in name order), each column
    /// min-max scaled over the corpus.
    pub fn concatenated(&self) -> Result<FeatureMatrix> {
        let ids = self.ids().to_vec();
        let scaled: Vec<FeatureMatrix> = self
            .matrices
            .values()
            .map(FeatureMatrix::min_max_scaled)
            .collect::<Result<_>>()?;
        let dim: usize = scaled.iter().map(FeatureMatrix::dim).sum();
        let mut values = Vec::with_capacity(ids.len() * dim);
        for i in 0..ids.len() {
            for m in &scaled {
                values.extend_from_slice(m.row(i));
            }
        }
        FeatureMatrix::new(DescriptorId::new("concatenated"), ids, dim, values)
    }
}

impl FromIterator<FeatureMatrix> for Result<FeatureSet> {
    fn from_iter<T: IntoIterator<Item = FeatureMatrix>>(iter: T) -> Self {
        let mut set = FeatureSet::new();
        for m in iter {
            set.insert(m)?;
        }
        Ok(set)
    }
}

/// Extracts one descriptor over an image corpus.
pub fn extract(corpus: &Corpus, kind: DescriptorKind) -> Result<FeatureMatrix> {
    let mut all = extract_all(corpus, &BTreeSet::from([kind]))?;
    Ok(all.remove(&DescriptorId::from(kind)).expect("requested descriptor present"))
}

/// Extracts every requested descriptor, decoding each image once. Items are
/// processed in parallel; the result does not depend on scheduling.
pub fn extract_all(
    corpus: &Corpus,
    kinds: &BTreeSet<DescriptorKind>,
) -> Result<BTreeMap<DescriptorId, FeatureMatrix>> {
    if kinds.is_empty() {
        return Ok(BTreeMap::new());
    }
    if corpus.kind() != CorpusKind::Images {
        return Err(Error::Parameter(
            "descriptor extraction requires an image corpus; vector corpora carry their own features".into(),
        ));
    }
    let per_item: Vec<std::result::Result<Vec<Vec<f64>>, (String, String)>> = corpus
        .items()
        .par_iter()
        .map(|item| {
            let ItemSource::Image(path) = &item.source else {
                return Err((item.id.clone(), "item has no image source".to_string()));
            };
            let image = WorkImage::open(path).map_err(|e| (item.id.clone(), e))?;
            Ok(kinds.iter().map(|k| k.extract(&image)).collect())
        })
        .collect();

    let failures: Vec<(String, String)> = per_item
        .iter()
        .filter_map(|r| r.as_ref().err().cloned())
        .collect();
    if failures.len() == 1 {
        let (id, reason) = failures.into_iter().next().unwrap();
        return Err(Error::Extraction { id, reason });
    }
    if !failures.is_empty() {
        return Err(Error::BatchExtraction(failures));
    }

    let ids: Vec<String> = corpus.items().iter().map(|i| i.id.clone()).collect();
    let rows: Vec<Vec<Vec<f64>>> = per_item.into_iter().map(|r| r.unwrap()).collect();
    kinds
        .iter()
        .enumerate()
        .map(|(k, kind)| {
            let dim = kind.dim();
            let mut values = Vec::with_capacity(ids.len() * dim);
            for item_rows in &rows {
                debug_assert_eq!(item_rows[k].len(), dim);
                values.extend_from_slice(&item_rows[k]);
            }
            let m = FeatureMatrix::new((*kind).into(), ids.clone(), dim, values)?;
            Ok((m.descriptor().clone(), m))
        })
        .collect()
}

/// Features for any corpus: extracted descriptors for images, the inline
/// vector blocks for vector corpora.
pub fn corpus_features(corpus: &Corpus, kinds: &BTreeSet<DescriptorKind>) -> Result<FeatureSet> {
    match corpus.kind() {
        CorpusKind::Images => extract_all(corpus, kinds)?.into_values().collect(),
        CorpusKind::Vectors => corpus.vector_features(),
    }
}
