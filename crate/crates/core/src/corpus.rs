//! Corpus loading and representative first-iteration sampling.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DescriptorId, FeatureMatrix, FeatureSet};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusKind {
    Images,
    Vectors,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ItemSource {
    Image(PathBuf),
    /// One vector per block of the manifest cell.
    Vector(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataItem {
    pub id: String,
    pub source: ItemSource,
    /// Class label, used only by evaluation and simulated labelers.
    pub ground_truth: Option<String>,
}

/// An immutable, id-sorted collection of items.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    kind: CorpusKind,
    items: Vec<DataItem>,
    block_names: Vec<String>,
}

impl Corpus {
    /// Builds a corpus from in-memory items. Items are sorted by id; all
    /// items must share one source kind (and, for vectors, one block shape).
    pub fn from_items(items: Vec<DataItem>, block_names: Vec<String>) -> Result<Self> {
        let Some(first) = items.first() else {
            return Err(Error::Manifest("corpus is empty".into()));
        };
        let kind = match first.source {
            ItemSource::Image(_) => CorpusKind::Images,
            ItemSource::Vector(_) => CorpusKind::Vectors,
        };

        let mut seen = HashSet::new();
        let mut dups: Vec<String> = items
            .iter()
            .filter(|i| !seen.insert(i.id.as_str()))
            .map(|i| i.id.clone())
            .collect();
        if !dups.is_empty() {
            dups.sort();
            dups.dedup();
            return Err(Error::DuplicateIds(dups));
        }

        let mut block_dims: Option<Vec<usize>> = None;
        for item in &items {
            match (&item.source, kind) {
                (ItemSource::Image(_), CorpusKind::Images) => {}
                (ItemSource::Vector(blocks), CorpusKind::Vectors) => {
                    let dims: Vec<usize> = blocks.iter().map(Vec::len).collect();
                    match &block_dims {
                        None => block_dims = Some(dims),
                        Some(d) if *d == dims => {}
                        Some(d) => {
                            return Err(Error::Manifest(format!(
                                "item {} has vector blocks of sizes {dims:?}, expected {d:?}",
                                item.id
                            )))
                        }
                    }
                    if let Some(bad) = blocks.iter().flatten().find(|v| !v.is_finite()) {
                        return Err(Error::Manifest(format!("item {} has non-finite value {bad}", item.id)));
                    }
                }
                _ => {
                    return Err(Error::Manifest(format!(
                        "item {} mixes image and vector sources",
                        item.id
                    )))
                }
            }
        }

        let block_names = match (kind, block_dims) {
            (CorpusKind::Vectors, Some(dims)) => {
                if block_names.is_empty() {
                    default_block_names(dims.len())
                } else if block_names.len() == dims.len() {
                    block_names
                } else {
                    return Err(Error::Manifest(format!(
                        "{} block names for {} vector blocks",
                        block_names.len(),
                        dims.len()
                    )));
                }
            }
            _ => Vec::new(),
        };

        let mut items = items;
        items.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Corpus {
            kind,
            items,
            block_names,
        })
    }

    pub fn kind(&self) -> CorpusKind {
        self.kind
    }

    pub fn items(&self) -> &[DataItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.id.as_str())
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.items.binary_search_by(|i| i.id.as_str().cmp(id)).ok()
    }

    pub fn get(&self, id: &str) -> Option<&DataItem> {
        self.position(id).map(|i| &self.items[i])
    }

    pub fn block_names(&self) -> &[String] {
        &self.block_names
    }

    /// For vector corpora: one identity descriptor per vector block.
    pub fn vector_features(&self) -> Result<FeatureSet> {
        if self.kind != CorpusKind::Vectors {
            return Err(Error::Parameter("image corpora need descriptor extraction".into()));
        }
        let ids: Vec<String> = self.items.iter().map(|i| i.id.clone()).collect();
        self.block_names
            .iter()
            .enumerate()
            .map(|(b, name)| {
                let rows = self
                    .items
                    .iter()
                    .map(|item| match &item.source {
                        ItemSource::Vector(blocks) => blocks[b].clone(),
                        ItemSource::Image(_) => unreachable!("vector corpus"),
                    })
                    .collect();
                FeatureMatrix::from_rows(DescriptorId::new(name.clone()), ids.clone(), rows)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .collect()
    }
}

fn default_block_names(n: usize) -> Vec<String> {
    if n == 1 {
        vec!["identity".to_string()]
    } else {
        (0..n).map(|i| format!("identity-{i}")).collect()
    }
}

fn parse_vector_cell(cell: &str) -> Option<Vec<(Option<String>, Vec<f64>)>> {
    cell.split('|')
        .map(|block| {
            let (name, body) = match block.split_once('=') {
                Some((n, b)) => (Some(n.trim().to_string()), b),
                None => (None, block),
            };
            let values = body
                .split(';')
                .map(|v| v.trim().parse::<f64>().ok())
                .collect::<Option<Vec<f64>>>()?;
            Some((name, values))
        })
        .collect()
}

/// Loads a manifest CSV with header `id,path_or_vector[,ground_truth]`.
///
/// A `path_or_vector` cell is either an image path (relative paths resolve
/// against the manifest's directory) or inline vectors written `v1;v2;...`.
/// Several vector blocks may be separated by `|`, each optionally prefixed
/// with `name=` to name its descriptor.
pub fn load_corpus(manifest: &Path) -> Result<Corpus> {
    let load_err = |reason: String| Error::Load {
        path: manifest.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(manifest)
        .map_err(|e| load_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| load_err(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(id_col), Some(src_col)) = (col("id"), col("path_or_vector")) else {
        return Err(Error::Manifest(format!(
            "{}: header must contain id,path_or_vector",
            manifest.display()
        )));
    };
    let gt_col = col("ground_truth");
    let base = manifest.parent().unwrap_or(Path::new("."));

    let mut items = Vec::new();
    let mut names: Option<Vec<Option<String>>> = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| load_err(e.to_string()))?;
        let id = record.get(id_col).unwrap_or("").to_string();
        let cell = record.get(src_col).unwrap_or("");
        if id.is_empty() || cell.is_empty() {
            return Err(Error::Manifest(format!("row {} is missing id or source", line + 2)));
        }
        let ground_truth = gt_col
            .and_then(|c| record.get(c))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        let source = match parse_vector_cell(cell) {
            Some(blocks) => {
                let row_names: Vec<Option<String>> = blocks.iter().map(|(n, _)| n.clone()).collect();
                match &names {
                    None => names = Some(row_names),
                    Some(n) if *n == row_names => {}
                    Some(_) => {
                        return Err(Error::Manifest(format!("row {} names its vector blocks differently", line + 2)))
                    }
                }
                ItemSource::Vector(blocks.into_iter().map(|(_, v)| v).collect())
            }
            None => {
                let path = base.join(cell);
                if !path.is_file() {
                    return Err(Error::Load {
                        path,
                        reason: format!("image for item {id} not found"),
                    });
                }
                ItemSource::Image(path)
            }
        };
        items.push(DataItem {
            id,
            source,
            ground_truth,
        });
    }
    if items.is_empty() {
        return Err(load_err("corpus is empty".into()));
    }
    let block_names = match names {
        Some(n) if n.iter().all(Option::is_some) => n.into_iter().map(Option::unwrap).collect(),
        Some(n) if n.iter().any(Option::is_some) => {
            return Err(Error::Manifest("either all or no vector blocks must be named".into()))
        }
        _ => Vec::new(),
    };
    Corpus::from_items(items, block_names)
}

/// Writes a vector corpus manifest readable by [`load_corpus`].
pub fn write_vector_manifest(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["id", "path_or_vector", "ground_truth"]).map_err(io)?;
    for item in corpus.items() {
        let cell = match &item.source {
            ItemSource::Vector(blocks) => blocks
                .iter()
                .zip(corpus.block_names())
                .map(|(b, name)| {
                    let body: Vec<String> = b.iter().map(|v| format!("{v:?}")).collect();
                    format!("{name}={}", body.join(";"))
                })
                .collect::<Vec<_>>()
                .join("|"),
            ItemSource::Image(p) => p.display().to_string(),
        };
        w.write_record([item.id.as_str(), cell.as_str(), item.ground_truth.as_deref().unwrap_or("")])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingVariant {
    MinimumMaximum,
    Quantile,
    NormalBootstrap,
    StratifiedNormalBootstrap,
    NormalSubsample,
    StratifiedSubsample,
}

impl SamplingVariant {
    pub const ALL: [SamplingVariant; 6] = [
        SamplingVariant::MinimumMaximum,
        SamplingVariant::Quantile,
        SamplingVariant::NormalBootstrap,
        SamplingVariant::StratifiedNormalBootstrap,
        SamplingVariant::NormalSubsample,
        SamplingVariant::StratifiedSubsample,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingStrategy {
    pub variant: SamplingVariant,
    pub sample_size: usize,
    pub seed: u64,
}

/// Draws `sample_size` distinct item ids for the first labeling query.
pub fn draw_sample(corpus: &Corpus, features: &FeatureMatrix, strategy: &SamplingStrategy) -> Result<Vec<String>> {
    let n = corpus.len();
    let size = strategy.sample_size;
    if size == 0 || size > n {
        return Err(Error::Parameter(format!("sample size {size} must be in 1..={n}")));
    }
    if features.len() != n || !corpus.ids().zip(features.ids()).all(|(a, b)| a == b) {
        return Err(Error::Parameter(format!(
            "feature matrix {} does not cover the corpus items",
            features.descriptor()
        )));
    }
    let needs_dims = matches!(strategy.variant, SamplingVariant::MinimumMaximum | SamplingVariant::Quantile);
    if needs_dims && features.dim() == 0 {
        return Err(Error::Parameter("sampling needs at least one feature dimension".into()));
    }

    let mut rng = seeded_rng(strategy.seed);
    let picked = match strategy.variant {
        SamplingVariant::MinimumMaximum => minimum_maximum(features, size),
        SamplingVariant::Quantile => quantile(features, size),
        SamplingVariant::NormalBootstrap => bootstrap(n, size, &mut rng),
        SamplingVariant::NormalSubsample => subsample(n, size, &mut rng),
        SamplingVariant::StratifiedNormalBootstrap | SamplingVariant::StratifiedSubsample => {
            let with_replacement = strategy.variant == SamplingVariant::StratifiedNormalBootstrap;
            stratified(features, size, with_replacement, &mut rng)
        }
    };
    debug_assert_eq!(picked.len(), size);
    Ok(picked.into_iter().map(|i| corpus.items()[i].id.clone()).collect())
}

/// Index of the extreme unselected value in `dim`; ties resolve to the
/// lowest index.
fn extreme(features: &FeatureMatrix, dim: usize, taken: &[bool], max: bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in features.rows().enumerate() {
        if taken[i] {
            continue;
        }
        let v = row[dim];
        let better = match best {
            None => true,
            Some((_, b)) => (max && v > b) || (!max && v < b),
        };
        if better {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

fn minimum_maximum(features: &FeatureMatrix, size: usize) -> Vec<usize> {
    let mut taken = vec![false; features.len()];
    let mut out = Vec::with_capacity(size);
    let mut round = 0;
    while out.len() < size {
        let dim = round % features.dim();
        for max in [false, true] {
            if out.len() == size {
                break;
            }
            if let Some(i) = extreme(features, dim, &taken, max) {
                taken[i] = true;
                out.push(i);
            }
        }
        round += 1;
    }
    out
}

/// Linear-interpolation quantile of ascending `sorted` at level `q`.
pub(crate) fn quantile_of_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Step `i` targets dimension `i mod dim` at quantile level `(i + 0.5) / size`
/// and takes the unselected item closest to that cut point.
fn quantile(features: &FeatureMatrix, size: usize) -> Vec<usize> {
    let sorted_columns: Vec<Vec<f64>> = (0..features.dim())
        .map(|d| {
            let mut col: Vec<f64> = features.rows().map(|r| r[d]).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    let mut taken = vec![false; features.len()];
    let mut out = Vec::with_capacity(size);
    for step in 0..size {
        let dim = step % features.dim();
        let cut = quantile_of_sorted(&sorted_columns[dim], (step as f64 + 0.5) / size as f64);
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in features.rows().enumerate() {
            if taken[i] {
                continue;
            }
            let gap = (row[dim] - cut).abs();
            if best.is_none_or(|(_, g)| gap < g) {
                best = Some((i, gap));
            }
        }
        let (i, _) = best.expect("size <= corpus size");
        taken[i] = true;
        out.push(i);
    }
    out
}

fn bootstrap(n: usize, size: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let i = rng.random_range(0..n);
        if !taken[i] {
            taken[i] = true;
            out.push(i);
        }
    }
    out
}

fn subsample(n: usize, size: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    let (head, _) = all.partial_shuffle(rng, size);
    head.to_vec()
}

const KMEANS_ITERATIONS: usize = 10;

/// Seeded Lloyd k-means under L2; returns the cluster index of each row.
pub(crate) fn kmeans(features: &FeatureMatrix, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let dim = features.dim();
    let seeds = subsample(features.len(), k, rng);
    let mut centers: Vec<Vec<f64>> = seeds.iter().map(|&i| features.row(i).to_vec()).collect();
    let mut assign = vec![0; features.len()];
    for _ in 0..KMEANS_ITERATIONS {
        for (i, row) in features.rows().enumerate() {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d: f64 = row.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.1 {
                    best = (c, d);
                }
            }
            assign[i] = best.0;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, row) in features.rows().enumerate() {
            counts[assign[i]] += 1;
            sums[assign[i]].iter_mut().zip(row).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    assign
}

fn stratified(features: &FeatureMatrix, size: usize, with_replacement: bool, rng: &mut impl Rng) -> Vec<usize> {
    let n = features.len();
    let assign = kmeans(features, size, rng);
    let mut strata: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in assign.iter().enumerate() {
        strata.entry(c).or_default().push(i);
    }
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(size);
    for members in strata.values() {
        let pick = if with_replacement {
            // resample within the stratum until an unused member comes up
            loop {
                let i = members[rng.random_range(0..members.len())];
                if !taken[i] {
                    break i;
                }
            }
        } else {
            members[rng.random_range(0..members.len())]
        };
        taken[pick] = true;
        out.push(pick);
    }
    // empty strata leave slots open; fill them from the remaining items
    if out.len() < size {
        let mut rest: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
        let missing = size - out.len();
        let (head, _) = rest.partial_shuffle(rng, missing);
        out.extend_from_slice(head);
    }
    out
}
