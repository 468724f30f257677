//! Binary feature cache.
//!
//! Layout (little endian): magic `FDFC`, format version `u32`, descriptor
//! name (`u32` length + UTF-8), params hash `u64`, dimension `u64`, row
//! count `u64`, then the row-major `f64` values, then the item ids (`u32`
//! length + UTF-8 each) and an 8-byte SHA-256 prefix over everything before it.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{extract_all, DescriptorId, DescriptorKind, FeatureMatrix, FeatureSet};
use crate::corpus::{Corpus, CorpusKind};
use crate::error::{Error, Result};
use crate::rng::stable_hash;

pub const CACHE_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"FDFC";

fn params_hash(descriptor: &DescriptorId) -> u64 {
    stable_hash([descriptor.as_str(), descriptor.params().as_str()])
}

fn checksum(bytes: &[u8]) -> [u8; 8] {
    let digest = Sha256::digest(bytes);
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    out
}

fn encode(matrix: &FeatureMatrix, hash: u64) -> Vec<u8> {
    let name = matrix.descriptor().as_str().as_bytes();
    let mut buf = Vec::with_capacity(48 + name.len() + matrix.values().len() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CACHE_FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
    buf.extend_from_slice(name);
    buf.extend_from_slice(&hash.to_le_bytes());
    buf.extend_from_slice(&(matrix.dim() as u64).to_le_bytes());
    buf.extend_from_slice(&(matrix.len() as u64).to_le_bytes());
    for v in matrix.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for id in matrix.ids() {
        buf.extend_from_slice(&(id.len() as u32).to_le_bytes());
        buf.extend_from_slice(id.as_bytes());
    }
    let sum = checksum(&buf);
    buf.extend_from_slice(&sum);
    buf
}

pub fn save_cache(matrix: &FeatureMatrix, path: &Path) -> Result<()> {
    fs::write(path, encode(matrix, params_hash(matrix.descriptor())))?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or("truncated file")?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> std::result::Result<String, String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| "invalid utf-8".to_string())
    }
}

fn decode(bytes: &[u8], expected: &DescriptorId) -> std::result::Result<FeatureMatrix, String> {
    if bytes.len() < 8 {
        return Err("truncated file".into());
    }
    let (body, sum) = bytes.split_at(bytes.len() - 8);
    if checksum(body) != sum {
        return Err("checksum mismatch".into());
    }
    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err("not a feature cache".into());
    }
    let version = r.u32()?;
    if version != CACHE_FORMAT_VERSION {
        return Err(format!("format version {version}, expected {CACHE_FORMAT_VERSION}"));
    }
    let name = r.string()?;
    if name != expected.as_str() {
        return Err(format!("cache holds descriptor {name}, expected {expected}"));
    }
    if r.u64()? != params_hash(expected) {
        return Err(format!("descriptor {name} was cached with different parameters"));
    }
    let dim = r.u64()? as usize;
    let rows = r.u64()? as usize;
    let count = dim.checked_mul(rows).ok_or("implausible shape")?;
    let raw = r.take(count.checked_mul(8).ok_or("implausible shape")?)?;
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let ids = (0..rows).map(|_| r.string()).collect::<std::result::Result<Vec<_>, _>>()?;
    if r.pos != body.len() {
        return Err("trailing bytes".into());
    }
    FeatureMatrix::new(expected.clone(), ids, dim, values).map_err(|e| e.to_string())
}

/// Loads a cached matrix, rejecting it as stale unless it was written with
/// the same format version, descriptor and parameters.
pub fn load_cache(path: &Path, descriptor: &DescriptorId) -> Result<FeatureMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    decode(&bytes, descriptor).map_err(|reason| Error::StaleCache {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn cache_roundtrip(matrix: &FeatureMatrix, path: &Path) -> Result<FeatureMatrix> {
    save_cache(matrix, path)?;
    load_cache(path, matrix.descriptor())
}

/// Cache file of one descriptor inside a cache directory.
pub fn cache_path(dir: &Path, descriptor: &DescriptorId) -> std::path::PathBuf {
    dir.join(format!("{}.fdfc", descriptor.as_str()))
}

/// Features of `corpus`, reusing valid cache files in `dir` and extracting
/// (then caching) whatever is missing, stale or written for other items.
pub fn load_or_extract(corpus: &Corpus, dir: &Path) -> Result<FeatureSet> {
    if corpus.kind() == CorpusKind::Vectors {
        return corpus.vector_features();
    }
    fs::create_dir_all(dir)?;
    let ids: Vec<&str> = corpus.ids().collect();
    let mut set = FeatureSet::new();
    let mut missing = BTreeSet::new();
    for kind in DescriptorKind::ALL {
        let id = DescriptorId::from(kind);
        match load_cache(&cache_path(dir, &id), &id) {
            Ok(m) if m.ids().iter().map(String::as_str).eq(ids.iter().copied()) => set.insert(m)?,
            Ok(_) => {
                tracing::info!(descriptor = %id, "cache covers other items, re-extracting");
                missing.insert(kind);
            }
            Err(e) => {
                tracing::debug!(descriptor = %id, error = %e, "cache unusable, extracting");
                missing.insert(kind);
            }
        }
    }
    for (id, matrix) in extract_all(corpus, &missing)? {
        save_cache(&matrix, &cache_path(dir, &id))?;
        set.insert(matrix)?;
    }
    Ok(set)
}
