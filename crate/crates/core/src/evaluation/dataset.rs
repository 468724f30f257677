use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// A dense labeled sample used by the feature-selection baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    values: Vec<f64>,
    labels: Vec<bool>,
}

impl Dataset {
    pub fn new(dim: usize, rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Parameter("one label per row required".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Parameter(format!("rows must have dimension {dim}")));
        }
        Ok(Dataset {
            dim,
            values: rows.into_iter().flatten().collect(),
            labels,
        })
    }

    /// Rows of `matrix` selected by `(row, relevant)` pairs.
    pub fn from_matrix(matrix: &FeatureMatrix, rows: &[(usize, bool)]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * matrix.dim());
        for &(r, _) in rows {
            values.extend_from_slice(matrix.row(r));
        }
        Dataset {
            dim: matrix.dim(),
            values,
            labels: rows.iter().map(|r| r.1).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> bool {
        self.labels[i]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn require_both_classes(&self) -> Result<()> {
        if self.labels.iter().any(|&l| l) && self.labels.iter().any(|&l| !l) {
            Ok(())
        } else {
            Err(Error::Parameter("feature selection needs both classes".into()))
        }
    }

    /// The same rows restricted to `columns`, in that order.
    pub fn project(&self, columns: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(self.len() * columns.len());
        for i in 0..self.len() {
            let row = self.row(i);
            values.extend(columns.iter().map(|&c| row[c]));
        }
        Dataset {
            dim: columns.len(),
            values,
            labels: self.labels.clone(),
        }
    }

    /// Rows picked by index (repeats allowed).
    pub fn resample(&self, picks: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(picks.len() * self.dim);
        for &i in picks {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            dim: self.dim,
            values,
            labels: picks.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}
