//! Labelled feature matrices with subject groups for leakage-safe splits.

use std::collections::HashSet;

use dosesim_radiomics::table::{FeatureRow, FeatureTable};
use nalgebra::DMatrix;

use crate::error::{MlError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    /// Samples in rows, features in columns.
    pub x: DMatrix<f64>,
    pub labels: Vec<u8>,
    /// Subject id per row.
    pub groups: Vec<String>,
    /// Nodule id per row.
    pub ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, x: DMatrix<f64>, labels: Vec<u8>, groups: Vec<String>, ids: Vec<String>) -> Result<Self> {
        let n = x.nrows();
        if names.len() != x.ncols() {
            return Err(MlError::Shape(format!("{} names for {} columns", names.len(), x.ncols())));
        }
        if labels.len() != n || groups.len() != n || ids.len() != n {
            return Err(MlError::Shape("labels, groups and ids must have one entry per row".into()));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(MlError::Param("labels must be 0 or 1".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(MlError::Numerical("feature matrix holds non-finite values".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(MlError::Param(format!("duplicate feature name {dup}")));
        }
        Ok(FeatureMatrix { names, x, labels, groups, ids })
    }

    pub fn from_table(t: &FeatureTable) -> Result<Self> {
        let x = DMatrix::from_fn(t.rows.len(), t.names.len(), |i, j| t.rows[i].values[j]);
        FeatureMatrix::new(
            t.names.clone(),
            x,
            t.labels(),
            t.rows.iter().map(|r| r.subject_id.clone()).collect(),
            t.rows.iter().map(|r| r.nodule_id.clone()).collect(),
        )
    }

    pub fn to_table(&self) -> FeatureTable {
        let mut t = FeatureTable::new(self.names.clone());
        t.rows = (0..self.n_samples())
            .map(|i| FeatureRow {
                subject_id: self.groups[i].clone(),
                nodule_id: self.ids[i].clone(),
                label: self.labels[i],
                values: self.x.row(i).iter().copied().collect(),
            })
            .collect();
        t
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.column(j).iter().copied().collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Columns in the order of `names`; missing names are an error.
    pub fn select_named(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n).ok_or_else(|| MlError::Shape(format!("missing feature {n}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&idx))
    }

    pub fn select_columns(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: idx.iter().map(|&j| self.names[j].clone()).collect(),
            x: self.x.select_columns(idx.iter()),
            labels: self.labels.clone(),
            groups: self.groups.clone(),
            ids: self.ids.clone(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            x: self.x.select_rows(idx.iter()),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            groups: idx.iter().map(|&i| self.groups[i].clone()).collect(),
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    /// Row-wise concatenation; names must agree.
    pub fn vstack(parts: &[&FeatureMatrix]) -> Result<FeatureMatrix> {
        let first = parts.first().ok_or_else(|| MlError::Param("nothing to stack".into()))?;
        if parts.iter().any(|p| p.names != first.names) {
            return Err(MlError::Shape("stacked matrices have different features".into()));
        }
        let n: usize = parts.iter().map(|p| p.n_samples()).sum();
        let mut x = DMatrix::zeros(n, first.n_features());
        let mut r = 0;
        let (mut labels, mut groups, mut ids) = (Vec::new(), Vec::new(), Vec::new());
        for p in parts {
            x.rows_mut(r, p.n_samples()).copy_from(&p.x);
            r += p.n_samples();
            labels.extend_from_slice(&p.labels);
            groups.extend_from_slice(&p.groups);
            ids.extend_from_slice(&p.ids);
        }
        Ok(FeatureMatrix { names: first.names.clone(), x, labels, groups, ids })
    }

    /// (negatives, positives).
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - pos, pos)
    }

    pub fn require_both_classes(&self, what: &str) -> Result<()> {
        let (neg, pos) = self.class_counts();
        if neg == 0 || pos == 0 {
            return Err(MlError::SingleClass(what.to_string()));
        }
        Ok(())
    }
}
