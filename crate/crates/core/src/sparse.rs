//! Sparse and dense feature rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index/value pairs with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a vector from pairs sorted by index; zero values are dropped.
    pub fn from_sorted(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut v = Self::zeros(dim);
        for (i, x) in pairs {
            if i >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: i + 1,
                });
            }
            if v.indices.last().is_some_and(|&last| last >= i) {
                return Err(Error::InvalidConfig(format!(
                    "sparse indices must be strictly increasing (saw {i} after {:?})",
                    v.indices.last()
                )));
            }
            if x != 0.0 {
                v.indices.push(i);
                v.values.push(x);
            }
        }
        Ok(v)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let mut v = Self::zeros(values.len());
        for (i, &x) in values.iter().enumerate() {
            if x != 0.0 {
                v.indices.push(i);
                v.values.push(x);
            }
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Appends `other` after this vector's columns.
    pub fn extend_shifted(&mut self, other: &SparseVector) {
        let offset = self.dim;
        self.indices
            .extend(other.indices.iter().map(|i| i + offset));
        self.values.extend_from_slice(&other.values);
        self.dim += other.dim;
    }

    pub(crate) fn push_unchecked(&mut self, index: usize, value: f64) {
        debug_assert!(index < self.dim && self.indices.last().is_none_or(|&l| l < index));
        if value != 0.0 {
            self.indices.push(index);
            self.values.push(value);
        }
    }
}

/// A single feature row as seen by the linear solvers.
pub trait FeatureRow: Sync {
    fn dim(&self) -> usize;

    fn dot(&self, weights: &[f64]) -> f64;

    /// `out += alpha * self`
    fn add_scaled_to(&self, alpha: f64, out: &mut [f64]);

    fn squared_norm(&self) -> f64;

    fn for_each_nonzero(&self, f: impl FnMut(usize, f64));

    fn all_finite(&self) -> bool;
}

impl FeatureRow for SparseVector {
    fn dim(&self) -> usize {
        self.dim
    }

    fn dot(&self, weights: &[f64]) -> f64 {
        self.iter().map(|(i, v)| weights[i] * v).sum()
    }

    fn add_scaled_to(&self, alpha: f64, out: &mut [f64]) {
        for (i, v) in self.iter() {
            out[i] += alpha * v;
        }
    }

    fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    fn for_each_nonzero(&self, mut f: impl FnMut(usize, f64)) {
        for (i, v) in self.iter() {
            f(i, v);
        }
    }

    fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl FeatureRow for Vec<f64> {
    fn dim(&self) -> usize {
        self.len()
    }

    fn dot(&self, weights: &[f64]) -> f64 {
        self.iter().zip(weights).map(|(x, w)| x * w).sum()
    }

    fn add_scaled_to(&self, alpha: f64, out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(self) {
            *o += alpha * x;
        }
    }

    fn squared_norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum()
    }

    fn for_each_nonzero(&self, mut f: impl FnMut(usize, f64)) {
        for (i, &v) in self.iter().enumerate() {
            if v != 0.0 {
                f(i, v);
            }
        }
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}
