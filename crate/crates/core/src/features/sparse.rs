use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-vector interface shared by the linear models.
pub trait FeatureVector {
    fn dimension(&self) -> usize;

    fn dot(&self, weights: &[f64]) -> f64;

    /// `out += scale * self`
    fn add_scaled_to(&self, out: &mut [f64], scale: f64);

    fn for_each_nonzero(&self, f: impl FnMut(usize, f64));

    fn squared_norm(&self) -> f64 {
        let mut s = 0.0;
        self.for_each_nonzero(|_, v| s += v * v);
        s
    }

    fn check_finite(&self) -> Result<()> {
        let mut bad = None;
        self.for_each_nonzero(|i, v| {
            if !v.is_finite() && bad.is_none() {
                bad = Some(i);
            }
        });
        match bad {
            Some(i) => Err(Error::NonFinite(format!("feature {i}"))),
            None => Ok(()),
        }
    }

    fn min_value(&self) -> f64 {
        let mut m = f64::INFINITY;
        self.for_each_nonzero(|_, v| m = m.min(v));
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    indices: Vec<usize>,
    values: Vec<f64>,
    dimension: usize,
}

impl SparseVector {
    pub fn zeros(dimension: usize) -> Self {
        SparseVector {
            indices: Vec::new(),
            values: Vec::new(),
            dimension,
        }
    }

    /// Builds from `(index, value)` entries. Indices must be strictly
    /// increasing and below `dimension`; values finite.
    pub fn new(indices: Vec<usize>, values: Vec<f64>, dimension: usize) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::InvalidArgument("indices and values differ in length".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("sparse indices must be strictly increasing".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    actual: last + 1,
                });
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sparse value {v}")));
        }
        Ok(SparseVector {
            indices,
            values,
            dimension,
        })
    }

    /// Sums duplicate indices and drops zeros.
    pub fn from_unsorted(mut entries: Vec<(usize, f64)>, dimension: usize) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        let mut indices: Vec<usize> = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let (indices, values): (Vec<_>, Vec<_>) = indices.into_iter().zip(values).filter(|e| e.1 != 0.0).unzip();
        Self::new(indices, values, dimension)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

impl FeatureVector for SparseVector {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn dot(&self, weights: &[f64]) -> f64 {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| weights[i] * v).sum()
    }

    fn add_scaled_to(&self, out: &mut [f64], scale: f64) {
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] += scale * v;
        }
    }

    fn for_each_nonzero(&self, mut f: impl FnMut(usize, f64)) {
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            f(i, v);
        }
    }
}

/// Dense feature row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector(pub Vec<f64>);

impl FeatureVector for DenseVector {
    fn dimension(&self) -> usize {
        self.0.len()
    }

    fn dot(&self, weights: &[f64]) -> f64 {
        self.0.iter().zip(weights).map(|(a, b)| a * b).sum()
    }

    fn add_scaled_to(&self, out: &mut [f64], scale: f64) {
        for (o, v) in out.iter_mut().zip(&self.0) {
            *o += scale * v;
        }
    }

    fn for_each_nonzero(&self, mut f: impl FnMut(usize, f64)) {
        for (i, &v) in self.0.iter().enumerate() {
            if v != 0.0 {
                f(i, v);
            }
        }
    }
}
