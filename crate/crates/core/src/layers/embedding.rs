use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::Scalar;

/// Weighted selection of embedding-table rows. A one-hot lookup has a single
/// index with weight 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseLookup<T> {
    indices: Vec<usize>,
    weights: Vec<T>,
}

impl<T: Scalar> SparseLookup<T> {
    pub fn new(indices: Vec<usize>, weights: Vec<T>) -> Result<Self> {
        if indices.len() != weights.len() {
            return Err(Error::shape(format!(
                "{} indices but {} weights",
                indices.len(),
                weights.len()
            )));
        }
        let mut seen = HashSet::with_capacity(indices.len());
        if let Some(dup) = indices.iter().find(|i| !seen.insert(**i)) {
            return Err(Error::invalid(format!("duplicate lookup index {dup}")));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("non-finite lookup weight"));
        }
        Ok(Self { indices, weights })
    }

    pub fn one_hot(index: usize) -> Self {
        Self {
            indices: vec![index],
            weights: vec![T::one()],
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            indices: self.indices.clone(),
            weights: self.weights.iter().map(|&w| w * factor).collect(),
        }
    }
}

/// `aᵀ W`: weighted sum of the selected rows of `table`.
pub fn embed_lookup<T: Scalar>(lookup: &SparseLookup<T>, table: &Matrix<T>) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); table.cols()];
    for (&idx, &w) in lookup.indices.iter().zip(&lookup.weights) {
        if idx >= table.rows() {
            return Err(Error::Index {
                index: idx,
                limit: table.rows(),
            });
        }
        for (o, &x) in out.iter_mut().zip(table.row(idx)) {
            *o = *o + w * x;
        }
    }
    Ok(out)
}

/// `S = Aᵀ W` for a mini-batch of lookups; row `r` of the result is lookup `r`.
pub fn embed_lookup_batch<T: Scalar>(
    lookups: &[SparseLookup<T>],
    table: &Matrix<T>,
) -> Result<Matrix<T>> {
    let rows = lookups
        .iter()
        .map(|l| embed_lookup(l, table))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, table.cols()));
    }
    Matrix::from_rows(&rows)
}

/// Gradient rows for an embedding table, keyed by row index. Only rows that a
/// lookup touched are stored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRows<T> {
    rows: BTreeMap<usize, Vec<T>>,
}

impl<T: Scalar> SparseRows<T> {
    pub fn new() -> Self {
        Self {
            rows: BTreeMap::new(),
        }
    }

    /// Accumulates `scale * values` into row `index`.
    pub fn add_row(&mut self, index: usize, scale: T, values: &[T]) {
        let row = self
            .rows
            .entry(index)
            .or_insert_with(|| vec![T::zero(); values.len()]);
        for (r, &v) in row.iter_mut().zip(values) {
            *r = *r + scale * v;
        }
    }

    /// Backward of [`embed_lookup`]: every selected row receives `weight * upstream`.
    pub fn add_lookup(&mut self, lookup: &SparseLookup<T>, upstream: &[T]) {
        for (&idx, &w) in lookup.indices.iter().zip(&lookup.weights) {
            self.add_row(idx, w, upstream);
        }
    }

    pub fn touched(&self) -> impl Iterator<Item = (usize, &[T])> {
        self.rows.iter().map(|(&i, r)| (i, r.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_dense(&self, rows: usize, cols: usize) -> Matrix<T> {
        let mut m = Matrix::zeros(rows, cols);
        for (&i, r) in &self.rows {
            m.row_mut(i).copy_from_slice(r);
        }
        m
    }
}
