use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A `d × r` matrix whose columns are CP factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix(DMatrix<f64>);

impl FactorMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.ncols() == 0 || m.nrows() == 0 {
            return Err(Error::invalid("factor matrix needs d ≥ 1 and r ≥ 1"));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("factor matrix"));
        }
        Ok(FactorMatrix(m))
    }

    pub fn from_columns(cols: &[DVector<f64>]) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::invalid("factor matrix needs at least one column"));
        }
        let d = cols[0].len();
        if cols.iter().any(|c| c.len() != d) {
            return Err(Error::dims("factor columns have unequal lengths"));
        }
        Self::new(DMatrix::from_columns(cols))
    }

    /// Construction for iterates, where finiteness is checked by the caller.
    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        FactorMatrix(m)
    }

    pub fn zeros(d: usize, r: usize) -> Self {
        FactorMatrix(DMatrix::zeros(d, r))
    }

    pub fn d(&self) -> usize {
        self.0.nrows()
    }

    pub fn r(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.0.column(i).into_owned()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        self.0.column_iter().map(|c| c.norm()).collect()
    }

    pub fn frob_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest row ℓ₂ norm.
    pub fn norm_2inf(&self) -> f64 {
        self.0.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Columns reordered so that column `i` of the result is column `perm[i]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        let cols: Vec<_> = perm.iter().map(|&j| self.0.column(j).into_owned()).collect();
        FactorMatrix(DMatrix::from_columns(&cols))
    }

    pub fn scaled(&self, c: f64) -> Self {
        FactorMatrix(&self.0 * c)
    }
}
