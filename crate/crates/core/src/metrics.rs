//! Permutation-aware error metrics.
//!
//! CP factors are identified only up to a column permutation. All three
//! factor distances are evaluated at the single permutation that minimizes
//! the Frobenius distance; that permutation is found exactly by linear
//! assignment. Column signs are not searched: `(−u)⊗³ = −u⊗³` is a
//! different tensor.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::factor::FactorMatrix;
use crate::instances::cp_sym_frob_sq;
use crate::tensor::cp_sym_inf_norm;

pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorErrors {
    pub dist_f: f64,
    pub dist_2inf: f64,
    pub dist_inf: f64,
    /// `matched_perm[i]` is the column of the estimate paired with truth column `i`.
    pub matched_perm: Vec<usize>,
}

fn check_shapes(u: &FactorMatrix, ustar: &FactorMatrix) -> Result<()> {
    if u.d() != ustar.d() || u.r() != ustar.r() {
        return Err(Error::dims(format!(
            "estimate is {}×{} but truth is {}×{}",
            u.d(),
            u.r(),
            ustar.d(),
            ustar.r()
        )));
    }
    Ok(())
}

/// Pairwise squared column distances `cost[i, j] = ‖u_j − u*_i‖²`.
fn column_cost(u: &DMatrix<f64>, ustar: &DMatrix<f64>) -> DMatrix<f64> {
    let r = u.ncols();
    DMatrix::from_fn(r, r, |i, j| (u.column(j) - ustar.column(i)).norm_squared())
}

pub fn match_permutation(u: &FactorMatrix, ustar: &FactorMatrix) -> Result<Vec<usize>> {
    check_shapes(u, ustar)?;
    Ok(assignment::solve(&column_cost(u.matrix(), ustar.matrix())))
}

/// Distances of `u·Π − u*` for a given pairing.
pub fn factor_errors_at(u: &FactorMatrix, ustar: &FactorMatrix, perm: &[usize]) -> FactorErrors {
    let diff = u.permute_columns(perm).into_matrix() - ustar.matrix();
    FactorErrors {
        dist_f: diff.norm(),
        dist_2inf: diff.row_iter().map(|r| r.norm()).fold(0.0, f64::max),
        dist_inf: diff.amax(),
        matched_perm: perm.to_vec(),
    }
}

pub fn factor_errors(u: &FactorMatrix, ustar: &FactorMatrix) -> Result<FactorErrors> {
    let perm = match_permutation(u, ustar)?;
    Ok(factor_errors_at(u, ustar, &perm))
}

/// `‖Σ_i x_i⊗y_i⊗z_i − Σ_i x*_i⊗y*_i⊗z*_i‖_F` for column-paired factors.
///
/// Writes each estimate column as truth plus `δ` and expands every rank-one
/// difference into the seven terms that carry at least one `δ`, then sums
/// their pairwise inner products through per-mode Gram matrices of
/// `[truth, δ]`. Every term is `O(δ)`, so small errors are not lost to
/// cancellation against the norm of the truth.
pub(crate) fn cp_frob_diff(est: [&DMatrix<f64>; 3], truth: [&DMatrix<f64>; 3]) -> f64 {
    let r = truth[0].ncols();
    let grams: Vec<DMatrix<f64>> = (0..3)
        .map(|m| {
            let b = truth[m];
            let mut stacked = DMatrix::zeros(b.nrows(), 2 * r);
            stacked.columns_mut(0, r).copy_from(b);
            stacked.columns_mut(r, r).copy_from(&(est[m] - b));
            stacked.transpose() * &stacked
        })
        .collect();
    let mut terms = Vec::with_capacity(7 * r);
    for i in 0..r {
        for mask in 1u8..8 {
            let pick = |bit: u8| if mask & bit != 0 { r + i } else { i };
            terms.push([pick(1), pick(2), pick(4)]);
        }
    }
    let mut total = 0.0;
    for s in &terms {
        for t in &terms {
            total += grams[0][(s[0], t[0])] * grams[1][(s[1], t[1])] * grams[2][(s[2], t[2])];
        }
    }
    total.max(0.0).sqrt()
}

/// Relative Frobenius error `‖T̂ − T*‖_F / ‖T*‖_F` of the composed tensors.
pub fn tensor_frob_error(u: &FactorMatrix, ustar: &FactorMatrix) -> Result<f64> {
    let perm = match_permutation(u, ustar)?;
    tensor_frob_error_at(u, ustar, &perm)
}

fn tensor_frob_error_at(u: &FactorMatrix, ustar: &FactorMatrix, perm: &[usize]) -> Result<f64> {
    let denom = cp_sym_frob_sq(ustar).sqrt();
    if denom == 0.0 {
        return Err(Error::ZeroTensor);
    }
    let a = u.permute_columns(perm);
    let (a, b) = (a.matrix(), ustar.matrix());
    Ok(cp_frob_diff([a, a, a], [b, b, b]) / denom)
}

/// Relative entrywise sup error `‖T̂ − T*‖∞ / ‖T*‖∞`.
pub fn tensor_inf_error(u: &FactorMatrix, ustar: &FactorMatrix) -> Result<f64> {
    check_shapes(u, ustar)?;
    let denom = cp_sym_inf_norm(ustar, None);
    if denom == 0.0 {
        return Err(Error::ZeroTensor);
    }
    Ok(cp_sym_inf_norm(u, Some(ustar)) / denom)
}

/// `(rel_F, rel_inf)` of `cp_compose(u)` against `cp_compose(ustar)`.
pub fn tensor_errors(u: &FactorMatrix, ustar: &FactorMatrix) -> Result<(f64, f64)> {
    Ok((tensor_frob_error(u, ustar)?, tensor_inf_error(u, ustar)?))
}

pub fn success(u: &FactorMatrix, ustar: &FactorMatrix, threshold: f64) -> Result<bool> {
    let e = factor_errors(u, ustar)?;
    Ok(e.dist_f / ustar.frob_norm() <= threshold)
}

/// Serialized form of a full evaluation (`metrics.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub dist_f: f64,
    pub dist_2inf: f64,
    pub dist_inf: f64,
    pub rel_dist_f: f64,
    pub rel_dist_2inf: f64,
    pub rel_tensor_f: f64,
    pub rel_tensor_inf: f64,
    pub success: bool,
}

pub fn evaluate(u: &FactorMatrix, ustar: &FactorMatrix, threshold: f64) -> Result<Metrics> {
    let e = factor_errors(u, ustar)?;
    let rel_dist_f = e.dist_f / ustar.frob_norm();
    Ok(Metrics {
        dist_f: e.dist_f,
        dist_2inf: e.dist_2inf,
        dist_inf: e.dist_inf,
        rel_dist_f,
        rel_dist_2inf: e.dist_2inf / ustar.norm_2inf(),
        rel_tensor_f: tensor_frob_error_at(u, ustar, &e.matched_perm)?,
        rel_tensor_inf: tensor_inf_error(u, ustar)?,
        success: rel_dist_f <= threshold,
    })
}
