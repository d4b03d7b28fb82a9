//! Asymmetric order-3 completion: balanced factor generation, independent
//! per-triple sampling, the regularized loss and its gradient, spectral
//! initialization, gradient descent, and sign/permutation-matched metrics.

mod init;
mod io;

pub use init::{build_gram_asym, init_asym, init_asym_best_of, AsymInit};
pub use io::{read_asym_factors, read_asym_observations, write_asym_factors, write_asym_observations};

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::fileio::{fmt_f64, write_text};
use crate::gd::TraceDetail;
use crate::instances::check_rate;
use crate::metrics::cp_frob_diff;
use crate::rng::{gaussian_matrix, stream, Purpose};

/// Factor matrices `U (d1×r)`, `V (d2×r)`, `W (d3×r)` of `Σ_i u_i⊗v_i⊗w_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymFactors {
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    w: DMatrix<f64>,
}

impl AsymFactors {
    pub fn new(u: DMatrix<f64>, v: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        let r = u.ncols();
        if r == 0 || v.ncols() != r || w.ncols() != r {
            return Err(Error::dims(format!(
                "factor column counts {}, {}, {} must agree and be positive",
                u.ncols(),
                v.ncols(),
                w.ncols()
            )));
        }
        if u.nrows() == 0 || v.nrows() == 0 || w.nrows() == 0 {
            return Err(Error::dims("factor matrices need at least one row"));
        }
        if [&u, &v, &w].iter().any(|m| m.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("asymmetric factor"));
        }
        Ok(AsymFactors { u, v, w })
    }

    pub fn zeros(dims: [usize; 3], r: usize) -> Self {
        AsymFactors {
            u: DMatrix::zeros(dims[0], r),
            v: DMatrix::zeros(dims[1], r),
            w: DMatrix::zeros(dims[2], r),
        }
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn mats(&self) -> [&DMatrix<f64>; 3] {
        [&self.u, &self.v, &self.w]
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.u.nrows(), self.v.nrows(), self.w.nrows()]
    }

    pub fn r(&self) -> usize {
        self.u.ncols()
    }

    /// `‖u_i‖·‖v_i‖·‖w_i‖` per column.
    pub fn magnitudes(&self) -> Vec<f64> {
        (0..self.r())
            .map(|i| self.u.column(i).norm() * self.v.column(i).norm() * self.w.column(i).norm())
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        AsymFactors {
            u: &self.u * c,
            v: &self.v * c,
            w: &self.w * c,
        }
    }

    /// Entry `[Σ_i u_i⊗v_i⊗w_i]_{ijk}`.
    pub fn entry(&self, i: usize, j: usize, k: usize) -> f64 {
        (0..self.r())
            .map(|s| self.u[(i, s)] * self.v[(j, s)] * self.w[(k, s)])
            .sum()
    }
}

/// Balanced Gaussian ground truth.
///
/// Draws `û, v̂, ŵ` with i.i.d. standard normal entries, sets
/// `λ_i = ‖û_i‖‖v̂_i‖‖ŵ_i‖`, and rescales each unit direction to norm
/// `λ_i^{1/3}`. The rank-one terms are unchanged.
pub fn gen_asym_factors(d1: usize, d2: usize, d3: usize, r: usize, seed: u64) -> Result<AsymFactors> {
    if d1 == 0 || d2 == 0 || d3 == 0 || r == 0 {
        return Err(Error::invalid("gen_asym_factors needs positive dimensions and rank"));
    }
    let mut raw: Vec<DMatrix<f64>> = [d1, d2, d3]
        .iter()
        .enumerate()
        .map(|(m, &d)| gaussian_matrix(&mut stream(seed, Purpose::AsymFactors, m as u32), d, r))
        .collect();
    for i in 0..r {
        let norms: Vec<f64> = raw.iter().map(|m| m.column(i).norm()).collect();
        let target = (norms[0] * norms[1] * norms[2]).cbrt();
        for (m, n) in raw.iter_mut().zip(&norms) {
            let mut col = m.column_mut(i);
            col *= target / n;
        }
    }
    let w = raw.pop().expect("three modes");
    let v = raw.pop().expect("three modes");
    let u = raw.pop().expect("three modes");
    AsymFactors::new(u, v, w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

/// Observed entries of a `d1×d2×d3` tensor; no symmetrization.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymObservationSet {
    dims: [usize; 3],
    p: f64,
    sigma: f64,
    seed: u64,
    entries: Vec<AsymEntry>,
}

impl AsymObservationSet {
    pub fn new(
        dims: [usize; 3],
        p: f64,
        sigma: f64,
        seed: u64,
        mut entries: Vec<AsymEntry>,
    ) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid("dimensions must be positive"));
        }
        check_rate(p)?;
        if sigma.is_nan() || sigma < 0.0 {
            return Err(Error::invalid(format!("noise level {sigma} must be ≥ 0")));
        }
        for e in &entries {
            if e.i >= dims[0] || e.j >= dims[1] || e.k >= dims[2] {
                return Err(Error::dims(format!(
                    "triple ({}, {}, {}) out of range for {:?}",
                    e.i, e.j, e.k, dims
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::NonFinite("observation value"));
            }
        }
        entries.sort_by_key(|e| (e.i, e.j, e.k));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].i, w[0].j, w[0].k) == (w[1].i, w[1].j, w[1].k))
        {
            return Err(Error::invalid(format!(
                "duplicate triple ({}, {}, {})",
                w[0].i, w[0].j, w[0].k
            )));
        }
        Ok(AsymObservationSet {
            dims,
            p,
            sigma,
            seed,
            entries,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &[AsymEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Includes each triple independently with probability `p`, adding one
/// `N(0, σ²)` draw per included triple.
pub fn sample_asym_observations(
    truth: &AsymFactors,
    p: f64,
    sigma: f64,
    seed: u64,
) -> Result<AsymObservationSet> {
    check_rate(p)?;
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::invalid(format!("noise level {sigma} must be ≥ 0")));
    }
    let [d1, d2, d3] = truth.dims();
    let mut mask = stream(seed, Purpose::Mask, 1);
    let mut noise = stream(seed, Purpose::Noise, 1);
    let mut entries = Vec::new();
    for i in 0..d1 {
        for j in 0..d2 {
            for k in 0..d3 {
                if mask.random::<f64>() >= p {
                    continue;
                }
                let e = if sigma > 0.0 {
                    sigma * noise.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                entries.push(AsymEntry {
                    i,
                    j,
                    k,
                    value: truth.entry(i, j, k) + e,
                });
            }
        }
    }
    AsymObservationSet::new([d1, d2, d3], p, sigma, seed, entries)
}

/// `‖Σ_i u_i⊗v_i⊗w_i‖_F²` through the Gram identity.
fn cp_frob_sq(f: &AsymFactors) -> f64 {
    let g = |m: &DMatrix<f64>| m.transpose() * m;
    g(&f.u).component_mul(&g(&f.v)).component_mul(&g(&f.w)).sum()
}

/// Noise level `σ` with `(‖T*‖_F² / (d1 d2 d3)) / σ² = snr`.
pub fn sigma_for_snr_asym(truth: &AsymFactors, snr: f64) -> Result<f64> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::invalid(format!("SNR {snr} must be finite and > 0")));
    }
    let n: f64 = truth.dims().iter().map(|&d| d as f64).product();
    Ok((cp_frob_sq(truth) / n / snr).sqrt())
}

/// Per-column weights of the balancing regularizer.
#[derive(Debug, Clone, PartialEq)]
pub struct RegParams(Vec<f64>);

impl RegParams {
    /// Weights must be finite and nonnegative; zero switches the term off.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::invalid("regularization weights must be finite and ≥ 0"));
        }
        Ok(RegParams(alpha))
    }

    /// `α_i = λ_i^{2/3}` from magnitude estimates.
    pub fn from_lambdas(lambdas: &[f64]) -> Result<Self> {
        RegParams::new(lambdas.iter().map(|l| l.abs().powf(2.0 / 3.0)).collect())
    }

    pub fn alpha(&self) -> &[f64] {
        &self.0
    }
}

fn check_alpha(f: &AsymFactors, alpha: &RegParams) -> Result<()> {
    if alpha.0.len() != f.r() {
        return Err(Error::dims(format!(
            "{} regularization weights for rank {}",
            alpha.0.len(),
            f.r()
        )));
    }
    Ok(())
}

fn sq_norms(m: &DMatrix<f64>) -> Vec<f64> {
    m.column_iter().map(|c| c.norm_squared()).collect()
}

/// `(1/24) Σ_i α_i [(‖u_i‖²−‖v_i‖²)² + (‖u_i‖²−‖w_i‖²)² + (‖v_i‖²−‖w_i‖²)²]`.
pub fn reg(f: &AsymFactors, alpha: &RegParams) -> Result<f64> {
    check_alpha(f, alpha)?;
    let (a, b, c) = (sq_norms(&f.u), sq_norms(&f.v), sq_norms(&f.w));
    Ok((0..f.r())
        .map(|i| {
            alpha.0[i] * ((a[i] - b[i]).powi(2) + (a[i] - c[i]).powi(2) + (b[i] - c[i]).powi(2))
        })
        .sum::<f64>()
        / 24.0)
}

fn check_obs(obs: &AsymObservationSet, f: &AsymFactors) -> Result<()> {
    if obs.dims != f.dims() {
        return Err(Error::dims(format!(
            "factors have shape {:?} but observations {:?}",
            f.dims(),
            obs.dims
        )));
    }
    Ok(())
}

/// Row-major copies of the three factors for the entry loops.
struct RowMajor {
    r: usize,
    mats: [Vec<f64>; 3],
}

impl RowMajor {
    fn new(f: &AsymFactors) -> Self {
        let rm = |m: &DMatrix<f64>| m.transpose().as_slice().to_vec();
        RowMajor {
            r: f.r(),
            mats: [rm(&f.u), rm(&f.v), rm(&f.w)],
        }
    }

    fn residuals(&self, obs: &AsymObservationSet) -> Vec<f64> {
        let r = self.r;
        let [u, v, w] = &self.mats;
        obs.entries
            .iter()
            .map(|e| {
                let (a, b, c) = (&u[e.i * r..][..r], &v[e.j * r..][..r], &w[e.k * r..][..r]);
                (0..r).map(|s| a[s] * b[s] * c[s]).sum::<f64>() - e.value
            })
            .collect()
    }

    fn into_factors(self, dims: [usize; 3]) -> AsymFactors {
        let [u, v, w] = self.mats;
        let r = self.r;
        AsymFactors {
            u: DMatrix::from_row_slice(dims[0], r, &u),
            v: DMatrix::from_row_slice(dims[1], r, &v),
            w: DMatrix::from_row_slice(dims[2], r, &w),
        }
    }
}

fn data_loss(obs: &AsymObservationSet, res: &[f64]) -> f64 {
    res.iter().map(|x| x * x).sum::<f64>() / (6.0 * obs.p)
}

/// `(1/6p) ‖P_Ω(Σ_i u_i⊗v_i⊗w_i − T)‖_F² + reg(F, α)`.
pub fn loss_asym(obs: &AsymObservationSet, f: &AsymFactors, alpha: &RegParams) -> Result<f64> {
    check_obs(obs, f)?;
    let reg = reg(f, alpha)?;
    Ok(data_loss(obs, &RowMajor::new(f).residuals(obs)) + reg)
}

/// Gradients in row-major layout for the three factors.
fn grad_row_major(obs: &AsymObservationSet, x: &RowMajor, res: &[f64], alpha: &[f64]) -> [Vec<f64>; 3] {
    let r = x.r;
    let [u, v, w] = &x.mats;
    let mut g = [vec![0.0; u.len()], vec![0.0; v.len()], vec![0.0; w.len()]];
    let scale = 1.0 / (3.0 * obs.p);
    for (e, rho) in obs.entries.iter().zip(res) {
        let c = scale * rho;
        for s in 0..r {
            let (a, b, cc) = (u[e.i * r + s], v[e.j * r + s], w[e.k * r + s]);
            g[0][e.i * r + s] += c * b * cc;
            g[1][e.j * r + s] += c * a * cc;
            g[2][e.k * r + s] += c * a * b;
        }
    }
    let col_sq = |m: &[f64], s: usize| m.iter().skip(s).step_by(r).map(|x| x * x).sum::<f64>();
    for (s, &a) in alpha.iter().enumerate() {
        let n = [col_sq(u, s), col_sq(v, s), col_sq(w, s)];
        for m in 0..3 {
            let coeff = a / 6.0 * (2.0 * n[m] - n[(m + 1) % 3] - n[(m + 2) % 3]);
            if coeff == 0.0 {
                continue;
            }
            for (gx, xx) in g[m].iter_mut().zip(&x.mats[m]).skip(s).step_by(r) {
                *gx += coeff * xx;
            }
        }
    }
    g
}

/// `(∇_U, ∇_V, ∇_W)` of [`loss_asym`].
pub fn grad_asym(
    obs: &AsymObservationSet,
    f: &AsymFactors,
    alpha: &RegParams,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    check_obs(obs, f)?;
    check_alpha(f, alpha)?;
    let x = RowMajor::new(f);
    let res = x.residuals(obs);
    let [gu, gv, gw] = grad_row_major(obs, &x, &res, &alpha.0);
    let [d1, d2, d3] = f.dims();
    let r = f.r();
    Ok((
        DMatrix::from_row_slice(d1, r, &gu),
        DMatrix::from_row_slice(d2, r, &gv),
        DMatrix::from_row_slice(d3, r, &gw),
    ))
}

/// Default scale-free stepsize for [`relative_step_asym`].
pub const DEFAULT_ETA_ASYM: f64 = 1.0;

/// `eta / max_i λ_i^{4/3}` with `λ_i = ‖u_i‖‖v_i‖‖w_i‖`, which is
/// `eta / max_i ‖u_i‖⁴` for balanced factors. Steps above roughly `eta = 3`
/// stop contracting.
pub fn relative_step_asym(eta: f64, f0: &AsymFactors) -> f64 {
    let m = f0.magnitudes().into_iter().fold(0.0, f64::max);
    if m > 0.0 {
        eta / m.powf(4.0 / 3.0)
    } else {
        eta
    }
}

pub fn default_step_asym(f0: &AsymFactors) -> f64 {
    relative_step_asym(DEFAULT_ETA_ASYM, f0)
}

/// Relative errors of each factor matrix up to column signs and permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymErrors {
    pub rel_u: f64,
    pub rel_v: f64,
    pub rel_w: f64,
    /// Per mode: `perm[i]` is the estimate column matched to truth column `i`.
    pub perms: [Vec<usize>; 3],
    /// Per mode: sign applied to the matched estimate column.
    pub signs: [Vec<f64>; 3],
}

/// `min_{Π,S} ‖F Π S − F*‖_F / ‖F*‖_F` with the matching and signs found.
pub fn signed_matrix_error(f: &DMatrix<f64>, fstar: &DMatrix<f64>) -> Result<(f64, Vec<usize>, Vec<f64>)> {
    if f.shape() != fstar.shape() {
        return Err(Error::dims(format!(
            "estimate is {:?} but truth is {:?}",
            f.shape(),
            fstar.shape()
        )));
    }
    let r = f.ncols();
    let pair = |i: usize, j: usize| {
        let minus = (f.column(j) - fstar.column(i)).norm_squared();
        let plus = (f.column(j) + fstar.column(i)).norm_squared();
        (minus, plus)
    };
    let cost = DMatrix::from_fn(r, r, |i, j| {
        let (m, p) = pair(i, j);
        m.min(p)
    });
    let perm = assignment::solve(&cost);
    let signs: Vec<f64> = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let (m, p) = pair(i, j);
            if p < m {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
    let denom = fstar.norm();
    if denom == 0.0 {
        return Err(Error::ZeroTensor);
    }
    Ok((total.sqrt() / denom, perm, signs))
}

pub fn asym_factor_errors(f: &AsymFactors, fstar: &AsymFactors) -> Result<AsymErrors> {
    let (rel_u, pu, su) = signed_matrix_error(&f.u, &fstar.u)?;
    let (rel_v, pv, sv) = signed_matrix_error(&f.v, &fstar.v)?;
    let (rel_w, pw, sw) = signed_matrix_error(&f.w, &fstar.w)?;
    Ok(AsymErrors {
        rel_u,
        rel_v,
        rel_w,
        perms: [pu, pv, pw],
        signs: [su, sv, sw],
    })
}

fn check_same_shape(f: &AsymFactors, fstar: &AsymFactors) -> Result<()> {
    if f.dims() != fstar.dims() || f.r() != fstar.r() {
        return Err(Error::dims("estimate and truth factors differ in shape"));
    }
    Ok(())
}

/// Relative Frobenius error of the composed tensors.
///
/// Columns are paired by rank-one term and sign-aligned with an even number
/// of flips (which leaves each term unchanged) before the difference is
/// expanded, so the result keeps full relative precision near zero.
pub fn asym_tensor_frob_error(f: &AsymFactors, fstar: &AsymFactors) -> Result<f64> {
    check_same_shape(f, fstar)?;
    let r = f.r();
    const PATTERNS: [[f64; 3]; 4] = [
        [1.0, 1.0, 1.0],
        [-1.0, -1.0, 1.0],
        [-1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0],
    ];
    let best_pattern = |i: usize, j: usize| {
        PATTERNS
            .iter()
            .map(|s| {
                let c: f64 = (0..3)
                    .map(|m| (f.mats()[m].column(j) * s[m] - fstar.mats()[m].column(i)).norm_squared())
                    .sum();
                (c, *s)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("four patterns")
    };
    let cost = DMatrix::from_fn(r, r, |i, j| best_pattern(i, j).0);
    let perm = assignment::solve(&cost);
    let mut aligned = [f.u.clone(), f.v.clone(), f.w.clone()];
    for (i, &j) in perm.iter().enumerate() {
        let s = best_pattern(i, j).1;
        for m in 0..3 {
            aligned[m].set_column(i, &(f.mats()[m].column(j) * s[m]));
        }
    }
    let zero = [&fstar.u, &fstar.v, &fstar.w];
    let denom = {
        let g: Vec<DMatrix<f64>> = zero.iter().map(|m| m.transpose() * *m).collect();
        g[0].component_mul(&g[1]).component_mul(&g[2]).sum().max(0.0).sqrt()
    };
    if denom == 0.0 {
        return Err(Error::ZeroTensor);
    }
    Ok(cp_frob_diff([&aligned[0], &aligned[1], &aligned[2]], zero) / denom)
}

/// Relative entrywise sup error of the composed tensors (dense sweep).
pub fn asym_tensor_inf_error(f: &AsymFactors, fstar: &AsymFactors) -> Result<f64> {
    check_same_shape(f, fstar)?;
    let [d1, d2, d3] = f.dims();
    let r = f.r();
    let (mut num, mut den) = (0.0f64, 0.0f64);
    let mut pf = vec![0.0; r];
    let mut ps = vec![0.0; r];
    for i in 0..d1 {
        for j in 0..d2 {
            for s in 0..r {
                pf[s] = f.u[(i, s)] * f.v[(j, s)];
                ps[s] = fstar.u[(i, s)] * fstar.v[(j, s)];
            }
            for k in 0..d3 {
                let (mut a, mut b) = (0.0, 0.0);
                for s in 0..r {
                    a += pf[s] * f.w[(k, s)];
                    b += ps[s] * fstar.w[(k, s)];
                }
                num = num.max((a - b).abs());
                den = den.max(b.abs());
            }
        }
    }
    if den == 0.0 {
        return Err(Error::ZeroTensor);
    }
    Ok(num / den)
}

/// Serialized form of a full asymmetric evaluation (`metrics.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymMetrics {
    pub rel_u: f64,
    pub rel_v: f64,
    pub rel_w: f64,
    pub rel_tensor_f: f64,
    pub rel_tensor_inf: f64,
    /// Every factor matrix within `threshold` relative error.
    pub success: bool,
}

pub fn evaluate_asym(f: &AsymFactors, fstar: &AsymFactors, threshold: f64) -> Result<AsymMetrics> {
    check_same_shape(f, fstar)?;
    let e = asym_factor_errors(f, fstar)?;
    Ok(AsymMetrics {
        rel_u: e.rel_u,
        rel_v: e.rel_v,
        rel_w: e.rel_w,
        rel_tensor_f: asym_tensor_frob_error(f, fstar)?,
        rel_tensor_inf: asym_tensor_inf_error(f, fstar)?,
        success: e.rel_u.max(e.rel_v).max(e.rel_w) <= threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymTruthMetrics {
    pub rel_u: f64,
    pub rel_v: f64,
    pub rel_w: f64,
    pub rel_tensor_f: f64,
    pub rel_tensor_inf: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymTraceRecord {
    pub t: usize,
    pub loss: f64,
    pub truth: Option<AsymTruthMetrics>,
}

#[derive(Debug, Clone)]
pub struct AsymTrace {
    pub records: Vec<AsymTraceRecord>,
    pub final_factors: AsymFactors,
}

impl AsymTrace {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_text(path, |w| {
            writeln!(w, "t,loss,rel_err_u,rel_err_v,rel_err_w,rel_tensor_f,rel_tensor_inf")?;
            for rec in &self.records {
                write!(w, "{},{}", rec.t, fmt_f64(rec.loss))?;
                match rec.truth {
                    Some(m) => writeln!(
                        w,
                        ",{},{},{},{},{}",
                        fmt_f64(m.rel_u),
                        fmt_f64(m.rel_v),
                        fmt_f64(m.rel_w),
                        fmt_f64(m.rel_tensor_f),
                        m.rel_tensor_inf.map(fmt_f64).unwrap_or_default()
                    )?,
                    None => writeln!(w, ",,,,,")?,
                }
            }
            Ok(())
        })
    }
}

fn asym_truth_metrics(f: &AsymFactors, fstar: &AsymFactors, with_sup: bool) -> Result<AsymTruthMetrics> {
    let e = asym_factor_errors(f, fstar)?;
    Ok(AsymTruthMetrics {
        rel_u: e.rel_u,
        rel_v: e.rel_v,
        rel_w: e.rel_w,
        rel_tensor_f: asym_tensor_frob_error(f, fstar)?,
        rel_tensor_inf: if with_sup {
            Some(asym_tensor_inf_error(f, fstar)?)
        } else {
            None
        },
    })
}

/// Simultaneous updates `(U, V, W) ← (U, V, W) − η·∇g` for `t0` steps, all
/// three gradients taken at the current iterate.
pub fn gd_asym(
    obs: &AsymObservationSet,
    f0: &AsymFactors,
    alpha: &RegParams,
    eta: f64,
    t0: usize,
    truth: Option<&AsymFactors>,
    detail: TraceDetail,
) -> Result<AsymTrace> {
    check_obs(obs, f0)?;
    check_alpha(f0, alpha)?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("stepsize {eta} must be finite and ≥ 0")));
    }
    if let Some(ft) = truth {
        check_same_shape(f0, ft)?;
    }
    let dims = f0.dims();
    let mut x = RowMajor::new(f0);
    let mut records = Vec::with_capacity(t0 + 1);
    for t in 0..=t0 {
        let res = x.residuals(obs);
        let current = RowMajor {
            r: x.r,
            mats: x.mats.clone(),
        }
        .into_factors(dims);
        let loss = data_loss(obs, &res) + reg(&current, alpha)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { iter: t });
        }
        let truth = match truth {
            Some(ft) => {
                let sup = detail == TraceDetail::Full || t == t0;
                Some(asym_truth_metrics(&current, ft, sup)?)
            }
            None => None,
        };
        records.push(AsymTraceRecord { t, loss, truth });
        if t == t0 {
            return Ok(AsymTrace {
                records,
                final_factors: current,
            });
        }
        let g = grad_row_major(obs, &x, &res, &alpha.0);
        for (m, gm) in x.mats.iter_mut().zip(&g) {
            for (xv, gv) in m.iter_mut().zip(gm) {
                *xv -= eta * gv;
            }
        }
        if x.mats.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iter: t + 1 });
        }
    }
    unreachable!("loop returns at t = t0")
}
