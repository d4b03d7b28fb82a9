use nalgebra::{DMatrix, DVector};

use super::{AsymFactors, AsymObservationSet, RegParams};
use crate::error::{Error, Result};
use crate::init::{check_rank_and_trials, prune_indices};
use crate::rng::{gaussian_vector, stream, Purpose};
use crate::spectral::{top_r_eigs, top_two_singular, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Initial factors with the magnitude estimates they were scaled by.
#[derive(Debug, Clone)]
pub struct AsymInit {
    pub factors: AsymFactors,
    pub lambdas: Vec<f64>,
}

impl AsymInit {
    /// `α_i = λ̂_i^{2/3}`.
    pub fn reg_params(&self) -> RegParams {
        RegParams::from_lambdas(&self.lambdas).expect("finite magnitudes")
    }
}

/// `P_offdiag(A Aᵀ)` with `A = unfold₁(p⁻¹ T) ∈ R^{d1 × d2·d3}`.
pub fn build_gram_asym(obs: &AsymObservationSet) -> DMatrix<f64> {
    let [d1, _, d3] = obs.dims();
    let mut cells: Vec<(usize, usize, f64)> = obs
        .entries()
        .iter()
        .map(|e| (e.j * d3 + e.k, e.i, e.value))
        .collect();
    cells.sort_by_key(|&(col, row, _)| (col, row));
    let inv_p2 = 1.0 / (obs.p() * obs.p());
    let mut g = DMatrix::zeros(d1, d1);
    for column in cells.chunk_by(|x, y| x.0 == y.0) {
        for (s, &(_, a, va)) in column.iter().enumerate() {
            for &(_, b, vb) in &column[s + 1..] {
                let x = va * vb * inv_p2;
                g[(a, b)] += x;
                g[(b, a)] += x;
            }
        }
    }
    g
}

/// Flips `x` so its largest-magnitude entry is positive (first one on ties).
fn normalize_sign(x: &mut DVector<f64>) {
    let idx = x.iamax();
    if x[idx] < 0.0 {
        x.neg_mut();
    }
}

struct Retrieved {
    nu: [DVector<f64>; 3],
    lambda: f64,
    gap: f64,
}

fn retrieve(obs: &AsymObservationSet, basis: &DMatrix<f64>, g: &DVector<f64>, seed: u64) -> Result<Retrieved> {
    let [d1, d2, d3] = obs.dims();
    let inv_p = 1.0 / obs.p();
    let theta = basis * (basis.transpose() * g);
    let mut m = DMatrix::zeros(d2, d3);
    for e in obs.entries() {
        m[(e.j, e.k)] += e.value * theta[e.i];
    }
    m *= inv_p;
    let sv = top_two_singular(&m, DEFAULT_TOL, DEFAULT_MAX_ITER, seed)?;
    let gap = sv.gap();
    let (mut nu2, mut nu3) = (sv.left1, sv.right1);
    normalize_sign(&mut nu2);
    normalize_sign(&mut nu3);
    let mut z = DVector::zeros(d1);
    for e in obs.entries() {
        z[e.i] += e.value * nu2[e.j] * nu3[e.k];
    }
    z *= inv_p;
    let lambda = z.norm();
    let nu1 = if lambda > 0.0 {
        z / lambda
    } else {
        let mut e0 = DVector::zeros(d1);
        e0[0] = 1.0;
        e0
    };
    Ok(Retrieved {
        nu: [nu1, nu2, nu3],
        lambda,
        gap,
    })
}

fn init_with_basis(
    obs: &AsymObservationSet,
    basis: &DMatrix<f64>,
    r: usize,
    l: usize,
    eps_th: f64,
    seed: u64,
    restart: usize,
) -> Result<AsymInit> {
    let d1 = obs.dims()[0];
    let found = (0..l)
        .map(|tau| {
            let index = (restart * l + tau) as u32;
            let g = gaussian_vector(&mut stream(seed, Purpose::Retrieval, index), d1);
            retrieve(obs, basis, &g, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = found.iter().map(|c| c.gap).collect();
    let dirs: Vec<&DVector<f64>> = found.iter().map(|c| &c.nu[1]).collect();
    let picked = prune_indices(&gaps, &dirs, r, eps_th)?;
    let col = |m: usize| {
        let cols: Vec<DVector<f64>> = picked
            .iter()
            .map(|&t| &found[t].nu[m] * found[t].lambda.cbrt())
            .collect();
        DMatrix::from_columns(&cols)
    };
    Ok(AsymInit {
        factors: AsymFactors::new(col(0), col(1), col(2))?,
        lambdas: picked.iter().map(|&t| found[t].lambda).collect(),
    })
}

fn subspace(obs: &AsymObservationSet, r: usize, l: usize, seed: u64) -> Result<DMatrix<f64>> {
    let d1 = obs.dims()[0];
    check_rank_and_trials(r, d1, l)?;
    if obs.is_empty() {
        return Err(Error::invalid("no observed entries"));
    }
    Ok(top_r_eigs(&build_gram_asym(obs), r, DEFAULT_TOL, DEFAULT_MAX_ITER, seed)?.basis)
}

/// Subspace estimate on mode 1, then `L` randomized retrievals pruned on
/// their mode-2 directions. Columns are scaled by `λ^{1/3}` in all three
/// modes, so the output is balanced.
pub fn init_asym(obs: &AsymObservationSet, r: usize, l: usize, eps_th: f64, seed: u64) -> Result<AsymInit> {
    let basis = subspace(obs, r, l, seed)?;
    init_with_basis(obs, &basis, r, l, eps_th, seed, 0)
}

/// Best of `t_init` initializations by data-fit loss (all are balanced, so
/// the regularizer vanishes at each of them).
pub fn init_asym_best_of(
    obs: &AsymObservationSet,
    r: usize,
    l: usize,
    eps_th: f64,
    t_init: usize,
    seed: u64,
) -> Result<AsymInit> {
    if t_init == 0 {
        return Err(Error::invalid("t_init must be ≥ 1"));
    }
    let basis = subspace(obs, r, l, seed)?;
    let no_reg = RegParams::new(vec![0.0; r])?;
    let mut best: Option<(f64, AsymInit)> = None;
    let mut first_err = None;
    for s in 0..t_init {
        match init_with_basis(obs, &basis, r, l, eps_th, seed, s) {
            Ok(init) => {
                let f = super::loss_asym(obs, &init.factors, &no_reg)?;
                if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                    best = Some((f, init));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (best, first_err) {
        (Some((_, init)), _) => Ok(init),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("t_init ≥ 1"),
    }
}
