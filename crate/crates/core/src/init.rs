//! Spectral initialization: subspace estimation, randomized retrieval of
//! individual factors, pruning, best-of-restarts selection, and a tensor
//! power method baseline.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factor::FactorMatrix;
use crate::gd;
use crate::instances::{Entry, ObservationSet};
use crate::rng::{gaussian_vector, stream, Purpose};
use crate::spectral::{top_r_eigs, top_two_singular, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::tensor::orbit;

pub const DEFAULT_L: usize = 16;
pub const DEFAULT_EPS_TH: f64 = 0.4;
pub const DEFAULT_RESTARTS: usize = 5;
pub const DEFAULT_TPM_ITERS: usize = 16;
pub const DEFAULT_TPM_RESTARTS: usize = 16;

/// One retrieval trial's output.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub nu: DVector<f64>,
    pub lambda: f64,
    pub spec_gap: f64,
}

fn multiplicity(e: &Entry) -> f64 {
    match (e.i == e.j, e.j == e.k) {
        (true, true) => 1.0,
        (false, false) => 6.0,
        _ => 3.0,
    }
}

/// Odd cube root, so that `cbrt(λ)·w` composes to `λ·w⊗³` for either sign.
pub(crate) fn signed_cbrt(x: f64) -> f64 {
    x.cbrt()
}

/// `Σ_{Ω} T_{abc} x_a x_b x_c` over the symmetrized observed set (no `1/p`).
fn contract_cubic(obs: &ObservationSet, x: &DVector<f64>) -> f64 {
    obs.entries()
        .iter()
        .map(|e| multiplicity(e) * e.value * x[e.i] * x[e.j] * x[e.k])
        .sum()
}

/// `y_c = Σ_{Ω} T_{abc} x_a x_b` (no `1/p`).
fn contract_pair(obs: &ObservationSet, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(obs.d());
    for e in obs.entries() {
        let c = multiplicity(e) / 3.0 * e.value;
        y[e.i] += c * x[e.j] * x[e.k];
        y[e.j] += c * x[e.i] * x[e.k];
        y[e.k] += c * x[e.i] * x[e.j];
    }
    y
}

/// `M = p⁻¹ T ×₃ θ` from the observed entries.
fn mode3_matrix(obs: &ObservationSet, theta: &DVector<f64>) -> DMatrix<f64> {
    let d = obs.d();
    let mut m = DMatrix::zeros(d, d);
    for e in obs.entries() {
        for (a, b, c) in orbit(e.i, e.j, e.k) {
            m[(a, b)] += e.value * theta[c];
        }
    }
    m / obs.p()
}

/// `B = P_offdiag(A Aᵀ)` with `A = unfold₁(p⁻¹ T)`.
///
/// Each mode-1 column `(j, k)` of `A` is sparse; its nonzeros contribute
/// their pairwise products to `B`. The dense `d × d²` unfolding is never built.
pub fn build_gram(obs: &ObservationSet) -> DMatrix<f64> {
    let d = obs.d();
    let mut cells: Vec<(usize, usize, f64)> = obs
        .expanded()
        .map(|(a, b, c, v)| (b * d + c, a, v))
        .collect();
    cells.sort_by_key(|&(col, row, _)| (col, row));
    let inv_p2 = 1.0 / (obs.p() * obs.p());
    let mut g = DMatrix::zeros(d, d);
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

/// Orthonormal basis of the top-`r` eigenspace of [`build_gram`].
pub fn subspace_estimate(obs: &ObservationSet, r: usize, seed: u64) -> Result<DMatrix<f64>> {
    if r == 0 || r > obs.d() {
        return Err(Error::invalid(format!("rank {r} must lie in 1..={}", obs.d())));
    }
    Ok(top_r_eigs(&build_gram(obs), r, DEFAULT_TOL, DEFAULT_MAX_ITER, seed)?.basis)
}

/// Projects `g` onto the estimated subspace, contracts the third mode with
/// it, and reads one factor off the leading singular vector.
pub fn retrieve_one_factor(
    obs: &ObservationSet,
    basis: &DMatrix<f64>,
    g: &DVector<f64>,
    seed: u64,
) -> Result<Candidate> {
    let d = obs.d();
    if basis.nrows() != d || g.len() != d {
        return Err(Error::dims("subspace basis and draw must have d rows"));
    }
    let theta = basis * (basis.transpose() * g);
    let m = mode3_matrix(obs, &theta);
    let sv = top_two_singular(&m, DEFAULT_TOL, DEFAULT_MAX_ITER, seed)?;
    let spec_gap = sv.gap();
    let mut nu = sv.right1;
    let mut score = contract_cubic(obs, &nu);
    if score < 0.0 {
        nu.neg_mut();
        score = -score;
    }
    Ok(Candidate {
        nu,
        lambda: score / obs.p(),
        spec_gap,
    })
}

/// Greedy selection by spectral gap with near-duplicate removal.
///
/// Ties on `spec_gap` go to the lowest candidate index.
pub fn prune(candidates: &[Candidate], r: usize, eps_th: f64) -> Result<Vec<Candidate>> {
    let gaps: Vec<f64> = candidates.iter().map(|c| c.spec_gap).collect();
    let dirs: Vec<&DVector<f64>> = candidates.iter().map(|c| &c.nu).collect();
    Ok(prune_indices(&gaps, &dirs, r, eps_th)?
        .into_iter()
        .map(|t| candidates[t].clone())
        .collect())
}

/// Indices picked by the greedy pruning rule on `(gap, direction)` pairs.
pub(crate) fn prune_indices(
    gaps: &[f64],
    dirs: &[&DVector<f64>],
    r: usize,
    eps_th: f64,
) -> Result<Vec<usize>> {
    if !(eps_th > 0.0 && eps_th < 1.0) {
        return Err(Error::invalid(format!("eps_th = {eps_th} must lie in (0, 1)")));
    }
    if gaps.is_empty() {
        return Err(Error::invalid("prune needs at least one candidate"));
    }
    let mut alive = vec![true; gaps.len()];
    let mut chosen = Vec::with_capacity(r);
    while chosen.len() < r {
        let best = (0..gaps.len())
            .filter(|&t| alive[t])
            .fold(None, |acc: Option<usize>, t| match acc {
                Some(b) if gaps[b] >= gaps[t] => Some(b),
                _ => Some(t),
            });
        let Some(best) = best else {
            return Err(Error::InitFailure {
                found: chosen.len(),
                needed: r,
            });
        };
        let w = dirs[best];
        for (t, v) in dirs.iter().enumerate() {
            if alive[t] && v.dot(w).abs() > 1.0 - eps_th {
                alive[t] = false;
            }
        }
        alive[best] = false;
        chosen.push(best);
    }
    Ok(chosen)
}

pub(crate) fn check_rank_and_trials(r: usize, d: usize, l: usize) -> Result<()> {
    if r == 0 || r > d {
        return Err(Error::invalid(format!("rank {r} must lie in 1..={d}")));
    }
    if l < r {
        return Err(Error::invalid(format!("need L ≥ r retrieval trials, got L = {l}, r = {r}")));
    }
    Ok(())
}

fn check_init_args(obs: &ObservationSet, r: usize, l: usize) -> Result<()> {
    check_rank_and_trials(r, obs.d(), l)
}

/// One initialization from a precomputed subspace.
///
/// `restart` selects a disjoint block of the retrieval random streams, so
/// distinct restarts draw independent Gaussian vectors.
pub fn init_with_subspace(
    obs: &ObservationSet,
    basis: &DMatrix<f64>,
    r: usize,
    l: usize,
    eps_th: f64,
    seed: u64,
    restart: usize,
) -> Result<FactorMatrix> {
    check_init_args(obs, r, l)?;
    let candidates = (0..l)
        .map(|tau| {
            let index = (restart * l + tau) as u32;
            let g = gaussian_vector(&mut stream(seed, Purpose::Retrieval, index), obs.d());
            retrieve_one_factor(obs, basis, &g, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let picked = prune(&candidates, r, eps_th)?;
    let cols: Vec<_> = picked
        .iter()
        .map(|c| &c.nu * signed_cbrt(c.lambda))
        .collect();
    FactorMatrix::from_columns(&cols)
}

pub fn init(obs: &ObservationSet, r: usize, l: usize, eps_th: f64, seed: u64) -> Result<FactorMatrix> {
    check_init_args(obs, r, l)?;
    let basis = subspace_estimate(obs, r, seed)?;
    init_with_subspace(obs, &basis, r, l, eps_th, seed, 0)
}

/// The run with the smallest loss; ties go to the earliest run. Fails only
/// when every run failed, returning the first failure.
pub fn select_best(obs: &ObservationSet, runs: Vec<Result<FactorMatrix>>) -> Result<FactorMatrix> {
    let mut best: Option<(f64, FactorMatrix)> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(u) => {
                let f = gd::loss(obs, &u)?;
                if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                    best = Some((f, u));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (best, first_err) {
        (Some((_, u)), _) => Ok(u),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::invalid("no initialization runs")),
    }
}

/// `t_init` independent initializations sharing one subspace estimate; the
/// one with the smallest loss wins.
pub fn best_of_restarts(
    obs: &ObservationSet,
    r: usize,
    l: usize,
    eps_th: f64,
    t_init: usize,
    seed: u64,
) -> Result<FactorMatrix> {
    if t_init == 0 {
        return Err(Error::invalid("t_init must be ≥ 1"));
    }
    check_init_args(obs, r, l)?;
    let basis = subspace_estimate(obs, r, seed)?;
    let runs = (0..t_init)
        .map(|s| init_with_subspace(obs, &basis, r, l, eps_th, seed, s))
        .collect();
    select_best(obs, runs)
}

/// Tensor power method with deflation.
///
/// The working tensor is `p⁻¹T − Σ_s λ_s w_s⊗³`; its sparse part is applied
/// entry by entry and the deflated rank-one terms in closed form.
pub fn tpm_baseline(
    obs: &ObservationSet,
    r: usize,
    iters: usize,
    restarts: usize,
    seed: u64,
) -> Result<FactorMatrix> {
    if iters == 0 || restarts == 0 {
        return Err(Error::invalid("tpm_baseline needs iters, restarts ≥ 1"));
    }
    if r == 0 || r > obs.d() {
        return Err(Error::invalid(format!("rank {r} must lie in 1..={}", obs.d())));
    }
    let d = obs.d();
    let inv_p = 1.0 / obs.p();
    let mut found: Vec<(f64, DVector<f64>)> = Vec::with_capacity(r);

    let apply = |found: &[(f64, DVector<f64>)], u: &DVector<f64>| {
        let mut y = contract_pair(obs, u) * inv_p;
        for (lam, w) in found {
            let c = w.dot(u);
            y.axpy(-lam * c * c, w, 1.0);
        }
        y
    };
    let score = |found: &[(f64, DVector<f64>)], u: &DVector<f64>| {
        let mut s = contract_cubic(obs, u) * inv_p;
        for (lam, w) in found {
            s -= lam * w.dot(u).powi(3);
        }
        s
    };

    for slot in 0..r {
        let mut best: Option<(f64, DVector<f64>)> = None;
        for rs in 0..restarts {
            let mut rng = stream(seed, Purpose::Tpm, (slot * restarts + rs) as u32);
            let mut fresh = || loop {
                let g = gaussian_vector(&mut rng, d);
                let n = g.norm();
                if n > 0.0 {
                    return g / n;
                }
            };
            let mut u = fresh();
            for _ in 0..iters {
                let y = apply(&found, &u);
                let n = y.norm();
                u = if n > 0.0 && n.is_finite() { y / n } else { fresh() };
            }
            let mut s = score(&found, &u);
            if s < 0.0 {
                u.neg_mut();
                s = -s;
            }
            if best.as_ref().is_none_or(|(bs, _)| s > *bs) {
                best = Some((s, u));
            }
        }
        found.push(best.expect("restarts ≥ 1"));
    }
    let cols: Vec<_> = found.iter().map(|(lam, w)| w * signed_cbrt(*lam)).collect();
    FactorMatrix::from_columns(&cols)
}
