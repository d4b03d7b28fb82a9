//! Synthetic ground truth, Bernoulli sampling with symmetric noise, and
//! incoherence diagnostics.

mod io;

pub use io::{read_factors, read_observations, write_factors, write_observations};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::FactorMatrix;
use crate::rng::{gaussian_matrix, stream, Purpose};
use crate::tensor::{cp_sym_inf_norm, orbit};

/// One observed canonical entry `i ≤ j ≤ k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

/// Noisy observations of a symmetric tensor on a symmetric sampling set.
///
/// Only canonical triples are stored; the observed set is the union of
/// their orbits, each position carrying the same value. Entries are kept
/// sorted by `(i, j, k)`, so every sum over them runs in one fixed order
/// regardless of how the set was assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    d: usize,
    p: f64,
    sigma: f64,
    seed: u64,
    r_hint: Option<usize>,
    entries: Vec<Entry>,
}

impl ObservationSet {
    pub fn new(
        d: usize,
        p: f64,
        sigma: f64,
        seed: u64,
        mut entries: Vec<Entry>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("d must be positive"));
        }
        check_rate(p)?;
        if sigma.is_nan() || sigma < 0.0 {
            return Err(Error::invalid(format!("noise level {sigma} must be ≥ 0")));
        }
        for e in &entries {
            if !(e.i <= e.j && e.j <= e.k) {
                return Err(Error::invalid(format!(
                    "non-canonical triple ({}, {}, {})",
                    e.i, e.j, e.k
                )));
            }
            if e.k >= d {
                return Err(Error::dims(format!("index {} out of range for d = {d}", e.k)));
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
        Ok(ObservationSet {
            d,
            p,
            sigma,
            seed,
            r_hint: None,
            entries,
        })
    }

    pub fn with_r_hint(mut self, r: usize) -> Self {
        self.r_hint = Some(r);
        self
    }

    pub fn d(&self) -> usize {
        self.d
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

    pub fn r_hint(&self) -> Option<usize> {
        self.r_hint
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn num_canonical(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every observed position `(j, k, l)` of the symmetrized set with its value.
    pub fn expanded(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.entries
            .iter()
            .flat_map(|e| orbit(e.i, e.j, e.k).map(move |(a, b, c)| (a, b, c, e.value)))
    }
}

pub(crate) fn check_rate(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("sampling rate {p} must lie in (0, 1]")));
    }
    Ok(())
}

/// `r` i.i.d. `N(0, I_d)` columns.
pub fn gen_factors(d: usize, r: usize, seed: u64) -> Result<FactorMatrix> {
    if d == 0 || r == 0 {
        return Err(Error::invalid("gen_factors needs d, r ≥ 1"));
    }
    FactorMatrix::new(gaussian_matrix(&mut stream(seed, Purpose::Factors, 0), d, r))
}

/// Samples each canonical triple independently with probability `p` and adds
/// one `N(0, σ²)` draw per sampled triple.
pub fn sample_observations(
    ustar: &FactorMatrix,
    p: f64,
    sigma: f64,
    seed: u64,
) -> Result<ObservationSet> {
    check_rate(p)?;
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::invalid(format!("noise level {sigma} must be ≥ 0")));
    }
    let d = ustar.d();
    let r = ustar.r();
    let m = ustar.matrix();
    let mut mask = stream(seed, Purpose::Mask, 0);
    let mut noise = stream(seed, Purpose::Noise, 0);
    let mut entries = Vec::new();
    let mut pair = vec![0.0; r];
    for i in 0..d {
        for j in i..d {
            for (s, q) in pair.iter_mut().enumerate() {
                *q = m[(i, s)] * m[(j, s)];
            }
            for k in j..d {
                if mask.random::<f64>() >= p {
                    continue;
                }
                let truth: f64 = pair.iter().enumerate().map(|(s, q)| q * m[(k, s)]).sum();
                let e = if sigma > 0.0 {
                    sigma * noise.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                entries.push(Entry {
                    i,
                    j,
                    k,
                    value: truth + e,
                });
            }
        }
    }
    Ok(ObservationSet::new(d, p, sigma, seed, entries)?.with_r_hint(r))
}

/// Number of canonical triples `i ≤ j ≤ k` in `[d]³`.
pub fn num_canonical_triples(d: usize) -> usize {
    d * (d + 1) * (d + 2) / 6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceStats {
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub kappa: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl IncoherenceStats {
    pub fn mu(&self) -> f64 {
        self.mu0.max(self.mu1).max(self.mu2)
    }
}

/// `‖Σ_i u_i⊗³‖_F²` through the Gram identity `Σ_{s,t} ⟨u_s, u_t⟩³`.
pub(crate) fn cp_sym_frob_sq(u: &FactorMatrix) -> f64 {
    let g = u.matrix().transpose() * u.matrix();
    g.iter().map(|x| x * x * x).sum()
}

/// Noise level `σ` with `(‖T*‖_F² / d³) / σ² = snr`.
pub fn sigma_for_snr(ustar: &FactorMatrix, snr: f64) -> Result<f64> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::invalid(format!("SNR {snr} must be finite and > 0")));
    }
    let d3 = (ustar.d() as f64).powi(3);
    Ok((cp_sym_frob_sq(ustar) / d3 / snr).sqrt())
}

pub fn incoherence_stats(ustar: &FactorMatrix) -> Result<IncoherenceStats> {
    let d = ustar.d() as f64;
    let norms = ustar.column_norms();
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroColumn(i));
    }
    let m = ustar.matrix();
    let frob_sq = cp_sym_frob_sq(ustar);
    let inf = cp_sym_inf_norm(ustar, None);
    let mu0 = d.powi(3) * inf * inf / frob_sq;
    let mu1 = m
        .column_iter()
        .zip(&norms)
        .map(|(c, n)| d * c.amax().powi(2) / (n * n))
        .fold(0.0, f64::max);
    let mut mu2 = 0.0f64;
    for a in 0..ustar.r() {
        for b in 0..ustar.r() {
            if a != b {
                let ip = m.column(a).dot(&m.column(b));
                mu2 = mu2.max(d * ip * ip / (norms[a] * norms[a] * norms[b] * norms[b]));
            }
        }
    }
    let nmax = norms.iter().copied().fold(0.0, f64::max);
    let nmin = norms.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(IncoherenceStats {
        mu0,
        mu1,
        mu2,
        kappa: nmax / nmin,
        lambda_min: nmin.powi(3),
        lambda_max: nmax.powi(3),
    })
}
