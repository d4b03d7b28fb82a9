//! Squared loss over the observed entries, its gradient, and constant-step
//! gradient descent.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::factor::FactorMatrix;
use crate::fileio::{fmt_f64, write_text};
use crate::instances::{Entry, ObservationSet};
use crate::metrics;

/// Residuals `[Σ_i u_i⊗³]_{abc} − T_{abc}` of the canonical entries, with
/// `u` stored row-major (`u[a * r + s]`).
fn residuals(entries: &[Entry], u: &[f64], r: usize) -> Vec<f64> {
    entries
        .iter()
        .map(|e| {
            let (a, b, c) = (&u[e.i * r..][..r], &u[e.j * r..][..r], &u[e.k * r..][..r]);
            let model: f64 = (0..r).map(|s| a[s] * b[s] * c[s]).sum();
            model - e.value
        })
        .collect()
}

fn row_major(u: &FactorMatrix) -> Vec<f64> {
    u.matrix().transpose().as_slice().to_vec()
}

fn check_rows(obs: &ObservationSet, u: &FactorMatrix) -> Result<()> {
    if u.d() != obs.d() {
        return Err(Error::dims(format!(
            "factor has {} rows but observations have d = {}",
            u.d(),
            obs.d()
        )));
    }
    Ok(())
}

/// Orbit multiplicity of a canonical triple.
fn multiplicity(e: &Entry) -> f64 {
    match (e.i == e.j, e.j == e.k) {
        (true, true) => 1.0,
        (false, false) => 6.0,
        _ => 3.0,
    }
}

fn loss_from_residuals(obs: &ObservationSet, res: &[f64]) -> f64 {
    let total: f64 = obs
        .entries()
        .iter()
        .zip(res)
        .map(|(e, rho)| multiplicity(e) * rho * rho)
        .sum();
    total / (6.0 * obs.p())
}

/// `f(U) = (1/6p) Σ_{Ω} ([Σ_i u_i⊗³] − T)²` over the symmetrized observed set.
pub fn loss(obs: &ObservationSet, u: &FactorMatrix) -> Result<f64> {
    check_rows(obs, u)?;
    let res = residuals(obs.entries(), &row_major(u), u.r());
    Ok(loss_from_residuals(obs, &res))
}

/// Gradient accumulated in row-major layout.
///
/// Summed over the orbit of a canonical triple `(a, b, c)`, the expanded
/// contributions `ρ·u_j·u_k → row l` give each slot `m/3` copies of the
/// product of the other two, where `m` is the orbit size.
fn gradient_from_residuals(obs: &ObservationSet, u: &[f64], r: usize, res: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; u.len()];
    for (e, rho) in obs.entries().iter().zip(res) {
        let c = multiplicity(e) / 3.0 * rho;
        for s in 0..r {
            let (ua, ub, uc) = (u[e.i * r + s], u[e.j * r + s], u[e.k * r + s]);
            g[e.i * r + s] += c * ub * uc;
            g[e.j * r + s] += c * ua * uc;
            g[e.k * r + s] += c * ua * ub;
        }
    }
    let scale = 1.0 / obs.p();
    g.iter_mut().for_each(|x| *x *= scale);
    g
}

fn from_row_major(d: usize, r: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, r, v)
}

/// `∇f(U) = (1/p)·P_Ω(Σ_i u_i⊗³ − T) ×₁seq U ×₂seq U`.
pub fn gradient(obs: &ObservationSet, u: &FactorMatrix) -> Result<DMatrix<f64>> {
    check_rows(obs, u)?;
    let r = u.r();
    let um = row_major(u);
    let res = residuals(obs.entries(), &um, r);
    Ok(from_row_major(u.d(), r, &gradient_from_residuals(obs, &um, r, &res)))
}

/// Default scale-free stepsize for [`relative_step`].
pub const DEFAULT_ETA: f64 = 0.5;

/// Absolute stepsize from a scale-free one: `eta / max_i ‖u_i⁰‖⁴`.
///
/// The loss Hessian scales like `‖u‖⁴`, and its stiffest direction stretches
/// the largest column along itself (curvature about `3‖u_max‖⁴`), so any
/// `eta < 2/3` stays below the stability limit whatever the column spread.
pub fn relative_step(eta: f64, u0: &FactorMatrix) -> f64 {
    let max4 = u0.column_norms().iter().map(|n| n.powi(4)).fold(0.0, f64::max);
    if max4 > 0.0 {
        eta / max4
    } else {
        eta
    }
}

/// Stepsize bound `λ_min^{4/3} / (32 λ_max^{8/3})` from the convergence theory.
pub fn theoretical_step_bound(ustar: &FactorMatrix) -> f64 {
    let norms = ustar.column_norms();
    let nmin = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let nmax = norms.iter().copied().fold(0.0, f64::max);
    nmin.powi(4) / (32.0 * nmax.powi(8))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthMetrics {
    pub rel_dist_f: f64,
    pub rel_dist_2inf: f64,
    pub rel_tensor_f: f64,
    /// Only filled where requested; see [`TraceDetail`].
    pub rel_tensor_inf: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub loss: f64,
    pub truth: Option<TruthMetrics>,
}

/// How much of the ground-truth comparison to compute per iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceDetail {
    /// Every metric at every iterate.
    #[default]
    Full,
    /// The entrywise tensor error (an `O(d³r)` sweep) only at the last iterate.
    SupAtEnd,
}

#[derive(Debug, Clone)]
pub struct GdTrace {
    pub records: Vec<TraceRecord>,
    pub final_factors: FactorMatrix,
}

impl GdTrace {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_text(path, |w| {
            writeln!(w, "t,loss,rel_dist_f,rel_dist_2inf,rel_tensor_f,rel_tensor_inf")?;
            for rec in &self.records {
                write!(w, "{},{}", rec.t, fmt_f64(rec.loss))?;
                match rec.truth {
                    Some(m) => writeln!(
                        w,
                        ",{},{},{},{}",
                        fmt_f64(m.rel_dist_f),
                        fmt_f64(m.rel_dist_2inf),
                        fmt_f64(m.rel_tensor_f),
                        m.rel_tensor_inf.map(fmt_f64).unwrap_or_default()
                    )?,
                    None => writeln!(w, ",,,,")?,
                }
            }
            Ok(())
        })
    }
}

fn truth_metrics(u: &FactorMatrix, ustar: &FactorMatrix, with_sup: bool) -> Result<TruthMetrics> {
    let e = metrics::factor_errors(u, ustar)?;
    let rel_tensor_f = metrics::tensor_frob_error(u, ustar)?;
    let rel_tensor_inf = if with_sup {
        Some(metrics::tensor_inf_error(u, ustar)?)
    } else {
        None
    };
    Ok(TruthMetrics {
        rel_dist_f: e.dist_f / ustar.frob_norm(),
        rel_dist_2inf: e.dist_2inf / ustar.norm_2inf(),
        rel_tensor_f,
        rel_tensor_inf,
    })
}

pub fn gd_run(
    obs: &ObservationSet,
    u0: &FactorMatrix,
    eta: f64,
    t0: usize,
    truth: Option<&FactorMatrix>,
) -> Result<GdTrace> {
    gd_run_with(obs, u0, eta, t0, truth, TraceDetail::Full)
}

/// `U^{t+1} = U^t − η ∇f(U^t)` for `t0` steps; records iterates `0..=t0`.
pub fn gd_run_with(
    obs: &ObservationSet,
    u0: &FactorMatrix,
    eta: f64,
    t0: usize,
    truth: Option<&FactorMatrix>,
    detail: TraceDetail,
) -> Result<GdTrace> {
    check_rows(obs, u0)?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("stepsize {eta} must be finite and ≥ 0")));
    }
    if let Some(ustar) = truth {
        if ustar.d() != u0.d() || ustar.r() != u0.r() {
            return Err(Error::dims("truth and initial factors differ in shape"));
        }
    }
    let (d, r) = (u0.d(), u0.r());
    let mut um = row_major(u0);
    let mut records = Vec::with_capacity(t0 + 1);
    for t in 0..=t0 {
        let res = residuals(obs.entries(), &um, r);
        let loss = loss_from_residuals(obs, &res);
        if !loss.is_finite() {
            return Err(Error::Divergence { iter: t });
        }
        let current = FactorMatrix::from_matrix_unchecked(from_row_major(d, r, &um));
        let truth = match truth {
            Some(ustar) => {
                let sup = detail == TraceDetail::Full || t == t0;
                Some(truth_metrics(&current, ustar, sup)?)
            }
            None => None,
        };
        records.push(TraceRecord { t, loss, truth });
        if t == t0 {
            return Ok(GdTrace {
                records,
                final_factors: current,
            });
        }
        let g = gradient_from_residuals(obs, &um, r, &res);
        for (x, gx) in um.iter_mut().zip(&g) {
            *x -= eta * gx;
        }
        if um.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { iter: t + 1 });
        }
    }
    unreachable!("loop returns at t = t0")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_factors, sample_observations};

    #[test]
    fn truth_is_stationary() {
        let u = gen_factors(8, 2, 1).unwrap();
        let obs = sample_observations(&u, 0.5, 0.0, 2).unwrap();
        assert!(loss(&obs, &u).unwrap() <= 1e-20 * crate::instances::cp_sym_frob_sq(&u));
        assert!(gradient(&obs, &u).unwrap().norm() <= 1e-12 * u.frob_norm().powi(3));
    }

    #[test]
    fn zero_factor_loss() {
        let u = gen_factors(6, 2, 3).unwrap();
        let obs = sample_observations(&u, 0.4, 0.1, 4).unwrap();
        let expect: f64 = obs.expanded().map(|(_, _, _, v)| v * v).sum::<f64>() / (6.0 * 0.4);
        let got = loss(&obs, &FactorMatrix::zeros(6, 2)).unwrap();
        assert!((got - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn zero_iterations_and_zero_step() {
        let u = gen_factors(6, 2, 5).unwrap();
        let obs = sample_observations(&u, 0.5, 0.0, 6).unwrap();
        let u0 = u.scaled(0.9);
        let tr = gd_run(&obs, &u0, 0.01, 0, Some(&u)).unwrap();
        assert_eq!(tr.records.len(), 1);
        assert_eq!(tr.final_factors, u0);
        let tr = gd_run(&obs, &u0, 0.0, 5, None).unwrap();
        assert_eq!(tr.records.len(), 6);
        assert_eq!(tr.final_factors, u0);
        assert!(tr.records.iter().all(|r| r.loss == tr.records[0].loss));
    }

    #[test]
    fn huge_step_diverges() {
        let u = gen_factors(6, 2, 7).unwrap();
        let obs = sample_observations(&u, 0.5, 0.0, 8).unwrap();
        let u0 = u.scaled(1.5);
        assert!(matches!(
            gd_run(&obs, &u0, 1e6, 200, None),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn shape_mismatch() {
        let u = gen_factors(6, 2, 9).unwrap();
        let obs = sample_observations(&u, 0.5, 0.0, 10).unwrap();
        assert!(loss(&obs, &gen_factors(5, 2, 1).unwrap()).is_err());
        assert!(gd_run(&obs, &u, -1.0, 1, None).is_err());
    }
}
