//! Monte Carlo harness: independent seeded trials over a parameter grid.
//!
//! Trials run on a bounded rayon pool and are collected in (grid point,
//! trial, method) order, so `rows.csv` does not depend on the thread count.
//! Wall-clock times go to a separate `timing.csv`.

use std::fs;
use std::path::Path;
use std::time::Instant;

use nctc::asym::{
    evaluate_asym, gd_asym, gen_asym_factors, init_asym_best_of, relative_step_asym, sample_asym_observations,
    sigma_for_snr_asym, DEFAULT_ETA_ASYM,
};
use nctc::gd::DEFAULT_ETA;
use nctc::init::{DEFAULT_TPM_ITERS, DEFAULT_TPM_RESTARTS};
use nctc::{
    best_of_restarts, evaluate, gd_run_with, gen_factors, relative_step, sample_observations, sigma_for_snr,
    tpm_baseline, TraceDetail,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{trial_seed, ExperimentConfig, GridPoint};
use crate::error::{csv_err, io_err, json_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Spectral initialization with random retrieval and pruning.
    Proposed,
    /// Tensor power method with deflation.
    Tpm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    InitFailure,
    Divergence,
    SolverFailure,
}

/// One trial. Metrics that do not apply to the model, or that a failed trial
/// never produced, are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub grid_index: usize,
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub p: f64,
    pub r: usize,
    pub snr: Option<f64>,
    pub sigma: f64,
    pub status: Status,
    pub success: bool,
    pub rel_dist_f: Option<f64>,
    pub rel_dist_2inf: Option<f64>,
    pub rel_u: Option<f64>,
    pub rel_v: Option<f64>,
    pub rel_w: Option<f64>,
    pub rel_tensor_f: Option<f64>,
    pub rel_tensor_inf: Option<f64>,
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub row: Row,
    /// Relative tensor Frobenius error per iterate; empty unless the
    /// experiment keeps traces and the trial got past initialization.
    pub trace: Vec<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub grid_index: usize,
    pub method: Method,
    pub p: f64,
    pub r: usize,
    pub snr: Option<f64>,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub init_failures: usize,
    pub divergences: usize,
    pub mean_rel_tensor_f: Option<f64>,
    pub median_rel_tensor_f: Option<f64>,
    pub mean_sq_rel_tensor_f: Option<f64>,
    pub mean_rel_dist_f: Option<f64>,
    pub median_rel_dist_f: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub methods: Vec<Method>,
    pub outcomes: Vec<TrialOutcome>,
}

#[derive(Serialize)]
struct TimingRow {
    grid_index: usize,
    trial: usize,
    method: Method,
    seconds: f64,
}

#[derive(Serialize)]
struct TraceRow {
    grid_index: usize,
    trial: usize,
    method: Method,
    t: usize,
    rel_tensor_f: f64,
}

fn status_of(e: &nctc::Error) -> Status {
    match e {
        nctc::Error::InitFailure { .. } => Status::InitFailure,
        nctc::Error::Divergence { .. } => Status::Divergence,
        _ => Status::SolverFailure,
    }
}

fn blank_row(grid_index: usize, trial: usize, seed: u64, method: Method, pt: &GridPoint) -> Row {
    Row {
        grid_index,
        trial,
        seed,
        method,
        p: pt.p,
        r: pt.r,
        snr: pt.snr,
        sigma: pt.sigma,
        status: Status::Ok,
        success: false,
        rel_dist_f: None,
        rel_dist_2inf: None,
        rel_u: None,
        rel_v: None,
        rel_w: None,
        rel_tensor_f: None,
        rel_tensor_inf: None,
        final_loss: None,
    }
}

fn sym_trial(cfg: &ExperimentConfig, pt: &GridPoint, method: Method, row: &mut Row) -> nctc::Result<Vec<f64>> {
    let truth = gen_factors(cfg.d, pt.r, row.seed)?;
    if let Some(snr) = pt.snr {
        row.sigma = sigma_for_snr(&truth, snr)?;
    }
    let obs = sample_observations(&truth, pt.p, row.sigma, row.seed)?;
    let u0 = match method {
        Method::Proposed => best_of_restarts(&obs, pt.r, pt.l, cfg.eps_th, cfg.t_init, row.seed)?,
        Method::Tpm => tpm_baseline(&obs, pt.r, DEFAULT_TPM_ITERS, DEFAULT_TPM_RESTARTS, row.seed)?,
    };
    let eta = relative_step(cfg.eta.unwrap_or(DEFAULT_ETA), &u0);
    let tr = gd_run_with(&obs, &u0, eta, cfg.t0, Some(&truth), TraceDetail::SupAtEnd)?;
    let m = evaluate(&tr.final_factors, &truth, cfg.success_threshold)?;
    row.success = m.success;
    row.rel_dist_f = Some(m.rel_dist_f);
    row.rel_dist_2inf = Some(m.rel_dist_2inf);
    row.rel_tensor_f = Some(m.rel_tensor_f);
    row.rel_tensor_inf = Some(m.rel_tensor_inf);
    row.final_loss = tr.records.last().map(|r| r.loss);
    Ok(if cfg.kind.keeps_traces() {
        tr.records.iter().filter_map(|r| r.truth.map(|t| t.rel_tensor_f)).collect()
    } else {
        Vec::new()
    })
}

fn asym_trial(cfg: &ExperimentConfig, pt: &GridPoint, row: &mut Row) -> nctc::Result<Vec<f64>> {
    let [d1, d2, d3] = cfg.dims;
    let truth = gen_asym_factors(d1, d2, d3, pt.r, row.seed)?;
    if let Some(snr) = pt.snr {
        row.sigma = sigma_for_snr_asym(&truth, snr)?;
    }
    let obs = sample_asym_observations(&truth, pt.p, row.sigma, row.seed)?;
    let init = init_asym_best_of(&obs, pt.r, pt.l, cfg.eps_th, cfg.t_init, row.seed)?;
    let eta = relative_step_asym(cfg.eta.unwrap_or(DEFAULT_ETA_ASYM), &init.factors);
    let tr = gd_asym(&obs, &init.factors, &init.reg_params(), eta, cfg.t0, Some(&truth), TraceDetail::SupAtEnd)?;
    let m = evaluate_asym(&tr.final_factors, &truth, cfg.success_threshold)?;
    row.success = m.success;
    row.rel_u = Some(m.rel_u);
    row.rel_v = Some(m.rel_v);
    row.rel_w = Some(m.rel_w);
    row.rel_tensor_f = Some(m.rel_tensor_f);
    row.rel_tensor_inf = Some(m.rel_tensor_inf);
    row.final_loss = tr.records.last().map(|r| r.loss);
    Ok(tr.records.iter().filter_map(|r| r.truth.map(|t| t.rel_tensor_f)).collect())
}

/// Runs one trial; failures are recorded in the row, never propagated.
pub fn run_trial(cfg: &ExperimentConfig, grid_index: usize, trial: usize, method: Method) -> TrialOutcome {
    let pt = cfg.grid()[grid_index];
    let seed = trial_seed(cfg.base_seed, grid_index, trial);
    let mut row = blank_row(grid_index, trial, seed, method, &pt);
    let start = Instant::now();
    let result = if cfg.kind.is_asymmetric() {
        asym_trial(cfg, &pt, &mut row)
    } else {
        sym_trial(cfg, &pt, method, &mut row)
    };
    let trace = match result {
        Ok(trace) => trace,
        Err(e) => {
            log::debug!("grid {grid_index} trial {trial} ({method:?}): {e}");
            row.status = status_of(&e);
            row.success = false;
            Vec::new()
        }
    };
    TrialOutcome { row, trace, seconds: start.elapsed().as_secs_f64() }
}

/// All trials of `cfg` for each method, on `threads` workers (rayon's
/// default when `None`).
pub fn run_experiment(cfg: &ExperimentConfig, methods: &[Method], threads: Option<usize>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if cfg.kind.is_asymmetric() && methods != [Method::Proposed] {
        return Err(crate::CliError::Config("the asymmetric experiment supports only the proposed method".into()));
    }
    let points = cfg.grid().len();
    let jobs: Vec<(usize, usize, Method)> = (0..points)
        .flat_map(|g| (0..cfg.trials).flat_map(move |t| methods.iter().map(move |&m| (g, t, m))))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    log::info!("{:?}: {} grid points × {} trials × {} methods", cfg.kind, points, cfg.trials, methods.len());
    let outcomes = pool.install(|| jobs.par_iter().map(|&(g, t, m)| run_trial(cfg, g, t, m)).collect());
    Ok(ExperimentOutput { config: cfg.clone(), methods: methods.to_vec(), outcomes })
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Per (grid point, method) summaries. Error statistics cover the trials
/// that produced an estimate.
pub fn aggregate(rows: &[Row]) -> Vec<Aggregate> {
    let mut keys: Vec<(usize, Method)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.grid_index, r.method)) {
            keys.push((r.grid_index, r.method));
        }
    }
    keys.into_iter()
        .map(|(g, m)| {
            let group: Vec<&Row> = rows.iter().filter(|r| r.grid_index == g && r.method == m).collect();
            let count = |s: Status| group.iter().filter(|r| r.status == s).count();
            let tf: Vec<f64> = group.iter().filter_map(|r| r.rel_tensor_f).collect();
            let df: Vec<f64> = group.iter().filter_map(|r| r.rel_dist_f).collect();
            let sq: Vec<f64> = tf.iter().map(|x| x * x).collect();
            let successes = group.iter().filter(|r| r.success).count();
            Aggregate {
                grid_index: g,
                method: m,
                p: group[0].p,
                r: group[0].r,
                snr: group[0].snr,
                trials: group.len(),
                successes,
                success_rate: successes as f64 / group.len() as f64,
                init_failures: count(Status::InitFailure),
                divergences: count(Status::Divergence),
                mean_rel_tensor_f: mean(&tf),
                median_rel_tensor_f: median(&tf),
                mean_sq_rel_tensor_f: mean(&sq),
                mean_rel_dist_f: mean(&df),
                median_rel_dist_f: median(&df),
            }
        })
        .collect()
}

/// Least-squares slope of `ln(mean squared relative error)` against
/// `ln(SNR)` over the proposed-method aggregates that carry both.
pub fn snr_slope(aggs: &[Aggregate]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = aggs
        .iter()
        .filter(|a| a.method == Method::Proposed)
        .filter_map(|a| Some((a.snr?.ln(), a.mean_sq_rel_tensor_f?.ln())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn write_csv<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for item in items {
        w.serialize(item).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

impl ExperimentOutput {
    pub fn rows(&self) -> Vec<Row> {
        self.outcomes.iter().map(|o| o.row.clone()).collect()
    }

    pub fn aggregates(&self) -> Vec<Aggregate> {
        aggregate(&self.rows())
    }

    /// Writes `config.json`, `rows.csv`, `aggregate.csv`, `timing.csv` and,
    /// for convergence kinds, `traces.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join("config.json");
        let text = serde_json::to_string_pretty(&self.config).map_err(json_err(&path))?;
        fs::write(&path, text + "\n").map_err(io_err(&path))?;
        write_csv(&dir.join("rows.csv"), self.outcomes.iter().map(|o| &o.row))?;
        write_csv(&dir.join("aggregate.csv"), self.aggregates())?;
        write_csv(
            &dir.join("timing.csv"),
            self.outcomes.iter().map(|o| TimingRow {
                grid_index: o.row.grid_index,
                trial: o.row.trial,
                method: o.row.method,
                seconds: o.seconds,
            }),
        )?;
        if self.config.kind.keeps_traces() {
            write_csv(
                &dir.join("traces.csv"),
                self.outcomes.iter().flat_map(|o| {
                    o.trace.iter().enumerate().map(|(t, &e)| TraceRow {
                        grid_index: o.row.grid_index,
                        trial: o.row.trial,
                        method: o.row.method,
                        t,
                        rel_tensor_f: e,
                    })
                }),
            )?;
        }
        Ok(())
    }
}

/// Reads a `rows.csv` back.
pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err(path))
}
