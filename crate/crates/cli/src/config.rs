//! Experiment configuration, read from JSON with snake_case field names.
//!
//! Every field except `kind` has a default, so `{"kind": "snr"}` is a
//! complete configuration. Which fields matter depends on the kind:
//!
//! | kind               | grid        | fixed                    |
//! |--------------------|-------------|--------------------------|
//! | `convergence`      | none        | `d`, `r`, `p`, `sigma`/`snr` |
//! | `phase`            | `p_grid`    | `d`, `r`, `sigma`        |
//! | `rank`             | `r_grid`    | `d`, `sigma`             |
//! | `snr`              | `snr_grid`  | `d`, `r`, `p`            |
//! | `asym-convergence` | none        | `dims`, `r`, `p`, `sigma`/`snr` |
//!
//! In the rank experiment the rate follows the rank as
//! `p = r·d^{-3/2}·(ln d)²` and `l` defaults to `r²`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, json_err, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Convergence,
    Phase,
    Rank,
    Snr,
    #[serde(alias = "asym_convergence")]
    AsymConvergence,
}

impl ExperimentKind {
    pub fn is_asymmetric(self) -> bool {
        self == ExperimentKind::AsymConvergence
    }

    /// Convergence experiments also keep per-iteration error traces.
    pub fn keeps_traces(self) -> bool {
        matches!(self, ExperimentKind::Convergence | ExperimentKind::AsymConvergence)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "defaults::d")]
    pub d: usize,
    /// Mode sizes of the asymmetric experiment.
    #[serde(default = "defaults::dims")]
    pub dims: [usize; 3],
    #[serde(default = "defaults::r")]
    pub r: usize,
    /// Sampling rate; 0.1 for symmetric kinds and 0.05 for the asymmetric one
    /// when absent.
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub sigma: f64,
    /// Fixes the noise through the signal-to-noise ratio instead of `sigma`.
    #[serde(default)]
    pub snr: Option<f64>,
    #[serde(default = "defaults::p_grid")]
    pub p_grid: Vec<f64>,
    #[serde(default = "defaults::r_grid")]
    pub r_grid: Vec<usize>,
    #[serde(default = "defaults::snr_grid")]
    pub snr_grid: Vec<f64>,
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Retrieval trials per initialization.
    #[serde(default)]
    pub l: Option<usize>,
    #[serde(default = "defaults::eps_th")]
    pub eps_th: f64,
    #[serde(default = "defaults::t_init")]
    pub t_init: usize,
    /// Stepsize in units of the initial factor scale; see
    /// [`nctc::relative_step`] and [`nctc::asym::relative_step_asym`].
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "defaults::t0")]
    pub t0: usize,
    #[serde(default = "defaults::success_threshold")]
    pub success_threshold: f64,
}

mod defaults {
    pub fn d() -> usize {
        100
    }
    pub fn dims() -> [usize; 3] {
        [100, 150, 200]
    }
    pub fn r() -> usize {
        4
    }
    pub fn p_grid() -> Vec<f64> {
        (1..=10).map(|k| k as f64 / 100.0).collect()
    }
    pub fn r_grid() -> Vec<usize> {
        (1..=10).collect()
    }
    pub fn snr_grid() -> Vec<f64> {
        vec![1.0, 3.0, 10.0, 30.0, 100.0]
    }
    pub fn trials() -> usize {
        100
    }
    pub fn eps_th() -> f64 {
        0.4
    }
    pub fn t_init() -> usize {
        5
    }
    pub fn t0() -> usize {
        100
    }
    pub fn success_threshold() -> f64 {
        0.01
    }
}

/// One point of the experiment grid, with everything kind-specific resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub p: f64,
    pub r: usize,
    pub l: usize,
    /// Fixed noise level, used when `snr` is `None`.
    pub sigma: f64,
    pub snr: Option<f64>,
}

/// Sampling rate of the rank experiment.
pub fn rank_rate(r: usize, d: usize) -> f64 {
    let d = d as f64;
    r as f64 * d.powf(-1.5) * d.ln().powi(2)
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        serde_json::from_value(serde_json::json!({ "kind": kind })).expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: Self = serde_json::from_str(&text).map_err(json_err(path))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn p_or_default(&self) -> f64 {
        self.p.unwrap_or(if self.kind.is_asymmetric() { 0.05 } else { 0.1 })
    }

    fn default_l(&self, r: usize) -> usize {
        self.l.unwrap_or(if self.kind == ExperimentKind::Rank { r * r } else { 16 })
    }

    pub fn grid(&self) -> Vec<GridPoint> {
        let point = |p: f64, r: usize, snr: Option<f64>| GridPoint { p, r, l: self.default_l(r), sigma: self.sigma, snr };
        match self.kind {
            ExperimentKind::Convergence | ExperimentKind::AsymConvergence => {
                vec![point(self.p_or_default(), self.r, self.snr)]
            }
            ExperimentKind::Phase => self.p_grid.iter().map(|&p| point(p, self.r, self.snr)).collect(),
            ExperimentKind::Rank => self.r_grid.iter().map(|&r| point(rank_rate(r, self.d), r, self.snr)).collect(),
            ExperimentKind::Snr => self.snr_grid.iter().map(|&s| point(self.p_or_default(), self.r, Some(s))).collect(),
        }
    }

    /// Smallest mode size, which bounds the rank.
    fn min_dim(&self) -> usize {
        if self.kind.is_asymmetric() {
            self.dims.iter().copied().min().unwrap_or(0)
        } else {
            self.d
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be ≥ 1".into());
        }
        if self.min_dim() < 2 {
            return bad("every mode size must be ≥ 2".into());
        }
        match self.kind {
            ExperimentKind::Phase if self.p_grid.is_empty() => return bad("p_grid is empty".into()),
            ExperimentKind::Rank if self.r_grid.is_empty() => return bad("r_grid is empty".into()),
            ExperimentKind::Snr if self.snr_grid.is_empty() => return bad("snr_grid is empty".into()),
            _ => {}
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma {} must be finite and ≥ 0", self.sigma));
        }
        if self.snr.is_some() && self.sigma > 0.0 {
            return bad("set either sigma or snr, not both".into());
        }
        if !(self.eps_th > 0.0 && self.eps_th < 1.0) {
            return bad(format!("eps_th {} must lie in (0, 1)", self.eps_th));
        }
        if self.t_init == 0 {
            return bad("t_init must be ≥ 1".into());
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return bad(format!("eta {eta} must be finite and > 0"));
            }
        }
        if self.success_threshold.is_nan() || self.success_threshold <= 0.0 {
            return bad("success_threshold must be > 0".into());
        }
        for pt in self.grid() {
            if !(pt.p > 0.0 && pt.p <= 1.0) {
                return bad(format!("sampling rate {} (rank {}) is outside (0, 1]", pt.p, pt.r));
            }
            if pt.r == 0 || pt.r >= self.min_dim() {
                return bad(format!("rank {} must lie in 1..{}", pt.r, self.min_dim()));
            }
            if pt.l < pt.r {
                return bad(format!("l = {} is below the rank {}", pt.l, pt.r));
            }
            if let Some(s) = pt.snr {
                if !(s > 0.0 && s.is_finite()) {
                    return bad(format!("SNR {s} must be finite and > 0"));
                }
            }
        }
        Ok(())
    }
}

/// Seed of trial `trial` at grid point `grid_index`.
pub fn trial_seed(base: u64, grid_index: usize, trial: usize) -> u64 {
    base.wrapping_add(10007u64.wrapping_mul(grid_index as u64)).wrapping_add(trial as u64)
}
