//! Shared fixtures for the kernel benchmarks.

use nctc::asym::{gen_asym_factors, sample_asym_observations, AsymFactors, AsymObservationSet};
use nctc::{gen_factors, sample_observations, FactorMatrix, ObservationSet};

/// Ground truth, its observations, and an unrelated iterate of the same shape.
pub fn symmetric(d: usize, r: usize, p: f64, seed: u64) -> (FactorMatrix, ObservationSet, FactorMatrix) {
    let truth = gen_factors(d, r, seed).expect("valid shape");
    let obs = sample_observations(&truth, p, 0.0, seed).expect("valid rate");
    let u = gen_factors(d, r, seed + 1).expect("valid shape");
    (truth, obs, u)
}

pub fn asymmetric(dims: [usize; 3], r: usize, p: f64, seed: u64) -> (AsymFactors, AsymObservationSet, AsymFactors) {
    let [d1, d2, d3] = dims;
    let truth = gen_asym_factors(d1, d2, d3, r, seed).expect("valid shape");
    let obs = sample_asym_observations(&truth, p, 0.0, seed).expect("valid rate");
    let f = gen_asym_factors(d1, d2, d3, r, seed + 1).expect("valid shape");
    (truth, obs, f)
}
