//! Nonconvex completion of low-CP-rank order-3 tensors.
//!
//! The pipeline has two stages. A spectral initialization estimates the
//! factor subspace from a de-biased Gram matrix of the observed entries,
//! retrieves individual factors by random projection, and prunes duplicates.
//! Plain gradient descent on the squared loss over the observed entries then
//! refines the estimate. Both the symmetric model `Σ_i u_i⊗u_i⊗u_i` and the
//! asymmetric model `Σ_i u_i⊗v_i⊗w_i` (in [`asym`]) are supported.
//!
//! ```
//! use nctc::{best_of_restarts, gd_run, gen_factors, relative_step, sample_observations, tensor_frob_error};
//!
//! let truth = gen_factors(20, 2, 0).unwrap();
//! let obs = sample_observations(&truth, 0.5, 0.0, 1).unwrap();
//! let u0 = best_of_restarts(&obs, 2, 16, 0.4, 3, 2).unwrap();
//! let trace = gd_run(&obs, &u0, relative_step(0.5, &u0), 100, None).unwrap();
//! assert!(tensor_frob_error(&trace.final_factors, &truth).unwrap() < 1e-6);
//! ```

pub mod assignment;
pub mod asym;
mod error;
mod factor;
mod fileio;
pub mod gd;
pub mod init;
pub mod instances;
pub mod metrics;
pub mod rng;
pub mod spectral;
pub mod tensor;

pub use error::{Error, Result};
pub use factor::FactorMatrix;
pub use gd::{gd_run, gd_run_with, gradient, loss, relative_step, GdTrace, TraceDetail, TraceRecord, TruthMetrics};
pub use init::{best_of_restarts, build_gram, init, prune, retrieve_one_factor, subspace_estimate, tpm_baseline, Candidate};
pub use instances::{
    gen_factors, incoherence_stats, num_canonical_triples, read_factors, read_observations, sample_observations,
    sigma_for_snr, write_factors, write_observations, Entry, IncoherenceStats, ObservationSet,
};
pub use metrics::{
    evaluate, factor_errors, match_permutation, success, tensor_errors, tensor_frob_error, tensor_inf_error,
    FactorErrors, Metrics,
};
pub use tensor::{cp_compose, outer3, Mode, SymTensor3, Tensor3};
