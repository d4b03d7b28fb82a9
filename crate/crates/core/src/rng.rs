//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! master seed. Distinct purposes (factor generation, sampling mask, noise,
//! retrieval vectors, solver start blocks) use distinct ChaCha stream ids, so
//! adding draws to one purpose never shifts another. Gaussian variates use
//! `rand_distr::StandardNormal` (ziggurat method).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Purpose tag, occupying the high 32 bits of the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Purpose {
    Factors = 1,
    Mask = 2,
    Noise = 3,
    Retrieval = 4,
    Eigen = 5,
    Svd = 6,
    Tpm = 7,
    AsymFactors = 8,
}

/// Generator for `purpose`, sub-stream `index`, under master `seed`.
pub fn stream(seed: u64, purpose: Purpose, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | index as u64);
    rng
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Column-major fill, so column `j` consumes draws `j*rows .. (j+1)*rows`.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}
