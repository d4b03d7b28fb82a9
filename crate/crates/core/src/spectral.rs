//! Iterative dense eigen/singular solvers.
//!
//! Both solvers run blocked subspace iteration from a seeded Gaussian start
//! block, with a Rayleigh–Ritz projection every sweep. The block is wider than
//! the number of wanted pairs so convergence is governed by the gap to the
//! first pair outside the block rather than to the next wanted one.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::rng::{gaussian_matrix, stream, Purpose};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1000;

/// Extra block columns beyond the wanted pairs.
const OVERSAMPLE: usize = 8;

#[derive(Debug, Clone)]
pub struct EigResult {
    /// Descending.
    pub values: Vec<f64>,
    /// `d × r`, orthonormal columns matching `values`.
    pub basis: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct SingularPair {
    pub sigma1: f64,
    pub sigma2: f64,
    pub left1: DVector<f64>,
    pub right1: DVector<f64>,
}

impl SingularPair {
    pub fn gap(&self) -> f64 {
        (self.sigma1 - self.sigma2).max(0.0)
    }
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Eigen-decomposition of a small symmetric matrix, sorted descending.
fn sorted_eigen(h: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let cols: Vec<_> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (values, DMatrix::from_columns(&cols))
}

/// Top-`r` eigenpairs (largest algebraic eigenvalues) of a symmetric matrix.
pub fn top_r_eigs(
    s: &DMatrix<f64>,
    r: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<EigResult> {
    let d = s.nrows();
    if s.ncols() != d {
        return Err(Error::dims("top_r_eigs needs a square matrix"));
    }
    if r == 0 || r > d {
        return Err(Error::invalid(format!("requested {r} eigenpairs of a {d}×{d} matrix")));
    }
    let scale = s.amax().max(1.0);
    if (s - s.transpose()).amax() > 1e-12 * scale {
        return Err(Error::invalid("top_r_eigs needs a symmetric matrix"));
    }
    let fro = s.norm();
    if fro == 0.0 {
        return Ok(EigResult {
            values: vec![0.0; r],
            basis: DMatrix::identity(d, r),
        });
    }

    // Shifting by ‖S‖_F ≥ |λ|max makes the iteration operator PSD, so it
    // favours the largest algebraic eigenvalues.
    let shift = fro;
    let k = d.min((2 * r).max(r + OVERSAMPLE));
    let mut q = orthonormalize(gaussian_matrix(&mut stream(seed, Purpose::Eigen, 0), d, k));
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let z = s * &q + &q * shift;
        q = orthonormalize(z);
        let sq = s * &q;
        let (theta, v) = sorted_eigen(q.transpose() * &sq);
        q = &q * &v;
        let sq = sq * &v;
        residual = (0..r)
            .map(|i| (sq.column(i) - q.column(i) * theta[i]).norm())
            .fold(0.0, f64::max);
        if residual <= tol * fro {
            return Ok(EigResult {
                values: theta[..r].to_vec(),
                basis: q.columns(0, r).into_owned(),
            });
        }
    }
    Err(Error::NonConvergence {
        solver: "top_r_eigs",
        iters: max_iter,
        residual: residual / fro,
    })
}

/// The two largest singular values of `m` and its leading singular vectors.
///
/// Runs subspace iteration on `mᵀm`; left vectors come from `m·v / σ`. When
/// `σ₂ = 0` any unit vector orthogonal to `right1` is an admissible second
/// right vector and is not reported.
pub fn top_two_singular(
    m: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SingularPair> {
    let (rows, n) = m.shape();
    if rows == 0 || n == 0 {
        return Err(Error::invalid("top_two_singular needs a nonempty matrix"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("top_two_singular input"));
    }
    let fro = m.norm();
    if fro == 0.0 {
        let mut left1 = DVector::zeros(rows);
        left1[0] = 1.0;
        let mut right1 = DVector::zeros(n);
        right1[0] = 1.0;
        return Ok(SingularPair {
            sigma1: 0.0,
            sigma2: 0.0,
            left1,
            right1,
        });
    }

    let wanted = 2.min(n);
    let k = n.min(2 + OVERSAMPLE);
    let mut q = orthonormalize(gaussian_matrix(&mut stream(seed, Purpose::Svd, 0), n, k));
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let z = m.transpose() * (m * &q);
        q = orthonormalize(z);
        let y = m * &q;
        let (_, v) = sorted_eigen(y.transpose() * &y);
        q = &q * &v;
        let y = y * &v;
        let sigmas: Vec<f64> = (0..wanted).map(|i| y.column(i).norm()).collect();
        residual = 0.0;
        for (i, &sig) in sigmas.iter().enumerate() {
            let res = if sig > tol * fro {
                let u = y.column(i) / sig;
                (m.transpose() * u - q.column(i) * sig).norm()
            } else {
                sig
            };
            residual = residual.max(res);
        }
        if residual <= tol * fro {
            let right1 = q.column(0).into_owned();
            let left1 = y.column(0) / sigmas[0];
            return Ok(SingularPair {
                sigma1: sigmas[0],
                sigma2: if wanted > 1 && rows > 1 { sigmas[1] } else { 0.0 },
                left1,
                right1,
            });
        }
    }
    Err(Error::NonConvergence {
        solver: "top_two_singular",
        iters: max_iter,
        residual: residual / fro,
    })
}
