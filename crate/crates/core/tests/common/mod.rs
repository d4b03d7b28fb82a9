//! Brute-force reference implementations shared by the integration tests.
//! Everything here works on plain nested loops over dense arrays.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nctc::asym::{AsymFactors, AsymObservationSet};
use nctc::{FactorMatrix, ObservationSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn rand_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Dense `d1 × d2 × d3` array indexed `t[i][j][k]`.
pub type Dense = Vec<Vec<Vec<f64>>>;

pub fn dense_zeros(d: [usize; 3]) -> Dense {
    vec![vec![vec![0.0; d[2]]; d[1]]; d[0]]
}

pub fn dense_cp(u: &DMatrix<f64>, v: &DMatrix<f64>, w: &DMatrix<f64>) -> Dense {
    let mut t = dense_zeros([u.nrows(), v.nrows(), w.nrows()]);
    for s in 0..u.ncols() {
        for i in 0..u.nrows() {
            for j in 0..v.nrows() {
                for k in 0..w.nrows() {
                    t[i][j][k] += u[(i, s)] * v[(j, s)] * w[(k, s)];
                }
            }
        }
    }
    t
}

pub fn dense_sym_cp(u: &FactorMatrix) -> Dense {
    dense_cp(u.matrix(), u.matrix(), u.matrix())
}

pub fn frob(t: &Dense) -> f64 {
    t.iter().flatten().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn frob_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .flatten()
        .flatten()
        .zip(b.iter().flatten().flatten())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn max_abs_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .flatten()
        .flatten()
        .zip(b.iter().flatten().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Dense observed tensor and 0/1 mask of the symmetrized set, each position
/// set by hand from every permutation of each canonical triple.
pub fn dense_sym_obs(obs: &ObservationSet) -> (Dense, Dense) {
    let d = obs.d();
    let mut t = dense_zeros([d; 3]);
    let mut mask = dense_zeros([d; 3]);
    for e in obs.entries() {
        let (i, j, k) = (e.i, e.j, e.k);
        for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
            t[a][b][c] = e.value;
            mask[a][b][c] = 1.0;
        }
    }
    (t, mask)
}

pub fn dense_asym_obs(obs: &AsymObservationSet) -> (Dense, Dense) {
    let mut t = dense_zeros(obs.dims());
    let mut mask = dense_zeros(obs.dims());
    for e in obs.entries() {
        t[e.i][e.j][e.k] = e.value;
        mask[e.i][e.j][e.k] = 1.0;
    }
    (t, mask)
}

/// `(1/6p) Σ mask·(model − t)²` over all `d³` positions.
pub fn dense_masked_loss(model: &Dense, t: &Dense, mask: &Dense, p: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..t.len() {
        for j in 0..t[0].len() {
            for k in 0..t[0][0].len() {
                let r = model[i][j][k] - t[i][j][k];
                s += mask[i][j][k] * r * r;
            }
        }
    }
    s / (6.0 * p)
}

/// `P_offdiag(A Aᵀ)` with `A` the dense mode-1 unfolding of `t / p`.
pub fn dense_gram(t: &Dense, p: f64) -> DMatrix<f64> {
    let (d1, d2, d3) = (t.len(), t[0].len(), t[0][0].len());
    let a = DMatrix::from_fn(d1, d2 * d3, |i, c| t[i][c / d3][c % d3] / p);
    let mut g = &a * a.transpose();
    g.fill_diagonal(0.0);
    g
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

/// Cyclic Jacobi eigensolver for a symmetric matrix; eigenvalues descending.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * a.norm() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)] == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].total_cmp(&a[(x, x)]));
    let vals = order.iter().map(|&i| a[(i, i)]).collect();
    let vecs = DMatrix::from_columns(&order.iter().map(|&i| v.column(i).into_owned()).collect::<Vec<_>>());
    (vals, vecs)
}

/// Largest principal-angle sine between the column spans of two orthonormal bases.
pub fn subspace_sin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (b - a * (a.transpose() * b)).singular_values().max()
}

/// Minimum over column permutations and per-column signs of `‖F Π S − F*‖_F`,
/// by enumeration.
pub fn brute_signed_error(f: &DMatrix<f64>, fstar: &DMatrix<f64>) -> f64 {
    let r = f.ncols();
    let mut best = f64::INFINITY;
    for perm in permutations(r) {
        for mask in 0..(1u32 << r) {
            let mut s = 0.0;
            for (i, &j) in perm.iter().enumerate() {
                let sign = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                s += (f.column(j) * sign - fstar.column(i)).norm_squared();
            }
            best = best.min(s);
        }
    }
    best.sqrt()
}

/// Central finite-difference gradient of `f` with respect to every entry of `x`.
pub fn fd_gradient(x: &DMatrix<f64>, h: f64, mut f: impl FnMut(&DMatrix<f64>) -> f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    let mut y = x.clone();
    for idx in 0..x.len() {
        let x0 = x[idx];
        y[idx] = x0 + h;
        let fp = f(&y);
        y[idx] = x0 - h;
        let fm = f(&y);
        y[idx] = x0;
        g[idx] = (fp - fm) / (2.0 * h);
    }
    g
}

pub fn asym_from(u: DMatrix<f64>, v: DMatrix<f64>, w: DMatrix<f64>) -> AsymFactors {
    AsymFactors::new(u, v, w).unwrap()
}
