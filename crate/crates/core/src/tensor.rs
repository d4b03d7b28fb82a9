//! Dense order-3 tensors and the contractions the rest of the crate builds on.
//!
//! Storage is row-major: entry `(i, j, k)` of a `d1 × d2 × d3` tensor lives at
//! `(i * d2 + j) * d3 + k`. The mode-1 unfolding uses the matching column
//! index `j * d3 + k`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factor::FactorMatrix;

/// Tensor mode, 1-based as in the usual `T ×₁ u` notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    values: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Tensor3 {
            dims,
            values: vec![0.0; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn from_vec(dims: [usize; 3], values: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid("tensor dimensions must be positive"));
        }
        if values.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::dims(format!(
                "{} values for a {}×{}×{} tensor",
                values.len(),
                dims[0],
                dims[1],
                dims[2]
            )));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("tensor"));
        }
        Ok(Tensor3 { dims, values })
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(dims);
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    let idx = t.offset(i, j, k);
                    t.values[idx] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.offset(i, j, k)]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.offset(i, j, k);
        self.values[idx] = v;
    }

    fn check_same_dims(&self, other: &Tensor3) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::dims(format!(
                "tensor dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    pub fn inner(&self, other: &Tensor3) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn frob_norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn inf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Tensor3> {
        self.check_same_dims(other)?;
        Ok(Tensor3 {
            dims: self.dims,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scaled(&self, c: f64) -> Tensor3 {
        Tensor3 {
            dims: self.dims,
            values: self.values.iter().map(|x| c * x).collect(),
        }
    }

    /// `T ×_axis u`: contracts one mode, leaving the other two in their
    /// original order (e.g. axis 3 gives `[i, j] = Σ_k T[i,j,k] u_k`).
    pub fn mode_product(&self, axis: Mode, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        let [d1, d2, d3] = self.dims;
        let a = axis.index();
        if u.len() != self.dims[a] {
            return Err(Error::dims(format!(
                "vector of length {} against mode of size {}",
                u.len(),
                self.dims[a]
            )));
        }
        let out = match axis {
            Mode::One => {
                let mut m = DMatrix::zeros(d2, d3);
                for i in 0..d1 {
                    let ui = u[i];
                    for j in 0..d2 {
                        for k in 0..d3 {
                            m[(j, k)] += self.get(i, j, k) * ui;
                        }
                    }
                }
                m
            }
            Mode::Two => {
                let mut m = DMatrix::zeros(d1, d3);
                for i in 0..d1 {
                    for j in 0..d2 {
                        let uj = u[j];
                        for k in 0..d3 {
                            m[(i, k)] += self.get(i, j, k) * uj;
                        }
                    }
                }
                m
            }
            Mode::Three => DMatrix::from_fn(d1, d2, |i, j| {
                let base = self.offset(i, j, 0);
                self.values[base..base + d3]
                    .iter()
                    .zip(u.iter())
                    .map(|(t, x)| t * x)
                    .sum()
            }),
        };
        Ok(out)
    }

    /// `T ×_a u ×_b v`: contracts mode `a` with `u` and mode `b` with `v`,
    /// returning a vector over the remaining mode.
    pub fn mode_product2(
        &self,
        axes: (Mode, Mode),
        u: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let (a, b) = (axes.0.index(), axes.1.index());
        if a == b {
            return Err(Error::invalid("mode_product2 needs two distinct modes"));
        }
        if u.len() != self.dims[a] || v.len() != self.dims[b] {
            return Err(Error::dims(format!(
                "vectors of length ({}, {}) against modes of size ({}, {})",
                u.len(),
                v.len(),
                self.dims[a],
                self.dims[b]
            )));
        }
        let free = 3 - a - b;
        let mut out = DVector::zeros(self.dims[free]);
        let [d1, d2, d3] = self.dims;
        for i in 0..d1 {
            for j in 0..d2 {
                for k in 0..d3 {
                    let idx = [i, j, k];
                    out[idx[free]] += self.get(i, j, k) * u[idx[a]] * v[idx[b]];
                }
            }
        }
        Ok(out)
    }

    /// Column `i` is `T ×₁ u_i ×₂ v_i`.
    pub fn seq_product(&self, u: &FactorMatrix, v: &FactorMatrix) -> Result<DMatrix<f64>> {
        if u.r() != v.r() {
            return Err(Error::dims("seq_product factors differ in rank"));
        }
        let cols = (0..u.r())
            .map(|i| self.mode_product2((Mode::One, Mode::Two), &u.column(i), &v.column(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_columns(&cols))
    }

    /// Mode-1 matricization: `[i, j*d3 + k] = T[i, j, k]`.
    pub fn unfold1(&self) -> DMatrix<f64> {
        let [d1, d2, d3] = self.dims;
        DMatrix::from_fn(d1, d2 * d3, |i, c| self.values[i * d2 * d3 + c])
    }

    pub fn fold1(m: &DMatrix<f64>, dims: [usize; 3]) -> Result<Tensor3> {
        if m.nrows() != dims[0] || m.ncols() != dims[1] * dims[2] {
            return Err(Error::dims("unfolding shape does not match dims"));
        }
        let cols = dims[1] * dims[2];
        Tensor3::from_vec(dims, (0..dims[0] * cols).map(|x| m[(x / cols, x % cols)]).collect())
    }
}

pub fn outer3(u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> Tensor3 {
    Tensor3::from_fn([u.len(), v.len(), w.len()], |i, j, k| u[i] * v[j] * w[k])
}

/// A cubic tensor invariant under every permutation of its three indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor3(Tensor3);

impl SymTensor3 {
    /// Builds the tensor from its values on canonical triples `i ≤ j ≤ k`;
    /// each value is written to every position of its orbit.
    pub fn from_canonical(d: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros([d, d, d]);
        for i in 0..d {
            for j in i..d {
                for k in j..d {
                    let v = f(i, j, k);
                    for (a, b, c) in orbit(i, j, k) {
                        t.set(a, b, c, v);
                    }
                }
            }
        }
        SymTensor3(t)
    }

    pub fn d(&self) -> usize {
        self.0.dims[0]
    }

    pub fn tensor(&self) -> &Tensor3 {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor3 {
        self.0
    }
}

/// `Σ_i u_i ⊗ u_i ⊗ u_i` over the columns of `u`.
pub fn cp_compose(u: &FactorMatrix) -> SymTensor3 {
    let m = u.matrix();
    let r = u.r();
    let mut pair = vec![0.0; r];
    let d = u.d();
    let mut t = Tensor3::zeros([d, d, d]);
    for i in 0..d {
        for j in i..d {
            for (s, p) in pair.iter_mut().enumerate() {
                *p = m[(i, s)] * m[(j, s)];
            }
            for k in j..d {
                let v: f64 = pair.iter().enumerate().map(|(s, p)| p * m[(k, s)]).sum();
                for (a, b, c) in orbit(i, j, k) {
                    t.set(a, b, c, v);
                }
            }
        }
    }
    SymTensor3(t)
}

/// Distinct index permutations of a canonical triple `i ≤ j ≤ k`.
pub fn orbit(i: usize, j: usize, k: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    debug_assert!(i <= j && j <= k);
    let perms = [
        (i, j, k),
        (i, k, j),
        (j, i, k),
        (j, k, i),
        (k, i, j),
        (k, j, i),
    ];
    let n = orbit_size(i, j, k);
    let mut out = [(0, 0, 0); 6];
    let mut len = 0;
    for p in perms {
        if !out[..len].contains(&p) {
            out[len] = p;
            len += 1;
        }
    }
    debug_assert_eq!(len, n);
    out.into_iter().take(len)
}

/// Number of distinct positions in the orbit of a canonical triple.
#[inline]
pub fn orbit_size(i: usize, j: usize, k: usize) -> usize {
    match (i == j, j == k) {
        (true, true) => 1,
        (false, false) => 6,
        _ => 3,
    }
}

/// `max |[Σ_s a_s⊗³ − Σ_s b_s⊗³]_{ijk}|`, scanning canonical triples only.
/// With `b = None` this is `‖cp_compose(a)‖∞`.
pub(crate) fn cp_sym_inf_norm(a: &FactorMatrix, b: Option<&FactorMatrix>) -> f64 {
    let d = a.d();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut weights = vec![1.0; a.r()];
    if let Some(b) = b {
        weights.extend(std::iter::repeat_n(-1.0, b.r()));
    }
    for i in 0..d {
        let mut row: Vec<f64> = a.matrix().row(i).iter().copied().collect();
        if let Some(b) = b {
            row.extend(b.matrix().row(i).iter().copied());
        }
        rows.push(row);
    }
    let mut pair = vec![0.0; weights.len()];
    let mut best = 0.0f64;
    for i in 0..d {
        for j in i..d {
            for (s, p) in pair.iter_mut().enumerate() {
                *p = weights[s] * rows[i][s] * rows[j][s];
            }
            for row_k in &rows[j..] {
                let v: f64 = pair.iter().zip(row_k).map(|(p, x)| p * x).sum();
                best = best.max(v.abs());
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::rng::{gaussian_matrix, gaussian_vector};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn rand_tensor(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> Tensor3 {
        let n = dims[0] * dims[1] * dims[2];
        Tensor3::from_vec(dims, gaussian_vector(rng, n).iter().copied().collect()).unwrap()
    }

    #[test]
    fn outer3_basis_and_hand_cases() {
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let t = outer3(&e1, &e1, &e1);
        assert_eq!(t.get(0, 0, 0), 1.0);
        assert_eq!(t.values().iter().filter(|&&x| x != 0.0).count(), 1);

        let t = outer3(
            &DVector::from_vec(vec![1.0, 2.0]),
            &DVector::from_vec(vec![1.0, 0.0]),
            &DVector::from_vec(vec![0.0, 1.0]),
        );
        assert_eq!(t.get(0, 0, 1), 1.0);
        assert_eq!(t.get(1, 0, 1), 2.0);
        assert_eq!(t.values().iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn cp_compose_linear_in_duplicate_columns() {
        let u = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let single = cp_compose(&FactorMatrix::from_columns(std::slice::from_ref(&u)).unwrap());
        let double = cp_compose(&FactorMatrix::from_columns(&[u.clone(), u.clone()]).unwrap());
        let twice = single.tensor().scaled(2.0);
        for (a, b) in double.tensor().values().iter().zip(twice.values()) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
        let unit = cp_compose(&FactorMatrix::from_columns(&[DVector::from_vec(vec![1.0, 0.0])]).unwrap());
        assert_eq!(unit.tensor().get(0, 0, 0), 1.0);
        assert_eq!(unit.tensor().frob_norm(), 1.0);
    }

    #[test]
    fn mode_product_rank_one_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b, c) = (
            gaussian_vector(&mut rng, 3),
            gaussian_vector(&mut rng, 4),
            gaussian_vector(&mut rng, 5),
        );
        let u = gaussian_vector(&mut rng, 5);
        let t = outer3(&a, &b, &c);
        let m = t.mode_product(Mode::Three, &u).unwrap();
        let expect = &a * b.transpose() * c.dot(&u);
        assert!((m - expect).norm() <= 1e-13);
        let z = t.mode_product(Mode::Three, &DVector::zeros(5)).unwrap();
        assert_eq!(z.norm(), 0.0);
        assert!(t.mode_product(Mode::One, &u).is_err());
    }

    #[test]
    fn mode_product2_rank_one_and_fibers() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b, c) = (
            gaussian_vector(&mut rng, 4),
            gaussian_vector(&mut rng, 4),
            gaussian_vector(&mut rng, 4),
        );
        let (u, v) = (gaussian_vector(&mut rng, 4), gaussian_vector(&mut rng, 4));
        let t = outer3(&a, &b, &c);
        let got = t.mode_product2((Mode::One, Mode::Two), &u, &v).unwrap();
        let expect = &c * (a.dot(&u) * b.dot(&v));
        assert!((got - expect).norm() <= 1e-13);

        let t = rand_tensor(&mut rng, [4, 4, 4]);
        let mut ei = DVector::zeros(4);
        ei[1] = 1.0;
        let mut ej = DVector::zeros(4);
        ej[3] = 1.0;
        let fiber = t.mode_product2((Mode::One, Mode::Two), &ei, &ej).unwrap();
        for k in 0..4 {
            assert_eq!(fiber[k], t.get(1, 3, k));
        }
    }

    #[test]
    fn seq_product_reduces_to_mode_product2() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = rand_tensor(&mut rng, [3, 4, 2]);
        let u = FactorMatrix::new(gaussian_matrix(&mut rng, 3, 1)).unwrap();
        let v = FactorMatrix::new(gaussian_matrix(&mut rng, 4, 1)).unwrap();
        let s = t.seq_product(&u, &v).unwrap();
        let m = t
            .mode_product2((Mode::One, Mode::Two), &u.column(0), &v.column(0))
            .unwrap();
        assert_eq!(s.column(0).into_owned(), m);

        let z = Tensor3::zeros([3, 4, 2]);
        assert_eq!(z.seq_product(&u, &v).unwrap().norm(), 0.0);
    }

    #[test]
    fn unfold_round_trip_and_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = rand_tensor(&mut rng, [2, 3, 4]);
        assert_eq!(Tensor3::fold1(&t.unfold1(), t.dims()).unwrap(), t);

        let (u, v, w) = (
            gaussian_vector(&mut rng, 2),
            gaussian_vector(&mut rng, 3),
            gaussian_vector(&mut rng, 4),
        );
        let kron = DVector::from_fn(12, |c, _| v[c / 4] * w[c % 4]);
        let a = outer3(&u, &v, &w).unfold1();
        assert!((a - &u * kron.transpose()).norm() <= 1e-13);
    }

    #[test]
    fn norms_and_inner() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = rand_tensor(&mut rng, [3, 3, 2]);
        assert!(rel(t.inner(&t).unwrap(), t.frob_norm().powi(2)) <= 1e-14);
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(outer3(&e1, &e1, &e1).inf_norm(), 1.0);
        assert!(t.inner(&Tensor3::zeros([3, 3, 3])).is_err());
    }

    #[test]
    fn orbits() {
        assert_eq!(orbit(1, 1, 1).count(), 1);
        assert_eq!(orbit(0, 0, 2).collect::<Vec<_>>(), vec![(0, 0, 2), (0, 2, 0), (2, 0, 0)]);
        assert_eq!(orbit(0, 2, 2).count(), 3);
        assert_eq!(orbit(0, 1, 2).count(), 6);
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(Tensor3::from_vec([2, 2, 2], vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(Tensor3::from_vec([2, 2, 2], v).is_err());
    }
}
