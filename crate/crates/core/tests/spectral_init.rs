mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use nctc::gd::DEFAULT_ETA;
use nctc::init::{DEFAULT_EPS_TH, DEFAULT_L};
use nctc::spectral::{top_r_eigs, top_two_singular, DEFAULT_MAX_ITER, DEFAULT_TOL};
use nctc::{
    best_of_restarts, factor_errors, gd_run, init, relative_step, prune, retrieve_one_factor, sample_observations, subspace_estimate,
    tensor_frob_error, tpm_baseline, Candidate, Error, FactorMatrix,
};
use rand::Rng;

fn unit(rng: &mut impl Rng, d: usize) -> DVector<f64> {
    let v = rand_vector(rng, d);
    v.normalize()
}

#[test]
fn top_eigs_agree_with_jacobi() {
    let mut rng = rng(31);
    for case in 0..20u64 {
        let d = rng.random_range(3..=30);
        let r = rng.random_range(1..=(d - 1).min(5));
        let a = rand_matrix(&mut rng, d, d);
        let s = &a + a.transpose();
        let (vals, vecs) = jacobi_eigen(&s);
        if vals[r - 1] - vals[r] < 1e-3 * vals[0].abs() {
            continue;
        }
        let got = top_r_eigs(&s, r, DEFAULT_TOL, DEFAULT_MAX_ITER, case).unwrap();
        for i in 0..r {
            assert!((got.values[i] - vals[i]).abs() <= 1e-8 * vals[0].abs(), "case {case}");
        }
        let gram = got.basis.transpose() * &got.basis;
        assert!((gram - DMatrix::identity(r, r)).amax() <= 1e-10);
        let oracle = vecs.columns(0, r).into_owned();
        assert!(subspace_sin(&oracle, &got.basis) <= 1e-6, "case {case}");
    }
}

#[test]
fn top_singular_pair_agrees_with_jacobi() {
    let mut rng = rng(32);
    for case in 0..20u64 {
        let (m, n) = (rng.random_range(2..=25), rng.random_range(2..=25));
        let a = rand_matrix(&mut rng, m, n);
        let (vals, vecs) = jacobi_eigen(&(a.transpose() * &a));
        let s1 = vals[0].max(0.0).sqrt();
        let s2 = vals[1].max(0.0).sqrt();
        if s1 - s2 < 1e-3 * s1 {
            continue;
        }
        let got = top_two_singular(&a, DEFAULT_TOL, DEFAULT_MAX_ITER, case).unwrap();
        assert!((got.sigma1 - s1).abs() <= 1e-9 * s1, "case {case}");
        assert!((got.sigma2 - s2).abs() <= 1e-6 * s1, "case {case}");
        assert!(1.0 - got.right1.dot(&vecs.column(0)).abs() <= 1e-8, "case {case}");
        assert!((&a * &got.right1 - &got.left1 * got.sigma1).norm() <= 1e-8 * s1);
        assert!((got.left1.norm() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn non_symmetric_input_rejected() {
    let mut s = DMatrix::<f64>::identity(3, 3);
    s[(0, 1)] = 1.0;
    assert!(top_r_eigs(&s, 1, DEFAULT_TOL, DEFAULT_MAX_ITER, 0).is_err());
}

/// Stable sort by gap, then keep whatever is not too close to anything kept.
fn greedy_oracle(cands: &[Candidate], r: usize, eps: f64) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| cands[b].spec_gap.total_cmp(&cands[a].spec_gap));
    let mut kept: Vec<usize> = Vec::new();
    for t in order {
        if kept.len() == r {
            break;
        }
        if kept.iter().all(|&k| cands[k].nu.dot(&cands[t].nu).abs() <= 1.0 - eps) {
            kept.push(t);
        }
    }
    (kept.len() == r).then_some(kept)
}

#[test]
fn prune_matches_greedy_oracle() {
    let mut rng = rng(33);
    for _ in 0..200 {
        let d = rng.random_range(2..=6);
        let l = rng.random_range(1..=12);
        let r = rng.random_range(1..=4);
        let eps = rng.random_range(0.05..0.95);
        // Few distinct directions and coarse gaps, so near-duplicates and ties occur.
        let pool: Vec<DVector<f64>> = (0..3).map(|_| unit(&mut rng, d)).collect();
        let cands: Vec<Candidate> = (0..l)
            .map(|_| {
                let base = &pool[rng.random_range(0..pool.len())];
                let nu = (base + rand_vector(&mut rng, d) * rng.random_range(0.0..0.5)).normalize();
                Candidate { nu, lambda: 1.0, spec_gap: rng.random_range(0..4) as f64 }
            })
            .collect();
        match (prune(&cands, r, eps), greedy_oracle(&cands, r, eps)) {
            (Ok(got), Some(idx)) => {
                let expect: Vec<Candidate> = idx.iter().map(|&t| cands[t].clone()).collect();
                assert_eq!(got, expect);
            }
            (Err(Error::InitFailure { needed, .. }), None) => assert_eq!(needed, r),
            (got, expect) => panic!("prune {got:?} vs oracle {expect:?}"),
        }
    }
}

#[test]
fn prune_rejects_bad_threshold() {
    let c = Candidate { nu: DVector::from_element(2, 0.5f64.sqrt()), lambda: 1.0, spec_gap: 1.0 };
    assert!(prune(std::slice::from_ref(&c), 1, 0.0).is_err());
    assert!(prune(std::slice::from_ref(&c), 1, 1.0).is_err());
    assert!(prune(&[], 1, 0.4).is_err());
}

/// `Σ_i λ_i e_i⊗³` on coordinate axes, fully observed.
fn axis_instance(d: usize, lambdas: &[f64]) -> (FactorMatrix, nctc::ObservationSet) {
    let mut m = DMatrix::zeros(d, lambdas.len());
    for (i, l) in lambdas.iter().enumerate() {
        m[(i, i)] = l.cbrt();
    }
    let u = FactorMatrix::new(m).unwrap();
    let obs = sample_observations(&u, 1.0, 0.0, 0).unwrap();
    (u, obs)
}

#[test]
fn retrieval_on_orthogonal_tensor_finds_an_axis() {
    let (_, obs) = axis_instance(6, &[8.0, 3.0, 1.0]);
    let basis = DMatrix::identity(6, 3);
    let mut rng = rng(34);
    for t in 0..10 {
        let g = rand_vector(&mut rng, 6);
        let c = retrieve_one_factor(&obs, &basis, &g, t).unwrap();
        let axis = c.nu.iamax();
        assert!(axis < 3);
        assert!((c.nu[axis] - 1.0).abs() <= 1e-8, "sign and norm of {:?}", c.nu);
        assert!((c.lambda - [8.0, 3.0, 1.0][axis]).abs() <= 1e-8);
    }
}

/// Orthogonal factors spread over all coordinates, fully observed.
fn rotated_instance(d: usize, lambdas: &[f64], seed: u64) -> (FactorMatrix, nctc::ObservationSet) {
    let q = rand_matrix(&mut rng(seed), d, lambdas.len()).qr().q();
    let cols: Vec<DVector<f64>> = lambdas.iter().enumerate().map(|(i, l)| q.column(i) * l.cbrt()).collect();
    let u = FactorMatrix::from_columns(&cols).unwrap();
    let obs = sample_observations(&u, 1.0, 0.0, 0).unwrap();
    (u, obs)
}

#[test]
fn subspace_of_fully_observed_tensor() {
    let (truth, obs) = rotated_instance(20, &[5.0, 4.0, 3.0], 35);
    let basis = subspace_estimate(&obs, 3, 1).unwrap();
    let span = truth.matrix().clone().qr().q();
    // Only the removed diagonal of A Aᵀ perturbs the span.
    assert!(subspace_sin(&span, &basis) < 0.2);
}

#[test]
fn full_observation_then_descent_recovers_exactly() {
    for seed in 0..5 {
        let truth = nctc::gen_factors(30, 3, seed).unwrap();
        let obs = sample_observations(&truth, 1.0, 0.0, seed).unwrap();
        let u0 = best_of_restarts(&obs, 3, DEFAULT_L, DEFAULT_EPS_TH, 3, seed).unwrap();
        assert!(tensor_frob_error(&u0, &truth).unwrap() < 0.5);
        let tr = gd_run(&obs, &u0, relative_step(DEFAULT_ETA, &u0), 300, None).unwrap();
        assert!(tensor_frob_error(&tr.final_factors, &truth).unwrap() <= 1e-10, "seed {seed}");
        let e = factor_errors(&tr.final_factors, &truth).unwrap();
        assert!(e.dist_f / truth.frob_norm() <= 1e-10);
    }
}

#[test]
fn orthogonal_tensor_init_is_exact() {
    // For orthogonal factors `T ×₃ θ` is diagonal in the factor basis for
    // any θ, so every retrieval lands exactly on one factor.
    let (truth, obs) = rotated_instance(30, &[2.0, 2.0, 2.0, 2.0], 36);
    let u0 = init(&obs, 4, DEFAULT_L, DEFAULT_EPS_TH, 3).unwrap();
    let e = factor_errors(&u0, &truth).unwrap();
    assert!(e.dist_f / truth.frob_norm() <= 1e-6);
    assert_eq!(u0, init(&obs, 4, DEFAULT_L, DEFAULT_EPS_TH, 3).unwrap());
    assert!(init(&obs, 4, 3, DEFAULT_EPS_TH, 3).is_err());
}

#[test]
fn near_duplicates_collapse() {
    let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    let c = 0.99f64;
    let near = DVector::from_vec(vec![c, (1.0 - c * c).sqrt(), 0.0]);
    let e3 = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let cands = vec![
        Candidate { nu: e1.clone(), lambda: 1.0, spec_gap: 3.0 },
        Candidate { nu: near, lambda: 1.0, spec_gap: 2.0 },
        Candidate { nu: e3.clone(), lambda: 1.0, spec_gap: 1.0 },
    ];
    let kept = prune(&cands, 2, 0.4).unwrap();
    assert_eq!(kept[0].nu, e1);
    assert_eq!(kept[1].nu, e3);
}

#[test]
fn tpm_recovers_orthogonal_tensor() {
    let (truth, obs) = axis_instance(8, &[6.0, 3.0, 2.0]);
    let u = tpm_baseline(&obs, 3, 30, 8, 5).unwrap();
    assert!(tensor_frob_error(&u, &truth).unwrap() <= 1e-8);
}

#[test]
fn init_reports_failure_when_candidates_collapse() {
    // Rank one data but three factors requested: every retrieval finds the
    // same direction, so pruning leaves one survivor.
    let (_, obs) = axis_instance(5, &[2.0]);
    match init(&obs, 3, 8, 0.4, 0) {
        Err(Error::InitFailure { found, needed }) => assert_eq!((found, needed), (1, 3)),
        other => panic!("expected InitFailure, got {other:?}"),
    }
}
