mod common;

use common::*;
use psd_cholesky::estimators::{
    dpca_estimate, eigv_ave_estimate, fpca_estimate, lrc_estimate, sample_covariance, sin_theta, ProjectorNorm,
};
use psd_cholesky::{Error, Matrix, Method};
use rand::Rng;

/// Cholesky program on the leading `k` columns.
fn plain_reduced_cholesky(m: &Matrix, k: usize) -> Matrix {
    let n = m.rows();
    let mut l = vec![vec![0.0; k]; n];
    for j in 0..k {
        let d = m.get(j, j) - (0..j).map(|s| l[j][s] * l[j][s]).sum::<f64>();
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            l[i][j] = (m.get(i, j) - (0..j).map(|s| l[i][s] * l[j][s]).sum::<f64>()) / l[j][j];
        }
    }
    Matrix::from_fn(n, k, |i, j| l[i][j])
}

fn truncation(m: &Matrix, k: usize) -> Matrix {
    let (vals, vecs) = jacobi_top(m, k);
    let z = Matrix::from_fn(m.rows(), k, |i, j| vecs.get(i, j) * vals[j].sqrt());
    z.gram_outer()
}

fn low_rank_sigma(r: &mut impl Rng, n: usize, k: usize) -> (Matrix, Matrix) {
    let v = gram_schmidt(&random_matrix(r, n, k));
    let lam = [9.0, 4.0, 2.0, 1.0];
    let s = Matrix::from_fn(n, k, |i, j| v.get(i, j) * lam[j]).try_matmul_transpose(&v).unwrap().symmetrized();
    (s, v)
}

fn noisy_inputs(r: &mut impl Rng, sigma: &Matrix, m: usize, sd: f64) -> Vec<Matrix> {
    (0..m).map(|_| sigma + &random_symmetric(r, sigma.rows()).scale(sd)).collect()
}

#[test]
fn lrc_matches_hand_pipeline() {
    let mut r = rng(30);
    let (sigma, _) = low_rank_sigma(&mut r, 6, 2);
    let inputs = noisy_inputs(&mut r, &sigma, 2, 0.05);
    let factors: Vec<Matrix> = inputs.iter().map(|b| plain_reduced_cholesky(&truncation(b, 2), 2)).collect();
    let mean = Matrix::from_fn(6, 2, |i, j| {
        if i == j {
            (factors[0].get(i, j) * factors[1].get(i, j)).sqrt()
        } else {
            0.5 * (factors[0].get(i, j) + factors[1].get(i, j))
        }
    });
    let (_, oracle) = jacobi_top(&mean.gram_outer(), 2);
    let est = lrc_estimate(&inputs, 2).unwrap();
    assert_eq!(est.method(), Method::Lrc);
    assert!((&projector(est.basis()) - &projector(&oracle)).frobenius_norm() < 1e-8);
}

#[test]
fn dpca_matches_hand_pipeline() {
    let mut r = rng(31);
    let (sigma, _) = low_rank_sigma(&mut r, 6, 2);
    let inputs = noisy_inputs(&mut r, &sigma, 3, 0.05);
    let mut avg = Matrix::zeros(6, 6);
    for b in &inputs {
        avg = &avg + &projector(&jacobi_top(b, 2).1).scale(1.0 / 3.0);
    }
    let (_, oracle) = jacobi_top(&avg, 2);
    let est = dpca_estimate(&inputs, 2).unwrap();
    assert!((&projector(est.basis()) - &projector(&oracle)).frobenius_norm() < 1e-8);
}

#[test]
fn eigv_ave_matches_hand_pipeline() {
    let mut r = rng(32);
    let (sigma, _) = low_rank_sigma(&mut r, 6, 2);
    let inputs = noisy_inputs(&mut r, &sigma, 3, 0.05);
    let us: Vec<Matrix> = inputs.iter().map(|b| jacobi_top(b, 2).1).collect();
    let mut acc = Matrix::zeros(6, 2);
    for u in &us {
        let aligned = Matrix::from_fn(6, 2, |i, j| {
            let d: f64 = (0..6).map(|s| u.get(s, j) * us[0].get(s, j)).sum();
            u.get(i, j) * d.signum()
        });
        acc = &acc + &aligned;
    }
    let (_, oracle) = jacobi_top(&acc.gram_outer(), 2);
    let est = eigv_ave_estimate(&inputs, 2).unwrap();
    assert!((&projector(est.basis()) - &projector(&oracle)).frobenius_norm() < 1e-8);
}

#[test]
fn fpca_matches_direct_covariance() {
    let mut r = rng(33);
    let batches: Vec<Matrix> = (0..3).map(|_| random_matrix(&mut r, 20, 7)).collect();
    let mut cov = Matrix::zeros(7, 7);
    for b in &batches {
        for row in 0..b.rows() {
            let x = b.row(row);
            cov = &cov + &Matrix::from_fn(7, 7, |i, j| x[i] * x[j] / 60.0);
        }
    }
    let (_, oracle) = jacobi_top(&cov, 3);
    let est = fpca_estimate(&batches, 3).unwrap();
    assert!((&projector(est.basis()) - &projector(&oracle)).frobenius_norm() < 1e-8);
    // one batch is plain PCA of that batch
    let single = fpca_estimate(&batches[..1], 2).unwrap();
    let (_, pca) = jacobi_top(&sample_covariance(&batches[0]).unwrap(), 2);
    assert!(sin_theta(single.basis(), &pca, ProjectorNorm::Spectral).unwrap() < 1e-8);
}

#[test]
fn noiseless_inputs_are_recovered_exactly() {
    let mut r = rng(34);
    for _ in 0..50 {
        let n = r.gen_range(4..=15);
        let k = r.gen_range(1..=3);
        let (sigma, v) = low_rank_sigma(&mut r, n, k);
        let one = vec![sigma.clone()];
        let many = vec![sigma.clone(); 5];
        for inputs in [&one, &many] {
            for est in [lrc_estimate(inputs, k), dpca_estimate(inputs, k), eigv_ave_estimate(inputs, k)] {
                let est = est.unwrap();
                assert!(sin_theta(est.basis(), &v, ProjectorNorm::Spectral).unwrap() < 1e-6);
                let b = est.basis();
                assert!((&b.try_transpose_matmul(b).unwrap() - &Matrix::identity(k)).frobenius_norm() < 1e-8);
                let pr = projector(b);
                assert!((&pr.try_matmul(&pr).unwrap() - &pr).frobenius_norm() < 1e-8);
            }
        }
    }
}

#[test]
fn sin_theta_matches_projector_oracle() {
    let mut r = rng(35);
    for _ in 0..200 {
        let n = r.gen_range(2..=10);
        let k = r.gen_range(1..n);
        let a = gram_schmidt(&random_matrix(&mut r, n, k));
        let b = gram_schmidt(&random_matrix(&mut r, n, k));
        let diff = &projector(&a) - &projector(&b);
        let spectral = sin_theta(&a, &b, ProjectorNorm::Spectral).unwrap();
        assert!((spectral - oracle_spectral_norm(&diff)).abs() < 1e-9);
        assert!((0.0..=1.0 + 1e-12).contains(&spectral));
        let frob = sin_theta(&a, &b, ProjectorNorm::Frobenius).unwrap();
        assert!((frob - diff.frobenius_norm()).abs() < 1e-9);
        // invariant under rotation of either basis
        let o = gram_schmidt(&random_matrix(&mut r, k, k));
        let rotated = a.try_matmul(&o).unwrap();
        assert!((sin_theta(&rotated, &b, ProjectorNorm::Spectral).unwrap() - spectral).abs() < 1e-10);
        assert!(sin_theta(&rotated, &a, ProjectorNorm::Spectral).unwrap() < 1e-7);
    }
}

#[test]
fn estimator_errors() {
    assert_eq!(lrc_estimate::<f64>(&[], 2).unwrap_err(), Error::EmptyInput);
    let m = Matrix::identity(4);
    assert!(matches!(dpca_estimate(&[m.clone()], 4), Err(Error::UnsupportedShape { .. })));
    assert!(matches!(lrc_estimate(&[m.clone(), Matrix::identity(3)], 1), Err(Error::Shape(_))));
    // a rank-one input cannot supply two positive eigenvalues
    let rank_one = Matrix::from_fn(4, 4, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 });
    assert!(lrc_estimate(&[rank_one], 2).is_err());
}
