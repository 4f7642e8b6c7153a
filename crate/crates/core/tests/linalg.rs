mod common;

use common::*;
use psd_cholesky::linalg::{qr_wide, solve_lower_triangular, spectral_norm, sym_eig, sym_eig_top, sym_eigenvalues};
use psd_cholesky::Matrix;
use rand::Rng;

#[test]
fn eig_reconstructs_random_symmetric_matrices() {
    let mut r = rng(1);
    for _ in 0..1000 {
        let n = r.gen_range(1..=20);
        let s = random_symmetric(&mut r, n);
        let eig = sym_eig(&s).unwrap();
        let err = (&eig.reconstruct() - &s).frobenius_norm() / s.frobenius_norm();
        assert!(err <= 1e-8, "n = {n}: relative residual {err:e}");
        let defect = (&eig.vectors.try_transpose_matmul(&eig.vectors).unwrap() - &Matrix::identity(n)).frobenius_norm();
        assert!(defect < 1e-10);
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn eigenvalues_match_jacobi_oracle() {
    let mut r = rng(2);
    for _ in 0..100 {
        let n = r.gen_range(2..=12);
        let s = random_symmetric(&mut r, n);
        let ours = sym_eigenvalues(&s).unwrap();
        let (oracle, _) = jacobi_eig(&s);
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn partial_eig_matches_jacobi_subspace() {
    let mut r = rng(3);
    for _ in 0..100 {
        let n = r.gen_range(8..=40);
        let k = r.gen_range(1..=3);
        // well separated top block over a noisy bulk
        let g = random_matrix(&mut r, n, k);
        let s = &g.gram_outer().scale(10.0) + &random_symmetric(&mut r, n).scale(0.1);
        let top = sym_eig_top(&s, k).unwrap();
        let (vals, vecs) = jacobi_top(&s, k);
        for (a, b) in top.values.iter().zip(&vals) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
        let gap = (&projector(&top.vectors) - &projector(&vecs)).frobenius_norm();
        assert!(gap < 1e-8, "projector gap {gap:e}");
    }
}

#[test]
fn qr_factors_wide_matrices() {
    let mut r = rng(4);
    for _ in 0..300 {
        let p = r.gen_range(1..=5);
        let n = r.gen_range(p..=p + 10);
        let a = random_matrix(&mut r, p, n);
        let (q, rr) = qr_wide(&a).unwrap();
        assert!((&q.try_matmul(&rr).unwrap() - &a).frobenius_norm() < 1e-10 * (1.0 + a.frobenius_norm()));
        assert!((&q.try_transpose_matmul(&q).unwrap() - &Matrix::identity(p)).frobenius_norm() < 1e-12);
        for i in 0..p {
            assert!(rr.get(i, i) > 0.0);
            for j in 0..i {
                assert_eq!(rr.get(i, j), 0.0);
            }
        }
    }
}

#[test]
fn triangular_solve_inverts_product() {
    let mut r = rng(5);
    for _ in 0..100 {
        let n = r.gen_range(1..=10);
        let l = Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => 0.3,
            std::cmp::Ordering::Equal => 1.0 + i as f64,
            std::cmp::Ordering::Less => 0.0,
        });
        let x = random_matrix(&mut r, n, 3);
        let b = l.try_matmul(&x).unwrap();
        assert!(solve_lower_triangular(&l, &b).unwrap().max_abs_diff(&x) < 1e-10);
    }
}

#[test]
fn spectral_norm_matches_oracle() {
    let mut r = rng(6);
    for _ in 0..100 {
        let (rows, cols) = (r.gen_range(1..=8), r.gen_range(1..=8));
        let a = random_matrix(&mut r, rows, cols);
        assert!(rel_close(spectral_norm(&a), oracle_spectral_norm(&a), 1e-10));
    }
}
