#![allow(dead_code)]

use psd_cholesky::{Factor, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut impl Rng) -> f64 {
    r.sample(StandardNormal)
}

pub fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| normal(r)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub fn random_symmetric(r: &mut impl Rng, n: usize) -> Matrix {
    random_matrix(r, n, n).symmetrized()
}

/// Mock diagonal from |N(0,1)| + 0.1, strict lower N(0,1).
pub fn random_factor(r: &mut impl Rng, n: usize, p: usize) -> Factor {
    let mut data = vec![0.0; n * p];
    for i in 0..n {
        for j in 0..p.min(i + 1) {
            data[i * p + j] = if i == j { normal(r).abs() + 0.1 } else { normal(r) };
        }
    }
    Factor::new(Matrix::from_vec(n, p, data).unwrap()).unwrap()
}

pub fn random_shape(r: &mut impl Rng, max_n: usize) -> (usize, usize) {
    let n = r.gen_range(2..=max_n);
    (n, r.gen_range(1..n))
}

/// Cyclic Jacobi eigensolver on plain vectors. Returns eigenvalues in
/// descending order and eigenvectors as columns of a row-major array.
pub fn jacobi_eig(a: &Matrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.rows();
    let mut s: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| s[i][j] * s[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if s[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (s[q][q] - s[p][p]) / (2.0 * s[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (skp, skq) = (s[k][p], s[k][q]);
                    s[k][p] = c * skp - sn * skq;
                    s[k][q] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let (spk, sqk) = (s[p][k], s[q][k]);
                    s[p][k] = c * spk - sn * sqk;
                    s[q][k] = sn * spk + c * sqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - sn * vkq;
                    v[k][q] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j][j].partial_cmp(&s[i][i]).unwrap());
    let values = order.iter().map(|&i| s[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    (values, vectors)
}

/// Leading `k` eigenvectors from [`jacobi_eig`] as an `n × k` matrix.
pub fn jacobi_top(a: &Matrix, k: usize) -> (Vec<f64>, Matrix) {
    let (vals, vecs) = jacobi_eig(a);
    (vals[..k].to_vec(), Matrix::from_fn(a.rows(), k, |i, j| vecs[i][j]))
}

/// Largest singular value via the Jacobi eigenvalues of `AᵀA`.
pub fn oracle_spectral_norm(a: &Matrix) -> f64 {
    let g = a.try_transpose_matmul(a).unwrap();
    jacobi_eig(&g).0[0].max(0.0).sqrt()
}

/// Classical Gram-Schmidt on the columns of `a`.
pub fn gram_schmidt(a: &Matrix) -> Matrix {
    let (n, k) = a.shape();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for j in 0..k {
        let mut c = a.column(j);
        for q in &cols {
            let d: f64 = c.iter().zip(q).map(|(x, y)| x * y).sum();
            c.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
        }
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        cols.push(c.into_iter().map(|x| x / norm).collect());
    }
    Matrix::from_fn(n, k, |i, j| cols[j][i])
}

pub fn projector(v: &Matrix) -> Matrix {
    v.try_matmul_transpose(v).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn random_tangent(r: &mut impl Rng, n: usize, p: usize) -> psd_cholesky::Tangent {
    let m = Matrix::from_fn(n, p, |i, j| if i >= j { normal(r) } else { 0.0 });
    psd_cholesky::Tangent::new(m).unwrap()
}
