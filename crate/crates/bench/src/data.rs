//! Synthetic data for the eigenspace experiments.
//!
//! Every random draw comes from a ChaCha20 stream derived from one master
//! seed. Stream ids are `(replicate << 32) | slot`: slot 0 feeds the
//! ground-truth covariance and slot `i + 1` feeds site `i`. Streams never
//! overlap, so a replicate's data does not depend on how many sites or
//! replicates were requested alongside it.

use anyhow::{bail, Context, Result};
use psd_cholesky::cholesky::cholesky_definite;
use psd_cholesky::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

/// Heads of the three ground-truth eigenvectors; the remaining entries are zero.
pub const W_HEADS: [[f64; 4]; 3] = [
    [0.5, 0.5, 0.5, 0.5],
    [-0.5, -0.5, 0.5, 0.5],
    [0.5, -0.5, 0.5, -0.5],
];

/// Means of the random eigenvalues, largest first.
pub const EIGENVALUE_MEANS: [f64; 3] = [10.0, 5.0, 2.5];

/// Generator for `(replicate, slot)`.
pub fn stream(seed: u64, replicate: u32, slot: u32) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(replicate) << 32) | u64::from(slot));
    rng
}

/// The `n × k` ground-truth basis: the first `k` head vectors, zero-padded.
pub fn true_basis(n: usize, k: usize) -> Result<Matrix> {
    if n < 4 {
        bail!("dimension must be at least 4, got {n}");
    }
    if !(1..=3).contains(&k) {
        bail!("the synthetic model supports ranks 1 to 3, got {k}");
    }
    Ok(Matrix::from_fn(n, k, |i, j| if i < 4 { W_HEADS[j][i] } else { 0.0 }))
}

/// `W diag(λ) Wᵀ`.
pub fn sigma_from_eigenvalues(n: usize, lambda: &[f64]) -> Result<Matrix> {
    let w = true_basis(n, lambda.len())?;
    let scaled = Matrix::from_fn(n, lambda.len(), |i, j| w.get(i, j) * lambda[j]);
    Ok(scaled.try_matmul_transpose(&w)?.symmetrized())
}

/// Draws `λ₁ ~ N(10,1)`, `λ₂ ~ N(5,1)`, `λ₃ ~ N(2.5,1)`, redrawing all
/// three until `λ₁ > λ₂ > λ₃ > 0`.
pub fn draw_eigenvalues<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let l: [f64; 3] = EIGENVALUE_MEANS.map(|mu| mu + rng.sample::<f64, _>(StandardNormal));
        if l[0] > l[1] && l[1] > l[2] && l[2] > 0.0 {
            return l;
        }
    }
}

/// A random rank-`k` covariance and its true basis.
pub fn generate_sigma<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<(Matrix, Matrix)> {
    let basis = true_basis(n, k)?;
    let lambda = draw_eigenvalues(rng);
    Ok((sigma_from_eigenvalues(n, &lambda[..k])?, basis))
}

/// `Σ + (E + Eᵀ)/2` with `E` i.i.d. `N(0, σ²)`, drawn row-major.
pub fn perturb_matrix<R: Rng>(sigma: &Matrix, noise_sd: f64, rng: &mut R) -> Result<Matrix> {
    let n = sigma.rows();
    if noise_sd == 0.0 {
        return Ok(sigma.clone());
    }
    let normal = Normal::new(0.0, noise_sd).context("invalid noise level")?;
    let e: Vec<f64> = (0..n * n).map(|_| normal.sample(rng)).collect();
    Ok(Matrix::from_fn(n, n, |i, j| sigma.get(i, j) + 0.5 * (e[i * n + j] + e[j * n + i])))
}

/// Lower Cholesky factor of `Σ + σ² I`, used by [`sample_batch`].
pub fn sampling_factor(sigma: &Matrix, noise_sd: f64) -> Result<Matrix> {
    let n = sigma.rows();
    let s1 = Matrix::from_fn(n, n, |i, j| sigma.get(i, j) + if i == j { noise_sd * noise_sd } else { 0.0 });
    cholesky_definite(&s1).context("sampling covariance is not positive definite")
}

/// `l` i.i.d. draws `L z` with `z` standard normal, one per row.
pub fn sample_batch<R: Rng>(factor: &Matrix, l: usize, rng: &mut R) -> Result<Matrix> {
    if l == 0 {
        bail!("a batch needs at least one sample");
    }
    let n = factor.rows();
    let mut out = Vec::with_capacity(l * n);
    let mut z = vec![0.0; n];
    for _ in 0..l {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..n {
            let row = factor.row(i);
            out.push(row[..=i].iter().zip(&z).map(|(a, b)| a * b).sum());
        }
    }
    Ok(Matrix::from_vec(l, n, out)?)
}
