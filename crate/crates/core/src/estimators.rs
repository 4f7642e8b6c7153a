//! Principal-eigenspace estimators for distributed data and the sin-Θ
//! subspace distance used to score them.
//!
//! Each site holds one noisy symmetric matrix. All of the aggregate
//! estimators start from the top-`K` eigenpairs of every site matrix
//! ([`site_spectra`]), so callers that score several methods on the same
//! inputs can share that step through the `*_from_spectra` entry points.

use std::fmt;
use std::str::FromStr;

use crate::cholesky::{truncated_factor, FactorMatrix};
use crate::error::{Error, Result};
use crate::factor_geometry::frechet_mean_l;
use crate::linalg::{sym_eig_top, sym_eigenvalues, SymEigen};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// Which estimator produced a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Fréchet mean of reduced Cholesky factors.
    Lrc,
    /// Average of projectors.
    Dpca,
    /// Average of sign-aligned eigenvector matrices.
    EigvAve,
    /// PCA of all samples pooled.
    Fpca,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lrc, Method::Dpca, Method::EigvAve, Method::Fpca];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lrc => "lrc",
            Method::Dpca => "dpca",
            Method::EigvAve => "eigv",
            Method::Fpca => "fpca",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lrc" => Ok(Method::Lrc),
            "dpca" => Ok(Method::Dpca),
            "eigv" | "eigv-ave" | "eigv_ave" => Ok(Method::EigvAve),
            "fpca" => Ok(Method::Fpca),
            other => Err(Error::Parse(format!("unknown method `{other}`"))),
        }
    }
}

/// Norm applied to the projector difference in [`sin_theta`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectorNorm {
    #[default]
    Spectral,
    Frobenius,
}

impl FromStr for ProjectorNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spectral" | "operator" => Ok(ProjectorNorm::Spectral),
            "frobenius" => Ok(ProjectorNorm::Frobenius),
            other => Err(Error::Parse(format!("unknown norm `{other}`"))),
        }
    }
}

/// An `n × K` orthonormal basis of an estimated principal subspace.
#[derive(Debug, Clone)]
pub struct EigenspaceEstimate<T> {
    basis: DenseMatrix<T>,
    method: Method,
}

impl<T: Scalar> EigenspaceEstimate<T> {
    pub fn new(basis: DenseMatrix<T>, method: Method) -> Result<Self> {
        check_orthonormal(&basis)?;
        Ok(Self { basis, method })
    }

    pub fn basis(&self) -> &DenseMatrix<T> {
        &self.basis
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }
}

/// Columns orthonormal to `‖VᵀV − I‖_F ≤ 1e-8`.
pub fn check_orthonormal<T: Scalar>(v: &DenseMatrix<T>) -> Result<()> {
    let g = v.try_transpose_matmul(v)?;
    let defect = (&g - &DenseMatrix::identity(v.cols())).frobenius_norm();
    if defect > T::tolerance(1e-8) {
        return Err(Error::InvalidInput(format!("basis columns not orthonormal (defect {defect:e})")));
    }
    Ok(())
}

/// Top-`K` eigenpairs of every site matrix.
pub fn site_spectra<T: Scalar>(inputs: &[DenseMatrix<T>], k: usize) -> Result<Vec<SymEigen<T>>> {
    if inputs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = inputs[0].rows();
    if k == 0 || k >= n {
        return Err(Error::UnsupportedShape { n, p: k });
    }
    inputs
        .iter()
        .map(|b| {
            if b.shape() != (n, n) {
                return Err(Error::Shape(format!("site matrix {}x{} among {n}x{}", b.rows(), b.cols(), n)));
            }
            sym_eig_top(b, k)
        })
        .collect()
}

fn top_basis<T: Scalar>(m: &DenseMatrix<T>, k: usize, method: Method) -> Result<EigenspaceEstimate<T>> {
    let eig = sym_eig_top(&m.symmetrized(), k)?;
    EigenspaceEstimate::new(eig.vectors, method)
}

/// Low-rank Cholesky aggregation: factor each site's rank-`K` truncation,
/// take the Fréchet mean of the factors, and return the top-`K`
/// eigenvectors of `F Fᵀ`.
pub fn lrc_estimate<T: Scalar>(inputs: &[DenseMatrix<T>], k: usize) -> Result<EigenspaceEstimate<T>> {
    lrc_from_spectra(&site_spectra(inputs, k)?, k)
}

pub fn lrc_from_spectra<T: Scalar>(spectra: &[SymEigen<T>], k: usize) -> Result<EigenspaceEstimate<T>> {
    let factors = lrc_factors(spectra, k)?;
    let mean = frechet_mean_l(&factors, None)?;
    top_basis(&mean.as_matrix().gram_outer(), k, Method::Lrc)
}

/// Step one of the LRC pipeline: the per-site reduced Cholesky factors.
pub fn lrc_factors<T: Scalar>(spectra: &[SymEigen<T>], k: usize) -> Result<Vec<FactorMatrix<T>>> {
    if spectra.is_empty() {
        return Err(Error::EmptyInput);
    }
    spectra.iter().map(|eig| truncated_factor(eig, k)).collect()
}

/// Distributed PCA: average of the site projectors `U_i U_iᵀ`.
pub fn dpca_estimate<T: Scalar>(inputs: &[DenseMatrix<T>], k: usize) -> Result<EigenspaceEstimate<T>> {
    dpca_from_spectra(&site_spectra(inputs, k)?, k)
}

pub fn dpca_from_spectra<T: Scalar>(spectra: &[SymEigen<T>], k: usize) -> Result<EigenspaceEstimate<T>> {
    let first = spectra.first().ok_or(Error::EmptyInput)?;
    let n = first.vectors.rows();
    let mut acc = DenseMatrix::zeros(n, n);
    for eig in spectra {
        let u = eig.vectors.leading_columns(k);
        acc = &acc + &u.gram_outer();
    }
    let avg = acc.scale(T::from_count(spectra.len()).recip());
    top_basis(&avg, k, Method::Dpca)
}

/// Per-column signs `s_j = sign(u_jᵀ r_j)` that maximize `tr(Rᵀ U S)`.
fn align_signs<T: Scalar>(u: &DenseMatrix<T>, reference: &DenseMatrix<T>) -> DenseMatrix<T> {
    let k = u.cols();
    let signs: Vec<T> = (0..k)
        .map(|j| {
            let d: T = (0..u.rows()).map(|i| u.get(i, j) * reference.get(i, j)).sum();
            if d < T::zero() {
                -T::one()
            } else {
                T::one()
            }
        })
        .collect();
    DenseMatrix::from_fn(u.rows(), k, |i, j| u.get(i, j) * signs[j])
}

/// Eigenvector averaging: `Ū = mean(U_i)` after aligning each `U_i`'s
/// column signs to the first site; returns the top-`K` eigenvectors of
/// `ŪŪᵀ`.
pub fn eigv_ave_estimate<T: Scalar>(inputs: &[DenseMatrix<T>], k: usize) -> Result<EigenspaceEstimate<T>> {
    eigv_ave_from_spectra(&site_spectra(inputs, k)?, k)
}

pub fn eigv_ave_from_spectra<T: Scalar>(spectra: &[SymEigen<T>], k: usize) -> Result<EigenspaceEstimate<T>> {
    let first = spectra.first().ok_or(Error::EmptyInput)?;
    let reference = first.vectors.leading_columns(k);
    let mut acc = DenseMatrix::zeros(reference.rows(), k);
    for eig in spectra {
        acc = &acc + &align_signs(&eig.vectors.leading_columns(k), &reference);
    }
    let mean = acc.scale(T::from_count(spectra.len()).recip());
    top_basis(&mean.gram_outer(), k, Method::EigvAve)
}

/// Full-sample PCA: top-`K` eigenvectors of `(1/N) Σ x xᵀ` over every
/// sample of every batch. Each batch is an `l × n` matrix of row samples.
pub fn fpca_estimate<T: Scalar>(batches: &[DenseMatrix<T>], k: usize) -> Result<EigenspaceEstimate<T>> {
    let first = batches.first().ok_or(Error::EmptyInput)?;
    let n = first.cols();
    if k == 0 || k >= n {
        return Err(Error::UnsupportedShape { n, p: k });
    }
    let total: usize = batches.iter().map(|b| b.rows()).sum();
    if total < k {
        return Err(Error::InsufficientData { needed: k, got: total });
    }
    let mut acc = DenseMatrix::zeros(n, n);
    for b in batches {
        if b.cols() != n {
            return Err(Error::Shape(format!("batch with {} columns among {n}", b.cols())));
        }
        acc = &acc + &b.try_transpose_matmul(b)?;
    }
    let cov = acc.scale(T::from_count(total).recip());
    top_basis(&cov, k, Method::Fpca)
}

/// Sample second-moment matrix `(1/l) Σ x xᵀ` of one `l × n` batch.
pub fn sample_covariance<T: Scalar>(batch: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if batch.rows() == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let g = batch.try_transpose_matmul(batch)?;
    Ok(g.scale(T::from_count(batch.rows()).recip()).symmetrized())
}

/// sin-Θ distance `‖V̂V̂ᵀ − VVᵀ‖` between two `K`-dimensional subspaces.
///
/// The singular values of `R = V̂ − V(VᵀV̂)` are the sines of the principal
/// angles, so the spectral norm is `σ_max(R)` and the Frobenius norm is
/// `√2 ‖R‖_F`. Working with `R` keeps full accuracy for nearby subspaces.
pub fn sin_theta<T: Scalar>(vhat: &DenseMatrix<T>, v: &DenseMatrix<T>, norm: ProjectorNorm) -> Result<T> {
    if vhat.shape() != v.shape() {
        return Err(Error::Shape(format!(
            "bases {}x{} and {}x{}",
            vhat.rows(),
            vhat.cols(),
            v.rows(),
            v.cols()
        )));
    }
    check_orthonormal(vhat)?;
    check_orthonormal(v)?;
    let r = vhat - &v.try_matmul(&v.try_transpose_matmul(vhat)?)?;
    Ok(match norm {
        ProjectorNorm::Spectral => {
            let top = sym_eigenvalues(&r.try_transpose_matmul(&r)?.symmetrized())?[0];
            top.max(T::zero()).sqrt().min(T::one())
        }
        ProjectorNorm::Frobenius => T::lit(2.0).sqrt() * r.frobenius_norm(),
    })
}

/// [`sin_theta`] against an estimate.
pub fn sin_theta_estimate<T: Scalar>(est: &EigenspaceEstimate<T>, truth: &DenseMatrix<T>, norm: ProjectorNorm) -> Result<T> {
    sin_theta(est.basis(), truth, norm)
}
