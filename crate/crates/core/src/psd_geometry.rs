//! Geometry of the restricted fixed-rank PSD matrices, carried over from the
//! reduced Cholesky space by `Ψ(N) = NNᵀ`.
//!
//! Every operation here factors through `Ψ⁻¹` and works on factors; the
//! `n × n` matrices are only formed for the results. Tangent vectors at
//! `M = NNᵀ` are symmetric matrices `W = XNᵀ + NXᵀ`. They carry their
//! anchoring factor, so they cannot silently be used at another point, and
//! the factor tangent `X`, which is kept exact when the tangent comes from a
//! factor-space operation rather than re-solved from `W`.

use crate::cholesky::{FactorMatrix, RestrictedPsd};
use crate::error::{Error, Result};
use crate::factor_geometry::{self as fg, FactorTangent};
use crate::linalg::solve_lower_triangular;
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// A tangent vector at a restricted PSD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdTangent<T> {
    matrix: DenseMatrix<T>,
    anchor: FactorMatrix<T>,
    factor: FactorTangent<T>,
}

impl<T: Scalar> PsdTangent<T> {
    /// Validates `w` as a tangent vector at `at`.
    pub fn new(at: &RestrictedPsd<T>, w: DenseMatrix<T>) -> Result<Self> {
        let factor = differential_inverse(at.factor(), &w)?;
        Ok(Self { matrix: w, anchor: at.factor().clone(), factor })
    }

    pub fn zero(at: &RestrictedPsd<T>) -> Self {
        Self {
            matrix: DenseMatrix::zeros(at.n(), at.n()),
            anchor: at.factor().clone(),
            factor: FactorTangent::from_raw(DenseMatrix::zeros(at.n(), at.p())),
        }
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.matrix
    }

    pub fn anchor(&self) -> &FactorMatrix<T> {
        &self.anchor
    }

    pub fn scale(&self, s: T) -> Self {
        Self { matrix: self.matrix.scale(s), anchor: self.anchor.clone(), factor: self.factor.scale(s) }
    }

    /// The factor-space tangent `X` with `XNᵀ + NXᵀ = W`.
    pub fn factor_tangent(&self) -> &FactorTangent<T> {
        &self.factor
    }

    fn check_anchor(&self, at: &FactorMatrix<T>) -> Result<()> {
        if self.anchor.n() != at.n() || self.anchor.p() != at.p() {
            return Err(Error::AnchorMismatch);
        }
        let tol = T::tolerance(1e-12) * (T::one() + at.as_matrix().max_abs());
        if self.anchor.as_matrix().max_abs_diff(at.as_matrix()) > tol {
            return Err(Error::AnchorMismatch);
        }
        Ok(())
    }
}

/// `Ψ(N) = NNᵀ`.
pub fn psi<T: Scalar>(n: &FactorMatrix<T>) -> RestrictedPsd<T> {
    RestrictedPsd::from_factor(n.clone())
}

/// `Ψ⁻¹(M)`: the reduced Cholesky factor computed when `M` was validated.
pub fn psi_inverse<T: Scalar>(m: &RestrictedPsd<T>) -> FactorMatrix<T> {
    m.factor().clone()
}

/// Keeps the strictly lower half of a symmetric matrix, halves its diagonal
/// and zeroes the upper half, so that `S = H + Hᵀ`.
pub fn half_lower<T: Scalar>(s: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if !s.is_symmetric(T::tolerance(1e-10)) {
        return Err(Error::InvalidInput("half_lower needs a symmetric matrix".into()));
    }
    Ok(half_lower_raw(s))
}

fn half_lower_raw<T: Scalar>(s: &DenseMatrix<T>) -> DenseMatrix<T> {
    let half = T::lit(0.5);
    DenseMatrix::from_fn(s.rows(), s.cols(), |i, j| {
        if i > j {
            s.get(i, j)
        } else if i == j {
            s.get(i, i) * half
        } else {
            T::zero()
        }
    })
}

/// Differential of `Ψ` at `N`: `X ↦ XNᵀ + NXᵀ`.
pub fn differential<T: Scalar>(n: &FactorMatrix<T>, x: &FactorTangent<T>) -> Result<DenseMatrix<T>> {
    if (n.n(), n.p()) != (x.n(), x.p()) {
        return Err(Error::Shape(format!("factor {}x{} vs tangent {}x{}", n.n(), n.p(), x.n(), x.p())));
    }
    let xnt = x.as_matrix().try_matmul_transpose(n.as_matrix())?;
    let dim = n.n();
    Ok(DenseMatrix::from_fn(dim, dim, |i, j| xnt.get(i, j) + xnt.get(j, i)))
}

/// [`differential`] packaged as a tangent vector anchored at `Ψ(N)`.
pub fn push_forward<T: Scalar>(n: &FactorMatrix<T>, x: &FactorTangent<T>) -> Result<PsdTangent<T>> {
    Ok(PsdTangent { matrix: differential(n, x)?, anchor: n.clone(), factor: x.clone() })
}

/// Solves `XNᵀ + NXᵀ = W` through the augmented factor, returning `X` and
/// the largest entry of the columns that are dropped.
fn differential_inverse_unchecked<T: Scalar>(n: &FactorMatrix<T>, w: &DenseMatrix<T>) -> (FactorTangent<T>, T) {
    let aug = n.augmented();
    let y = solve_lower_triangular(&aug, w).expect("augmented factor is invertible");
    let c = solve_lower_triangular(&aug, &y.transpose()).expect("augmented factor is invertible");
    let h = half_lower_raw(&c.symmetrized());
    let x_aug = &aug * &h;
    let p = n.p();
    let dim = n.n();
    let mut residual = T::zero();
    for i in 0..dim {
        for j in p..dim {
            residual = residual.max(x_aug.get(i, j).abs());
        }
    }
    (FactorTangent::from_raw(x_aug.leading_columns(p)), residual)
}

fn tangent_tolerance<T: Scalar>(w: &DenseMatrix<T>) -> T {
    T::tolerance(1e-8) * (T::one() + w.frobenius_norm())
}

fn check_tangent_shape<T: Scalar>(n: &FactorMatrix<T>, w: &DenseMatrix<T>) -> Result<()> {
    if w.shape() != (n.n(), n.n()) {
        return Err(Error::Shape(format!("tangent {}x{} at an {}x{} point", w.rows(), w.cols(), n.n(), n.n())));
    }
    if !w.is_symmetric(T::tolerance(1e-10)) {
        return Err(Error::InvalidInput("tangent matrix is not symmetric".into()));
    }
    Ok(())
}

/// Inverse differential of `Ψ` at `N`. Fails with `NotInTangentSpace` when
/// `W` is symmetric but not of the form `XNᵀ + NXᵀ`.
pub fn differential_inverse<T: Scalar>(n: &FactorMatrix<T>, w: &DenseMatrix<T>) -> Result<FactorTangent<T>> {
    check_tangent_shape(n, w)?;
    let (x, residual) = differential_inverse_unchecked(n, w);
    if residual > tangent_tolerance(w) {
        return Err(Error::NotInTangentSpace { residual: residual.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(x)
}

/// Whether the symmetric matrix `W` is a tangent vector at `Ψ(N)`, with the
/// dropped columns required to vanish to `tol`.
pub fn is_tangent<T: Scalar>(n: &FactorMatrix<T>, w: &DenseMatrix<T>, tol: T) -> Result<bool> {
    check_tangent_shape(n, w)?;
    let (_, residual) = differential_inverse_unchecked(n, w);
    Ok(residual <= tol)
}

/// Pull-back metric `g_M(W, V) = g̃_N(X_W, X_V)`.
pub fn metric_s<T: Scalar>(m: &RestrictedPsd<T>, w: &PsdTangent<T>, v: &PsdTangent<T>) -> Result<T> {
    w.check_anchor(m.factor())?;
    v.check_anchor(m.factor())?;
    fg::metric_l(m.factor(), &w.factor_tangent(), v.factor_tangent())
}

/// `Ψ(γ̃_{N,X}(t))`; stays in the restricted class for every real `t`.
pub fn geodesic_s<T: Scalar>(m: &RestrictedPsd<T>, w: &PsdTangent<T>, t: T) -> Result<RestrictedPsd<T>> {
    w.check_anchor(m.factor())?;
    Ok(psi(&fg::geodesic_l(m.factor(), w.factor_tangent(), t)?))
}

pub fn exp_s<T: Scalar>(m: &RestrictedPsd<T>, w: &PsdTangent<T>) -> Result<RestrictedPsd<T>> {
    geodesic_s(m, w, T::one())
}

pub fn log_s<T: Scalar>(m: &RestrictedPsd<T>, q: &RestrictedPsd<T>) -> Result<PsdTangent<T>> {
    let x = fg::log_l(m.factor(), q.factor())?;
    push_forward(m.factor(), &x)
}

pub fn distance_s<T: Scalar>(a: &RestrictedPsd<T>, b: &RestrictedPsd<T>) -> Result<T> {
    fg::distance_l(a.factor(), b.factor())
}

/// `P₁ ⊗ P₂ = Ψ(Ψ⁻¹(P₁) ⊕ Ψ⁻¹(P₂))`.
pub fn otimes<T: Scalar>(a: &RestrictedPsd<T>, b: &RestrictedPsd<T>) -> Result<RestrictedPsd<T>> {
    Ok(psi(&fg::group_op(a.factor(), b.factor())?))
}

pub fn otimes_inverse<T: Scalar>(a: &RestrictedPsd<T>) -> RestrictedPsd<T> {
    psi(&fg::group_inverse(a.factor()))
}

pub fn otimes_identity<T: Scalar>(n: usize, p: usize) -> Result<RestrictedPsd<T>> {
    Ok(psi(&fg::group_identity(n, p)?))
}

/// Parallel transport of `W` from `P` to `Q`: transport the factor tangent,
/// then push forward at `N_Q`.
pub fn parallel_transport_s<T: Scalar>(
    from: &RestrictedPsd<T>,
    to: &RestrictedPsd<T>,
    w: &PsdTangent<T>,
) -> Result<PsdTangent<T>> {
    w.check_anchor(from.factor())?;
    let k = fg::transport_l(from.factor(), to.factor(), w.factor_tangent())?;
    push_forward(to.factor(), &k)
}

/// Weighted Fréchet mean, computed on the factors.
pub fn frechet_mean_s<T: Scalar>(matrices: &[RestrictedPsd<T>], weights: Option<&[T]>) -> Result<RestrictedPsd<T>> {
    let factors: Vec<FactorMatrix<T>> = matrices.iter().map(|m| m.factor().clone()).collect();
    Ok(psi(&fg::frechet_mean_l(&factors, weights)?))
}
