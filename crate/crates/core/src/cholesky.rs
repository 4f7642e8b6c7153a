//! Reduced Cholesky factors and the restricted class of fixed-rank PSD
//! matrices whose first `p` columns are linearly independent.
//!
//! A reduced Cholesky factor is an `n × p` *mock lower triangular* matrix:
//! entries above the positions `(i, i)`, `i < p`, vanish and those positions
//! (the mock diagonal) are strictly positive. Every restricted PSD matrix of
//! rank `p` has exactly one such factor.

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, qr_wide, rank_threshold, sym_eig, sym_eig_top, SymEigen};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// A point of the reduced Cholesky space: mock lower triangular `n × p`,
/// `n > p`, strictly positive mock diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix<T> {
    inner: DenseMatrix<T>,
}

pub(crate) fn check_shape(n: usize, p: usize) -> Result<()> {
    if p == 0 || n <= p {
        return Err(Error::UnsupportedShape { n, p });
    }
    Ok(())
}

/// Index of the first nonzero entry above the mock diagonal, if any.
pub(crate) fn first_upper_violation<T: Scalar>(m: &DenseMatrix<T>) -> Option<(usize, usize)> {
    let p = m.cols();
    (0..p.min(m.rows())).flat_map(|i| (i + 1..p).map(move |j| (i, j))).find(|&(i, j)| m.get(i, j) != T::zero())
}

impl<T: Scalar> FactorMatrix<T> {
    /// Validates a candidate factor.
    pub fn new(candidate: DenseMatrix<T>) -> Result<Self> {
        let (n, p) = candidate.shape();
        check_shape(n, p)?;
        if let Some((i, j)) = first_upper_violation(&candidate) {
            return Err(Error::Shape(format!(
                "entry ({}, {}) above the mock diagonal is nonzero",
                i + 1,
                j + 1
            )));
        }
        if let Some(i) = (0..p).find(|&i| !(candidate.get(i, i) > T::zero())) {
            return Err(Error::NonPositivePivot(i + 1));
        }
        Ok(Self { inner: candidate })
    }

    pub(crate) fn from_raw(inner: DenseMatrix<T>) -> Self {
        debug_assert!(Self::new(inner.clone()).is_ok(), "invalid factor {inner:?}");
        Self { inner }
    }

    /// The mock identity `I_{n×p}`.
    pub fn mock_identity(n: usize, p: usize) -> Result<Self> {
        check_shape(n, p)?;
        Ok(Self { inner: DenseMatrix::from_fn(n, p, |i, j| if i == j { T::one() } else { T::zero() }) })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.inner.rows()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.inner.cols()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.inner.get(i, j)
    }

    pub fn mock_diagonal(&self) -> Vec<T> {
        self.inner.diagonal()
    }

    pub fn as_matrix(&self) -> &DenseMatrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.inner
    }

    /// The augmented `n × n` lower triangular matrix `[N | e_{p+1} … e_n]`.
    pub fn augmented(&self) -> DenseMatrix<T> {
        let (n, p) = (self.n(), self.p());
        DenseMatrix::from_fn(n, n, |i, j| {
            if j < p {
                self.get(i, j)
            } else if i == j {
                T::one()
            } else {
                T::zero()
            }
        })
    }
}

/// Validates `candidate` as a reduced Cholesky factor.
pub fn validate_factor<T: Scalar>(candidate: &DenseMatrix<T>) -> Result<FactorMatrix<T>> {
    FactorMatrix::new(candidate.clone())
}

/// A symmetric PSD matrix of rank `p` whose first `p` columns are linearly
/// independent, stored together with its reduced Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedPsd<T> {
    matrix: DenseMatrix<T>,
    factor: FactorMatrix<T>,
}

impl<T: Scalar> RestrictedPsd<T> {
    /// Checks membership by running the Cholesky program; fails with
    /// [`Error::NotRestricted`] when a leading pivot vanishes.
    pub fn new(matrix: DenseMatrix<T>, p: usize) -> Result<Self> {
        let factor = reduced_cholesky_direct(&matrix, p)?;
        Ok(Self { matrix, factor })
    }

    /// `N Nᵀ`.
    pub fn from_factor(factor: FactorMatrix<T>) -> Self {
        let matrix = factor.as_matrix().gram_outer();
        Self { matrix, factor }
    }

    pub fn n(&self) -> usize {
        self.factor.n()
    }

    pub fn p(&self) -> usize {
        self.factor.p()
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.matrix
    }

    pub fn factor(&self) -> &FactorMatrix<T> {
        &self.factor
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.matrix
    }
}

fn check_square_symmetric<T: Scalar>(m: &DenseMatrix<T>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    if !m.is_symmetric(T::tolerance(1e-10)) {
        return Err(Error::InvalidInput("matrix is not symmetric".into()));
    }
    Ok(())
}

/// A pivot radicand at or below this counts as zero.
#[inline]
fn pivot_tolerance<T: Scalar>(diag: T) -> T {
    T::tolerance(1e-12) * T::one().max(diag.abs())
}

/// Reduced Cholesky factor by the column-by-column Cholesky program.
///
/// Runs `O(n p²)`. Fails with `NotRestricted(i)` when pivot `i` of the first
/// `p` columns vanishes, and with `RankMismatch` when `M` has rank above `p`.
pub fn reduced_cholesky_direct<T: Scalar>(m: &DenseMatrix<T>, p: usize) -> Result<FactorMatrix<T>> {
    check_square_symmetric(m)?;
    let n = m.rows();
    check_shape(n, p)?;

    let mut l = DenseMatrix::zeros(n, p);
    for j in 0..p {
        let mjj = m.get(j, j);
        let radicand = mjj - (0..j).map(|k| l.get(j, k) * l.get(j, k)).sum::<T>();
        if radicand <= pivot_tolerance(mjj) {
            return Err(Error::NotRestricted(j + 1));
        }
        let pivot = radicand.sqrt();
        l.set(j, j, pivot);
        for i in j + 1..n {
            let s = m.get(i, j) - (0..j).map(|k| l.get(i, k) * l.get(j, k)).sum::<T>();
            l.set(i, j, s / pivot);
        }
    }

    // The Schur complement left after p columns must vanish for rank p.
    let tol = T::tolerance(1e-9) * (T::one() + m.frobenius_norm());
    for i in p..n {
        let residual = m.get(i, i) - (0..p).map(|k| l.get(i, k) * l.get(i, k)).sum::<T>();
        if residual < -tol {
            return Err(Error::NonPsd);
        }
        if residual > tol {
            return Err(Error::RankMismatch { expected: p, found: p + 1 });
        }
    }
    Ok(FactorMatrix::from_raw(l))
}

/// Reduced Cholesky factor through the spectrum:
/// `M = UΛUᵀ`, `Z = UΛ^{1/2}`, `Zᵀ = QR`, `N = Rᵀ`.
///
/// Requires exactly `p` eigenvalues above the rank threshold.
pub fn reduced_cholesky_spectral<T: Scalar>(m: &DenseMatrix<T>, p: usize) -> Result<FactorMatrix<T>> {
    check_square_symmetric(m)?;
    check_shape(m.rows(), p)?;
    let eig = sym_eig(m)?;
    let lmax = eig.values[0].abs();
    if eig.values.last().is_some_and(|&v| v < -T::tolerance(1e-8) * T::one().max(lmax)) {
        return Err(Error::NonPsd);
    }
    let found = numerical_rank(&eig.values);
    if found != p {
        return Err(Error::RankMismatch { expected: p, found });
    }
    factor_from_spectrum(&eig.values[..p], &eig.vectors.leading_columns(p))
}

/// Reduced Cholesky factor of the best rank-`p` approximation of a noisy
/// symmetric matrix: keeps the top `p` eigenpairs, then proceeds as
/// [`reduced_cholesky_spectral`].
pub fn reduced_cholesky_truncated<T: Scalar>(m: &DenseMatrix<T>, p: usize) -> Result<FactorMatrix<T>> {
    check_square_symmetric(m)?;
    check_shape(m.rows(), p)?;
    let eig = sym_eig_top(m, p)?;
    truncated_factor(&eig, p)
}

/// Builds the factor from a precomputed top-`p` eigendecomposition.
pub fn truncated_factor<T: Scalar>(eig: &SymEigen<T>, p: usize) -> Result<FactorMatrix<T>> {
    if eig.values.len() < p {
        return Err(Error::RankMismatch { expected: p, found: eig.values.len() });
    }
    let thr = rank_threshold(eig.values[0]);
    let found = eig.values[..p].iter().filter(|&&v| v > thr).count();
    if found < p {
        return Err(Error::RankMismatch { expected: p, found });
    }
    factor_from_spectrum(&eig.values[..p], &eig.vectors.leading_columns(p))
}

/// `N = Rᵀ` where `QR = (UΛ^{1/2})ᵀ` for positive `values` and orthonormal
/// columns `vectors`.
pub fn factor_from_spectrum<T: Scalar>(values: &[T], vectors: &DenseMatrix<T>) -> Result<FactorMatrix<T>> {
    let (n, p) = vectors.shape();
    check_shape(n, p)?;
    if values.len() != p {
        return Err(Error::Shape(format!("{} eigenvalues for {p} eigenvectors", values.len())));
    }
    if values.iter().any(|&v| !(v > T::zero())) {
        return Err(Error::RankMismatch { expected: p, found: values.iter().filter(|&&v| v > T::zero()).count() });
    }
    let roots: Vec<T> = values.iter().map(|v| v.sqrt()).collect();
    let zt = DenseMatrix::from_fn(p, n, |i, j| vectors.get(j, i) * roots[i]);
    let (_, r) = qr_wide(&zt)?;
    Ok(FactorMatrix::from_raw(r.transpose()))
}

/// Positive eigenvalues of `NᵀN`, descending: the positive spectrum of `NNᵀ`.
pub fn gram_spectrum<T: Scalar>(n: &FactorMatrix<T>) -> Vec<T> {
    let g = n.as_matrix().try_transpose_matmul(n.as_matrix()).expect("conforming shapes");
    crate::linalg::sym_eigenvalues(&g.symmetrized()).expect("Gram matrix is symmetric")
}

/// Full `n × n` Cholesky factor of a PSD matrix with zero-pivot continuation:
/// a vanishing pivot zeroes its column and the program moves on.
///
/// Returns the factor and the 0-based indices of its nonzero columns.
pub fn cholesky_semidefinite<T: Scalar>(m: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, Vec<usize>)> {
    check_square_symmetric(m)?;
    let n = m.rows();
    let neg_tol = T::tolerance(1e-8) * T::one().max(m.max_abs());
    let mut l = DenseMatrix::zeros(n, n);
    let mut active = Vec::new();
    for j in 0..n {
        let mjj = m.get(j, j);
        let radicand = mjj - (0..j).map(|k| l.get(j, k) * l.get(j, k)).sum::<T>();
        if radicand < -neg_tol {
            return Err(Error::NonPsd);
        }
        if radicand <= pivot_tolerance(mjj) {
            continue;
        }
        let pivot = radicand.sqrt();
        l.set(j, j, pivot);
        for i in j + 1..n {
            let s = m.get(i, j) - (0..j).map(|k| l.get(i, k) * l.get(j, k)).sum::<T>();
            l.set(i, j, s / pivot);
        }
        active.push(j);
    }
    Ok((l, active))
}

/// Full Cholesky factor of a positive definite matrix.
pub fn cholesky_definite<T: Scalar>(m: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let (l, active) = cholesky_semidefinite(m).map_err(|e| if e == Error::NonPsd { Error::NonPd } else { e })?;
    if active.len() != m.rows() {
        return Err(Error::NonPd);
    }
    Ok(l)
}

/// Approximates a rank-`p` PSD matrix by a member of the restricted class.
///
/// The reduced factor (nonzero columns of the continued Cholesky factor) has
/// zeros on its mock diagonal exactly where the matrix leaves the restricted
/// class; those are replaced by `eps` and the product is reformed.
pub fn approximate_into_restricted<T: Scalar>(m: &DenseMatrix<T>, p: usize, eps: T) -> Result<RestrictedPsd<T>> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    check_square_symmetric(m)?;
    check_shape(m.rows(), p)?;
    let (l, active) = cholesky_semidefinite(m)?;
    if active.len() != p {
        return Err(Error::RankMismatch { expected: p, found: active.len() });
    }
    if active.iter().enumerate().all(|(c, &i)| c == i) {
        // already restricted
        let factor = FactorMatrix::from_raw(l.select_columns(&active));
        return Ok(RestrictedPsd { matrix: m.clone(), factor });
    }
    let mut reduced = l.select_columns(&active);
    for c in 0..p {
        if reduced.get(c, c) == T::zero() {
            reduced.set(c, c, eps);
        }
    }
    Ok(RestrictedPsd::from_factor(FactorMatrix::new(reduced)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(rows).unwrap()
    }

    fn np() -> DenseMatrix<f64> {
        m(&[&[1.0, 0.0], &[2.0, 1.0], &[3.0, 2.0]])
    }

    #[test]
    fn validate_accepts_sample_factor() {
        assert!(validate_factor(&np()).is_ok());
    }

    #[test]
    fn validate_rejects_zero_pivot() {
        let c = m(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]]);
        assert_eq!(validate_factor(&c), Err(Error::NonPositivePivot(1)));
    }

    #[test]
    fn validate_rejects_upper_entry() {
        let c = m(&[&[1.0, 5.0], &[2.0, 1.0], &[3.0, 2.0]]);
        assert!(matches!(validate_factor(&c), Err(Error::Shape(_))));
    }

    #[test]
    fn validate_rejects_square() {
        let c = m(&[&[1.0, 0.0], &[2.0, 1.0]]);
        assert_eq!(validate_factor(&c), Err(Error::UnsupportedShape { n: 2, p: 2 }));
    }

    #[test]
    fn direct_on_sample_matrices() {
        let p = m(&[&[1.0, 2.0, 3.0], &[2.0, 5.0, 8.0], &[3.0, 8.0, 13.0]]);
        assert_eq!(reduced_cholesky_direct(&p, 2).unwrap().as_matrix(), &np());
        let q = m(&[&[1.0, 2.0, -1.0], &[2.0, 5.0, -3.0], &[-1.0, -3.0, 2.0]]);
        let nq = m(&[&[1.0, 0.0], &[2.0, 1.0], &[-1.0, -1.0]]);
        assert_eq!(reduced_cholesky_direct(&q, 2).unwrap().as_matrix(), &nq);
    }

    #[test]
    fn direct_near_the_slit() {
        let e = 1e-3;
        let m2 = m(&[&[e * e, e], &[e, 1.0]]);
        let n = reduced_cholesky_direct(&m2, 1).unwrap();
        assert!((n.get(0, 0) - e).abs() < 1e-15);
        assert!((n.get(1, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn direct_on_the_slit() {
        let m1 = m(&[&[0.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(reduced_cholesky_direct(&m1, 1), Err(Error::NotRestricted(1)));
    }

    #[test]
    fn direct_detects_excess_rank() {
        assert_eq!(
            reduced_cholesky_direct(&DenseMatrix::<f64>::identity(3), 2),
            Err(Error::RankMismatch { expected: 2, found: 3 })
        );
    }

    #[test]
    fn spectral_on_sample_matrix() {
        let p = m(&[&[1.0, 2.0, 3.0], &[2.0, 5.0, 8.0], &[3.0, 8.0, 13.0]]);
        let n = reduced_cholesky_spectral(&p, 2).unwrap();
        assert!(n.as_matrix().max_abs_diff(&np()) < 1e-12);
    }

    #[test]
    fn spectral_on_diagonal() {
        let d = DenseMatrix::<f64>::from_diagonal(&[4.0, 1.0, 0.0]);
        let n = reduced_cholesky_spectral(&d, 2).unwrap();
        assert!(n.as_matrix().max_abs_diff(&m(&[&[2.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]])) < 1e-14);
    }

    #[test]
    fn spectral_errors() {
        let d = DenseMatrix::<f64>::from_diagonal(&[4.0, 1.0, 0.0]);
        assert_eq!(reduced_cholesky_spectral(&d, 1), Err(Error::RankMismatch { expected: 1, found: 2 }));
        // rank 2 but outside the restricted class: columns 1 and 2 dependent
        let bad = m(&[&[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(reduced_cholesky_spectral(&bad, 2), Err(Error::RankDeficient(2)));
    }

    #[test]
    fn gram_spectrum_examples() {
        let n = FactorMatrix::new(m(&[&[2.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]])).unwrap();
        let s = gram_spectrum(&n);
        assert!((s[0] - 4.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);
        let id = FactorMatrix::<f64>::mock_identity(5, 3).unwrap();
        assert!(gram_spectrum(&id).iter().all(|&x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn approximation_of_rank_two_example() {
        let eps = 0.01;
        let mm = m(&[&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &[1.0, 1.0, 2.0]]);
        let approx = approximate_into_restricted(&mm, 2, eps).unwrap();
        let expected = m(&[&[1.0, 1.0, 1.0], &[1.0, 1.0 + eps * eps, 1.0 + eps], &[1.0, 1.0 + eps, 2.0]]);
        assert!(approx.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn approximation_on_the_slit() {
        let approx = approximate_into_restricted(&m(&[&[0.0, 0.0], &[0.0, 1.0]]), 1, 0.1).unwrap();
        assert!(approx.factor().as_matrix().max_abs_diff(&m(&[&[0.1], &[1.0]])) < 1e-15);
        assert!(approx.matrix().max_abs_diff(&m(&[&[0.01, 0.1], &[0.1, 1.0]])) < 1e-15);
    }

    #[test]
    fn approximation_is_identity_inside() {
        let p = m(&[&[1.0, 2.0, 3.0], &[2.0, 5.0, 8.0], &[3.0, 8.0, 13.0]]);
        let approx = approximate_into_restricted(&p, 2, 0.5).unwrap();
        assert_eq!(approx.matrix(), &p);
    }

    #[test]
    fn approximation_errors() {
        let neg = m(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert_eq!(approximate_into_restricted(&neg, 1, 0.1).unwrap_err(), Error::NonPsd);
        let id = DenseMatrix::<f64>::identity(3);
        assert_eq!(
            approximate_into_restricted(&id, 2, 0.1).unwrap_err(),
            Error::RankMismatch { expected: 2, found: 3 }
        );
    }

    #[test]
    fn zero_columns_follow_dependent_columns() {
        // column 3 = 2·col1 − col2
        let a = m(&[&[1.0, 0.0], &[0.0, 1.0], &[2.0, -1.0], &[1.0, 3.0]]);
        let mm = a.gram_outer();
        let (l, active) = cholesky_semidefinite(&mm).unwrap();
        assert_eq!(active, vec![0, 1]);
        assert!(l.column(2).iter().chain(l.column(3).iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn definite_cholesky() {
        let a = m(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let l = cholesky_definite(&a).unwrap();
        assert!(l.gram_outer().max_abs_diff(&a) < 1e-14);
        assert_eq!(cholesky_definite(&DenseMatrix::from_diagonal(&[1.0, 0.0])), Err(Error::NonPd));
    }
}
