//! Riemannian and Lie-group structure of the reduced Cholesky space.
//!
//! The metric is Euclidean on the strictly lower entries and weighted by
//! `N_ii⁻²` on the mock diagonal. In the chart `(log N_ii, N_ij)` it is the
//! plain Euclidean metric, so geodesics, distances and means all have closed
//! forms. The abelian group law multiplies mock diagonals and adds the
//! strictly lower parts; the metric is bi-invariant under it.

use crate::cholesky::{check_shape, first_upper_violation, FactorMatrix};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// A tangent vector at a factor: an `n × p` mock lower triangular matrix
/// with unconstrained entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorTangent<T> {
    inner: DenseMatrix<T>,
}

impl<T: Scalar> FactorTangent<T> {
    pub fn new(m: DenseMatrix<T>) -> Result<Self> {
        let (n, p) = m.shape();
        check_shape(n, p)?;
        if let Some((i, j)) = first_upper_violation(&m) {
            return Err(Error::Shape(format!(
                "tangent entry ({}, {}) above the mock diagonal is nonzero",
                i + 1,
                j + 1
            )));
        }
        Ok(Self { inner: m })
    }

    pub(crate) fn from_raw(inner: DenseMatrix<T>) -> Self {
        Self { inner }
    }

    pub fn zeros(n: usize, p: usize) -> Result<Self> {
        check_shape(n, p)?;
        Ok(Self { inner: DenseMatrix::zeros(n, p) })
    }

    pub fn n(&self) -> usize {
        self.inner.rows()
    }

    pub fn p(&self) -> usize {
        self.inner.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.inner.get(i, j)
    }

    pub fn as_matrix(&self) -> &DenseMatrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.inner
    }

    pub fn scale(&self, s: T) -> Self {
        Self { inner: self.inner.scale(s) }
    }
}

fn same_shape(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{}x{} vs {}x{}", a.0, a.1, b.0, b.1)));
    }
    Ok(())
}

/// Visits the mock lower triangle: `f(i, j)` for `j < p`, `i ≥ j`, in
/// column-major order.
fn for_each_lower(n: usize, p: usize, mut f: impl FnMut(usize, usize)) {
    for j in 0..p {
        for i in j..n {
            f(i, j);
        }
    }
}

/// `g̃_N(X, Y) = Σ_{i>j} X_ij Y_ij + Σ_i X_ii Y_ii / N_ii²`.
pub fn metric_l<T: Scalar>(n: &FactorMatrix<T>, x: &FactorTangent<T>, y: &FactorTangent<T>) -> Result<T> {
    same_shape((n.n(), n.p()), (x.n(), x.p()))?;
    same_shape((n.n(), n.p()), (y.n(), y.p()))?;
    let mut s = T::zero();
    for_each_lower(n.n(), n.p(), |i, j| {
        let xy = x.get(i, j) * y.get(i, j);
        if i == j {
            let d = n.get(i, i);
            s += xy / (d * d);
        } else {
            s += xy;
        }
    });
    Ok(s)
}

/// The geodesic from `N` with initial velocity `X`, evaluated at time `t`.
/// Defined for every real `t`.
pub fn geodesic_l<T: Scalar>(n: &FactorMatrix<T>, x: &FactorTangent<T>, t: T) -> Result<FactorMatrix<T>> {
    same_shape((n.n(), n.p()), (x.n(), x.p()))?;
    let out = DenseMatrix::from_fn(n.n(), n.p(), |i, j| {
        if i == j {
            let d = n.get(i, i);
            d * (t * x.get(i, i) / d).exp()
        } else if i > j {
            n.get(i, j) + t * x.get(i, j)
        } else {
            T::zero()
        }
    });
    FactorMatrix::new(out)
}

/// Riemannian exponential: the geodesic at `t = 1`.
pub fn exp_l<T: Scalar>(n: &FactorMatrix<T>, x: &FactorTangent<T>) -> Result<FactorMatrix<T>> {
    geodesic_l(n, x, T::one())
}

/// Riemannian logarithm: the initial velocity of the geodesic from `N`
/// reaching `K` at `t = 1`.
pub fn log_l<T: Scalar>(n: &FactorMatrix<T>, k: &FactorMatrix<T>) -> Result<FactorTangent<T>> {
    same_shape((n.n(), n.p()), (k.n(), k.p()))?;
    let out = DenseMatrix::from_fn(n.n(), n.p(), |i, j| {
        if i == j {
            let d = n.get(i, i);
            (k.get(i, i).ln() - d.ln()) * d
        } else if i > j {
            k.get(i, j) - n.get(i, j)
        } else {
            T::zero()
        }
    });
    Ok(FactorTangent::from_raw(out))
}

/// Geodesic distance.
pub fn distance_l<T: Scalar>(n: &FactorMatrix<T>, k: &FactorMatrix<T>) -> Result<T> {
    same_shape((n.n(), n.p()), (k.n(), k.p()))?;
    let mut s = T::zero();
    for_each_lower(n.n(), n.p(), |i, j| {
        let d = if i == j { k.get(i, i).ln() - n.get(i, i).ln() } else { k.get(i, j) - n.get(i, j) };
        s += d * d;
    });
    Ok(s.sqrt())
}

/// Dimension `np − p(p−1)/2` of the reduced Cholesky space.
pub fn manifold_dim(n: usize, p: usize) -> usize {
    n * p - p * (p.saturating_sub(1)) / 2
}

/// Global chart `(log N_ii, N_ij)`, coordinates ordered column-major over
/// the mock lower triangle.
pub fn chart<T: Scalar>(n: &FactorMatrix<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(manifold_dim(n.n(), n.p()));
    for_each_lower(n.n(), n.p(), |i, j| out.push(if i == j { n.get(i, i).ln() } else { n.get(i, j) }));
    out
}

/// Inverse of [`chart`].
pub fn chart_inverse<T: Scalar>(coords: &[T], n: usize, p: usize) -> Result<FactorMatrix<T>> {
    check_shape(n, p)?;
    let dim = manifold_dim(n, p);
    if coords.len() != dim {
        return Err(Error::Shape(format!("expected {dim} coordinates, got {}", coords.len())));
    }
    let mut m = DenseMatrix::zeros(n, p);
    let mut it = coords.iter();
    for_each_lower(n, p, |i, j| {
        let c = *it.next().expect("length checked");
        m.set(i, j, if i == j { c.exp() } else { c });
    });
    FactorMatrix::new(m)
}

/// `N₁ ⊕ N₂`: mock diagonals multiply, strictly lower parts add.
pub fn group_op<T: Scalar>(a: &FactorMatrix<T>, b: &FactorMatrix<T>) -> Result<FactorMatrix<T>> {
    same_shape((a.n(), a.p()), (b.n(), b.p()))?;
    let out = DenseMatrix::from_fn(a.n(), a.p(), |i, j| {
        if i == j {
            a.get(i, i) * b.get(i, i)
        } else if i > j {
            a.get(i, j) + b.get(i, j)
        } else {
            T::zero()
        }
    });
    FactorMatrix::new(out)
}

pub fn group_inverse<T: Scalar>(a: &FactorMatrix<T>) -> FactorMatrix<T> {
    let out = DenseMatrix::from_fn(a.n(), a.p(), |i, j| {
        if i == j {
            a.get(i, i).recip()
        } else if i > j {
            -a.get(i, j)
        } else {
            T::zero()
        }
    });
    FactorMatrix::from_raw(out)
}

pub fn group_identity<T: Scalar>(n: usize, p: usize) -> Result<FactorMatrix<T>> {
    FactorMatrix::mock_identity(n, p)
}

/// Differential of left translation by `K`: scales the mock diagonal of
/// `X` by `K_ii`. It does not depend on the base point.
pub fn translate_tangent<T: Scalar>(k: &FactorMatrix<T>, x: &FactorTangent<T>) -> Result<FactorTangent<T>> {
    same_shape((k.n(), k.p()), (x.n(), x.p()))?;
    let out = DenseMatrix::from_fn(x.n(), x.p(), |i, j| if i == j { k.get(i, i) * x.get(i, i) } else { x.get(i, j) });
    Ok(FactorTangent::from_raw(out))
}

/// Parallel transport of `X` from `N` to `K`: `Y_ii = (K_ii / N_ii) X_ii`,
/// strictly lower entries unchanged.
pub fn transport_l<T: Scalar>(n: &FactorMatrix<T>, k: &FactorMatrix<T>, x: &FactorTangent<T>) -> Result<FactorTangent<T>> {
    same_shape((n.n(), n.p()), (k.n(), k.p()))?;
    same_shape((n.n(), n.p()), (x.n(), x.p()))?;
    let out = DenseMatrix::from_fn(x.n(), x.p(), |i, j| {
        if i == j {
            k.get(i, i) / n.get(i, i) * x.get(i, i)
        } else {
            x.get(i, j)
        }
    });
    Ok(FactorTangent::from_raw(out))
}

/// Validates optional weights; `Ok(Some(i))` flags the degenerate case of a
/// single unit weight on input `i`.
pub(crate) fn check_weights<T: Scalar>(k: usize, weights: Option<&[T]>) -> Result<Option<usize>> {
    let Some(w) = weights else { return Ok(None) };
    if w.len() != k {
        return Err(Error::InvalidWeights(format!("{} weights for {k} inputs", w.len())));
    }
    if let Some(i) = w.iter().position(|&x| x == T::one()) {
        if w.iter().enumerate().all(|(j, &x)| j == i || x == T::zero()) {
            return Ok(Some(i));
        }
    }
    if let Some(x) = w.iter().find(|&&x| !(x > T::zero() && x < T::one())) {
        return Err(Error::InvalidWeights(format!("weight {x} outside (0, 1)")));
    }
    let total: T = w.iter().copied().sum();
    if (total - T::one()).abs() > T::tolerance(1e-10) {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    Ok(None)
}

/// Weighted Fréchet mean: geometric mean of the mock diagonals, arithmetic
/// mean of the strictly lower parts. Uniform weights when `weights` is `None`.
pub fn frechet_mean_l<T: Scalar>(factors: &[FactorMatrix<T>], weights: Option<&[T]>) -> Result<FactorMatrix<T>> {
    let first = factors.first().ok_or(Error::EmptyInput)?;
    let (n, p) = (first.n(), first.p());
    for f in factors {
        same_shape((n, p), (f.n(), f.p()))?;
    }
    if let Some(i) = check_weights(factors.len(), weights)? {
        return Ok(factors[i].clone());
    }
    let uniform = T::from_count(factors.len()).recip();
    let weight = |l: usize| weights.map_or(uniform, |w| w[l]);

    let mut acc = DenseMatrix::<T>::zeros(n, p);
    for (l, f) in factors.iter().enumerate() {
        let w = weight(l);
        for_each_lower(n, p, |i, j| {
            let v = if i == j { f.get(i, i).ln() } else { f.get(i, j) };
            let cur = acc.get(i, j);
            acc.set(i, j, cur + w * v);
        });
    }
    for i in 0..p {
        let v = acc.get(i, i).exp();
        acc.set(i, i, v);
    }
    FactorMatrix::new(acc)
}
