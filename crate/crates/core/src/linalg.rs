//! Dense decompositions: symmetric eigenproblems, sign-normalized QR of wide
//! matrices, triangular solves and the spectral norm.
//!
//! The symmetric eigensolver reduces to tridiagonal form with Householder
//! reflectors and then runs implicit QL iterations. When only the leading
//! `k` eigenpairs are required the QL sweep runs without accumulating
//! rotations and the eigenvectors are recovered by inverse iteration on the
//! tridiagonal matrix, which is several times cheaper for `k ≪ n`.

use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix};
use crate::scalar::Scalar;

/// Eigenvalues sorted in descending order with the matching orthonormal
/// eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: DenseMatrix<T>,
}

impl<T: Scalar> SymEigen<T> {
    /// `U Λ Uᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let scaled = DenseMatrix::from_fn(self.vectors.rows(), self.vectors.cols(), |i, j| {
            self.vectors.get(i, j) * self.values[j]
        });
        scaled.try_matmul_transpose(&self.vectors).expect("conforming shapes")
    }
}

/// Relative eigenvalue threshold below which an eigenvalue counts as zero.
pub fn rank_threshold<T: Scalar>(lambda_max: T) -> T {
    T::tolerance(1e-10) * T::one().max(lambda_max.abs())
}

/// Number of eigenvalues above the rank threshold.
pub fn numerical_rank<T: Scalar>(values: &[T]) -> usize {
    let lmax = values.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let thr = rank_threshold(lmax);
    values.iter().filter(|&&x| x > thr).count()
}

fn check_symmetric<T: Scalar>(s: &DenseMatrix<T>) -> Result<()> {
    if !s.is_square() {
        return Err(Error::InvalidInput(format!("{}x{} matrix is not square", s.rows(), s.cols())));
    }
    if !s.is_symmetric(T::tolerance(1e-10)) {
        return Err(Error::InvalidInput("matrix is not symmetric".into()));
    }
    Ok(())
}

/// Householder reduction `A = Q T Qᵀ` of a symmetric matrix.
struct Tridiagonal<T> {
    n: usize,
    /// Diagonal of `T`.
    d: Vec<T>,
    /// `e[i] = T[i+1][i]`; the last slot is zero.
    e: Vec<T>,
    /// Reflectors `(k, beta, v)` acting on indices `k+1..n`.
    reflectors: Vec<(usize, T, Vec<T>)>,
}

impl<T: Scalar> Tridiagonal<T> {
    fn reduce(s: &DenseMatrix<T>) -> Self {
        let n = s.rows();
        let mut a = s.symmetrized().into_vec();
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        let mut reflectors = Vec::new();
        let mut p = vec![T::zero(); n];

        for k in 0..n.saturating_sub(2) {
            let m = n - k - 1;
            let mut v: Vec<T> = (0..m).map(|i| a[(k + 1 + i) * n + k]).collect();
            let tail: T = v[1..].iter().map(|&x| x * x).sum();
            d[k] = a[k * n + k];
            if tail == T::zero() {
                e[k] = v[0];
                continue;
            }
            let norm = (v[0] * v[0] + tail).sqrt();
            let alpha = if v[0] > T::zero() { -norm } else { norm };
            v[0] -= alpha;
            let vtv = v[0] * v[0] + tail;
            let beta = T::lit(2.0) / vtv;
            e[k] = alpha;

            // p = beta * A22 v
            for i in 0..m {
                let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
                p[i] = beta * dot(row, &v);
            }
            let kappa = T::lit(0.5) * beta * dot(&p[..m], &v);
            for i in 0..m {
                p[i] -= kappa * v[i];
            }
            // A22 -= v wᵀ + w vᵀ
            for i in 0..m {
                let (vi, wi) = (v[i], p[i]);
                let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
                for j in 0..m {
                    row[j] -= vi * p[j] + wi * v[j];
                }
            }
            reflectors.push((k, beta, v));
        }
        if n >= 2 {
            d[n - 2] = a[(n - 2) * n + n - 2];
            e[n - 2] = a[(n - 1) * n + n - 2];
        }
        if n >= 1 {
            d[n - 1] = a[(n - 1) * n + n - 1];
        }
        Self { n, d, e, reflectors }
    }

    /// `Qᵀ` as a dense matrix (rows are the columns of `Q`).
    fn q_transpose(&self) -> Vec<T> {
        let n = self.n;
        let mut q = DenseMatrix::<T>::identity(n).into_vec();
        // Q = H_0 H_1 ⋯; build by applying from the right-most reflector.
        for (k, beta, v) in self.reflectors.iter().rev() {
            let off = k + 1;
            for col in off..n {
                let mut s = T::zero();
                for (i, &vi) in v.iter().enumerate() {
                    s += vi * q[(off + i) * n + col];
                }
                s *= *beta;
                for (i, &vi) in v.iter().enumerate() {
                    q[(off + i) * n + col] -= s * vi;
                }
            }
        }
        // transpose in place
        for i in 0..n {
            for j in 0..i {
                q.swap(i * n + j, j * n + i);
            }
        }
        q
    }

    /// Applies `Q` to a vector in place.
    fn apply_q(&self, x: &mut [T]) {
        for (k, beta, v) in self.reflectors.iter().rev() {
            let off = k + 1;
            let s = *beta * dot(v, &x[off..]);
            for (xi, &vi) in x[off..].iter_mut().zip(v) {
                *xi -= s * vi;
            }
        }
    }
}

/// Implicit QL on a symmetric tridiagonal matrix. When `vt` is given its
/// rows are rotated alongside, so on exit row `i` holds the eigenvector of
/// `d[i]`.
fn tridiagonal_ql<T: Scalar>(d: &mut [T], e: &mut [T], mut vt: Option<&mut [T]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let eps = T::epsilon();
    let two = T::lit(2.0);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let max_iter = 60 * n.max(1);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::ConvergenceFailure);
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(vt) = vt.as_deref_mut() {
                        let (head, tail) = vt.split_at_mut((i + 1) * n);
                        let ri = &mut head[i * n..];
                        let ri1 = &mut tail[..n];
                        for (a, b) in ri.iter_mut().zip(ri1.iter_mut()) {
                            let h = *b;
                            *b = s * *a + c * h;
                            *a = c * *a - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Flips the sign of each column so that its largest-magnitude entry (first
/// one on ties) is positive.
fn normalize_column_signs<T: Scalar>(vectors: &mut DenseMatrix<T>) {
    let (rows, cols) = vectors.shape();
    for j in 0..cols {
        let mut best = 0;
        let mut best_abs = T::zero();
        for i in 0..rows {
            let a = vectors.get(i, j).abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if vectors.get(best, j) < T::zero() {
            for i in 0..rows {
                let v = vectors.get(i, j);
                vectors.set(i, j, -v);
            }
        }
    }
}

/// Full symmetric eigendecomposition `S = U Λ Uᵀ`, eigenvalues descending.
pub fn sym_eig<T: Scalar>(s: &DenseMatrix<T>) -> Result<SymEigen<T>> {
    check_symmetric(s)?;
    let n = s.rows();
    let tri = Tridiagonal::reduce(s);
    let mut vt = tri.q_transpose();
    let (mut d, mut e) = (tri.d.clone(), tri.e.clone());
    tridiagonal_ql(&mut d, &mut e, Some(&mut vt))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = DenseMatrix::from_fn(n, n, |i, j| vt[order[j] * n + i]);
    normalize_column_signs(&mut vectors);
    Ok(SymEigen { values, vectors })
}

/// Eigenvalues only, descending.
pub fn sym_eigenvalues<T: Scalar>(s: &DenseMatrix<T>) -> Result<Vec<T>> {
    check_symmetric(s)?;
    let tri = Tridiagonal::reduce(s);
    let (mut d, mut e) = (tri.d, tri.e);
    tridiagonal_ql(&mut d, &mut e, None)?;
    d.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    Ok(d)
}

/// The `k` largest eigenpairs of a symmetric matrix, eigenvalues descending,
/// eigenvectors as columns of an `n × k` matrix.
pub fn sym_eig_top<T: Scalar>(s: &DenseMatrix<T>, k: usize) -> Result<SymEigen<T>> {
    check_symmetric(s)?;
    let n = s.rows();
    if k > n {
        return Err(Error::InvalidInput(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    if k == 0 {
        return Ok(SymEigen { values: vec![], vectors: DenseMatrix::zeros(n, 0) });
    }
    if 2 * k >= n {
        let full = sym_eig(s)?;
        return Ok(SymEigen {
            values: full.values[..k].to_vec(),
            vectors: full.vectors.leading_columns(k),
        });
    }
    let tri = Tridiagonal::reduce(s);
    let (mut d, mut e) = (tri.d.clone(), tri.e.clone());
    tridiagonal_ql(&mut d, &mut e, None)?;
    d.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let values: Vec<T> = d[..k].to_vec();

    let tnorm = tri
        .d
        .iter()
        .zip(&tri.e)
        .fold(T::zero(), |m, (&a, &b)| m.max(a.abs() + T::lit(2.0) * b.abs()))
        .max(T::min_positive_value());
    let cluster_gap = T::lit(1e-3) * tnorm;
    let min_sep = T::lit(10.0) * T::epsilon() * tnorm;

    let mut tri_vectors: Vec<Vec<T>> = Vec::with_capacity(k);
    let mut cluster_start = 0;
    let mut prev_shift = T::infinity();
    for (j, &lambda) in values.iter().enumerate() {
        if j > 0 && values[j - 1] - lambda > cluster_gap {
            cluster_start = j;
        }
        let mut shift = lambda;
        if j > cluster_start && shift > prev_shift - min_sep {
            shift = prev_shift - min_sep;
        }
        prev_shift = shift;

        // deterministic, non-degenerate start vector
        let mut x: Vec<T> =
            (0..n).map(|i| T::one() + T::lit(0.1) * T::from_count((i * 7 + j * 3) % 11)).collect();
        for _ in 0..4 {
            x = solve_shifted_tridiagonal(&tri.d, &tri.e, shift, &x, tnorm);
            for prev in &tri_vectors[cluster_start..j] {
                let c = dot(prev, &x);
                for (xi, &pi) in x.iter_mut().zip(prev) {
                    *xi -= c * pi;
                }
            }
            let norm = dot(&x, &x).sqrt();
            if !(norm.is_finite() && norm > T::zero()) {
                return Err(Error::ConvergenceFailure);
            }
            for xi in &mut x {
                *xi /= norm;
            }
        }
        tri_vectors.push(x);
    }

    let mut vectors = DenseMatrix::zeros(n, k);
    for (j, mut y) in tri_vectors.into_iter().enumerate() {
        tri.apply_q(&mut y);
        for (i, &v) in y.iter().enumerate() {
            vectors.set(i, j, v);
        }
    }
    normalize_column_signs(&mut vectors);
    Ok(SymEigen { values, vectors })
}

/// Solves `(T − σI) x = b` for symmetric tridiagonal `T` by Gaussian
/// elimination with partial pivoting. Exactly singular pivots are replaced
/// by a tiny multiple of `‖T‖`, as inverse iteration requires.
fn solve_shifted_tridiagonal<T: Scalar>(d: &[T], e: &[T], shift: T, b: &[T], tnorm: T) -> Vec<T> {
    let n = d.len();
    let tiny = T::epsilon() * tnorm;
    // Row i of U holds (u0, u1, u2) at columns (i, i+1, i+2).
    let mut u0: Vec<T> = d.iter().map(|&x| x - shift).collect();
    let mut u1: Vec<T> = (0..n).map(|i| if i + 1 < n { e[i] } else { T::zero() }).collect();
    let mut u2 = vec![T::zero(); n];
    let mut rhs = b.to_vec();
    let mut low: Vec<T> = (0..n).map(|i| if i + 1 < n { e[i] } else { T::zero() }).collect();

    for i in 0..n.saturating_sub(1) {
        // candidate rows: i (u0[i], u1[i], u2[i]) and i+1 (low[i], u0[i+1], u1[i+1])
        if low[i].abs() > u0[i].abs() {
            let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
            u0[i] = low[i];
            u1[i] = u0[i + 1];
            u2[i] = u1[i + 1];
            low[i] = a0;
            u0[i + 1] = a1;
            u1[i + 1] = a2;
            rhs.swap(i, i + 1);
        }
        if u0[i] == T::zero() {
            u0[i] = tiny;
        }
        let factor = low[i] / u0[i];
        u0[i + 1] -= factor * u1[i];
        u1[i + 1] -= factor * u2[i];
        let r = rhs[i];
        rhs[i + 1] -= factor * r;
    }
    if n > 0 && u0[n - 1] == T::zero() {
        u0[n - 1] = tiny;
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / u0[i];
    }
    // rescale to avoid overflow across iterations
    let m = x.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if m > T::zero() && m.is_finite() {
        for v in &mut x {
            *v /= m;
        }
    }
    x
}

/// QR decomposition of a wide `p × n` matrix (`p ≤ n`) with the mock
/// diagonal of `R` made strictly positive.
///
/// `Q` is `p × p` orthogonal and `R` is `p × n` with `R_ij = 0` for `i > j`.
pub fn qr_wide<T: Scalar>(a: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    let (p, n) = a.shape();
    if p > n {
        return Err(Error::Shape(format!("qr_wide needs p <= n, got {p}x{n}")));
    }
    let scale = a.frobenius_norm();
    let tol = T::tolerance(1e-13) * scale;
    let mut r = a.clone();
    let mut q = DenseMatrix::<T>::identity(p);

    for k in 0..p {
        let tail: T = (k + 1..p).map(|i| r.get(i, k) * r.get(i, k)).sum();
        if tail > T::zero() {
            let x0 = r.get(k, k);
            let norm = (x0 * x0 + tail).sqrt();
            let alpha = if x0 > T::zero() { -norm } else { norm };
            let mut v: Vec<T> = (k..p).map(|i| r.get(i, k)).collect();
            v[0] -= alpha;
            let beta = T::lit(2.0) / (v[0] * v[0] + tail);
            for col in k..n {
                let s = beta * (k..p).map(|i| v[i - k] * r.get(i, col)).sum::<T>();
                for i in k..p {
                    let val = r.get(i, col) - s * v[i - k];
                    r.set(i, col, val);
                }
            }
            // Q ← Q H
            for row in 0..p {
                let s = beta * (k..p).map(|i| q.get(row, i) * v[i - k]).sum::<T>();
                for i in k..p {
                    let val = q.get(row, i) - s * v[i - k];
                    q.set(row, i, val);
                }
            }
            for i in k + 1..p {
                r.set(i, k, T::zero());
            }
        }
        if r.get(k, k).abs() <= tol || scale == T::zero() {
            return Err(Error::RankDeficient(k + 1));
        }
    }
    for i in 0..p {
        if r.get(i, i) < T::zero() {
            for v in r.row_mut(i) {
                *v = -*v;
            }
            for row in 0..p {
                let v = q.get(row, i);
                q.set(row, i, -v);
            }
        }
    }
    Ok((q, r))
}

/// Solves `L X = B` for square lower-triangular `L` by forward substitution.
pub fn solve_lower_triangular<T: Scalar>(l: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = l.rows();
    if !l.is_square() || b.rows() != n {
        return Err(Error::Shape(format!(
            "cannot solve {}x{} triangular system with {}x{} right-hand side",
            l.rows(),
            l.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let m = b.cols();
    let mut x = b.clone();
    for i in 0..n {
        let lii = l.get(i, i);
        if lii == T::zero() {
            return Err(Error::InvalidInput(format!("singular triangular matrix at row {}", i + 1)));
        }
        for k in 0..i {
            let lik = l.get(i, k);
            if lik == T::zero() {
                continue;
            }
            for j in 0..m {
                let v = x.get(i, j) - lik * x.get(k, j);
                x.set(i, j, v);
            }
        }
        for v in x.row_mut(i) {
            *v /= lii;
        }
    }
    Ok(x)
}

/// Largest singular value, via the eigenvalues of the smaller Gram matrix.
pub fn spectral_norm<T: Scalar>(a: &DenseMatrix<T>) -> T {
    let gram = if a.rows() <= a.cols() { a.gram_outer() } else { a.transpose().gram_outer() };
    let lmax = sym_eigenvalues(&gram).ok().and_then(|v| v.first().copied()).unwrap_or_else(T::zero);
    lmax.max(T::zero()).sqrt()
}

/// Frobenius norm; provided alongside [`spectral_norm`] for symmetry of the API.
pub fn frobenius_norm<T: Scalar>(a: &DenseMatrix<T>) -> T {
    a.frobenius_norm()
}
