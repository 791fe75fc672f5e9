//! Dense complex matrices and the handful of factorizations the rest of the
//! crate leans on (rank, null space, orthonormal bases, solves, `exp`).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// Builds a matrix from real row-major data.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    assert_eq!(data.len(), rows * cols);
    CMatrix::from_fn(rows, cols, |i, j| c64(data[i * cols + j], 0.0))
}

pub fn diag(entries: &[Complex64]) -> CMatrix {
    let n = entries.len();
    let mut m = zeros(n, n);
    for (i, &e) in entries.iter().enumerate() {
        m[(i, i)] = e;
    }
    m
}

pub fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn check_square(m: &CMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn fro_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s = checked_svd(m).1;
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Spectral (operator 2-) norm.
pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn condition_number(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Full singular value decomposition `m = U diag(s) V^*` with `s` sorted
/// descending. `U` is `rows x k`, `V` is `cols x cols` (square, completed), where
/// `k = min(rows, cols)`.
pub struct FullSvd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub fn full_svd(m: &CMatrix) -> FullSvd {
    let (rows, cols) = m.shape();
    let (u, s, v_thin) = checked_svd(m);
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    let k = order.len();
    let mut us = zeros(rows, k);
    let mut v = zeros(cols, k);
    let mut sorted = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        us.set_column(dst, &u.column(src));
        v.set_column(dst, &v_thin.column(src));
        sorted.push(s[src]);
    }
    FullSvd {
        u: us,
        s: sorted,
        v: complete_unitary(v),
    }
}

/// Thin SVD `(U, s, V)` of `m`. The library routine can return an
/// inaccurate factorization for inputs with exactly zero rows or columns,
/// so the result is checked and, if needed, recomputed on `m Q` for a
/// fixed unitary `Q`.
fn checked_svd(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let scale = fro_norm(m);
    let attempt = |a: &CMatrix| {
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let v = svd.v_t.expect("v requested").adjoint();
        let s: Vec<f64> = svd.singular_values.iter().copied().collect();
        let sd = CMatrix::from_fn(s.len(), s.len(), |i, j| if i == j { c64(s[i], 0.0) } else { c64(0.0, 0.0) });
        let err = fro_norm(&(&u * sd * v.adjoint() - a));
        (u, s, v, err)
    };
    if m.is_empty() {
        return (zeros(m.nrows(), 0), Vec::new(), zeros(m.ncols(), 0));
    }
    let (u, s, v, err) = attempt(m);
    if err <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return (u, s, v);
    }
    let q = fixed_unitary(m.ncols());
    let (u2, s2, v2, err2) = attempt(&(m * &q));
    if err2 < err {
        (u2, s2, q * v2)
    } else {
        (u, s, v)
    }
}

/// A deterministic dense unitary matrix.
fn fixed_unitary(n: usize) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |i, j| {
        let t = (1 + i * n + j) as f64;
        c64((t * 0.754_877_666).sin(), (t * 0.569_840_290).cos())
    });
    a.qr().q()
}

/// Extends orthonormal columns to a square unitary matrix.
fn complete_unitary(v: CMatrix) -> CMatrix {
    let n = v.nrows();
    let mut cols: Vec<CMatrix> = (0..v.ncols()).map(|j| v.columns(j, 1).into_owned()).collect();
    while cols.len() < n {
        let mut best: Option<(f64, CMatrix)> = None;
        for e in 0..n {
            let mut x = zeros(n, 1);
            x[(e, 0)] = c64(1.0, 0.0);
            for _ in 0..2 {
                for q in &cols {
                    let c = (q.adjoint() * &x)[(0, 0)];
                    x -= q * c;
                }
            }
            let norm = fro_norm(&x);
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, x));
            }
        }
        let (norm, x) = best.expect("a candidate column");
        cols.push(x / c64(norm, 0.0));
    }
    let refs: Vec<&CMatrix> = cols.iter().collect();
    if refs.is_empty() {
        return zeros(n, 0);
    }
    hstack(&refs)
}

/// Numerical rank with absolute threshold `tol`.
pub fn rank(m: &CMatrix, tol: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis (as columns) of the null space, threshold `tol` on
/// singular values.
pub fn null_space(m: &CMatrix, tol: f64) -> CMatrix {
    let cols = m.ncols();
    if cols == 0 {
        return zeros(0, 0);
    }
    if m.nrows() == 0 {
        return identity(cols);
    }
    let svd = full_svd(m);
    let keep: Vec<usize> = (0..cols).filter(|&i| svd.s.get(i).map_or(true, |&s| s <= tol)).collect();
    let mut out = zeros(cols, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        out.set_column(dst, &svd.v.column(src));
    }
    out
}

/// Orthonormal basis of the column span, threshold `tol` on singular values.
pub fn column_span(m: &CMatrix, tol: f64) -> CMatrix {
    if m.ncols() == 0 || m.nrows() == 0 {
        return zeros(m.nrows(), 0);
    }
    let svd = full_svd(m);
    let keep = svd.s.iter().filter(|&&s| s > tol).count();
    svd.u.columns(0, keep).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the column span of an
/// orthonormal `basis` inside `C^n`.
pub fn orthogonal_complement(basis: &CMatrix, n: usize) -> CMatrix {
    if basis.ncols() == 0 {
        return identity(n);
    }
    null_space(&basis.adjoint(), 1e-10)
}

/// Residual of projecting `v` onto the span of orthonormal columns `basis`.
pub fn projection_residual(basis: &CMatrix, v: &CMatrix) -> f64 {
    if basis.ncols() == 0 {
        return fro_norm(v);
    }
    let proj = basis * (basis.adjoint() * v);
    fro_norm(&(v - proj))
}

/// Dimension of the sum of two column spans.
pub fn span_sum_dim(a: &CMatrix, b: &CMatrix, tol: f64) -> usize {
    let mut joined = zeros(a.nrows(), a.ncols() + b.ncols());
    joined.columns_mut(0, a.ncols()).copy_from(a);
    joined.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    rank(&joined, tol)
}

/// Orthonormal basis of the intersection of two column spans.
pub fn intersection(a: &CMatrix, b: &CMatrix, tol: f64) -> CMatrix {
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return zeros(n, 0);
    }
    let qa = column_span(a, tol);
    let qb = column_span(b, tol);
    let joined = hstack(&[&qa, &(-&qb)]);
    let ker = null_space(&joined, tol.max(1e-12) * 10.0);
    if ker.ncols() == 0 {
        return zeros(n, 0);
    }
    let coords = ker.rows(0, qa.ncols()).into_owned();
    column_span(&(qa * coords), 1e-8)
}

pub fn hstack(blocks: &[&CMatrix]) -> CMatrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.columns_mut(at, b.ncols()).copy_from(*b);
        at += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&CMatrix]) -> CMatrix {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.rows_mut(at, b.nrows()).copy_from(*b);
        at += b.nrows();
    }
    out
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    check_square(m, "matrix")?;
    if m.nrows() == 0 {
        return Ok(zeros(0, 0));
    }
    let cond = condition_number(m);
    if !cond.is_finite() || cond > 1e14 {
        return Err(Error::Singular(format!("condition number {cond:.3e}")));
    }
    m.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("LU inverse failed".into()))
}

/// Least-squares, minimum-norm solution of `a x = b` via the pseudo-inverse;
/// singular values below `tol` are discarded.
pub fn lstsq_min_norm(a: &CMatrix, b: &CMatrix, tol: f64) -> CMatrix {
    let svd = full_svd(a);
    let mut x = zeros(a.ncols(), b.ncols());
    for (k, &s) in svd.s.iter().enumerate() {
        if s <= tol {
            continue;
        }
        let coeff = svd.u.column(k).adjoint() * b / Complex64::from(s);
        x += svd.v.column(k) * coeff;
    }
    x
}

/// Column-major vectorization.
pub fn vectorize(m: &CMatrix) -> CMatrix {
    CMatrix::from_iterator(m.len(), 1, m.iter().copied())
}

pub fn unvectorize(v: &CMatrix, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_iterator(rows, cols, v.iter().copied())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Matrix exponential by scaling and squaring with a degree-18 Taylor
/// polynomial on the scaled matrix (norm at most 1/4).
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    if norm1 > 0.25 {
        squarings = (norm1 / 0.25).log2().ceil() as u32;
    }
    let scaled = a / Complex64::from(2f64.powi(squarings as i32));
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..=18 {
        term = &term * &scaled / Complex64::from(k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `z^K = exp(K log z)` on the principal branch of `log z`.
pub fn complex_power(z: Complex64, k: &CMatrix) -> CMatrix {
    expm(&(k * z.ln()))
}

pub fn is_diagonal(m: &CMatrix, tol: f64) -> bool {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && m[(i, j)].norm() > tol {
                return false;
            }
        }
    }
    true
}

pub fn is_upper_triangular(m: &CMatrix, tol: f64) -> bool {
    for i in 0..m.nrows() {
        for j in 0..i.min(m.ncols()) {
            if m[(i, j)].norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Product of a list of square matrices, left to right.
pub fn product(mats: &[CMatrix]) -> Option<CMatrix> {
    let mut it = mats.iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, m| acc * m))
}

/// Scale used by relative tolerances: max(1, Frobenius norm).
pub fn scale_of(m: &CMatrix) -> f64 {
    fro_norm(m).max(1.0)
}
