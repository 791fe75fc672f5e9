use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::matrix::{check_finite, condition_number, fro_norm, identity, inverse, zeros, CMatrix};
use super::weights::WeightDiagonal;
use crate::error::{Error, Result};

/// Default absolute threshold below which a coefficient counts as zero when
/// computing valuations.
pub const ZERO_TOL: f64 = 1e-10;

/// Condition number above which a leading coefficient is treated as singular.
pub const LEADING_COND_LIMIT: f64 = 1e12;

/// Truncated power series `sum_{j=0}^{N} A^j z^j` with matrix coefficients.
///
/// The order `N` is part of the value: results of arithmetic carry the
/// minimum order of their operands, and `mixed_orders` records whether a
/// truncation to a lower order happened on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeries {
    rows: usize,
    cols: usize,
    coeffs: Vec<CMatrix>,
    mixed_orders: bool,
}

impl MatrixSeries {
    pub fn new(coeffs: Vec<CMatrix>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::Invalid("series needs at least one coefficient".into()))?;
        let (rows, cols) = first.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::Shape("series coefficients must be non-empty".into()));
        }
        for (j, c) in coeffs.iter().enumerate() {
            if c.shape() != (rows, cols) {
                return Err(Error::Shape(format!(
                    "coefficient {j} is {}x{}, expected {rows}x{cols}",
                    c.nrows(),
                    c.ncols()
                )));
            }
            check_finite(c)?;
        }
        Ok(Self {
            rows,
            cols,
            coeffs,
            mixed_orders: false,
        })
    }

    pub fn zero(rows: usize, cols: usize, order: usize) -> Self {
        Self {
            rows,
            cols,
            coeffs: vec![zeros(rows, cols); order + 1],
            mixed_orders: false,
        }
    }

    /// A constant series `c + 0 z + ... + 0 z^order`.
    pub fn constant(c: CMatrix, order: usize) -> Self {
        let (rows, cols) = c.shape();
        let mut coeffs = vec![zeros(rows, cols); order + 1];
        coeffs[0] = c;
        Self {
            rows,
            cols,
            coeffs,
            mixed_orders: false,
        }
    }

    pub fn identity(n: usize, order: usize) -> Self {
        Self::constant(identity(n), order)
    }

    /// `c z^power`, truncated at `order`.
    pub fn monomial(c: CMatrix, power: usize, order: usize) -> Self {
        let mut s = Self::zero(c.nrows(), c.ncols(), order);
        if power <= order {
            s.coeffs[power] = c;
        }
        s
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> &CMatrix {
        &self.coeffs[j]
    }

    pub fn coeff_mut(&mut self, j: usize) -> &mut CMatrix {
        &mut self.coeffs[j]
    }

    pub fn into_coeffs(self) -> Vec<CMatrix> {
        self.coeffs
    }

    /// Whether some operation on the way truncated operands of unequal order.
    pub fn mixed_orders(&self) -> bool {
        self.mixed_orders
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn truncate(&self, order: usize) -> Self {
        let keep = order.min(self.order());
        Self {
            rows: self.rows,
            cols: self.cols,
            coeffs: self.coeffs[..=keep].to_vec(),
            mixed_orders: self.mixed_orders || keep < self.order(),
        }
    }

    /// Extends with zero coefficients; used only for series known to be
    /// polynomials (exact beyond their stored order).
    pub fn pad_polynomial(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() < order + 1 {
            coeffs.push(zeros(self.rows, self.cols));
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            coeffs,
            mixed_orders: self.mixed_orders,
        }
    }

    pub fn evaluate(&self, z: Complex64) -> CMatrix {
        // Horner
        let mut acc = zeros(self.rows, self.cols);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// `z d/dz` applied coefficientwise: `A^j -> j A^j`.
    pub fn euler_derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * Complex64::from(j as f64))
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            coeffs,
            mixed_orders: self.mixed_orders,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            mixed_orders: self.mixed_orders,
        }
    }

    pub fn conjugate_by(&self, left: &CMatrix, right: &CMatrix) -> Self {
        Self {
            rows: left.nrows(),
            cols: right.ncols(),
            coeffs: self.coeffs.iter().map(|c| left * c * right).collect(),
            mixed_orders: self.mixed_orders,
        }
    }

    /// Largest coefficient norm (Frobenius).
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(fro_norm).fold(0.0, f64::max)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Shape(format!(
                "cannot add {}x{} and {}x{} series",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let order = self.order().min(other.order());
        let coeffs = (0..=order).map(|j| f(&self.coeffs[j], &other.coeffs[j])).collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            coeffs,
            mixed_orders: self.mixed_orders || other.mixed_orders || self.order() != other.order(),
        })
    }

    /// Truncated Cauchy product.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{} series",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let order = self.order().min(other.order());
        let mut coeffs = vec![zeros(self.rows, other.cols); order + 1];
        for (j, out) in coeffs.iter_mut().enumerate() {
            for k in 0..=j {
                *out += &self.coeffs[k] * &other.coeffs[j - k];
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            coeffs,
            mixed_orders: self.mixed_orders || other.mixed_orders || self.order() != other.order(),
        })
    }

    /// Two-sided inverse up to the series order. Requires an invertible,
    /// reasonably conditioned leading coefficient.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Shape("only square series can be inverted".into()));
        }
        let cond = condition_number(&self.coeffs[0]);
        if !cond.is_finite() || cond > LEADING_COND_LIMIT {
            return Err(Error::SingularLeading { condition: cond });
        }
        let lead_inv = inverse(&self.coeffs[0])?;
        let n = self.rows;
        let mut out: Vec<CMatrix> = Vec::with_capacity(self.coeffs.len());
        out.push(lead_inv.clone());
        for k in 1..=self.order() {
            let mut acc = zeros(n, n);
            for i in 1..=k {
                acc += &self.coeffs[i] * &out[k - i];
            }
            out.push(-(&lead_inv * acc));
        }
        Ok(Self {
            rows: n,
            cols: n,
            coeffs: out,
            mixed_orders: self.mixed_orders,
        })
    }

    /// Valuation of entry `(i, m)`: index of the first coefficient above
    /// `tol`, or `None` if the entry vanishes through the stored order.
    pub fn entry_valuation(&self, i: usize, m: usize, tol: f64) -> Option<usize> {
        self.coeffs.iter().position(|c| c[(i, m)].norm() > tol)
    }

    /// Multiplies entry `(i, m)` by `z^{row_weights[i] - col_weights[m]}`,
    /// i.e. forms `z^Phi C z^{-Phi'}` for diagonal weight matrices.
    ///
    /// Coefficient indices are shifted per entry. Entries that vanish through
    /// the stored order are treated as structural zeros. A nonzero entry
    /// whose low coefficients cannot absorb a negative shift produces
    /// [`Error::NegativeValuation`]. The result order is lowered by the
    /// largest negative shift applied to a nonzero entry, since higher
    /// coefficients of the input are unknown.
    pub fn twist(&self, row_weights: &[i64], col_weights: &[i64], tol: f64) -> Result<Twisted> {
        if row_weights.len() != self.rows || col_weights.len() != self.cols {
            return Err(Error::Shape(format!(
                "weights of length {}/{} do not fit a {}x{} series",
                row_weights.len(),
                col_weights.len(),
                self.rows,
                self.cols
            )));
        }
        let order = self.order() as i64;
        let mut result_order = order;
        let mut min_valuation: Option<i64> = None;
        for i in 0..self.rows {
            for m in 0..self.cols {
                let Some(v) = self.entry_valuation(i, m, tol) else {
                    continue;
                };
                let shift = row_weights[i] - col_weights[m];
                let new_val = v as i64 + shift;
                if new_val < 0 {
                    return Err(Error::NegativeValuation {
                        row: i,
                        col: m,
                        order: -new_val,
                    });
                }
                min_valuation = Some(min_valuation.map_or(new_val, |x: i64| x.min(new_val)));
                if shift < 0 {
                    result_order = result_order.min(order + shift);
                }
            }
        }
        let result_order = result_order.max(0) as usize;
        let mut out = Self::zero(self.rows, self.cols, result_order);
        for i in 0..self.rows {
            for m in 0..self.cols {
                if self.entry_valuation(i, m, tol).is_none() {
                    continue;
                }
                let shift = row_weights[i] - col_weights[m];
                for (j, c) in self.coeffs.iter().enumerate() {
                    let target = j as i64 + shift;
                    if target >= 0 && target <= result_order as i64 {
                        out.coeffs[target as usize][(i, m)] = c[(i, m)];
                    }
                }
            }
        }
        out.mixed_orders = self.mixed_orders || result_order < self.order();
        Ok(Twisted {
            series: out,
            min_valuation,
        })
    }

    /// Exact polynomial `z^Phi C z^{-Phi}` for a constant matrix `c` that is
    /// block-upper-triangular with respect to non-increasing `phi`.
    pub fn from_weight_conjugation(c: &CMatrix, phi: &WeightDiagonal) -> Result<Self> {
        let w = phi.entries();
        let gap = phi.max_gap() as usize;
        let constant = Self::constant(c.clone(), gap);
        let t = constant.twist(w, w, 0.0)?;
        // A constant input is a polynomial, so no coefficient is lost.
        Ok(t.series.pad_polynomial(gap))
    }
}

/// Result of [`MatrixSeries::twist`].
#[derive(Debug, Clone)]
pub struct Twisted {
    pub series: MatrixSeries,
    /// Smallest valuation over nonzero entries; `None` for the zero series.
    pub min_valuation: Option<i64>,
}

impl Add for &MatrixSeries {
    type Output = MatrixSeries;
    fn add(self, rhs: Self) -> MatrixSeries {
        self.try_add(rhs).expect("series shapes must agree")
    }
}

impl Sub for &MatrixSeries {
    type Output = MatrixSeries;
    fn sub(self, rhs: Self) -> MatrixSeries {
        self.try_sub(rhs).expect("series shapes must agree")
    }
}

impl Mul for &MatrixSeries {
    type Output = MatrixSeries;
    fn mul(self, rhs: Self) -> MatrixSeries {
        self.try_mul(rhs).expect("series shapes must agree")
    }
}

impl Neg for &MatrixSeries {
    type Output = MatrixSeries;
    fn neg(self) -> MatrixSeries {
        self.scale(Complex64::from(-1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::matrix::{c64, from_real_rows, max_abs};

    fn coeffwise_close(a: &MatrixSeries, b: &MatrixSeries, tol: f64) -> bool {
        a.order() == b.order()
            && a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| max_abs(&(x - y)) <= tol)
    }

    fn sample(order: usize) -> MatrixSeries {
        let coeffs = (0..=order)
            .map(|j| {
                CMatrix::from_fn(2, 2, |r, c| c64((r + 2 * c + j) as f64 * 0.3 - 0.5, (j as f64) * 0.1 - r as f64))
            })
            .collect();
        MatrixSeries::new(coeffs).unwrap()
    }

    #[test]
    fn identity_is_multiplicative_unit() {
        let s = sample(4);
        let id = MatrixSeries::identity(2, 4);
        assert!(coeffwise_close(&(&id * &s), &s, 0.0));
    }

    #[test]
    fn additive_inverse_gives_zero() {
        let s = sample(3);
        let z = &s + &(-&s);
        assert!(z.coeffs().iter().all(|c| max_abs(c) == 0.0));
    }

    #[test]
    fn monomial_product() {
        let zi = MatrixSeries::monomial(identity(2), 1, 2);
        let p = &zi * &zi;
        assert_eq!(p.order(), 2);
        assert_eq!(p.coeff(2), &identity(2));
        assert_eq!(max_abs(p.coeff(0)) + max_abs(p.coeff(1)), 0.0);
    }

    #[test]
    fn mixed_orders_truncate_and_flag() {
        let a = sample(5);
        let b = sample(2);
        let p = &a * &b;
        assert_eq!(p.order(), 2);
        assert!(p.mixed_orders());
        assert!(!(&a * &a).mixed_orders());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = sample(1);
        let b = MatrixSeries::zero(3, 3, 1);
        assert!(matches!(a.try_add(&b), Err(Error::Shape(_))));
        assert!(matches!(a.try_mul(&b), Err(Error::Shape(_))));
    }

    #[test]
    fn inverse_of_identity() {
        let id = MatrixSeries::identity(3, 5);
        assert!(coeffwise_close(&id.inverse().unwrap(), &id, 0.0));
    }

    #[test]
    fn inverse_is_geometric_series() {
        let e = from_real_rows(2, 2, &[0.0, 1.0, 2.0, 0.5]);
        let s = MatrixSeries::new(vec![identity(2), e.clone(), zeros(2, 2), zeros(2, 2)]).unwrap();
        let inv = s.inverse().unwrap();
        let expected = [identity(2), -e.clone(), &e * &e, -(&e * &e * &e)];
        for (got, want) in inv.coeffs().iter().zip(expected.iter()) {
            assert!(max_abs(&(got - want)) < 1e-14);
        }
    }

    #[test]
    fn inverse_multiplies_back_to_identity() {
        // diag(2, 4) + z * ones
        let lead = from_real_rows(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let ones = from_real_rows(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let mut coeffs = vec![lead, ones];
        coeffs.extend((0..6).map(|_| zeros(2, 2)));
        let s = MatrixSeries::new(coeffs).unwrap();
        let inv = s.inverse().unwrap();
        let id = MatrixSeries::identity(2, 7);
        assert!(coeffwise_close(&(&s * &inv), &id, 1e-13));
        assert!(coeffwise_close(&(&inv * &s), &id, 1e-13));
    }

    #[test]
    fn singular_leading_coefficient() {
        let s = MatrixSeries::constant(from_real_rows(2, 2, &[1.0, 1.0, 1.0, 1.0]), 2);
        assert!(matches!(s.inverse(), Err(Error::SingularLeading { .. })));
    }

    #[test]
    fn twist_identity_with_equal_weights() {
        let id = MatrixSeries::identity(3, 2);
        let w = [2, 0, -1];
        let t = id.twist(&w, &w, ZERO_TOL).unwrap();
        assert!(coeffwise_close(&t.series, &id, 0.0));
        assert_eq!(t.min_valuation, Some(0));
    }

    #[test]
    fn twist_block_upper_triangular_constant_is_polynomial() {
        // phi = (1, 0), phi' = (1, 0); lower-left entry (phi^2 < phi'^1) is zero.
        let c = from_real_rows(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let s = MatrixSeries::constant(c, 0);
        let t = s.twist(&[1, 0], &[1, 0], ZERO_TOL).unwrap();
        assert_eq!(t.series.order(), 0);
        let p = MatrixSeries::from_weight_conjugation(
            &from_real_rows(2, 2, &[1.0, 2.0, 0.0, 3.0]),
            &WeightDiagonal::new(vec![1, 0]).unwrap(),
        )
        .unwrap();
        assert_eq!(p.order(), 1);
        assert_eq!(p.coeff(1)[(0, 1)], c64(2.0, 0.0));
        assert_eq!(p.coeff(0)[(0, 1)], c64(0.0, 0.0));
    }

    #[test]
    fn twist_detects_poles() {
        let s = MatrixSeries::constant(from_real_rows(2, 2, &[1.0, 1.0, 1.0, 1.0]), 3);
        let err = s.twist(&[0, 0], &[1, 1], ZERO_TOL).unwrap_err();
        assert!(matches!(err, Error::NegativeValuation { order: 1, .. }));
    }

    #[test]
    fn twist_absorbs_negative_shift_into_vanishing_low_terms() {
        let s = MatrixSeries::monomial(from_real_rows(1, 1, &[5.0]), 2, 4);
        let t = s.twist(&[0], &[1], ZERO_TOL).unwrap();
        assert_eq!(t.series.order(), 3);
        assert_eq!(t.min_valuation, Some(1));
        assert_eq!(t.series.coeff(1)[(0, 0)], c64(5.0, 0.0));
    }
}
