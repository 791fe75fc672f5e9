//! Local logarithmic connections `d + A(z) dz/z` at one puncture: integer
//! weights, normal trivialisations and their convergence diagnostic.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::algebra::matrix::{
    c64, check_square, expm, fro_norm, identity, kron, max_abs, op_norm, scale_of, singular_values, zeros, CMatrix,
};
use crate::algebra::series::MatrixSeries;
use crate::algebra::weights::WeightDiagonal;
use crate::error::{Error, Result};
use crate::spectral::{block_form, cluster_labels, triangular_sylvester, CLUSTER_TOL};
use crate::verify::ode::{integrate_linear, OdeOptions};

/// Offsets from an integer below this (relative) size are snapped onto it
/// when taking integer parts of exponents.
pub const WEIGHT_SNAP: f64 = 1e-9;

/// `d + A(z) dz/z` with `A` a square truncated series; the residue is `A^0`.
#[derive(Debug, Clone)]
pub struct LocalLogConnection {
    a: MatrixSeries,
}

impl LocalLogConnection {
    pub fn new(a: MatrixSeries) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Shape(format!(
                "connection matrix must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        Ok(Self { a })
    }

    pub fn constant(a0: CMatrix, order: usize) -> Result<Self> {
        check_square(&a0, "residue")?;
        Self::new(MatrixSeries::constant(a0, order))
    }

    pub fn matrix(&self) -> &MatrixSeries {
        &self.a
    }

    pub fn residue(&self) -> &CMatrix {
        self.a.coeff(0)
    }

    pub fn rank(&self) -> usize {
        self.a.rows()
    }

    pub fn order(&self) -> usize {
        self.a.order()
    }
}

/// `floor(x)`, except that values within a relative `WEIGHT_SNAP` of an
/// integer are taken to be that integer.
pub fn snapped_floor(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= WEIGHT_SNAP * x.abs().max(1.0) {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// Per-eigenvalue integer weights `floor(-Re lambda)`, computed from cluster
/// means so that numerically split copies of one eigenvalue agree.
fn weights_per_eigenvalue(values: &[Complex64], abs_tol: f64) -> Vec<i64> {
    let labels = cluster_labels(values, abs_tol);
    let nclusters = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sums = vec![(c64(0.0, 0.0), 0usize); nclusters];
    for (v, &l) in values.iter().zip(&labels) {
        sums[l].0 += v;
        sums[l].1 += 1;
    }
    labels
        .iter()
        .map(|&l| {
            let mean = sums[l].0 / sums[l].1 as f64;
            snapped_floor(-mean.re)
        })
        .collect()
}

/// The integer weights of a residue: `floor(-Re lambda)` over its
/// eigenvalues with multiplicity, non-increasing.
pub fn integer_weights(a0: &CMatrix) -> Result<WeightDiagonal> {
    check_square(a0, "residue")?;
    let ev = crate::spectral::eigenvalues(a0)?;
    WeightDiagonal::sorted(weights_per_eigenvalue(&ev, CLUSTER_TOL * scale_of(a0)))
}

#[derive(Debug, Clone, Copy)]
pub struct NormalFormOptions {
    pub cluster_tol: f64,
    /// Relative smallest singular value of a Sylvester operator below which
    /// a warning is recorded.
    pub near_resonance: f64,
    /// Relative smallest singular value below which the solve is refused.
    pub singular: f64,
}

impl Default for NormalFormOptions {
    fn default() -> Self {
        Self {
            cluster_tol: CLUSTER_TOL,
            near_resonance: 1e-8,
            singular: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormalFormWarning {
    NearResonance {
        block_row: usize,
        block_col: usize,
        order: usize,
        sigma_min: f64,
    },
    /// The coupling of two weight classes sits beyond the truncation order
    /// and was set to zero.
    UndeterminedCoupling { block_row: usize, block_col: usize, gap: i64 },
    /// Separating the weight classes of the residue is ill-conditioned.
    IllConditionedArrangement { coupling: f64 },
}

/// A normal trivialisation: after the constant gauge `t`, the series gauge
/// `m` (with `m^0 = I`) carries `t^{-1} A t` to `z^phi (-k - phi) z^{-phi}`.
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub m: MatrixSeries,
    pub k: CMatrix,
    pub phi: WeightDiagonal,
    pub t: CMatrix,
    pub t_inv: CMatrix,
    /// `t^{-1} A t`, with the residue replaced by its exact block diagonal.
    pub arranged: MatrixSeries,
    /// `z^phi (-k - phi) z^{-phi}` as an exact polynomial, padded to at
    /// least the order of `m`.
    pub b: MatrixSeries,
    pub warnings: Vec<NormalFormWarning>,
}

impl NormalForm {
    /// A connection that is already normal: `m = I`, `t = I`.
    pub fn from_parts(k: CMatrix, phi: WeightDiagonal, order: usize) -> Result<Self> {
        let b = normal_connection_matrix(&k, &phi)?;
        let r = k.nrows();
        let b = b.pad_polynomial(order);
        let arranged = b.truncate(order);
        Ok(Self {
            m: MatrixSeries::identity(r, order),
            k,
            phi,
            t: identity(r),
            t_inv: identity(r),
            arranged,
            b,
            warnings: Vec::new(),
        })
    }

    pub fn order(&self) -> usize {
        self.m.order()
    }

    /// `exp(2 pi i k)`, the monodromy of the normal frame.
    pub fn monodromy(&self) -> CMatrix {
        expm(&(&self.k * c64(0.0, 2.0 * PI)))
    }

    /// Coefficientwise norms of `z m' - (m b - arranged m)`.
    pub fn gauge_residuals(&self) -> Vec<f64> {
        let n = self.order();
        let r = self.k.nrows();
        (0..=n)
            .map(|j| {
                let mut res = self.m.coeff(j) * c64(j as f64, 0.0);
                for k in 0..=j {
                    res -= self.m.coeff(k) * self.b.coeff(j - k);
                    res += self.arranged.coeff(j - k) * self.m.coeff(k);
                }
                debug_assert_eq!(res.nrows(), r);
                fro_norm(&res)
            })
            .collect()
    }
}

/// `z^phi (-k - phi) z^{-phi}` as a polynomial of degree `max gap`. Fails if
/// `k` has a nonzero block below the weight-block diagonal.
pub fn normal_connection_matrix(k: &CMatrix, phi: &WeightDiagonal) -> Result<MatrixSeries> {
    check_square(k, "normalized logarithm")?;
    if k.nrows() != phi.len() {
        return Err(Error::Shape(format!("{} weights for rank {}", phi.len(), k.nrows())));
    }
    let c = -(k + phi.to_matrix());
    MatrixSeries::from_weight_conjugation(&c, phi)
}

/// Computes a normal trivialisation by the order-by-order gauge recursion.
pub fn normal_form(conn: &LocalLogConnection) -> Result<NormalForm> {
    normal_form_with(conn, &NormalFormOptions::default())
}

pub fn normal_form_with(conn: &LocalLogConnection, opts: &NormalFormOptions) -> Result<NormalForm> {
    let a0 = conn.residue();
    let r = conn.rank();
    let order = conn.order();
    let scale = scale_of(a0);
    let abs_tol = opts.cluster_tol * scale;
    let mut warnings = Vec::new();

    // Constant gauge: block diagonalize the residue by weight class, higher
    // weights first.
    let form = block_form(
        a0,
        |ev| {
            let w = weights_per_eigenvalue(ev, abs_tol);
            let mut distinct = w.clone();
            distinct.sort_unstable_by(|a, b| b.cmp(a));
            distinct.dedup();
            w.iter().map(|x| distinct.iter().position(|d| d == x).unwrap_or(0)).collect()
        },
        false,
    )?;
    if form.coupling > 1e12 {
        return Err(Error::IllConditionedBlock {
            block_row: 0,
            block_col: 0,
            order: 0,
        });
    }
    if form.coupling > crate::spectral::COUPLING_LIMIT {
        warnings.push(NormalFormWarning::IllConditionedArrangement { coupling: form.coupling });
    }
    let ranges = form.ranges.clone();
    let nb = ranges.len();
    let psi: Vec<i64> = (0..nb)
        .map(|b| {
            let blk = &form.blocks[b];
            let ev: Vec<Complex64> = (0..blk.nrows()).map(|i| blk[(i, i)]).collect();
            let mean = ev.iter().sum::<Complex64>() / ev.len() as f64;
            snapped_floor(-mean.re)
        })
        .collect();
    let mut phi_entries = Vec::with_capacity(r);
    for (b, rg) in ranges.iter().enumerate() {
        phi_entries.extend(std::iter::repeat(psi[b]).take(rg.len()));
    }
    let phi = WeightDiagonal::new(phi_entries)?;

    let t = form.transform.clone();
    let t_inv = form.transform_inv.clone();
    let mut a0_arr = zeros(r, r);
    for (b, rg) in ranges.iter().enumerate() {
        a0_arr.view_mut((rg.start, rg.start), (rg.len(), rg.len())).copy_from(&form.blocks[b]);
    }
    let mut arranged_coeffs = vec![a0_arr.clone()];
    for j in 1..=order {
        arranged_coeffs.push(&t_inv * conn.matrix().coeff(j) * &t);
    }
    let a = arranged_coeffs;

    let mut k = zeros(r, r);
    for (b, rg) in ranges.iter().enumerate() {
        let kb = -(&form.blocks[b]) - identity(rg.len()) * c64(psi[b] as f64, 0.0);
        k.view_mut((rg.start, rg.start), (rg.len(), rg.len())).copy_from(&kb);
    }

    let mut m: Vec<CMatrix> = vec![identity(r)];
    let mut bser: Vec<CMatrix> = vec![a0_arr.clone()];
    for j in 1..=order {
        let mut rhs = -a[j].clone();
        for kk in 1..j {
            rhs += &m[kk] * &bser[j - kk];
            rhs -= &a[j - kk] * &m[kk];
        }
        let mut mj = zeros(r, r);
        let mut bj = zeros(r, r);
        for (i, ri) in ranges.iter().enumerate() {
            for (mm, rm) in ranges.iter().enumerate() {
                let rim = rhs.view((ri.start, rm.start), (ri.len(), rm.len())).into_owned();
                if psi[i] - psi[mm] == j as i64 {
                    // Resonant block: absorb the whole right-hand side into B.
                    bj.view_mut((ri.start, rm.start), (ri.len(), rm.len())).copy_from(&(-&rim));
                    k.view_mut((ri.start, rm.start), (ri.len(), rm.len())).copy_from(&rim);
                    continue;
                }
                let ta = &form.blocks[i] + identity(ri.len()) * c64(j as f64, 0.0);
                let tc = &form.blocks[mm];
                let op = kron(&identity(rm.len()), &ta) - kron(&tc.transpose(), &identity(ri.len()));
                let sigma = singular_values(&op).last().copied().unwrap_or(0.0);
                if sigma < opts.singular * scale {
                    return Err(Error::IllConditionedBlock {
                        block_row: i,
                        block_col: mm,
                        order: j,
                    });
                }
                if sigma < opts.near_resonance * scale {
                    warnings.push(NormalFormWarning::NearResonance {
                        block_row: i,
                        block_col: mm,
                        order: j,
                        sigma_min: sigma,
                    });
                }
                let x = triangular_sylvester(&ta, tc, &rim);
                mj.view_mut((ri.start, rm.start), (ri.len(), rm.len())).copy_from(&x);
            }
        }
        m.push(mj);
        bser.push(bj);
    }
    for i in 0..nb {
        for mm in i + 1..nb {
            let gap = psi[i] - psi[mm];
            if gap > order as i64 {
                warnings.push(NormalFormWarning::UndeterminedCoupling {
                    block_row: i,
                    block_col: mm,
                    gap,
                });
            }
        }
    }

    let b = normal_connection_matrix(&k, &phi)?.pad_polynomial(order);
    Ok(NormalForm {
        m: MatrixSeries::new(m)?,
        k,
        phi,
        t,
        t_inv,
        arranged: MatrixSeries::new(a)?,
        b,
        warnings,
    })
}

/// Integrates `d + b dz/z` once around the unit circle and returns the
/// distance of the loop matrix from `exp(2 pi i k)`, relative to its scale.
///
/// On the unit circle the normal frame `z^phi z^k` is the identity at
/// `z = 1`, so the loop matrix must equal `exp(2 pi i k)` itself.
pub fn fundamental_defect(nf: &NormalForm, tol: f64) -> Result<f64> {
    let b = nf.b.clone();
    let opts = OdeOptions::with_tol((tol * 1e-3).clamp(1e-13, 1e-8));
    let coef = |theta: f64| -> CMatrix {
        let z = Complex64::from_polar(1.0, theta);
        // dY/dtheta = dY/dz * i z = -i B(z) Y
        b.evaluate(z) * c64(0.0, -1.0)
    };
    let r = nf.k.nrows();
    let sol = integrate_linear(coef, 0.0, 2.0 * PI, &identity(r), &opts)?;
    let g = nf.monodromy();
    Ok(max_abs(&(sol.y - &g)) / scale_of(&g))
}

/// Checks that the loop monodromy of the normal connection is
/// `exp(2 pi i k)`.
pub fn fundamental_check(nf: &NormalForm, tol: f64) -> Result<bool> {
    Ok(fundamental_defect(nf, tol)? <= tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub order: usize,
    /// `|M^j| delta^j`
    pub scaled_norm: f64,
    /// `D 2^{c0 - j}`
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub c0: u64,
    pub big_c: f64,
    pub eps0: f64,
    pub delta: f64,
    /// Largest certified radius, `eps0 / (2 C)`.
    pub delta_limit: f64,
    pub in_range: bool,
    pub d: f64,
    pub checks: Vec<BoundCheck>,
}

impl ConvergenceReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Evaluates the geometric decay bound `|M^j| delta^j <= D 2^{c0 - j}` for
/// all computed orders `j > c0`.
pub fn convergence_diagnostic(conn: &LocalLogConnection, nf: &NormalForm, delta: f64) -> Result<ConvergenceReport> {
    if conn.rank() != nf.k.nrows() || conn.order() != nf.order() {
        return Err(Error::Shape("normal form does not belong to this connection".into()));
    }
    let a = &nf.arranged;
    let n = nf.order();
    let c0 = 2 * op_norm(a.coeff(0)).floor() as u64 + 2;
    let big_c = c0 as f64 + 1.0;
    let mut eps0 = f64::INFINITY;
    for j in 1..=n {
        let cj = op_norm(a.coeff(j)) + op_norm(nf.b.coeff(j));
        if cj > 0.0 {
            eps0 = eps0.min((big_c / cj).powf(1.0 / j as f64));
        }
    }
    let eps0 = if eps0.is_finite() { 0.9 * eps0 } else { 1.0 };
    let delta_limit = eps0 / (2.0 * big_c);
    let norms: Vec<f64> = nf.m.coeffs().iter().map(op_norm).collect();
    let d: f64 = norms
        .iter()
        .enumerate()
        .take((c0 as usize + 1).min(n + 1))
        .map(|(k, nk)| nk * delta.powi(k as i32))
        .sum();
    let checks = (c0 as usize + 1..=n)
        .map(|j| {
            let scaled_norm = norms[j] * delta.powi(j as i32);
            let bound = d * 2f64.powi(c0 as i32 - j as i32);
            BoundCheck {
                order: j,
                scaled_norm,
                bound,
                holds: scaled_norm <= bound * (1.0 + 1e-12),
            }
        })
        .collect();
    Ok(ConvergenceReport {
        c0,
        big_c,
        eps0,
        delta,
        delta_limit,
        in_range: delta > 0.0 && delta <= delta_limit,
        d,
        checks,
    })
}

/// Whether `m` (target rows, source columns) never lowers weights: every
/// entry from a source weight above the target weight vanishes through the
/// stored order.
pub fn morphism_weight_check(m: &MatrixSeries, source: &WeightDiagonal, target: &WeightDiagonal, tol: f64) -> bool {
    if m.rows() != target.len() || m.cols() != source.len() {
        return false;
    }
    let (s, t) = (source.entries(), target.entries());
    for i in 0..m.rows() {
        for col in 0..m.cols() {
            if s[col] > t[i] && m.coeffs().iter().any(|c| c[(i, col)].norm() > tol) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::matrix::{from_real_rows, inverse};

    fn max_residual(nf: &NormalForm) -> f64 {
        nf.gauge_residuals().into_iter().fold(0.0, f64::max)
    }

    #[test]
    fn integer_weight_examples() {
        let w = |l: Complex64| integer_weights(&crate::algebra::matrix::diag(&[l])).unwrap().entries()[0];
        assert_eq!(w(c64(0.0, 0.0)), 0);
        assert_eq!(w(c64(-1.5, 0.0)), 1);
        assert_eq!(w(c64(0.3, 2.0)), -1);
        assert_eq!(w(c64(-1.0 + 1e-13, 0.0)), 1);
    }

    #[test]
    fn zero_connection() {
        let conn = LocalLogConnection::constant(zeros(2, 2), 4).unwrap();
        let nf = normal_form(&conn).unwrap();
        assert!(nf.m.coeffs().iter().enumerate().all(|(j, c)| max_abs(&(c - if j == 0 { identity(2) } else { zeros(2, 2) })) == 0.0));
        assert_eq!(max_abs(&nf.k), 0.0);
        assert_eq!(nf.phi.entries(), &[0, 0]);
    }

    #[test]
    fn constant_diagonal_is_sorted() {
        let a0 = crate::algebra::matrix::diag(&[c64(0.2, 0.0), c64(-2.5, 0.0), c64(-0.7, 1.0)]);
        let conn = LocalLogConnection::constant(a0, 3).unwrap();
        let nf = normal_form(&conn).unwrap();
        assert_eq!(nf.phi.entries(), &[2, 0, -1]);
        for j in 1..=3 {
            assert!(max_abs(nf.m.coeff(j)) < 1e-14);
        }
        for e in crate::spectral::eigenvalues(&nf.k).unwrap() {
            assert!(e.re >= -1e-12 && e.re < 1.0);
        }
        assert!(max_residual(&nf) < 1e-12);
    }

    #[test]
    fn resonant_residue_matches_loop_monodromy() {
        let a0 = from_real_rows(2, 2, &[-1.0, 1.0, 0.0, 0.0]);
        let conn = LocalLogConnection::constant(a0.clone(), 6).unwrap();
        let nf = normal_form(&conn).unwrap();
        assert_eq!(nf.phi.entries(), &[1, 0]);
        assert!(max_residual(&nf) < 1e-12);
        assert!(fundamental_check(&nf, 1e-7).unwrap());
        // Original system Y' = -A0 Y / z on |z| = 1/2, starting at z = 1/2.
        let rho = 0.5;
        let sol = integrate_linear(
            |_: f64| &a0 * c64(0.0, -1.0),
            0.0,
            2.0 * PI,
            &identity(2),
            &OdeOptions::default(),
        )
        .unwrap()
        .y;
        // The loop of the original system is conjugate to exp(2 pi i K) by the
        // frame T M(z0) z0^Phi z0^K at z0 = rho.
        let z0 = c64(rho, 0.0);
        let frame = &nf.t
            * nf.m.evaluate(z0)
            * crate::algebra::matrix::complex_power(z0, &nf.phi.to_matrix())
            * crate::algebra::matrix::complex_power(z0, &nf.k);
        let predicted = &frame * nf.monodromy() * inverse(&frame).unwrap();
        assert!(max_abs(&(sol - predicted)) < 1e-8);
    }

    #[test]
    fn already_normal_is_fixed() {
        let k = from_real_rows(3, 3, &[0.25, 0.7, -0.4, 0.0, 0.5, 1.2, 0.0, 0.0, 0.1]);
        let phi = WeightDiagonal::new(vec![2, 1, 0]).unwrap();
        let b = normal_connection_matrix(&k, &phi).unwrap().pad_polynomial(5);
        let conn = LocalLogConnection::new(b).unwrap();
        let nf = normal_form(&conn).unwrap();
        assert_eq!(nf.phi, phi);
        assert!(max_abs(&(&nf.t - identity(3))) < 1e-14);
        assert!(max_abs(&(&nf.k - &k)) < 1e-13);
        for j in 1..=5 {
            assert!(max_abs(nf.m.coeff(j)) < 1e-13);
        }
    }

    #[test]
    fn fundamental_check_examples() {
        let nf = NormalForm::from_parts(zeros(2, 2), WeightDiagonal::zero(2), 2).unwrap();
        assert!(fundamental_check(&nf, 1e-7).unwrap());
        let nf = NormalForm::from_parts(from_real_rows(1, 1, &[0.25]), WeightDiagonal::zero(1), 2).unwrap();
        assert!((nf.monodromy()[(0, 0)] - c64(0.0, 1.0)).norm() < 1e-14);
        assert!(fundamental_check(&nf, 1e-7).unwrap());
        let mut bad = nf.clone();
        bad.k[(0, 0)] += 0.1;
        assert!(!fundamental_check(&bad, 1e-7).unwrap());
    }

    #[test]
    fn convergence_of_constant_connection() {
        let conn = LocalLogConnection::constant(from_real_rows(2, 2, &[0.3, 1.0, 0.0, -0.4]), 10).unwrap();
        let nf = normal_form(&conn).unwrap();
        let rep = convergence_diagnostic(&conn, &nf, 0.1).unwrap();
        assert_eq!(rep.eps0, 1.0);
        assert!(rep.all_hold());
        let rep = convergence_diagnostic(&conn, &nf, 10.0 * rep.eps0).unwrap();
        assert!(!rep.in_range);
    }

    #[test]
    fn morphism_check_examples() {
        let phi = WeightDiagonal::new(vec![1, 0]).unwrap();
        assert!(morphism_weight_check(&MatrixSeries::identity(2, 2), &phi, &phi, 1e-12));
        let bad = MatrixSeries::constant(from_real_rows(2, 2, &[1.0, 0.0, 1.0, 1.0]), 0);
        assert!(!morphism_weight_check(&bad, &phi, &phi, 1e-12));
        // inclusion of the invariant line e1 of a normal connection
        let inclusion = MatrixSeries::constant(from_real_rows(2, 1, &[1.0, 0.0]), 3);
        let line = WeightDiagonal::new(vec![1]).unwrap();
        assert!(morphism_weight_check(&inclusion, &line, &phi, 1e-12));
        let into_low = MatrixSeries::constant(from_real_rows(2, 1, &[0.0, 1.0]), 3);
        assert!(!morphism_weight_check(&into_low, &line, &phi, 1e-12));
    }
}
