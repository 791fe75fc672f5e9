use crate::algebra::matrix::{identity, lstsq_min_norm, singular_values, scale_of, zeros, CMatrix};
use crate::algebra::{MatrixSeries, WeightDiagonal};
use crate::bundles::WeightedFlatBundle;
use crate::error::{Error, Result};

/// Relative threshold below which a bottom-right minor counts as singular.
const MINOR_TOL: f64 = 1e-10;

/// Relative threshold on coefficients that must vanish for divisibility.
pub const DIVISIBILITY_TOL: f64 = 1e-9;

/// Non-increasing integers `c_1 >= ... >= c_r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplittingType(Vec<i64>);

impl SplittingType {
    pub fn new(c: Vec<i64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::Invalid("splitting type of rank zero".into()));
        }
        if c.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Invalid(format!("splitting type {c:?} is not non-increasing")));
        }
        Ok(Self(c))
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn is_constant(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    /// `c_1 - c_r`.
    pub fn spread(&self) -> i64 {
        self.0[0] - self.0[self.0.len() - 1]
    }
}

/// A column permutation and a unit upper triangular polynomial matrix
/// solving the divisibility conditions.
#[derive(Debug, Clone)]
pub struct FrameSolution {
    /// Column `i` of `Q P^{-1}` is column `perm[i]` of `Q`.
    pub perm: Vec<usize>,
    /// Entry `(i, j)` has degree below `c_i - c_j`.
    pub b: MatrixSeries,
    /// Largest coefficient of `b Q P^{-1}` that must vanish, relative to
    /// the scale of `Q`.
    pub residual: f64,
}

impl FrameSolution {
    /// `P` with `P[i, perm[i]] = 1`, so that `Q P^{-1}` permutes columns.
    pub fn permutation_matrix(&self) -> CMatrix {
        let r = self.perm.len();
        let mut p = zeros(r, r);
        for (i, &c) in self.perm.iter().enumerate() {
            p[(i, c)] = 1.0.into();
        }
        p
    }
}

fn smallest_singular_value(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return f64::INFINITY;
    }
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Chooses column `perm[i]` for position `i` so that the rows below `i`,
/// restricted to the columns not yet placed, stay as well conditioned as
/// possible.
fn greedy_permutation(q0: &CMatrix) -> Result<Vec<usize>> {
    let r = q0.nrows();
    let scale = scale_of(q0);
    let mut remaining: Vec<usize> = (0..r).collect();
    let mut perm = Vec::with_capacity(r);
    for i in 0..r {
        let mut best: Option<(usize, f64)> = None;
        for (slot, &c) in remaining.iter().enumerate() {
            let cols: Vec<usize> = remaining.iter().copied().filter(|&x| x != c).collect();
            let mut minor = zeros(r - i - 1, cols.len());
            for (a, row) in (i + 1..r).enumerate() {
                for (b, &col) in cols.iter().enumerate() {
                    minor[(a, b)] = q0[(row, col)];
                }
            }
            let s = smallest_singular_value(&minor);
            if best.is_none_or(|(_, bs)| s > bs) {
                best = Some((slot, s));
            }
        }
        let (slot, s) = best.expect("a remaining column");
        if s.is_finite() && s < MINOR_TOL * scale {
            return Err(Error::Numerical(format!(
                "no column order keeps the bottom-right minors nonsingular (step {i}, sigma {s:.3e})"
            )));
        }
        perm.push(remaining.remove(slot));
    }
    Ok(perm)
}

/// Finds a permutation whose bottom-right minors of `Q(0) P^{-1}` are all
/// nonsingular and a unit upper triangular polynomial `b` with
/// `deg b_ij < c_i - c_j` such that `z^{c_i - c_m}` divides
/// `(b Q P^{-1})_{im}` for all `i < m`.
pub fn bq_frame(c: &SplittingType, q: &MatrixSeries) -> Result<FrameSolution> {
    let r = c.rank();
    if q.rows() != r || q.cols() != r {
        return Err(Error::Shape(format!("frame matrix is {}x{}, splitting type has rank {r}", q.rows(), q.cols())));
    }
    let spread = c.spread() as usize;
    if q.order() + 1 < spread {
        return Err(Error::Precondition(format!(
            "frame matrix known to order {}, need {}",
            q.order(),
            spread.saturating_sub(1)
        )));
    }
    let q0 = q.coeff(0);
    let sv = singular_values(q0);
    if sv.last().copied().unwrap_or(0.0) < MINOR_TOL * scale_of(q0) {
        return Err(Error::Singular("frame matrix is not invertible at the puncture".into()));
    }
    let cs = c.entries();
    let perm = if c.is_constant() { (0..r).collect() } else { greedy_permutation(q0)? };

    // Coefficients of Q P^{-1}.
    let order = spread.max(1);
    let qp: Vec<CMatrix> = (0..order)
        .map(|p| {
            let src = if p <= q.order() { q.coeff(p).clone() } else { zeros(r, r) };
            let mut m = zeros(r, r);
            for (i, &col) in perm.iter().enumerate() {
                m.set_column(i, &src.column(col));
            }
            m
        })
        .collect();

    // b[t] is the coefficient of z^t.
    let mut b = vec![zeros(r, r); order];
    b[0] = identity(r);
    for i in 0..r {
        let width = |m: usize| (cs[i] - cs[m]) as usize;
        for p in 0..width(r - 1) {
            // alpha(p): first column whose gap to c_i exceeds p.
            let alpha = ((i + 1)..r).find(|&m| width(m) > p).expect("p below the largest gap");
            let size = r - alpha;
            let mut rhs = zeros(1, size);
            for (slot, m) in (alpha..r).enumerate() {
                let mut known = qp[p][(i, m)];
                for t in 0..p {
                    for j in (i + 1)..r {
                        if t < width(j) {
                            known += b[t][(i, j)] * qp[p - t][(j, m)];
                        }
                    }
                }
                rhs[(0, slot)] = -known;
            }
            let minor = qp[0].view((alpha, alpha), (size, size)).into_owned();
            // Row vector x with x * minor = rhs.
            let x = lstsq_min_norm(&minor.transpose(), &rhs.transpose(), 0.0).transpose();
            for (slot, j) in (alpha..r).enumerate() {
                b[p][(i, j)] = x[(0, slot)];
            }
        }
    }
    let b = MatrixSeries::new(b)?;

    // Divisibility check on b Q P^{-1}.
    let mut worst: f64 = 0.0;
    for i in 0..r {
        for m in (i + 1)..r {
            for p in 0..(cs[i] - cs[m]) as usize {
                let mut v = qp[p][(i, m)];
                for t in 0..=p {
                    for j in (i + 1)..r {
                        v += b.coeff(t)[(i, j)] * qp[p - t][(j, m)];
                    }
                }
                worst = worst.max(v.norm());
            }
        }
    }
    let qscale = q.max_coeff_norm().max(1.0);
    let residual = worst / qscale;
    if residual > DIVISIBILITY_TOL {
        return Err(Error::Numerical(format!("divisibility residual {residual:.3e}")));
    }
    Ok(FrameSolution { perm, b, residual })
}

/// Adds `lambda_j` to every weight at puncture `j`; the degree moves by
/// `r sum_j lambda_j`.
pub fn shift_weights(wfb: &WeightedFlatBundle, lambda: &[i64]) -> Result<WeightedFlatBundle> {
    wfb.shifted(lambda)
}

/// `Phi_k - P^{-1} C P`, provided the gaps of `Phi_k` are at least
/// `(r - 1)(n - 2)`.
pub fn regauge_given_splitting(
    phi: &WeightDiagonal,
    c: &SplittingType,
    perm: &[usize],
    n: usize,
) -> Result<WeightDiagonal> {
    let r = phi.len();
    if c.rank() != r || perm.len() != r {
        return Err(Error::Shape("weights, splitting type and permutation differ in rank".into()));
    }
    let mut seen = vec![false; r];
    for &p in perm {
        if p >= r || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Invalid(format!("{perm:?} is not a permutation")));
        }
    }
    let need = (r as i64 - 1) * (n as i64 - 2).max(0);
    let e = phi.entries();
    if let Some(i) = (0..r.saturating_sub(1)).find(|&i| e[i] - e[i + 1] < need) {
        return Err(Error::Precondition(format!(
            "weight gap {} at position {i} is below (r-1)(n-2) = {need}",
            e[i] - e[i + 1]
        )));
    }
    let mut out = e.to_vec();
    for (i, &p) in perm.iter().enumerate() {
        out[p] -= c.entries()[i];
    }
    WeightDiagonal::new(out)
        .map_err(|_| Error::Precondition("regauged weights are not non-increasing".into()))
}

/// Which of the two splitting-type bounds hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundReport {
    /// Positions `i` with `c_i - c_{i+1} > n - 2`.
    pub gap_violations: Vec<usize>,
    /// `sum_i (c_1 - c_i)`.
    pub total_spread: i64,
    /// `(n - 2) r (r - 1) / 2`.
    pub spread_bound: i64,
    /// With two punctures only the constant type is possible.
    pub forces_constant: bool,
}

impl BoundReport {
    pub fn gap_ok(&self) -> bool {
        self.gap_violations.is_empty()
    }

    pub fn spread_ok(&self) -> bool {
        self.total_spread <= self.spread_bound
    }

    pub fn passes(&self) -> bool {
        self.gap_ok() && self.spread_ok()
    }
}

/// Checks the gap and spread bounds a semistable bundle's splitting type
/// must satisfy.
pub fn splitting_bound_check(c: &SplittingType, n: usize, r: usize) -> Result<BoundReport> {
    if n < 2 {
        return Err(Error::Precondition("need at least two punctures".into()));
    }
    if c.rank() != r {
        return Err(Error::Shape(format!("splitting type of rank {} for rank {r}", c.rank())));
    }
    let e = c.entries();
    let gap = n as i64 - 2;
    let gap_violations = (0..r - 1).filter(|&i| e[i] - e[i + 1] > gap).collect();
    let total_spread = e.iter().map(|ci| e[0] - ci).sum();
    let spread_bound = gap * (r as i64) * (r as i64 - 1) / 2;
    Ok(BoundReport {
        gap_violations,
        total_spread,
        spread_bound,
        forces_constant: n == 2,
    })
}
