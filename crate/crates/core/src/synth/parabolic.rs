use crate::algebra::matrix::{is_upper_triangular, scale_of};
use crate::bundles::Representation;
use crate::error::{Error, Result};
use crate::spectral::{cluster_labels, normalized_exponent};

/// Tolerance on the exponent sums being integers.
const LAMBDA_TOL: f64 = 1e-6;

/// Relative tolerance for two diagonal entries to count as equal.
const COINCIDENCE_TOL: f64 = 1e-8;

/// Which monotonicity condition the weights must meet along equal
/// diagonal entries at each puncture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Non-increasing along equal entries.
    Strict,
    /// Constant along equal entries.
    Relaxed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightSolution {
    /// `phi[j][i]`: weight of diagonal position `i` at puncture `j`.
    pub phi: Vec<Vec<i64>>,
    /// Target column sums `Lambda^i`.
    pub lambda: Vec<i64>,
    /// Case analysis steps taken, outermost first.
    pub route: Vec<String>,
}

/// Diagonal coincidence classes and exponent sums of an upper triangular
/// representation.
#[derive(Debug, Clone)]
struct Data {
    /// `labels[j][i]`: class of diagonal entry `i` at puncture `j`.
    labels: Vec<Vec<usize>>,
    lambda: Vec<i64>,
}

impl Data {
    fn from_rep(rep: &Representation) -> Result<Self> {
        let r = rep.rank();
        let mut labels = Vec::with_capacity(rep.len());
        let mut sums = vec![0.0; r];
        for (j, g) in rep.matrices().iter().enumerate() {
            if !is_upper_triangular(g, 1e-10 * scale_of(g)) {
                return Err(Error::Precondition(format!("monodromy matrix {j} is not upper triangular")));
            }
            let diag: Vec<_> = (0..r).map(|i| g[(i, i)]).collect();
            let tol = COINCIDENCE_TOL * diag.iter().map(|d| d.norm()).fold(1.0, f64::max);
            labels.push(cluster_labels(&diag, tol));
            for (i, d) in diag.iter().enumerate() {
                sums[i] -= normalized_exponent(*d)?.re;
            }
        }
        let mut lambda = Vec::with_capacity(r);
        for (i, s) in sums.iter().enumerate() {
            let l = s.round();
            if (s - l).abs() > LAMBDA_TOL {
                return Err(Error::NonIntegral(format!("exponent sum {s:.9} of diagonal position {i}")));
            }
            if l > 0.0 {
                return Err(Error::Invalid(format!("exponent sum {l} of diagonal position {i} is positive")));
            }
            lambda.push(l as i64);
        }
        Ok(Self { labels, lambda })
    }

    fn n(&self) -> usize {
        self.labels.len()
    }

    fn equal(&self, j: usize, a: usize, b: usize) -> bool {
        self.labels[j][a] == self.labels[j][b]
    }

    fn check(&self, phi: &[Vec<i64>], mode: WeightMode) -> std::result::Result<(), String> {
        let r = self.lambda.len();
        if phi.len() != self.n() || phi.iter().any(|row| row.len() != r) {
            return Err("weight matrix has the wrong shape".into());
        }
        for (j, row) in phi.iter().enumerate() {
            for a in 0..r {
                for b in (a + 1)..r {
                    if !self.equal(j, a, b) {
                        continue;
                    }
                    let ok = match mode {
                        WeightMode::Strict => row[a] >= row[b],
                        WeightMode::Relaxed => row[a] == row[b],
                    };
                    if !ok {
                        return Err(format!("weights {} and {} at puncture {j}, positions {a} and {b}", row[a], row[b]));
                    }
                }
            }
        }
        for i in 0..r {
            let s: i64 = phi.iter().map(|row| row[i]).sum();
            if s != self.lambda[i] {
                return Err(format!("column {i} sums to {s}, expected {}", self.lambda[i]));
            }
        }
        Ok(())
    }
}

/// Checks a weight matrix against the coincidence and column-sum
/// conditions in exact arithmetic.
pub fn validate_weights(rep: &Representation, phi: &[Vec<i64>], mode: WeightMode) -> Result<()> {
    Data::from_rep(rep)?.check(phi, mode).map_err(Error::Invalid)
}

struct Solver<'a> {
    data: &'a Data,
    mode: WeightMode,
    route: Vec<String>,
}

impl Solver<'_> {
    fn all_equal(&self, rows: &[usize]) -> bool {
        (0..self.data.n()).all(|j| rows.iter().all(|&i| self.data.equal(j, i, rows[0])))
    }

    fn unique_entry(&self, rows: &[usize]) -> Option<(usize, usize)> {
        (0..self.data.n()).find_map(|m| {
            rows.iter()
                .copied()
                .find(|&k| rows.iter().all(|&t| t == k || !self.data.equal(m, k, t)))
                .map(|k| (m, k))
        })
    }

    /// Fills `phi` on the columns in `rows`; other columns are untouched.
    fn solve(&mut self, rows: &[usize], phi: &mut [Vec<i64>]) -> bool {
        let n = self.data.n();
        let lambda = &self.data.lambda;
        if rows.len() == 1 {
            let i = rows[0];
            for (j, row) in phi.iter_mut().enumerate() {
                row[i] = if j == 0 { lambda[i] } else { 0 };
            }
            return true;
        }
        if self.all_equal(rows) {
            self.route.push(format!("equal rows {rows:?}"));
            let first = rows[0];
            if !self.solve(&[first], phi) {
                return false;
            }
            for row in phi.iter_mut() {
                for &i in &rows[1..] {
                    row[i] = row[first];
                }
            }
            return true;
        }
        if let Some((m, k)) = self.unique_entry(rows) {
            self.route.push(format!("reduce column {k} through puncture {m}"));
            let sub: Vec<usize> = rows.iter().copied().filter(|&t| t != k).collect();
            if !self.solve(&sub, phi) {
                return false;
            }
            let mut rest = 0;
            for (j, row) in phi.iter_mut().enumerate() {
                if j == m {
                    continue;
                }
                let later = sub.iter().filter(|&&t| t > k && self.data.equal(j, t, k)).map(|&t| row[t]).max();
                let earlier = sub.iter().filter(|&&t| t < k && self.data.equal(j, t, k)).map(|&t| row[t]).min();
                row[k] = later.or(earlier).unwrap_or(0);
                rest += row[k];
            }
            phi[m][k] = lambda[k] - rest;
            return true;
        }
        if rows.len() == 4 {
            let [s1, s2, s3, s4] = [rows[0], rows[1], rows[2], rows[3]];
            let split_at = (0..n).find(|&j| {
                self.data.equal(j, s1, s2) && self.data.equal(j, s3, s4) && !self.data.equal(j, s1, s3)
            });
            match split_at {
                None => {
                    self.route.push(format!("column {s4} as {s1} + {s2} - {s3}"));
                    if !self.solve(&[s1, s2, s3], phi) {
                        return false;
                    }
                    for row in phi.iter_mut() {
                        row[s4] = row[s1] + row[s2] - row[s3];
                    }
                    return true;
                }
                Some(m) if self.mode == WeightMode::Strict => {
                    if !self.solve(&[s1, s2], phi) || !self.solve(&[s3, s4], phi) {
                        return false;
                    }
                    let mut shift = 0;
                    for (j, row) in phi.iter().enumerate() {
                        if j == m {
                            continue;
                        }
                        for a in [s1, s2] {
                            for b in [s3, s4] {
                                if self.data.equal(j, a, b) {
                                    shift = shift.max(row[b] - row[a]);
                                }
                            }
                        }
                    }
                    self.route.push(format!("two blocks split at puncture {m}, shift {shift}"));
                    for (j, row) in phi.iter_mut().enumerate() {
                        let by = if j == m { -(n as i64 - 1) * shift } else { shift };
                        row[s1] += by;
                        row[s2] += by;
                    }
                    return true;
                }
                Some(_) => {}
            }
        }
        self.route.push(format!("integer linear system on columns {rows:?}"));
        self.diophantine(rows, phi)
    }

    /// One unknown per coincidence class and puncture, one equation per
    /// column sum.
    fn diophantine(&self, rows: &[usize], phi: &mut [Vec<i64>]) -> bool {
        let n = self.data.n();
        let mut var_of = vec![vec![usize::MAX; self.data.lambda.len()]; n];
        let mut count = 0;
        for j in 0..n {
            for &i in rows {
                if var_of[j][i] != usize::MAX {
                    continue;
                }
                for &t in rows {
                    if self.data.equal(j, i, t) {
                        var_of[j][t] = count;
                    }
                }
                count += 1;
            }
        }
        let a: Vec<Vec<i64>> = rows
            .iter()
            .map(|&i| {
                let mut eq = vec![0; count];
                for row in &var_of {
                    eq[row[i]] += 1;
                }
                eq
            })
            .collect();
        let b: Vec<i64> = rows.iter().map(|&i| self.data.lambda[i]).collect();
        match diophantine_solve(&a, &b) {
            Some(x) => {
                for (j, row) in phi.iter_mut().enumerate() {
                    for &i in rows {
                        row[i] = x[var_of[j][i]];
                    }
                }
                true
            }
            None => false,
        }
    }
}

/// Integer weights for an upper triangular representation whose column
/// sums equal `Lambda^i = -sum_j Re mu_j^i` and which respect coincident
/// diagonal entries. Returns `Ok(None)` when no solution is found.
pub fn solve_weights_parabolic(rep: &Representation, mode: WeightMode) -> Result<Option<WeightSolution>> {
    let data = Data::from_rep(rep)?;
    let r = data.lambda.len();
    let mut phi = vec![vec![0i64; r]; data.n()];
    let mut solver = Solver {
        data: &data,
        mode,
        route: Vec::new(),
    };
    let rows: Vec<usize> = (0..r).collect();
    if !solver.solve(&rows, &mut phi) {
        return Ok(None);
    }
    data.check(&phi, mode)
        .map_err(|e| Error::Numerical(format!("weight solver produced an invalid matrix: {e}")))?;
    Ok(Some(WeightSolution {
        phi,
        lambda: data.lambda.clone(),
        route: solver.route,
    }))
}

/// An integer solution of `a x = b`, via a column Hermite form. Free
/// unknowns are set to zero.
pub fn diophantine_solve(a: &[Vec<i64>], b: &[i64]) -> Option<Vec<i64>> {
    let m = a.len();
    if b.len() != m {
        return None;
    }
    let v = a.first().map_or(0, Vec::len);
    let mut h: Vec<Vec<i128>> = a.iter().map(|row| row.iter().map(|&x| x as i128).collect()).collect();
    let mut u: Vec<Vec<i128>> = (0..v).map(|i| (0..v).map(|k| i128::from(i == k)).collect()).collect();
    let col_axpy = |mat: &mut Vec<Vec<i128>>, dst: usize, src: usize, q: i128| {
        for row in mat.iter_mut() {
            row[dst] -= q * row[src];
        }
    };
    let col_swap = |mat: &mut Vec<Vec<i128>>, x: usize, y: usize| {
        for row in mat.iter_mut() {
            row.swap(x, y);
        }
    };
    let mut pivots: Vec<Option<usize>> = vec![None; m];
    let mut pc = 0;
    for i in 0..m {
        if pc == v {
            break;
        }
        for c in (pc + 1)..v {
            while h[i][c] != 0 {
                let q = h[i][pc].div_euclid(h[i][c]);
                col_axpy(&mut h, pc, c, q);
                col_axpy(&mut u, pc, c, q);
                col_swap(&mut h, pc, c);
                col_swap(&mut u, pc, c);
            }
        }
        if h[i][pc] != 0 {
            pivots[i] = Some(pc);
            pc += 1;
        }
    }
    let mut y = vec![0i128; v];
    for i in 0..m {
        let known: i128 = (0..v).map(|c| h[i][c] * y[c]).sum();
        let rest = b[i] as i128 - known;
        match pivots[i] {
            Some(p) => {
                if rest % h[i][p] != 0 {
                    return None;
                }
                y[p] = rest / h[i][p];
            }
            None if rest != 0 => return None,
            None => {}
        }
    }
    let x: Vec<i64> = (0..v)
        .map(|r| {
            let s: i128 = (0..v).map(|c| u[r][c] * y[c]).sum();
            i64::try_from(s).ok()
        })
        .collect::<Option<_>>()?;
    Some(x)
}
