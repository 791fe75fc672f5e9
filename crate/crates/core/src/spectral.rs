//! Eigenstructure of complex matrices: Schur form, reordering, block
//! diagonalization by generalized eigenspaces, and the normalized logarithm.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;

use crate::algebra::matrix::{
    c64, check_finite, check_square, condition_number, fro_norm, identity, rank, scale_of, zeros, CMatrix,
};
use crate::error::{Error, Result};

/// Default relative tolerance under which eigenvalues are one cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Decoupling transforms with an off-diagonal block above this norm merge
/// the two clusters involved. The transform then has condition number near
/// the square of this value.
pub const COUPLING_LIMIT: f64 = 1e4;

/// Real parts of normalized exponents this close to 1 wrap to 0.
pub const BRANCH_SNAP: f64 = 1e-9;

/// Relative rank threshold for kernel dimensions of `G - rho I`.
pub const KERNEL_TOL: f64 = 1e-6;

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Unitary Schur form `a = q t q^*` with `t` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur {
    pub q: CMatrix,
    pub t: CMatrix,
}

impl Schur {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Reorders the diagonal so that the labels become non-decreasing,
    /// keeping the relative order of equal labels. `labels[i]` belongs to
    /// diagonal position `i` and is permuted along.
    pub fn sort_by_labels(&mut self, labels: &mut [usize]) {
        let n = labels.len();
        loop {
            let mut swapped = false;
            for k in 0..n.saturating_sub(1) {
                if labels[k] > labels[k + 1] {
                    self.swap_adjacent(k);
                    labels.swap(k, k + 1);
                    swapped = true;
                }
            }
            if !swapped {
                break;
            }
        }
    }

    /// Exchanges diagonal entries `k` and `k + 1` by a unitary rotation.
    fn swap_adjacent(&mut self, k: usize) {
        let a = self.t[(k, k)];
        let b = self.t[(k + 1, k + 1)];
        let t = self.t[(k, k + 1)];
        // [t, b - a] is an eigenvector of the 2x2 block for eigenvalue b.
        let Some(rot) = Rotation::from_column(t, b - a) else {
            return;
        };
        rot.apply_rows(&mut self.t, k);
        rot.apply_cols(&mut self.t, k);
        rot.apply_cols(&mut self.q, k);
        self.t[(k + 1, k)] = Complex64::new(0.0, 0.0);
        self.t[(k, k)] = b;
        self.t[(k + 1, k + 1)] = a;
    }
}

/// Unitary plane rotation `[[c, -conj(s)], [s, conj(c)]]`.
#[derive(Debug, Clone, Copy)]
struct Rotation {
    c: Complex64,
    s: Complex64,
}

impl Rotation {
    /// Rotation whose first column is `[x, y]` normalized, so that its
    /// adjoint maps `[x, y]` to `[|(x, y)|, 0]`.
    fn from_column(x: Complex64, y: Complex64) -> Option<Self> {
        let nrm = (x.norm_sqr() + y.norm_sqr()).sqrt();
        if nrm == 0.0 {
            return None;
        }
        Some(Self { c: x / nrm, s: y / nrm })
    }

    /// `m <- G^* m` on rows `k, k + 1`.
    fn apply_rows(&self, m: &mut CMatrix, k: usize) {
        for j in 0..m.ncols() {
            let (u, v) = (m[(k, j)], m[(k + 1, j)]);
            m[(k, j)] = self.c.conj() * u + self.s.conj() * v;
            m[(k + 1, j)] = -self.s * u + self.c * v;
        }
    }

    /// `m <- m G` on columns `k, k + 1`.
    fn apply_cols(&self, m: &mut CMatrix, k: usize) {
        for i in 0..m.nrows() {
            let (u, v) = (m[(i, k)], m[(i, k + 1)]);
            m[(i, k)] = u * self.c + v * self.s;
            m[(i, k + 1)] = -u * self.s.conj() + v * self.c.conj();
        }
    }
}

/// Householder reduction to upper Hessenberg form, `a = q h q^*`.
fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { c64(1.0, 0.0) };
        let mut v = x.clone();
        v[0] += phase * xnorm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // h <- (I - 2 v v^*) h on rows k+1..n
        for j in 0..n {
            let dot: Complex64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= v[i] * dot * 2.0;
            }
        }
        // h <- h (I - 2 v v^*), q likewise
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let dot: Complex64 = (0..v.len()).map(|j| m[(i, k + 1 + j)] * v[j]).sum();
                for j in 0..v.len() {
                    m[(i, k + 1 + j)] -= dot * v[j].conj() * 2.0;
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = c64(0.0, 0.0);
        }
    }
    (h, q)
}

/// Complex Schur decomposition by Hessenberg reduction followed by the
/// Wilkinson-shifted QR iteration with deflation.
pub fn schur(a: &CMatrix) -> Result<Schur> {
    check_square(a, "matrix")?;
    check_finite(a)?;
    let n = a.nrows();
    let (mut t, mut q) = hessenberg(a);
    if n <= 1 {
        return Ok(Schur { q, t });
    }
    let eps = f64::EPSILON;
    let budget = MAX_SWEEPS_PER_EIGENVALUE * n;
    let mut total = 0usize;
    let mut hi = n - 1;
    let mut since_deflation = 0usize;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = t[(lo, lo - 1)].norm();
            let diag = t[(lo, lo)].norm() + t[(lo - 1, lo - 1)].norm();
            let floor = if diag == 0.0 { eps * fro_norm(&t) } else { eps * diag };
            if sub <= floor {
                t[(lo, lo - 1)] = c64(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > budget {
            return Err(Error::NoConvergence { iterations: total });
        }
        let shift = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            t[(hi, hi)] + c64(0.75 * t[(hi, hi - 1)].norm(), 0.3 * t[(hi, hi - 1)].norm())
        } else {
            wilkinson_shift(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
        };
        for k in lo..hi {
            let (x, y) = if k == lo {
                (t[(lo, lo)] - shift, t[(lo + 1, lo)])
            } else {
                (t[(k, k - 1)], t[(k + 1, k - 1)])
            };
            let Some(rot) = Rotation::from_column(x, y) else {
                continue;
            };
            rot.apply_rows(&mut t, k);
            rot.apply_cols(&mut t, k);
            rot.apply_cols(&mut q, k);
            if k > lo {
                t[(k + 1, k - 1)] = c64(0.0, 0.0);
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = c64(0.0, 0.0);
        }
    }
    Ok(Schur { q, t })
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let (m1, m2) = (half_tr + disc, half_tr - disc);
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Eigenvalues with multiplicity, in Schur diagonal order.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    Ok(schur(a)?.eigenvalues())
}

/// Single-linkage clustering: indices whose values are within `tol` of
/// each other, directly or through a chain, share a label. Labels are dense
/// and numbered by first occurrence.
pub fn cluster_labels(values: &[Complex64], tol: f64) -> Vec<usize> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    dense_labels(&roots)
}

fn dense_labels(raw: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    raw.iter()
        .map(|r| match seen.iter().position(|s| s == r) {
            Some(p) => p,
            None => {
                seen.push(*r);
                seen.len() - 1
            }
        })
        .collect()
}

/// `a = transform * blockdiag(blocks) * transform^{-1}`, with each block
/// upper triangular and carrying one group of eigenvalues.
#[derive(Debug, Clone)]
pub struct BlockForm {
    pub transform: CMatrix,
    pub transform_inv: CMatrix,
    pub blocks: Vec<CMatrix>,
    pub ranges: Vec<Range<usize>>,
    /// Group label of each block, non-decreasing.
    pub labels: Vec<usize>,
    /// Largest norm of an off-diagonal block of the decoupling transform.
    pub coupling: f64,
}

impl BlockForm {
    pub fn mean_eigenvalue(&self, b: usize) -> Complex64 {
        let blk = &self.blocks[b];
        let n = blk.nrows();
        (0..n).map(|i| blk[(i, i)]).sum::<Complex64>() / n as f64
    }

    /// Columns of the transform spanning block `b`.
    pub fn basis(&self, b: usize) -> CMatrix {
        let r = &self.ranges[b];
        self.transform.columns(r.start, r.len()).into_owned()
    }

    /// Reassembles `transform * blockdiag(f(block)) * transform^{-1}`.
    pub fn map_blocks(&self, f: impl Fn(usize, &CMatrix) -> CMatrix) -> CMatrix {
        let n = self.transform.nrows();
        let mut d = zeros(n, n);
        for (b, r) in self.ranges.iter().enumerate() {
            let fb = f(b, &self.blocks[b]);
            d.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(&fb);
        }
        &self.transform * d * &self.transform_inv
    }
}

/// Block diagonalizes `a` along a grouping of its Schur eigenvalues.
///
/// `group` receives the eigenvalues and returns one label per eigenvalue;
/// blocks are ordered by label. When `merge_coupled` is set, two groups
/// whose decoupling is ill-conditioned are merged and the computation
/// repeats.
pub fn block_form(
    a: &CMatrix,
    group: impl Fn(&[Complex64]) -> Vec<usize>,
    merge_coupled: bool,
) -> Result<BlockForm> {
    let mut s = schur(a)?;
    let n = a.nrows();
    let mut labels = group(&s.eigenvalues());
    loop {
        s.sort_by_labels(&mut labels);
        let ranges = label_ranges(&labels);
        let (x, worst) = decoupling(&s.t, &ranges);
        let coupling = worst.map_or(0.0, |(_, _, v)| v);
        if merge_coupled && coupling > COUPLING_LIMIT {
            let (ia, ic, _) = worst.expect("coupling above limit has a witness");
            let (la, lc) = (labels[ranges[ia].start], labels[ranges[ic].start]);
            for l in labels.iter_mut() {
                if *l == lc {
                    *l = la;
                }
            }
            let mut uniq: Vec<usize> = labels.clone();
            uniq.sort_unstable();
            uniq.dedup();
            for l in labels.iter_mut() {
                *l = uniq.iter().position(|u| u == l).unwrap_or(0);
            }
            continue;
        }
        let blocks = ranges
            .iter()
            .map(|r| s.t.view((r.start, r.start), (r.len(), r.len())).into_owned())
            .collect();
        let transform = &s.q * &x;
        let transform_inv = if n == 0 { zeros(0, 0) } else { unit_block_upper_inverse(&x, &ranges) * s.q.adjoint() };
        let block_labels = ranges.iter().map(|r| labels[r.start]).collect();
        return Ok(BlockForm {
            transform,
            transform_inv,
            blocks,
            ranges,
            labels: block_labels,
            coupling,
        });
    }
}

fn label_ranges(labels: &[usize]) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match out.last_mut() {
            Some(r) if labels[r.start] == *l => r.end = i + 1,
            _ => out.push(i..i + 1),
        }
    }
    out
}

/// Unit block-upper-triangular `x` with `t x = x blockdiag(t_cc)`. Returns
/// `x` and the off-diagonal block of largest norm as `(row block, column
/// block, norm)`.
fn decoupling(t: &CMatrix, ranges: &[Range<usize>]) -> (CMatrix, Option<(usize, usize, f64)>) {
    let n = t.nrows();
    let mut x = identity(n);
    let mut worst: Option<(usize, usize, f64)> = None;
    for c in 0..ranges.len() {
        let rc = &ranges[c];
        for a in (0..c).rev() {
            let ra = &ranges[a];
            // t_aa X - X t_cc = -sum_{a < b <= c} t_ab X_bc
            let mut rhs = zeros(ra.len(), rc.len());
            for rb in ranges.iter().take(c + 1).skip(a + 1) {
                let tab = t.view((ra.start, rb.start), (ra.len(), rb.len()));
                let xbc = x.view((rb.start, rc.start), (rb.len(), rc.len()));
                rhs -= tab * xbc;
            }
            let taa = t.view((ra.start, ra.start), (ra.len(), ra.len())).into_owned();
            let tcc = t.view((rc.start, rc.start), (rc.len(), rc.len())).into_owned();
            let y = triangular_sylvester(&taa, &tcc, &rhs);
            let norm = fro_norm(&y);
            let norm = if norm.is_finite() { norm } else { f64::INFINITY };
            if worst.map_or(true, |(_, _, w)| norm > w) {
                worst = Some((a, c, norm));
            }
            x.view_mut((ra.start, rc.start), (ra.len(), rc.len())).copy_from(&y);
        }
    }
    (x, worst)
}

/// Solves `ta y - y tc = rhs` for upper triangular `ta`, `tc`.
pub fn triangular_sylvester(ta: &CMatrix, tc: &CMatrix, rhs: &CMatrix) -> CMatrix {
    let (p, q) = (ta.nrows(), tc.nrows());
    let mut y = zeros(p, q);
    for j in 0..q {
        let mut col: Vec<Complex64> = (0..p).map(|i| rhs[(i, j)]).collect();
        for k in 0..j {
            for (i, c) in col.iter_mut().enumerate() {
                *c += y[(i, k)] * tc[(k, j)];
            }
        }
        let shift = tc[(j, j)];
        for i in (0..p).rev() {
            let mut acc = col[i];
            for k in i + 1..p {
                acc -= ta[(i, k)] * y[(k, j)];
            }
            y[(i, j)] = acc / (ta[(i, i)] - shift);
        }
    }
    y
}

fn unit_block_upper_inverse(x: &CMatrix, ranges: &[Range<usize>]) -> CMatrix {
    // Block back substitution: inv_ac = -sum_{a < b <= c} x_ab inv_bc.
    let n = x.nrows();
    let mut inv = identity(n);
    for c in 0..ranges.len() {
        let rc = &ranges[c];
        for a in (0..c).rev() {
            let ra = &ranges[a];
            let mut acc = zeros(ra.len(), rc.len());
            for rb in ranges.iter().take(c + 1).skip(a + 1) {
                acc -= x.view((ra.start, rb.start), (ra.len(), rb.len())) * inv.view((rb.start, rc.start), (rb.len(), rc.len()));
            }
            inv.view_mut((ra.start, rc.start), (ra.len(), rc.len())).copy_from(&acc);
        }
    }
    inv
}

/// One generalized eigenspace.
#[derive(Debug, Clone)]
pub struct EigenCluster {
    /// Mean of the computed eigenvalues in the cluster.
    pub value: Complex64,
    pub multiplicity: usize,
    /// Orthonormal columns spanning the generalized eigenspace.
    pub basis: CMatrix,
}

#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub clusters: Vec<EigenCluster>,
    pub form: BlockForm,
}

/// Splits `C^r` into generalized eigenspaces of `g`. Eigenvalues closer than
/// `tol` (relative to the matrix scale) are clustered; clusters whose
/// separation is numerically ill-conditioned are merged.
pub fn spectral_split(g: &CMatrix, tol: f64) -> Result<SpectralSplit> {
    let abs_tol = tol * scale_of(g);
    let form = block_form(g, |ev| cluster_labels(ev, abs_tol), true)?;
    let clusters = (0..form.blocks.len())
        .map(|b| {
            let basis = form.basis(b);
            let q = if basis.ncols() == 0 { basis } else { basis.qr().q() };
            EigenCluster {
                value: form.mean_eigenvalue(b),
                multiplicity: form.ranges[b].len(),
                basis: q,
            }
        })
        .collect();
    Ok(SpectralSplit { clusters, form })
}

/// The normalized exponent of a nonzero scalar: the `mu` with
/// `exp(2 pi i mu) = rho` and `0 <= Re mu < 1`.
pub fn normalized_exponent(rho: Complex64) -> Result<Complex64> {
    if rho.norm() == 0.0 || !rho.re.is_finite() || !rho.im.is_finite() {
        return Err(Error::Singular("zero or non-finite eigenvalue has no logarithm".into()));
    }
    let mut arg = rho.arg();
    if arg < 0.0 {
        arg += 2.0 * PI;
    }
    let mut mu = c64(arg / (2.0 * PI), -rho.norm().ln() / (2.0 * PI));
    if mu.re >= 1.0 - BRANCH_SNAP {
        mu.re -= 1.0;
    }
    if mu.re.abs() < BRANCH_SNAP * 1e-3 {
        mu.re = 0.0;
    }
    Ok(mu)
}

/// `log(I + n)` by its power series, summed until the terms vanish.
fn log_unipotent(n_mat: &CMatrix) -> Result<CMatrix> {
    let dim = n_mat.nrows();
    let mut sum = zeros(dim, dim);
    let mut power = identity(dim);
    for k in 1..=500usize {
        power = &power * n_mat;
        let pn = fro_norm(&power);
        if pn == 0.0 {
            return Ok(sum);
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += &power * c64(sign / k as f64, 0.0);
        if pn / (k as f64) < 1e-18 * fro_norm(&sum).max(1.0) && k >= dim {
            return Ok(sum);
        }
    }
    Err(Error::Numerical("logarithm series of a cluster block did not converge".into()))
}

/// The normalized logarithm: `exp(2 pi i k) = g`, eigenvalues of `k` with
/// real part in `[0, 1)`.
#[derive(Debug, Clone)]
pub struct NormalizedLog {
    pub k: CMatrix,
    /// Normalized exponent of each eigenvalue cluster, with multiplicity.
    pub exponents: Vec<(Complex64, usize)>,
}

impl NormalizedLog {
    pub fn trace(&self) -> Complex64 {
        self.k.trace()
    }
}

pub fn norm_log(g: &CMatrix) -> Result<NormalizedLog> {
    norm_log_with(g, CLUSTER_TOL)
}

pub fn norm_log_with(g: &CMatrix, tol: f64) -> Result<NormalizedLog> {
    check_square(g, "monodromy matrix")?;
    check_finite(g)?;
    let cond = condition_number(g);
    if !cond.is_finite() || cond > 1e14 {
        return Err(Error::Singular(format!("cannot take the logarithm, condition number {cond:.3e}")));
    }
    let split = spectral_split(g, tol)?;
    let form = &split.form;
    let mut logs = Vec::with_capacity(form.blocks.len());
    let mut exponents = Vec::with_capacity(form.blocks.len());
    for (b, blk) in form.blocks.iter().enumerate() {
        let rho = form.mean_eigenvalue(b);
        let mu = normalized_exponent(rho)?;
        let m = blk.nrows();
        let unip = blk / rho - identity(m);
        let log = log_unipotent(&unip)?;
        let kb = identity(m) * mu + log / c64(0.0, 2.0 * PI);
        logs.push(kb);
        exponents.push((mu, m));
    }
    let k = form.map_blocks(|b, _| logs[b].clone());
    Ok(NormalizedLog { k, exponents })
}

/// Whether `norm_log(g) c = c norm_log(g2)`, given `g c = c g2`.
pub fn commuting_log_check(g: &CMatrix, g2: &CMatrix, c: &CMatrix, tol: f64) -> Result<bool> {
    let k = norm_log(g)?.k;
    let k2 = norm_log(g2)?.k;
    let lhs = &k * c;
    let rhs = c * &k2;
    let scale = (fro_norm(&k) + fro_norm(&k2)).max(1.0) * fro_norm(c).max(1.0);
    Ok(fro_norm(&(lhs - rhs)) <= tol * scale)
}

/// `dim ker(g - rho I)`, with a relative rank threshold.
pub fn geometric_multiplicity(g: &CMatrix, rho: Complex64) -> usize {
    let n = g.nrows();
    let shifted = g - identity(n) * rho;
    n - rank(&shifted, KERNEL_TOL * scale_of(g))
}

/// Jordan block count per eigenvalue cluster, as `(value, algebraic
/// multiplicity, geometric multiplicity)`.
pub fn jordan_structure(g: &CMatrix) -> Result<Vec<(Complex64, usize, usize)>> {
    let split = spectral_split(g, CLUSTER_TOL)?;
    Ok(split
        .clusters
        .iter()
        .map(|c| (c.value, c.multiplicity, geometric_multiplicity(g, c.value)))
        .collect())
}

/// Whether `v` (a single column) is an eigenvector of `g`; returns the
/// eigenvalue when it is.
pub fn eigenvalue_of(g: &CMatrix, v: &CMatrix, tol: f64) -> Option<Complex64> {
    let vn = fro_norm(v);
    if vn == 0.0 {
        return None;
    }
    let gv = g * v;
    let lambda = (v.adjoint() * &gv)[(0, 0)] / (vn * vn);
    let res = fro_norm(&(gv - v * lambda));
    (res <= tol * scale_of(g) * vn).then_some(lambda)
}
