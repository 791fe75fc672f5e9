use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::flag::{INVARIANCE_TOL, RANK_TOL};
use super::rep::Representation;
use crate::algebra::matrix::{
    c64, column_span, fro_norm, hstack, identity, null_space, projection_residual, scale_of, singular_values,
    vectorize, zeros, CMatrix,
};
use crate::error::{Error, Result};
use crate::spectral::{block_form, cluster_labels, CLUSTER_TOL};

/// Default limit on matrix products while spanning the monodromy algebra.
pub const DEFAULT_BUDGET: usize = 20_000;

const RANDOM_ELEMENTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completeness {
    /// Every proper invariant subspace is in the list.
    Complete,
    /// The list may be partial.
    Undetermined,
}

#[derive(Debug, Clone)]
pub struct InvariantSubspaces {
    /// Orthonormal bases of proper, non-zero invariant subspaces.
    pub subspaces: Vec<CMatrix>,
    pub completeness: Completeness,
    /// Dimension of the algebra generated by the monodromy.
    pub algebra_dim: usize,
}

impl InvariantSubspaces {
    pub fn is_irreducible(&self) -> bool {
        self.completeness == Completeness::Complete && self.subspaces.is_empty()
    }
}

/// Basis of the matrix algebra generated by `generators`, each element
/// scaled to unit norm. Products are formed breadth first.
pub fn algebra_basis(generators: &[CMatrix], budget: usize) -> Result<Vec<CMatrix>> {
    let r = generators.first().map_or(0, |g| g.nrows());
    let mut basis: Vec<CMatrix> = Vec::new();
    let mut ortho: Vec<CMatrix> = Vec::new();
    let mut products = 0usize;
    let admit = |m: CMatrix, basis: &mut Vec<CMatrix>, ortho: &mut Vec<CMatrix>| {
        let mut v = vectorize(&m);
        let norm = fro_norm(&v);
        if norm == 0.0 {
            return;
        }
        v /= c64(norm, 0.0);
        for _ in 0..2 {
            for q in ortho.iter() {
                let coeff = (q.adjoint() * &v)[(0, 0)];
                v -= q * coeff;
            }
        }
        let res = fro_norm(&v);
        if res > 1e-9 {
            ortho.push(v / c64(res, 0.0));
            basis.push(m / c64(norm, 0.0));
        }
    };
    admit(identity(r), &mut basis, &mut ortho);
    let mut next = 0;
    while next < basis.len() {
        if basis.len() == r * r {
            break;
        }
        let x = basis[next].clone();
        for g in generators {
            products += 1;
            if products > budget {
                return Err(Error::BudgetExhausted(budget));
            }
            admit(g * &x, &mut basis, &mut ortho);
        }
        next += 1;
    }
    Ok(basis)
}

/// Smallest subspace containing the columns of `v` and invariant under the
/// algebra spanned by `algebra`.
pub fn spin(algebra: &[CMatrix], v: &CMatrix) -> CMatrix {
    let images: Vec<CMatrix> = algebra.iter().map(|a| a * v).collect();
    let refs: Vec<&CMatrix> = images.iter().collect();
    let all = hstack(&refs);
    column_span(&all, 1e-8 * scale_of(&all))
}

fn is_invariant_under(gens: &[CMatrix], w: &CMatrix) -> bool {
    gens.iter()
        .all(|g| projection_residual(w, &(g * w)) <= INVARIANCE_TOL * scale_of(g))
}

fn same_subspace(a: &CMatrix, b: &CMatrix) -> bool {
    a.ncols() == b.ncols() && projection_residual(a, b) <= 1e-6 * (b.ncols() as f64).sqrt()
}

fn push_unique(list: &mut Vec<CMatrix>, w: CMatrix, r: usize) {
    if w.ncols() == 0 || w.ncols() >= r {
        return;
    }
    if !list.iter().any(|x| same_subspace(x, &w)) {
        list.push(w);
    }
}

fn random_element(rng: &mut ChaCha8Rng, algebra: &[CMatrix]) -> CMatrix {
    let r = algebra[0].nrows();
    let mut x = zeros(r, r);
    for a in algebra {
        let c = c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        x += a * c;
    }
    x
}

/// Whether every eigenvalue of `x` has a single Jordan block, with a clear
/// margin in the singular values.
fn non_derogatory_chain(x: &CMatrix) -> Result<Option<Vec<CMatrix>>> {
    let scale = scale_of(x);
    let tol = CLUSTER_TOL * scale;
    let form = block_form(x, |ev| cluster_labels(ev, tol), true)?;
    let r = x.nrows();
    for b in 0..form.blocks.len() {
        let lambda = form.mean_eigenvalue(b);
        let sv = singular_values(&(x - identity(r) * lambda));
        let n = sv.len();
        if n >= 2 && sv[n - 2] < 1e-4 * scale {
            return Ok(None);
        }
    }
    // Invariant subspaces of x: sums of leading columns of each block.
    let mut blocks = Vec::new();
    for b in 0..form.blocks.len() {
        blocks.push(form.basis(b));
    }
    Ok(Some(blocks))
}

/// Searches for invariant subspaces of the monodromy.
///
/// An algebra of dimension `r^2` certifies irreducibility. Otherwise a
/// random algebra element with one Jordan block per eigenvalue bounds the
/// lattice: every invariant subspace is a sum of leading pieces of its
/// generalized eigenspaces, and those are enumerated and tested. Without
/// such an element the search spins eigenvectors of random elements and
/// their duals, and the result is `Undetermined`.
pub fn invariant_subspaces(rep: &Representation, budget: usize, seed: u64) -> Result<InvariantSubspaces> {
    let r = rep.rank();
    let gens = rep.matrices();
    let algebra = algebra_basis(gens, budget)?;
    let algebra_dim = algebra.len();
    if algebra_dim == r * r {
        return Ok(InvariantSubspaces {
            subspaces: Vec::new(),
            completeness: Completeness::Complete,
            algebra_dim,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found: Vec<CMatrix> = Vec::new();
    for _ in 0..RANDOM_ELEMENTS {
        let x = random_element(&mut rng, &algebra);
        if let Some(blocks) = non_derogatory_chain(&x)? {
            let sizes: Vec<usize> = blocks.iter().map(|b| b.ncols()).collect();
            let total: usize = sizes.iter().map(|s| s + 1).product();
            if total > budget {
                return Err(Error::BudgetExhausted(budget));
            }
            let mut subspaces = Vec::new();
            let mut counts = vec![0usize; sizes.len()];
            loop {
                let chosen: Vec<CMatrix> = blocks
                    .iter()
                    .zip(&counts)
                    .filter(|(_, &c)| c > 0)
                    .map(|(b, &c)| b.columns(0, c).into_owned())
                    .collect();
                let dim: usize = counts.iter().sum();
                if dim > 0 && dim < r {
                    let refs: Vec<&CMatrix> = chosen.iter().collect();
                    let w = column_span(&hstack(&refs), RANK_TOL);
                    if w.ncols() == dim && is_invariant_under(gens, &w) {
                        push_unique(&mut subspaces, w, r);
                    }
                }
                // odometer over 0..=size per block
                let mut i = 0;
                loop {
                    if i == counts.len() {
                        return Ok(InvariantSubspaces {
                            subspaces: sort_by_dimension(subspaces),
                            completeness: Completeness::Complete,
                            algebra_dim,
                        });
                    }
                    counts[i] += 1;
                    if counts[i] <= sizes[i] {
                        break;
                    }
                    counts[i] = 0;
                    i += 1;
                }
            }
        }
        collect_spun(&algebra, &x, &mut found, r)?;
    }
    Ok(InvariantSubspaces {
        subspaces: sort_by_dimension(found),
        completeness: Completeness::Undetermined,
        algebra_dim,
    })
}

fn sort_by_dimension(mut v: Vec<CMatrix>) -> Vec<CMatrix> {
    v.sort_by_key(|w| w.ncols());
    v
}

/// Spins eigenvectors of `x` and of its transpose (the dual module).
fn collect_spun(algebra: &[CMatrix], x: &CMatrix, found: &mut Vec<CMatrix>, r: usize) -> Result<()> {
    let scale = scale_of(x);
    let transposed: Vec<CMatrix> = algebra.iter().map(|a| a.transpose()).collect();
    for (alg, mat, dual) in [(algebra, x.clone(), false), (&transposed[..], x.transpose(), true)] {
        let ev = crate::spectral::eigenvalues(&mat)?;
        let labels = cluster_labels(&ev, CLUSTER_TOL * scale);
        let mut seen = Vec::new();
        for &l in labels.iter() {
            if seen.contains(&l) {
                continue;
            }
            seen.push(l);
            let members: Vec<Complex64> = labels.iter().zip(&ev).filter(|(&m, _)| m == l).map(|(_, &e)| e).collect();
            let lambda = members.iter().sum::<Complex64>() / members.len() as f64;
            let ker = null_space(&(&mat - identity(r) * lambda), 1e-6 * scale);
            for c in 0..ker.ncols() {
                let v: CMatrix = ker.columns(c, 1).into_owned();
                let w = spin(alg, &v);
                let w = if dual { column_span(&null_space(&w.transpose(), 1e-9), 1e-9) } else { w };
                push_unique(found, w, r);
            }
        }
    }
    Ok(())
}
