use num_complex::Complex64;

use crate::algebra::matrix::{fro_norm, hstack, orthogonal_complement, CMatrix};
use crate::bundles::{
    algebra_basis, semistable, spin, Representation, Stability, WeightedFlag, WeightedFlatBundle, DEFAULT_BUDGET,
};
use crate::error::{Error, Result};
use crate::spectral::{eigenvalue_of, schur};

/// Weighted flags built around an eigenvector that is cyclic for the whole
/// monodromy algebra, with degree zero.
#[derive(Debug, Clone)]
pub struct CyclicPlan {
    pub bundle: WeightedFlatBundle,
    pub verdict: Stability,
    /// Required gap between consecutive weights at the chosen puncture.
    pub gap: i64,
}

/// Builds the weight plan for an eigenvector `h` of `G_k` that is cyclic:
/// trivial flags with weight `N_j` away from `k`, and at `k` a full flag
/// starting with `<h>` whose weights have gaps at least `(r - 1)(n - 2)`
/// and top weight at least `N_k + (r - 1)(n - 2)`. The degree is brought
/// to zero by raising the top weight or lowering the bottom one.
pub fn cyclic_weight_plan(rep: &Representation, k: usize, h: &CMatrix, floors: &[i64]) -> Result<CyclicPlan> {
    let r = rep.rank();
    let n = rep.len();
    if k >= n {
        return Err(Error::Invalid(format!("no puncture with index {k}")));
    }
    if floors.len() != n {
        return Err(Error::Shape(format!("{} weight floors for {n} punctures", floors.len())));
    }
    if h.nrows() != r || h.ncols() != 1 {
        return Err(Error::Shape("vector has the wrong length".into()));
    }
    let gk = rep.matrix(k);
    if eigenvalue_of(gk, h, 1e-8).is_none() {
        return Err(Error::Precondition(format!("vector is not an eigenvector of monodromy matrix {k}")));
    }
    let algebra = algebra_basis(rep.matrices(), DEFAULT_BUDGET)?;
    let span = spin(&algebra, h).ncols();
    if span < r {
        return Err(Error::Precondition(format!("vector spans an invariant subspace of dimension {span} only")));
    }

    // Full G_k-invariant flag starting at <h>: h, then a Schur flag of the
    // induced map on the orthogonal complement.
    let h_unit = h / Complex64::from(fro_norm(h));
    let basis = if r == 1 {
        h_unit
    } else {
        let q = orthogonal_complement(&h_unit, r);
        let induced = q.adjoint() * gk * &q;
        let s = schur(&induced)?;
        hstack(&[&h_unit, &(q * s.q)])
    };

    let gap = ((r as i64 - 1) * (n as i64 - 2)).max(1);
    let top = floors[k] + gap;
    let mut weights: Vec<i64> = (0..r as i64).map(|i| top - i * gap).collect();
    let mut flags: Vec<WeightedFlag> = (0..n)
        .map(|j| {
            if j == k {
                WeightedFlag::from_basis(&basis, &weights)
            } else {
                Ok(WeightedFlag::trivial(r, floors[j]))
            }
        })
        .collect::<Result<_>>()?;
    let degree = WeightedFlatBundle::new(rep.clone(), flags.clone())?.degree()?;
    if degree < 0 {
        weights[0] -= degree;
    } else if degree > 0 {
        weights[r - 1] -= degree;
    }
    flags[k] = WeightedFlag::from_basis(&basis, &weights)?;
    let bundle = WeightedFlatBundle::new(rep.clone(), flags)?;
    debug_assert_eq!(bundle.degree().ok(), Some(0));
    let verdict = semistable(&bundle)?;
    Ok(CyclicPlan { bundle, verdict, gap })
}
