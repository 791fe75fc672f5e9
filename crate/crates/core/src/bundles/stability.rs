use num_rational::Rational64;

use super::invariant::{algebra_basis, invariant_subspaces, spin, Completeness, DEFAULT_BUDGET};
use super::{SubBundle, WeightedFlatBundle};
use crate::algebra::matrix::CMatrix;
use crate::error::Result;
use crate::spectral::norm_log;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Semistable,
    Unstable,
    Undetermined,
}

#[derive(Debug, Clone)]
pub struct SemistabilityReport {
    pub verdict: Stability,
    pub slope: Rational64,
    /// A subspace of slope above the total slope, if one was found.
    pub destabilizer: Option<(CMatrix, Rational64)>,
    /// A proper subspace of equal slope, if one was found.
    pub equal_slope: Option<CMatrix>,
    pub completeness: Completeness,
}

pub fn semistable(wfb: &WeightedFlatBundle) -> Result<Stability> {
    Ok(semistability_report(wfb, 0)?.verdict)
}

/// Compares induced slopes of invariant subspaces against the total slope.
///
/// With an incomplete subspace list, the verdict may still be decided by
/// the bound `deg W <= sum_j (top r' weights of Phi_j + top r' real parts of
/// the normalized exponents of G_j)` which holds for every invariant `W` of
/// rank `r'`.
pub fn semistability_report(wfb: &WeightedFlatBundle, seed: u64) -> Result<SemistabilityReport> {
    let slope = wfb.slope()?;
    let r = wfb.rank();
    let search = invariant_subspaces(wfb.rep(), DEFAULT_BUDGET, seed)?;
    let mut candidates = search.subspaces.clone();
    if search.completeness == Completeness::Undetermined {
        let algebra = algebra_basis(wfb.rep().matrices(), DEFAULT_BUDGET)?;
        for f in wfb.flags() {
            for v in f.spaces() {
                let w = spin(&algebra, v);
                if w.ncols() > 0 && w.ncols() < r {
                    candidates.push(w);
                }
            }
        }
    }
    let mut destabilizer: Option<(CMatrix, Rational64)> = None;
    let mut equal_slope = None;
    for w in &candidates {
        let sub = SubBundle::new(wfb, w)?;
        let s = sub.bundle.slope()?;
        if s > slope {
            if destabilizer.as_ref().map_or(true, |(_, best)| s > *best) {
                destabilizer = Some((sub.basis.clone(), s));
            }
        } else if s == slope && equal_slope.is_none() {
            equal_slope = Some(sub.basis.clone());
        }
    }
    let verdict = if destabilizer.is_some() {
        Stability::Unstable
    } else if search.completeness == Completeness::Complete {
        if equal_slope.is_some() {
            Stability::Semistable
        } else {
            Stability::Stable
        }
    } else {
        let bounds = degree_bounds(wfb)?;
        let below = (1..r).all(|rp| Rational64::new(bounds[rp], rp as i64) < slope);
        let at_most = (1..r).all(|rp| Rational64::new(bounds[rp], rp as i64) <= slope);
        if below {
            Stability::Stable
        } else if at_most && equal_slope.is_some() {
            Stability::Semistable
        } else {
            Stability::Undetermined
        }
    };
    Ok(SemistabilityReport {
        verdict,
        slope,
        destabilizer,
        equal_slope,
        completeness: search.completeness,
    })
}

/// `bounds[r']`: an integer upper bound on the degree of any invariant
/// subspace of rank `r'`.
fn degree_bounds(wfb: &WeightedFlatBundle) -> Result<Vec<i64>> {
    let r = wfb.rank();
    let mut totals = vec![0.0f64; r + 1];
    for (f, g) in wfb.flags().iter().zip(wfb.rep().matrices()) {
        let phi = f.diagonal();
        let mut re_mu: Vec<f64> = Vec::with_capacity(r);
        for (mu, mult) in norm_log(g)?.exponents {
            re_mu.extend(std::iter::repeat(mu.re).take(mult));
        }
        re_mu.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        for rp in 1..=r {
            let top_phi: i64 = phi.entries()[..rp].iter().sum();
            let top_mu: f64 = re_mu[..rp].iter().sum();
            totals[rp] += top_phi as f64 + top_mu;
        }
    }
    Ok(totals.iter().map(|t| (t + 1e-6).floor() as i64).collect())
}
