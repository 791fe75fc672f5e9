use num_complex::Complex64;

use crate::algebra::matrix::{c64, hstack, identity, inverse, scale_of, zeros, CMatrix};
use crate::bundles::Representation;
use crate::error::{Error, Result};
use crate::spectral::{norm_log, spectral_split, CLUSTER_TOL};

use super::FuchsianSystem;

/// Tolerance on `sum_j mu_j` being an integer.
const INTEGRALITY_TOL: f64 = 1e-6;

/// Relative tolerance for the pairwise commutation test.
const COMMUTE_TOL: f64 = 1e-8;

struct JointBlock {
    basis: CMatrix,
    restricted: Vec<CMatrix>,
}

/// Splits `C^r` into subspaces on which every matrix has a single
/// eigenvalue, by refining along the generalized eigenspaces of each matrix
/// in turn.
fn joint_blocks(mats: &[CMatrix]) -> Result<Vec<JointBlock>> {
    let r = mats[0].nrows();
    let mut blocks = vec![JointBlock {
        basis: identity(r),
        restricted: mats.to_vec(),
    }];
    for idx in 0..mats.len() {
        let mut refined = Vec::new();
        for blk in blocks {
            let split = spectral_split(&blk.restricted[idx], CLUSTER_TOL)?;
            let form = &split.form;
            let converted: Vec<CMatrix> = blk
                .restricted
                .iter()
                .map(|g| &form.transform_inv * g * &form.transform)
                .collect();
            for range in &form.ranges {
                let (start, len) = (range.start, range.len());
                for (g, c) in blk.restricted.iter().zip(&converted) {
                    let off = (c.rows(start, len).norm_squared() - c.view((start, start), (len, len)).norm_squared())
                        .max(0.0)
                        .sqrt();
                    if off > 1e-7 * scale_of(g) * scale_of(&form.transform) {
                        return Err(Error::Numerical(
                            "generalized eigenspaces are not jointly invariant".into(),
                        ));
                    }
                }
                refined.push(JointBlock {
                    basis: &blk.basis * form.transform.columns(start, len),
                    restricted: converted
                        .iter()
                        .map(|c| c.view((start, start), (len, len)).into_owned())
                        .collect(),
                });
            }
        }
        blocks = refined;
    }
    Ok(blocks)
}

/// A Fuchsian system with the given commuting monodromy: on each joint
/// block the residues are `xi I - K_1` at the first puncture and `-K_j`
/// elsewhere, where `K_j` is the normalized logarithm and `xi` the
/// (integral) sum of the normalized exponents.
pub fn commutative_fuchsian(rep: &Representation) -> Result<FuchsianSystem> {
    if !rep.pairwise_commuting(COMMUTE_TOL) {
        return Err(Error::Precondition("monodromy matrices do not commute".into()));
    }
    let r = rep.rank();
    let n = rep.len();
    let blocks = joint_blocks(rep.matrices())?;
    let mut local: Vec<Vec<CMatrix>> = vec![Vec::new(); n];
    for blk in &blocks {
        let m = blk.basis.ncols();
        let mut xi = Complex64::new(0.0, 0.0);
        let mut logs = Vec::with_capacity(n);
        for g in &blk.restricted {
            let nl = norm_log(g)?;
            if nl.exponents.len() != 1 {
                return Err(Error::Numerical("joint block carries several eigenvalues".into()));
            }
            xi += nl.exponents[0].0;
            logs.push(nl.k);
        }
        let rounded = xi.re.round();
        if (xi.re - rounded).abs() > INTEGRALITY_TOL || xi.im.abs() > INTEGRALITY_TOL {
            return Err(Error::NonIntegral(format!(
                "exponent sum {:.9}{:+.9}i on a joint block",
                xi.re, xi.im
            )));
        }
        for (j, k) in logs.into_iter().enumerate() {
            let b = if j == 0 { identity(m) * c64(rounded, 0.0) - k } else { -k };
            local[j].push(b);
        }
    }
    let refs: Vec<&CMatrix> = blocks.iter().map(|b| &b.basis).collect();
    let t = hstack(&refs);
    let t_inv = inverse(&t)?;
    let residues = local
        .iter()
        .map(|parts| {
            let mut d = zeros(r, r);
            let mut at = 0;
            for p in parts {
                let m = p.nrows();
                d.view_mut((at, at), (m, m)).copy_from(p);
                at += m;
            }
            &t * d * &t_inv
        })
        .collect();
    FuchsianSystem::new(rep.punctures().to_vec(), residues)
}
