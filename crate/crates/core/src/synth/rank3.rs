use num_complex::Complex64;

use crate::algebra::matrix::CMatrix;
use crate::bundles::{invariant_subspaces, Representation, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::spectral::{jordan_structure, normalized_exponent};

/// Tolerance on the exponent sum being an integer.
const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Rank3Certificate {
    /// The monodromy algebra is all of `M_3(C)`.
    Irreducible { algebra_dim: usize },
    /// `G_k` has more than one Jordan block.
    SeveralJordanBlocks { puncture: usize, blocks: usize },
}

#[derive(Debug, Clone)]
pub enum Rank3Verdict {
    Realizable(Rank3Certificate),
    /// Reducible, one Jordan block everywhere and a non-integral exponent
    /// sum.
    NotRealizable {
        algebra_dim: usize,
        /// A proper invariant subspace, when one was found.
        subspace: Option<CMatrix>,
        exponent_sum: Complex64,
    },
    /// Only the splitting type of the canonical extension could decide.
    Undetermined { reason: String },
}

impl Rank3Verdict {
    pub fn is_definite(&self) -> bool {
        !matches!(self, Rank3Verdict::Undetermined { .. })
    }
}

/// Decides whether a rank three representation is the monodromy of a
/// Fuchsian system, where irreducibility, Jordan structure and the exponent
/// sum suffice.
pub fn rank3_decide(rep: &Representation, seed: u64) -> Result<Rank3Verdict> {
    if rep.rank() != 3 {
        return Err(Error::Shape(format!("rank three decision called on rank {}", rep.rank())));
    }
    let inv = invariant_subspaces(rep, DEFAULT_BUDGET, seed)?;
    if inv.algebra_dim == 9 {
        return Ok(Rank3Verdict::Realizable(Rank3Certificate::Irreducible {
            algebra_dim: inv.algebra_dim,
        }));
    }
    let mut exponent_sum = Complex64::new(0.0, 0.0);
    for (k, g) in rep.matrices().iter().enumerate() {
        let structure = jordan_structure(g)?;
        let blocks: usize = structure.iter().map(|&(_, _, geo)| geo).sum();
        if blocks > 1 {
            return Ok(Rank3Verdict::Realizable(Rank3Certificate::SeveralJordanBlocks { puncture: k, blocks }));
        }
        exponent_sum += normalized_exponent(structure[0].0)?;
    }
    let off = (exponent_sum.re - exponent_sum.re.round()).abs().max(exponent_sum.im.abs());
    if off > INTEGRALITY_TOL {
        // A proper algebra leaves a subspace invariant.
        return Ok(Rank3Verdict::NotRealizable {
            algebra_dim: inv.algebra_dim,
            subspace: inv.subspaces.first().cloned(),
            exponent_sum,
        });
    }
    Ok(Rank3Verdict::Undetermined {
        reason: "reducible with single Jordan blocks and integral exponent sum".into(),
    })
}
