//! Weighted flat bundles over the punctured sphere: representations,
//! weighted flags, degree and slope, invariant subspaces and stability.

mod extension;
mod flag;
mod invariant;
mod rep;
mod stability;

use num_complex::Complex64;
use num_rational::Rational64;

use crate::algebra::matrix::{column_span, projection_residual, scale_of, CMatrix};
use crate::error::{Error, Result};
use crate::spectral::norm_log;

pub use extension::{adapted_log, induce_weights_split_extension, local_extension, SplitData};
pub use flag::{is_injection, is_morphism, is_surjection, weight_of, Weight, WeightedFlag, INVARIANCE_TOL, RANK_TOL};
pub use invariant::{algebra_basis, invariant_subspaces, spin, Completeness, InvariantSubspaces, DEFAULT_BUDGET};
pub use rep::{default_punctures, Representation, PRODUCT_TOL};
pub use stability::{semistable, semistability_report, SemistabilityReport, Stability};

/// Distance from an integer tolerated when rounding degrees.
pub const DEGREE_TOL: f64 = 1e-6;

/// A representation with one invariant weighted flag per puncture.
#[derive(Debug, Clone)]
pub struct WeightedFlatBundle {
    rep: Representation,
    flags: Vec<WeightedFlag>,
}

impl WeightedFlatBundle {
    pub fn new(rep: Representation, flags: Vec<WeightedFlag>) -> Result<Self> {
        if flags.len() != rep.len() {
            return Err(Error::Shape(format!("{} flags for {} punctures", flags.len(), rep.len())));
        }
        for (j, (f, g)) in flags.iter().zip(rep.matrices()).enumerate() {
            if f.rank() != rep.rank() {
                return Err(Error::Shape(format!("flag {j} has rank {} instead of {}", f.rank(), rep.rank())));
            }
            if !f.is_invariant(g) {
                return Err(Error::Invalid(format!("flag {j} is not invariant under its monodromy")));
            }
        }
        Ok(Self { rep, flags })
    }

    /// Trivial flags with the given weight at each puncture.
    pub fn with_constant_weights(rep: Representation, weights: &[i64]) -> Result<Self> {
        let r = rep.rank();
        let flags = weights.iter().map(|&w| WeightedFlag::trivial(r, w)).collect();
        Self::new(rep, flags)
    }

    pub fn rep(&self) -> &Representation {
        &self.rep
    }

    pub fn flags(&self) -> &[WeightedFlag] {
        &self.flags
    }

    pub fn rank(&self) -> usize {
        self.rep.rank()
    }

    /// `sum_j (Tr Phi_j + Tr norm log G_j)` before rounding.
    pub fn degree_value(&self) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for (f, g) in self.flags.iter().zip(self.rep.matrices()) {
            total += f.trace() as f64 + norm_log(g)?.trace();
        }
        Ok(total)
    }

    pub fn degree(&self) -> Result<i64> {
        let d = self.degree_value()?;
        let rounded = d.re.round();
        if (d.re - rounded).abs() > DEGREE_TOL || d.im.abs() > DEGREE_TOL {
            return Err(Error::NonIntegral(format!("degree evaluates to {:.9}{:+.9}i", d.re, d.im)));
        }
        Ok(rounded as i64)
    }

    pub fn slope(&self) -> Result<Rational64> {
        Ok(Rational64::new(self.degree()?, self.rank() as i64))
    }

    /// `Phi_j + by_j I` at every puncture.
    pub fn shifted(&self, by: &[i64]) -> Result<Self> {
        if by.len() != self.flags.len() {
            return Err(Error::Shape(format!("{} shifts for {} punctures", by.len(), self.flags.len())));
        }
        Ok(Self {
            rep: self.rep.clone(),
            flags: self.flags.iter().zip(by).map(|(f, &b)| f.shifted(b)).collect(),
        })
    }
}

/// An invariant subspace with the induced weighted flags.
#[derive(Debug, Clone)]
pub struct SubBundle {
    /// Orthonormal basis of the subspace.
    pub basis: CMatrix,
    /// The induced bundle in the coordinates of `basis`.
    pub bundle: WeightedFlatBundle,
}

impl SubBundle {
    pub fn new(wfb: &WeightedFlatBundle, span: &CMatrix) -> Result<Self> {
        let basis = column_span(span, RANK_TOL * scale_of(span));
        if basis.ncols() == 0 {
            return Err(Error::Invalid("sub-bundle must be non-zero".into()));
        }
        let rep = wfb.rep.restricted(&basis)?;
        for (j, g) in wfb.rep.matrices().iter().enumerate() {
            let img = g * &basis;
            if projection_residual(&basis, &img) > INVARIANCE_TOL * scale_of(g) {
                return Err(Error::Invalid(format!("subspace is not invariant under monodromy {j}")));
            }
        }
        let flags = wfb
            .flags
            .iter()
            .map(|f| f.restricted(&basis))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            bundle: WeightedFlatBundle::new(rep, flags)?,
            basis,
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
}

#[cfg(test)]
mod tests;
