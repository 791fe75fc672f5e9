use std::f64::consts::PI;

use num_complex::Complex64;

use crate::algebra::matrix::{
    check_finite, check_square, condition_number, fro_norm, identity, inverse, product, scale_of, CMatrix,
};
use crate::error::{Error, Result};

/// Relative tolerance on `G_1 ... G_n = I`.
pub const PRODUCT_TOL: f64 = 1e-8;

/// Monodromy of a flat bundle over the sphere minus `n` points: one matrix
/// per puncture, composed left to right, with `G_1 G_2 ... G_n = I`.
#[derive(Debug, Clone)]
pub struct Representation {
    punctures: Vec<Complex64>,
    matrices: Vec<CMatrix>,
    basepoint: Option<Complex64>,
}

impl Representation {
    pub fn new(punctures: Vec<Complex64>, matrices: Vec<CMatrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::Invalid("a representation needs at least one puncture".into()));
        }
        if punctures.len() != matrices.len() {
            return Err(Error::Shape(format!(
                "{} punctures but {} monodromy matrices",
                punctures.len(),
                matrices.len()
            )));
        }
        let r = matrices[0].nrows();
        for (j, g) in matrices.iter().enumerate() {
            check_square(g, "monodromy matrix")?;
            check_finite(g)?;
            if g.nrows() != r {
                return Err(Error::Shape(format!("matrix {j} has rank {} instead of {r}", g.nrows())));
            }
            let cond = condition_number(g);
            if !cond.is_finite() || cond > 1e14 {
                return Err(Error::Singular(format!("monodromy matrix {j} is not invertible")));
            }
        }
        for (i, a) in punctures.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NonFinite);
            }
            if punctures[..i].iter().any(|b| (a - b).norm() < 1e-12) {
                return Err(Error::Invalid(format!("puncture {i} repeats an earlier one")));
            }
        }
        let rep = Self {
            punctures,
            matrices,
            basepoint: None,
        };
        let defect = rep.product_defect();
        let scale: f64 = rep.matrices.iter().map(scale_of).product();
        if defect > PRODUCT_TOL * scale {
            return Err(Error::Invalid(format!("product of monodromy matrices is not the identity (defect {defect:.3e})")));
        }
        Ok(rep)
    }

    /// Punctures on the unit circle in counterclockwise order starting at 1.
    pub fn with_default_punctures(matrices: Vec<CMatrix>) -> Result<Self> {
        let n = matrices.len();
        Self::new(default_punctures(n), matrices)
    }

    pub fn with_basepoint(mut self, s: Complex64) -> Self {
        self.basepoint = Some(s);
        self
    }

    pub fn rank(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, j: usize) -> &CMatrix {
        &self.matrices[j]
    }

    pub fn punctures(&self) -> &[Complex64] {
        &self.punctures
    }

    pub fn basepoint(&self) -> Option<Complex64> {
        self.basepoint
    }

    /// `|G_1 ... G_n - I|` (Frobenius).
    pub fn product_defect(&self) -> f64 {
        let p = product(&self.matrices).expect("non-empty");
        fro_norm(&(p - identity(self.rank())))
    }

    /// `S^{-1} G_j S` for every puncture.
    pub fn conjugated(&self, s: &CMatrix) -> Result<Self> {
        let s_inv = inverse(s)?;
        let mats = self.matrices.iter().map(|g| &s_inv * g * s).collect();
        let mut out = Self::new(self.punctures.clone(), mats)?;
        out.basepoint = self.basepoint;
        Ok(out)
    }

    /// Action on an invariant subspace with orthonormal `basis`.
    pub fn restricted(&self, basis: &CMatrix) -> Result<Self> {
        let mats = self.matrices.iter().map(|g| basis.adjoint() * g * basis).collect();
        let mut out = Self::new(self.punctures.clone(), mats)?;
        out.basepoint = self.basepoint;
        Ok(out)
    }

    pub fn pairwise_commuting(&self, tol: f64) -> bool {
        for (i, a) in self.matrices.iter().enumerate() {
            for b in &self.matrices[i + 1..] {
                let c = a * b - b * a;
                if fro_norm(&c) > tol * scale_of(a) * scale_of(b) {
                    return false;
                }
            }
        }
        true
    }
}

pub fn default_punctures(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))
        .collect()
}
