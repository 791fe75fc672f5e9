//! Constructive Fuchsian synthesis: the commutative case, splitting-frame
//! solving, weight shifts and regauging, integer weight solvers, weight
//! plans for cyclic vectors, the double-rank embedding and the rank three
//! decision.

mod commutative;
mod embedding;
mod frame;
mod parabolic;
mod plan;
mod rank3;


use num_complex::Complex64;

use crate::algebra::matrix::{check_finite, check_square, fro_norm, zeros, CMatrix};
use crate::algebra::MatrixSeries;
use crate::error::{Error, Result};

pub use commutative::commutative_fuchsian;
pub use embedding::{double_rank_embedding, DoubleRank};
pub use frame::{
    bq_frame, regauge_given_splitting, shift_weights, splitting_bound_check, BoundReport, FrameSolution,
    SplittingType,
};
pub use parabolic::{diophantine_solve, solve_weights_parabolic, validate_weights, WeightMode, WeightSolution};
pub use plan::{cyclic_weight_plan, CyclicPlan};
pub use rank3::{rank3_decide, Rank3Certificate, Rank3Verdict};

/// Relative tolerance on the residue sum of a Fuchsian system.
pub const RESIDUE_SUM_TOL: f64 = 1e-10;

/// `d + sum_j B_j / (z - a_j) dz` on the trivial bundle, holomorphic at
/// infinity.
#[derive(Debug, Clone)]
pub struct FuchsianSystem {
    punctures: Vec<Complex64>,
    residues: Vec<CMatrix>,
}

impl FuchsianSystem {
    pub fn new(punctures: Vec<Complex64>, residues: Vec<CMatrix>) -> Result<Self> {
        if punctures.len() != residues.len() || residues.is_empty() {
            return Err(Error::Shape(format!(
                "{} punctures but {} residues",
                punctures.len(),
                residues.len()
            )));
        }
        let r = residues[0].nrows();
        for b in &residues {
            check_square(b, "residue")?;
            check_finite(b)?;
            if b.nrows() != r {
                return Err(Error::Shape("residues of different ranks".into()));
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
        let sys = Self { punctures, residues };
        let scale = sys.residues.iter().map(fro_norm).fold(1.0, f64::max);
        let defect = sys.residue_sum_defect();
        if defect > RESIDUE_SUM_TOL * scale {
            return Err(Error::Invalid(format!("residues sum to {defect:.3e}, the system has a pole at infinity")));
        }
        Ok(sys)
    }

    pub fn rank(&self) -> usize {
        self.residues[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn punctures(&self) -> &[Complex64] {
        &self.punctures
    }

    pub fn residues(&self) -> &[CMatrix] {
        &self.residues
    }

    /// `|| sum_j B_j ||_F`.
    pub fn residue_sum_defect(&self) -> f64 {
        let r = self.rank();
        let sum = self.residues.iter().fold(zeros(r, r), |acc, b| acc + b);
        fro_norm(&sum)
    }

    /// The connection matrix `sum_j B_j / (z - a_j)`.
    pub fn matrix_at(&self, z: Complex64) -> CMatrix {
        let r = self.rank();
        let mut m = zeros(r, r);
        for (a, b) in self.punctures.iter().zip(&self.residues) {
            m += b / (z - a);
        }
        m
    }

    /// `S^{-1} B_j S` for every residue.
    pub fn conjugated(&self, s: &CMatrix) -> Result<Self> {
        let s_inv = crate::algebra::matrix::inverse(s)?;
        Ok(Self {
            punctures: self.punctures.clone(),
            residues: self.residues.iter().map(|b| &s_inv * b * s).collect(),
        })
    }

    /// The local form `d + A(w) dw / w` in `w = z - a_j`, expanded to
    /// `order`: `A^0 = B_j` and `A^m = -sum_{k != j} B_k (a_k - a_j)^{-m}`.
    pub fn local_connection(&self, j: usize, order: usize) -> Result<crate::localforms::LocalLogConnection> {
        if j >= self.len() {
            return Err(Error::Invalid(format!("no puncture with index {j}")));
        }
        let r = self.rank();
        let a = self.punctures[j];
        let mut coeffs = vec![self.residues[j].clone()];
        for m in 1..=order {
            let mut c = zeros(r, r);
            for (k, (ak, bk)) in self.punctures.iter().zip(&self.residues).enumerate() {
                if k != j {
                    c -= bk * (ak - a).powi(-(m as i32));
                }
            }
            coeffs.push(c);
        }
        crate::localforms::LocalLogConnection::new(MatrixSeries::new(coeffs)?)
    }
}
