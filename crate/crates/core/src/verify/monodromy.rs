use num_complex::Complex64;

use crate::algebra::matrix::{fro_norm, identity, inverse, product, scale_of, CMatrix};
use crate::error::{Error, Result};
use crate::synth::FuchsianSystem;

use super::conjugacy::{conjugacy_compare, Conjugacy};
use super::loops::{standard_loops, LoopPath, PathPiece};
use super::ode::{integrate_linear, OdeOptions};

/// Loops must keep at least this fraction of the loop radius away from
/// every puncture.
const CLEARANCE_FRACTION: f64 = 0.25;

/// Per-step tolerance relative to the requested accuracy of a loop matrix;
/// local errors accumulate over a few hundred steps.
const STEP_TOL_FACTOR: f64 = 0.01;

/// Transports the identity frame along `path`: returns `G` with
/// `Y o path = Y G` for the fundamental solution `Y` normalized to the
/// identity at the basepoint.
pub fn integrate_fuchsian(sys: &FuchsianSystem, path: &LoopPath, tol: f64) -> Result<CMatrix> {
    let radius = path
        .pieces
        .iter()
        .filter_map(|p| match p {
            PathPiece::Arc { radius, .. } => Some(*radius),
            PathPiece::Segment { .. } => None,
        })
        .fold(f64::INFINITY, f64::min);
    let clearance = path.clearance(sys.punctures());
    let needed = if radius.is_finite() { CLEARANCE_FRACTION * radius } else { 1e-8 };
    if clearance < needed {
        return Err(Error::Integration(format!("path passes within {clearance:.3e} of a puncture")));
    }
    transport(sys, &path.pieces, tol)
}

fn transport(sys: &FuchsianSystem, pieces: &[PathPiece], tol: f64) -> Result<CMatrix> {
    let mut y = identity(sys.rank());
    for piece in pieces {
        let near = sys
            .punctures()
            .iter()
            .map(|&a| piece.distance_to(a))
            .fold(f64::INFINITY, f64::min);
        // Steps no longer than a fraction of the distance to the nearest pole.
        let max_step = (0.5 * near / piece.length().max(1e-300)).min(0.05);
        let opts = OdeOptions {
            max_step: Some(max_step),
            ..OdeOptions::with_tol((tol * STEP_TOL_FACTOR).max(1e-15))
        };
        let coef = |t: f64| {
            let z = piece.point(t);
            sys.matrix_at(z) * (-piece.velocity(t))
        };
        y = integrate_linear(coef, 0.0, 1.0, &y, &opts)?.y;
    }
    Ok(y)
}

/// Loop matrices of a Fuchsian system for the standard loops, reordered so
/// that `G_1 G_2 ... G_n = I` in puncture order.
#[derive(Debug, Clone)]
pub struct Monodromy {
    pub basepoint: Complex64,
    /// Raw loop matrix of each standard loop, by puncture.
    pub raw: Vec<CMatrix>,
    /// Matrices after reordering, by puncture.
    pub matrices: Vec<CMatrix>,
    /// `|| G_1 ... G_n - I ||_F`.
    pub product_defect: f64,
    /// Largest change of a loop matrix when integrated at a tenth of the
    /// tolerance.
    pub reintegration_defect: f64,
}

/// Reorders loop matrices from the geometric order into puncture order,
/// keeping the product fixed: `(X, Y) -> (Y, Y^{-1} X Y)`.
fn hurwitz_sort(mut items: Vec<(usize, CMatrix)>) -> Result<Vec<CMatrix>> {
    let n = items.len();
    for pass in 0..n {
        let mut swapped = false;
        for p in 0..n - 1 - pass.min(n - 1) {
            if items[p].0 > items[p + 1].0 {
                let (ix, x) = items[p].clone();
                let (iy, y) = items[p + 1].clone();
                let y_inv = inverse(&y)?;
                items[p] = (iy, y.clone());
                items[p + 1] = (ix, &y_inv * x * &y);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    Ok(items.into_iter().map(|(_, m)| m).collect())
}

pub fn monodromy(sys: &FuchsianSystem, tol: f64) -> Result<Monodromy> {
    let plan = standard_loops(sys.punctures())?;
    let mut raw = Vec::with_capacity(sys.len());
    let mut reintegration_defect: f64 = 0.0;
    for lp in &plan.loops {
        let g = integrate_fuchsian(sys, lp, tol)?;
        let fine = integrate_fuchsian(sys, lp, tol * 0.1)?;
        reintegration_defect = reintegration_defect.max(fro_norm(&(&g - &fine)) / scale_of(&fine));
        raw.push(fine);
    }
    // Composing along increasing angle encircles everything; loop matrices
    // compose in the opposite order.
    let geometric: Vec<(usize, CMatrix)> = plan.angular_order.iter().rev().map(|&j| (j, raw[j].clone())).collect();
    let matrices = hurwitz_sort(geometric)?;
    let prod = product(&matrices).expect("at least one loop");
    let product_defect = fro_norm(&(prod - identity(sys.rank())));
    Ok(Monodromy {
        basepoint: plan.basepoint,
        raw,
        matrices,
        product_defect,
        reintegration_defect,
    })
}

/// Integrated monodromy compared with a target representation.
#[derive(Debug, Clone)]
pub struct MonodromyReport {
    pub computed: Vec<CMatrix>,
    pub product_defect: f64,
    pub reintegration_defect: f64,
    pub conjugate: bool,
    /// `S` with `target_j S = S computed_j`.
    pub conjugator: Option<CMatrix>,
    /// `|| target_j S - S computed_j || / (|| S || scale)` per loop.
    pub residuals: Vec<f64>,
}

impl MonodromyReport {
    pub fn from_parts(target: &[CMatrix], computed: Vec<CMatrix>, conj: Conjugacy, reintegration_defect: f64) -> Self {
        let r = computed.first().map_or(0, |g| g.nrows());
        let prod = product(&computed).unwrap_or_else(|| identity(r));
        let product_defect = fro_norm(&(prod - identity(r)));
        let residuals = match &conj.conjugator {
            Some(s) => target
                .iter()
                .zip(&computed)
                .map(|(a, b)| fro_norm(&(a * s - s * b)) / (fro_norm(s) * scale_of(a).max(scale_of(b))))
                .collect(),
            None => Vec::new(),
        };
        Self {
            computed,
            product_defect,
            reintegration_defect,
            conjugate: conj.conjugate,
            conjugator: conj.conjugator,
            residuals,
        }
    }
}

/// Integrates the system's monodromy and compares it with `target` up to
/// simultaneous conjugation.
pub fn verify_monodromy(
    sys: &FuchsianSystem,
    target: &[CMatrix],
    tol: f64,
    conj_tol: f64,
) -> Result<MonodromyReport> {
    if target.len() != sys.len() {
        return Err(Error::Shape(format!("{} target matrices for {} punctures", target.len(), sys.len())));
    }
    let mono = monodromy(sys, tol)?;
    let conj = conjugacy_compare(target, &mono.matrices, conj_tol)?;
    Ok(MonodromyReport::from_parts(target, mono.matrices, conj, mono.reintegration_defect))
}
