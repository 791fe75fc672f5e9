//! Adaptive Dormand-Prince 5(4) integration of linear matrix equations
//! `Y'(t) = F(t) Y(t)` with complex coefficients.

use num_complex::Complex64;

use crate::algebra::matrix::CMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; defaults to a hundredth of the interval.
    pub initial_step: Option<f64>,
    /// Largest allowed step; keeps the stepper from skipping features.
    pub max_step: Option<f64>,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-12,
            initial_step: None,
            max_step: None,
            min_step: 1e-14,
            max_steps: 200_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol * 0.1,
            ..Self::default()
        }
    }
}

/// Outcome of an integration: the end value and step statistics.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub y: CMatrix,
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `Y' = coef(t) Y` from `t0` to `t1` (either direction).
pub fn integrate_linear<F>(coef: F, t0: f64, t1: f64, y0: &CMatrix, opts: &OdeOptions) -> Result<OdeSolution>
where
    F: Fn(f64) -> CMatrix,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(OdeSolution {
            y: y0.clone(),
            accepted: 0,
            rejected: 0,
        });
    }
    let dir = span.signum();
    let max_step = opts.max_step.unwrap_or(span.abs()).min(span.abs());
    let mut h = opts.initial_step.unwrap_or(span.abs() / 100.0).min(max_step);
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = coef(t) * &y;
    let (mut accepted, mut rejected) = (0usize, 0usize);
    while (t1 - t) * dir > 0.0 {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::Integration(format!("step budget of {} exhausted at t = {t}", opts.max_steps)));
        }
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        let hs = step * dir;
        let mut k: Vec<CMatrix> = Vec::with_capacity(7);
        k.push(k1.clone());
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(s) {
                if A[s][j] != 0.0 {
                    ys += kj * Complex64::from(hs * A[s][j]);
                }
            }
            if s == 6 {
                // the seventh stage is evaluated at the proposed solution
                let k7 = coef(t + hs) * &ys;
                k.push(k7);
                let mut err_m = k[0].clone() * Complex64::from(E[0]);
                for (j, kj) in k.iter().enumerate().skip(1) {
                    if E[j] != 0.0 {
                        err_m += kj * Complex64::from(E[j]);
                    }
                }
                err_m *= Complex64::from(hs);
                let mut err = 0.0f64;
                for ((e, a), b) in err_m.iter().zip(y.iter()).zip(ys.iter()) {
                    let sc = opts.atol + opts.rtol * a.norm().max(b.norm());
                    err = err.max(e.norm() / sc);
                }
                if !err.is_finite() {
                    return Err(Error::Integration(format!("non-finite state near t = {t}")));
                }
                if err <= 1.0 {
                    t = if last { t1 } else { t + hs };
                    y = ys;
                    k1 = k.pop().expect("seventh stage present");
                    accepted += 1;
                } else {
                    rejected += 1;
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h = (step * factor).min(max_step);
                if h < opts.min_step && (t1 - t) * dir > opts.min_step {
                    return Err(Error::Integration(format!("step size underflow near t = {t}")));
                }
                break;
            }
            let ts = t + C[s] * hs;
            k.push(coef(ts) * &ys);
        }
    }
    Ok(OdeSolution { y, accepted, rejected })
}
