use num_complex::Complex64;

use crate::algebra::matrix::{fro_norm, CMatrix};
use crate::error::{Error, Result};
use crate::localforms::LocalLogConnection;
use crate::synth::FuchsianSystem;

use super::ode::{integrate_linear, OdeOptions};

/// Fewest radii accepted for a fit.
pub const MIN_RADII: usize = 8;

/// Fewest decades the radii must span.
pub const MIN_DECADES: f64 = 3.0;

/// Slopes this close to an integer are taken to be that integer.
const SLOPE_SNAP: f64 = 1e-6;

/// Width of the confidence interval in standard errors.
const CONFIDENCE_WIDTH: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct GrowthEstimate {
    /// `floor` of the fitted slope of `log |v|` against `log |z|`.
    pub exponent: i64,
    pub slope: f64,
    /// Confidence interval for the slope.
    pub interval: (f64, f64),
    /// Whether the whole interval has the same floor.
    pub reliable: bool,
    /// `(log |z|, log |v(z)|)` at each radius.
    pub samples: Vec<(f64, f64)>,
}

fn snapped(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= SLOPE_SNAP {
        r as i64
    } else {
        x.floor() as i64
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.len() < MIN_RADII {
        return Err(Error::Invalid(format!("need at least {MIN_RADII} radii, got {}", radii.len())));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::Invalid("radii must be positive and finite".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("radii must decrease".into()));
    }
    let decades = (radii[0] / radii[radii.len() - 1]).log10();
    if decades < MIN_DECADES - 1e-12 {
        return Err(Error::Invalid(format!("radii span {decades:.2} decades, need {MIN_DECADES}")));
    }
    Ok(())
}

/// Radial transport of `v` for `z A'(z) = -A(z)` style systems, where
/// `matrix(w)` is the coefficient of `dw / w`, in the variable `t = log w`.
fn radial_fit<F>(matrix: F, v: &CMatrix, radii: &[f64], tol: f64) -> Result<GrowthEstimate>
where
    F: Fn(f64) -> CMatrix,
{
    check_radii(radii)?;
    if v.ncols() != 1 || fro_norm(v) == 0.0 {
        return Err(Error::Invalid("growth needs a single nonzero vector".into()));
    }
    let opts = OdeOptions::with_tol(tol);
    let coef = |t: f64| -matrix(t.exp());
    // Renormalized after each leg so the tolerance stays relative.
    let mut log_norm = fro_norm(v).ln();
    let mut y = v / Complex64::from(fro_norm(v));
    let mut samples = vec![(radii[0].ln(), log_norm)];
    for w in radii.windows(2) {
        y = integrate_linear(coef, w[0].ln(), w[1].ln(), &y, &opts)?.y;
        let norm = fro_norm(&y);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Integration("transported vector vanished or overflowed".into()));
        }
        log_norm += norm.ln();
        y /= Complex64::from(norm);
        samples.push((w[1].ln(), log_norm));
    }
    let m = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / m;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / m;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = samples.iter().map(|s| (s.1 - my - slope * (s.0 - mx)).powi(2)).sum();
    let se = (ssr / (m - 2.0) / sxx).sqrt();
    let half = CONFIDENCE_WIDTH * se;
    let interval = (slope - half, slope + half);
    Ok(GrowthEstimate {
        exponent: snapped(slope),
        slope,
        interval,
        reliable: snapped(interval.0) == snapped(interval.1),
        samples,
    })
}

/// Growth of the flat section through `v` (given at `radii[0]`) as it is
/// transported towards the puncture along the positive real axis.
pub fn growth_exponent(conn: &LocalLogConnection, v: &CMatrix, radii: &[f64], tol: f64) -> Result<GrowthEstimate> {
    if v.nrows() != conn.rank() {
        return Err(Error::Shape("vector length differs from the rank".into()));
    }
    let series = conn.matrix();
    radial_fit(|w| series.evaluate(Complex64::new(w, 0.0)), v, radii, tol)
}

/// As [`growth_exponent`], at puncture `j` of a Fuchsian system, using the
/// exact connection matrix along the ray leaving `a_j` in the direction
/// farthest from the other punctures.
pub fn growth_exponent_at(
    sys: &FuchsianSystem,
    j: usize,
    v: &CMatrix,
    radii: &[f64],
    tol: f64,
) -> Result<GrowthEstimate> {
    if j >= sys.len() {
        return Err(Error::Invalid(format!("no puncture with index {j}")));
    }
    if v.nrows() != sys.rank() {
        return Err(Error::Shape("vector length differs from the rank".into()));
    }
    let a = sys.punctures()[j];
    let others: Vec<Complex64> = sys.punctures().iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &p)| p).collect();
    let dir = if others.is_empty() {
        Complex64::new(1.0, 0.0)
    } else {
        let away: Complex64 = others.iter().map(|&p| -(p - a) / (p - a).norm_sqr()).sum();
        if away.norm() == 0.0 {
            Complex64::new(0.0, 1.0)
        } else {
            away / away.norm()
        }
    };
    let reach = radii.first().copied().unwrap_or(0.0);
    for &p in &others {
        let t = ((p - a) * dir.conj()).re.clamp(0.0, reach);
        if (a + dir * t - p).norm() < 0.25 * (p - a).norm() {
            return Err(Error::Integration("radial path passes close to another puncture".into()));
        }
    }
    radial_fit(
        |w| {
            let z = a + dir * w;
            sys.matrix_at(z) * (z - a)
        },
        v,
        radii,
        tol,
    )
}
