use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::matrix::{fro_norm, identity, kron, null_space, op_norm, scale_of, singular_values, unvectorize, vstack, CMatrix};
use crate::error::{Error, Result};

/// Smallest singular value of an acceptable conjugator, relative to its
/// largest.
pub const INVERTIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Conjugacy {
    pub conjugate: bool,
    /// `S` with `a_j S = S b_j`, scaled to unit determinant, when one was
    /// found.
    pub conjugator: Option<CMatrix>,
    /// Dimension of the space of intertwiners.
    pub intertwiner_dim: usize,
}

/// Looks for an invertible `S` with `a_j S = S b_j` for all `j`, from the
/// null space of the stacked operators `I (x) a_j - b_j^T (x) I`.
pub fn conjugacy_compare(a: &[CMatrix], b: &[CMatrix], tol: f64) -> Result<Conjugacy> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Shape(format!("{} and {} matrices", a.len(), b.len())));
    }
    let r = a[0].nrows();
    for m in a.iter().chain(b) {
        if m.nrows() != r || m.ncols() != r {
            return Err(Error::Shape("matrices of different shapes".into()));
        }
    }
    let id = identity(r);
    let blocks: Vec<CMatrix> = a
        .iter()
        .zip(b)
        .map(|(aj, bj)| kron(&id, aj) - kron(&bj.transpose(), &id))
        .collect();
    let refs: Vec<&CMatrix> = blocks.iter().collect();
    let stacked = vstack(&refs);
    let scale = op_norm(&stacked).max(1.0);
    let kernel = null_space(&stacked, tol * scale);
    let dim = kernel.ncols();
    let none = Conjugacy {
        conjugate: false,
        conjugator: None,
        intertwiner_dim: dim,
    };
    if dim == 0 {
        return Ok(none);
    }
    let s = if dim == 1 {
        unvectorize(&kernel, r, r)
    } else {
        // A generic element of the intertwiner space is invertible whenever
        // any element is.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut v = CMatrix::zeros(r * r, 1);
        for c in 0..dim {
            let w = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            v += kernel.column(c) * w;
        }
        unvectorize(&v, r, r)
    };
    let sv = singular_values(&s);
    let (smax, smin) = (sv[0], sv[sv.len() - 1]);
    if smin <= INVERTIBILITY_TOL * smax {
        return Ok(none);
    }
    let det = s.determinant();
    let s = s / det.powf(1.0 / r as f64);
    let residual = a
        .iter()
        .zip(b)
        .map(|(aj, bj)| fro_norm(&(aj * &s - &s * bj)) / (fro_norm(&s) * scale_of(aj).max(scale_of(bj))))
        .fold(0.0, f64::max);
    Ok(Conjugacy {
        conjugate: residual <= tol,
        conjugator: Some(s),
        intertwiner_dim: dim,
    })
}
