use num_complex::Complex64;

use super::flag::{is_injection, is_surjection, WeightedFlag};
use super::rep::Representation;
use super::WeightedFlatBundle;
use crate::algebra::matrix::{fro_norm, hstack, identity, max_abs, scale_of, vstack, zeros, CMatrix};
use crate::error::{Error, Result};
use crate::localforms::{normal_connection_matrix, LocalLogConnection};
use crate::spectral::norm_log;

/// Entries below the weight-block diagonal of at most this relative size
/// are treated as rounding noise.
const BLOCK_NOISE: f64 = 1e-7;

/// Adapted unitary frame `s` of the flag and `K = norm log(s^* g s)`, with
/// the block-lower part cleared.
pub fn adapted_log(g: &CMatrix, flag: &WeightedFlag) -> Result<(CMatrix, CMatrix)> {
    if !flag.is_invariant(g) {
        return Err(Error::Invalid("flag is not invariant under the monodromy".into()));
    }
    let s = flag.adapted_basis();
    let gs = s.adjoint() * g * &s;
    let mut k = norm_log(&gs)?.k;
    let phi = flag.diagonal();
    let e = phi.entries();
    let tol = BLOCK_NOISE * scale_of(&k);
    for i in 0..e.len() {
        for m in 0..e.len() {
            if e[i] < e[m] {
                if k[(i, m)].norm() > tol {
                    return Err(Error::Numerical(format!(
                        "logarithm leaks below the flag at ({i}, {m}): {:.3e}",
                        k[(i, m)].norm()
                    )));
                }
                k[(i, m)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Ok((s, k))
}

/// The logarithmic extension of a weighted local system across the
/// puncture: `A(z) = z^Phi (-K - Phi) z^{-Phi}` in a frame adapted to the
/// flag.
pub fn local_extension(g: &CMatrix, flag: &WeightedFlag) -> Result<LocalLogConnection> {
    let (_, k) = adapted_log(g, flag)?;
    LocalLogConnection::new(normal_connection_matrix(&k, &flag.diagonal())?)
}

/// The data of a short exact sequence `0 -> sub -> total -> quot -> 0` with
/// the subspace spanned by the first coordinates, plus a right inverse of
/// the projection at one puncture commuting with the local monodromy.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub total: Representation,
    pub puncture: usize,
    /// `r x r''` with `pi alpha = I` and `G_k alpha = alpha G''_k`.
    pub alpha: CMatrix,
}

/// Induces weights on an extension: stacked filtrations away from the split
/// puncture and the direct-sum filtration of `sub + Im alpha` at it.
pub fn induce_weights_split_extension(
    sub: &WeightedFlatBundle,
    quot: &WeightedFlatBundle,
    split: &SplitData,
) -> Result<WeightedFlatBundle> {
    let total = &split.total;
    let (r1, r2) = (sub.rank(), quot.rank());
    let r = total.rank();
    let n = total.len();
    if r1 + r2 != r || sub.rep().len() != n || quot.rep().len() != n || split.puncture >= n {
        return Err(Error::Shape("sub, quotient and total data do not fit together".into()));
    }
    for (j, g) in total.matrices().iter().enumerate() {
        let tol = 1e-8 * scale_of(g);
        let lower = g.view((r1, 0), (r2, r1)).into_owned();
        let top = g.view((0, 0), (r1, r1)).into_owned();
        let bottom = g.view((r1, r1), (r2, r2)).into_owned();
        if max_abs(&lower) > tol
            || fro_norm(&(top - sub.rep().matrix(j))) > tol
            || fro_norm(&(bottom - quot.rep().matrix(j))) > tol
        {
            return Err(Error::Precondition(format!(
                "total monodromy {j} is not an extension of the given sub and quotient"
            )));
        }
    }
    let k = split.puncture;
    let alpha = &split.alpha;
    if alpha.shape() != (r, r2) {
        return Err(Error::Shape(format!("alpha must be {r}x{r2}")));
    }
    let pi_alpha = alpha.view((r1, 0), (r2, r2)).into_owned();
    let gk = total.matrix(k);
    if fro_norm(&(pi_alpha - identity(r2))) > 1e-9 * scale_of(alpha)
        || fro_norm(&(gk * alpha - alpha * quot.rep().matrix(k))) > 1e-8 * scale_of(gk) * scale_of(alpha)
    {
        return Err(Error::Precondition("alpha is not an equivariant right inverse of the projection".into()));
    }

    let iota = vstack(&[&identity(r1), &zeros(r2, r1)]);
    let lift = |u: &CMatrix| vstack(&[&zeros(r1, u.ncols()), u]);
    let mut flags = Vec::with_capacity(n);
    for j in 0..n {
        let fs = &sub.flags()[j];
        let fq = &quot.flags()[j];
        if j == k {
            let mut weights: Vec<i64> = fs.weights().iter().chain(fq.weights()).copied().collect();
            weights.sort_unstable_by(|a, b| b.cmp(a));
            weights.dedup();
            let spaces = weights
                .iter()
                .map(|&w| hstack(&[&(&iota * fs.level_set(w)), &(alpha * fq.level_set(w))]))
                .collect();
            flags.push(WeightedFlag::new(spaces, weights)?);
        } else {
            let min_sub = *fs.weights().last().expect("non-empty");
            let max_quot = fq.weights()[0];
            if min_sub <= max_quot {
                return Err(Error::Precondition(format!(
                    "at puncture {j} the sub weights must all exceed the quotient weights ({min_sub} <= {max_quot})"
                )));
            }
            let mut spaces: Vec<CMatrix> = fs.spaces().iter().map(|v| &iota * v).collect();
            spaces.extend(fq.spaces().iter().map(|u| hstack(&[&iota, &lift(u)])));
            let weights = fs.weights().iter().chain(fq.weights()).copied().collect();
            flags.push(WeightedFlag::new(spaces, weights)?);
        }
    }
    let bundle = WeightedFlatBundle::new(total.clone(), flags)?;
    let pi = hstack(&[&zeros(r2, r1), &identity(r2)]);
    for j in 0..n {
        if !is_injection(&iota, &sub.flags()[j], &bundle.flags()[j]) {
            return Err(Error::Numerical(format!("inclusion fails to be an injection at puncture {j}")));
        }
        if !is_surjection(&pi, &bundle.flags()[j], &quot.flags()[j]) {
            return Err(Error::Numerical(format!("projection fails to be a surjection at puncture {j}")));
        }
    }
    Ok(bundle)
}
