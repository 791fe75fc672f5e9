use crate::algebra::matrix::{
    fro_norm, hstack, identity, inverse, orthogonal_complement, product, rank, scale_of, zeros, CMatrix,
};
use crate::bundles::{algebra_basis, spin, Representation, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::spectral::eigenvalue_of;

/// A representation of twice the rank containing the input as a
/// subrepresentation, together with the checks made on it.
#[derive(Debug, Clone)]
pub struct DoubleRank {
    pub rep: Representation,
    /// Conjugator applied to the input before embedding.
    pub conjugator: CMatrix,
    /// Punctures were rotated left by this many places so that the first
    /// matrix is not scalar.
    pub rotation: usize,
    /// `|| G'_1 ... G'_n - I ||_F`.
    pub product_defect: f64,
    /// Whether the last basis vector is an eigenvector of `G'_1`.
    pub last_is_eigenvector: bool,
    /// Dimension of the span of the last basis vector under the algebra.
    pub krylov_rank: usize,
}

fn is_scalar(g: &CMatrix) -> bool {
    let r = g.nrows();
    let c = g[(0, 0)];
    fro_norm(&(g - identity(r) * c)) <= 1e-10 * scale_of(g)
}

/// Conjugator `S = [complement, G v, v]` such that `S^{-1} G S` maps the
/// last basis vector to the one before it.
fn normalizing_conjugator(g: &CMatrix) -> Result<CMatrix> {
    let r = g.nrows();
    // The basis vector least aligned with its image spans a 2-plane with it.
    let mut best: Option<(f64, CMatrix)> = None;
    for i in 0..r {
        let mut v = zeros(r, 1);
        v[(i, 0)] = 1.0.into();
        let gv = g * &v;
        let plane = hstack(&[&gv, &v]);
        let s = crate::algebra::matrix::singular_values(&plane)[1] / scale_of(g);
        if best.as_ref().is_none_or(|(bs, _)| s > *bs) {
            best = Some((s, v));
        }
    }
    let (s, mut v) = best.expect("rank at least one");
    if s < 1e-8 {
        // Every basis vector is nearly an eigenvector; mix them.
        v = CMatrix::from_fn(r, 1, |i, _| (1.0 + i as f64).into());
        let gv = g * &v;
        if rank(&hstack(&[&gv, &v]), 1e-8 * scale_of(g) * fro_norm(&v)) < 2 {
            return Err(Error::Numerical("no vector spans a plane with its image".into()));
        }
    }
    let gv = g * &v;
    let plane = hstack(&[&gv, &v]);
    let comp = orthogonal_complement(&plane, r);
    Ok(hstack(&[&comp, &gv, &v]))
}

/// Embeds a rank `r` representation with `n >= 3` punctures into one of
/// rank `2r` whose last basis vector is an eigenvector of the first matrix
/// and cyclic for the whole algebra.
pub fn double_rank_embedding(rep: &Representation) -> Result<DoubleRank> {
    let r = rep.rank();
    let n = rep.len();
    if n < 3 || r < 2 {
        return Err(Error::Precondition(format!(
            "embedding needs n >= 3 and r >= 2 (got n = {n}, r = {r}); use the commutative synthesis instead"
        )));
    }
    let rotation = (0..n)
        .find(|&j| !is_scalar(rep.matrix(j)))
        .ok_or_else(|| Error::Precondition("all monodromy matrices are scalar".into()))?;
    let mut mats: Vec<CMatrix> = rep.matrices().to_vec();
    let mut punctures = rep.punctures().to_vec();
    mats.rotate_left(rotation);
    punctures.rotate_left(rotation);

    let s = normalizing_conjugator(&mats[0])?;
    let s_inv = inverse(&s)?;
    let g: Vec<CMatrix> = mats.iter().map(|m| &s_inv * m * &s).collect();

    let mut m1 = zeros(r, r);
    for i in 0..r - 2 {
        m1[(i, i)] = 1.0.into();
    }
    m1[(r - 1, r - 2)] = 1.0.into();
    let mut m2 = identity(r);
    for i in 0..r - 1 {
        m2[(i, i + 1)] = 1.0.into();
    }
    let m2_inv = inverse(&m2)?;
    let g1_inv = inverse(&g[0])?;
    let g2_inv = inverse(&g[1])?;

    let block = |tl: &CMatrix, tr: &CMatrix, br: &CMatrix| {
        let mut out = zeros(2 * r, 2 * r);
        out.view_mut((0, 0), (r, r)).copy_from(tl);
        out.view_mut((0, r), (r, r)).copy_from(tr);
        out.view_mut((r, r), (r, r)).copy_from(br);
        out
    };
    let mut doubled = Vec::with_capacity(n);
    doubled.push(block(&g[0], &m1, &identity(r)));
    doubled.push(block(&g[1], &zeros(r, r), &m2));
    doubled.push(block(&g[2], &(-(&g2_inv * &g1_inv * &m1)), &m2_inv));
    for gj in &g[3..] {
        doubled.push(block(gj, &zeros(r, r), &identity(r)));
    }

    let prod = product(&doubled).expect("at least three matrices");
    let product_defect = fro_norm(&(prod - identity(2 * r)));
    let scale: f64 = doubled.iter().map(scale_of).product();
    if product_defect > 1e-10 * scale {
        return Err(Error::Numerical(format!("embedded product defect {product_defect:.3e}")));
    }
    let mut last = zeros(2 * r, 1);
    last[(2 * r - 1, 0)] = 1.0.into();
    let last_is_eigenvector = eigenvalue_of(&doubled[0], &last, 1e-10).is_some();
    let algebra = algebra_basis(&doubled, DEFAULT_BUDGET)?;
    let krylov_rank = spin(&algebra, &last).ncols();
    let out = Representation::new(punctures, doubled)?;
    Ok(DoubleRank {
        rep: out,
        conjugator: s,
        rotation,
        product_defect,
        last_is_eigenvector,
        krylov_rank,
    })
}
