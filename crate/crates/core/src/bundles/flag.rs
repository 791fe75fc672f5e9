use crate::algebra::matrix::{
    column_span, fro_norm, hstack, intersection, orthogonal_complement, projection_residual, scale_of, zeros, CMatrix,
};
use crate::algebra::weights::WeightDiagonal;
use crate::error::{Error, Result};

/// Relative singular-value threshold of rank and containment tests.
pub const RANK_TOL: f64 = 1e-9;

/// Relative residual allowed when testing `G V ⊆ V`.
pub const INVARIANCE_TOL: f64 = 1e-7;

/// Value of the weight function; the zero vector has weight `Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Weight {
    Finite(i64),
    Infinite,
}

/// A flag `V^1 ⊂ ... ⊂ V^l = C^r` with strictly decreasing integer weights
/// `psi^1 > ... > psi^l`. Spaces are stored with orthonormal bases.
#[derive(Debug, Clone)]
pub struct WeightedFlag {
    spaces: Vec<CMatrix>,
    weights: Vec<i64>,
}

impl WeightedFlag {
    pub fn new(spaces: Vec<CMatrix>, weights: Vec<i64>) -> Result<Self> {
        if spaces.is_empty() || spaces.len() != weights.len() {
            return Err(Error::Shape(format!(
                "flag has {} spaces and {} weights",
                spaces.len(),
                weights.len()
            )));
        }
        if weights.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Invalid(format!("flag weights {weights:?} are not strictly decreasing")));
        }
        let r = spaces[0].nrows();
        let mut ortho: Vec<CMatrix> = Vec::with_capacity(spaces.len());
        for (m, s) in spaces.iter().enumerate() {
            if s.nrows() != r {
                return Err(Error::Shape(format!("flag space {m} lives in dimension {}", s.nrows())));
            }
            let q = column_span(s, RANK_TOL * scale_of(s));
            if let Some(prev) = ortho.last() {
                if q.ncols() <= prev.ncols() || projection_residual(&q, prev) > 1e-8 * (prev.ncols() as f64).sqrt() {
                    return Err(Error::Invalid(format!("flag space {m} does not strictly contain its predecessor")));
                }
            } else if q.ncols() == 0 {
                return Err(Error::Invalid("flag spaces must be non-zero".into()));
            }
            ortho.push(q);
        }
        if ortho.last().map(|q| q.ncols()) != Some(r) {
            return Err(Error::Invalid("the last flag space must be the whole fibre".into()));
        }
        Ok(Self { spaces: ortho, weights })
    }

    /// The one-step flag `C^r` with a single weight.
    pub fn trivial(r: usize, weight: i64) -> Self {
        Self {
            spaces: vec![crate::algebra::matrix::identity(r)],
            weights: vec![weight],
        }
    }

    /// The flag spanned by leading columns of `basis`, with a non-increasing
    /// weight per column.
    pub fn from_basis(basis: &CMatrix, column_weights: &[i64]) -> Result<Self> {
        let diag = WeightDiagonal::new(column_weights.to_vec())?;
        if basis.ncols() != column_weights.len() || basis.nrows() != basis.ncols() {
            return Err(Error::Shape("adapted basis must be square with one weight per column".into()));
        }
        let mut spaces = Vec::new();
        let mut weights = Vec::new();
        for b in diag.blocks() {
            spaces.push(basis.columns(0, b.start + b.size).into_owned());
            weights.push(b.value);
        }
        Self::new(spaces, weights)
    }

    pub fn rank(&self) -> usize {
        self.spaces[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    pub fn spaces(&self) -> &[CMatrix] {
        &self.spaces
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    /// Weights with multiplicity, `phi^1 >= ... >= phi^r`.
    pub fn diagonal(&self) -> WeightDiagonal {
        let mut out = Vec::with_capacity(self.rank());
        let mut prev = 0;
        for (s, &w) in self.spaces.iter().zip(&self.weights) {
            out.extend(std::iter::repeat(w).take(s.ncols() - prev));
            prev = s.ncols();
        }
        WeightDiagonal::new(out).expect("flag weights decrease")
    }

    pub fn trace(&self) -> i64 {
        self.diagonal().trace()
    }

    /// `{v : phi(v) >= w}` as an orthonormal basis (possibly empty).
    pub fn level_set(&self, w: i64) -> CMatrix {
        match self.weights.iter().rposition(|&x| x >= w) {
            Some(m) => self.spaces[m].clone(),
            None => zeros(self.rank(), 0),
        }
    }

    pub fn is_invariant(&self, g: &CMatrix) -> bool {
        let tol = INVARIANCE_TOL * scale_of(g);
        self.spaces.iter().all(|v| projection_residual(v, &(g * v)) <= tol)
    }

    /// Unitary basis whose leading columns span each flag space in turn.
    pub fn adapted_basis(&self) -> CMatrix {
        let r = self.rank();
        let mut cols = self.spaces[0].clone();
        for v in &self.spaces[1..] {
            let comp = orthogonal_complement(&cols, r);
            let fresh = column_span(&(comp.adjoint() * v), RANK_TOL);
            let add = comp * fresh;
            cols = hstack(&[&cols, &add]);
        }
        cols
    }

    /// The flag `S V^m` for an invertible `s`.
    pub fn mapped(&self, s: &CMatrix) -> Result<Self> {
        Self::new(self.spaces.iter().map(|v| s * v).collect(), self.weights.clone())
    }

    pub fn shifted(&self, by: i64) -> Self {
        Self {
            spaces: self.spaces.clone(),
            weights: self.weights.iter().map(|w| w + by).collect(),
        }
    }

    /// The induced flag on the subspace with orthonormal `basis`, in the
    /// coordinates of that basis.
    pub fn restricted(&self, basis: &CMatrix) -> Result<Self> {
        let mut spaces = Vec::new();
        let mut weights = Vec::new();
        let mut last_dim = 0;
        for (v, &w) in self.spaces.iter().zip(&self.weights) {
            let cap = intersection(v, basis, RANK_TOL);
            if cap.ncols() > last_dim {
                last_dim = cap.ncols();
                spaces.push(basis.adjoint() * cap);
                weights.push(w);
            }
        }
        Self::new(spaces, weights)
    }
}

/// `phi(v)`: the weight of the first flag space containing `v`.
pub fn weight_of(flag: &WeightedFlag, v: &CMatrix) -> Weight {
    let vn = fro_norm(v);
    if vn <= 1e-300 {
        return Weight::Infinite;
    }
    for (s, &w) in flag.spaces.iter().zip(&flag.weights) {
        if projection_residual(s, v) <= RANK_TOL * 10.0 * vn {
            return Weight::Finite(w);
        }
    }
    Weight::Finite(*flag.weights.last().expect("non-empty flag"))
}

fn weight_grid(a: &WeightedFlag, b: &WeightedFlag) -> Vec<i64> {
    let mut w: Vec<i64> = a.weights.iter().chain(&b.weights).copied().collect();
    w.sort_unstable();
    w.dedup();
    w
}

/// `eta(F'_{>=w}) ⊆ F_{>=w}` for every `w`: the weight never drops.
pub fn is_morphism(eta: &CMatrix, source: &WeightedFlag, target: &WeightedFlag) -> bool {
    weight_grid(source, target).into_iter().all(|w| {
        let img = eta * source.level_set(w);
        projection_residual(&target.level_set(w), &img) <= 1e-7 * scale_of(&img)
    })
}

/// `phi(eta v) = phi'(v)` for all `v`.
pub fn is_injection(eta: &CMatrix, source: &WeightedFlag, target: &WeightedFlag) -> bool {
    let tol = RANK_TOL * scale_of(eta);
    if crate::algebra::matrix::rank(eta, tol) != eta.ncols() || !is_morphism(eta, source, target) {
        return false;
    }
    let image = column_span(eta, tol);
    weight_grid(source, target).into_iter().all(|w| {
        let src_dim = source.level_set(w).ncols();
        intersection(&target.level_set(w), &image, RANK_TOL).ncols() == src_dim
    })
}

/// Every target vector has a preimage of the same weight.
pub fn is_surjection(eta: &CMatrix, source: &WeightedFlag, target: &WeightedFlag) -> bool {
    let tol = RANK_TOL * scale_of(eta);
    if crate::algebra::matrix::rank(eta, tol) != eta.nrows() || !is_morphism(eta, source, target) {
        return false;
    }
    weight_grid(source, target).into_iter().all(|w| {
        let img = eta * source.level_set(w);
        crate::algebra::matrix::rank(&img, 1e-8 * scale_of(&img)) == target.level_set(w).ncols()
    })
}
