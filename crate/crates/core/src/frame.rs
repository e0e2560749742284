//! Frames in `C^N` (or `R^N`) and the spectral measurements every certificate
//! in this crate is checked against.
//!
//! A frame is a finite list of vectors `v_1, ..., v_M`. Its frame operator
//! `S = sum_j v_j v_j^*` is Hermitian positive semidefinite, and its extreme
//! eigenvalues are the best constants `A, B` with
//! `A |w|^2 <= sum_j |<w, v_j>|^2 <= B |w|^2`. All spectral quantities are
//! taken from a dense Hermitian eigensolve, never from an iterative estimate.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Field, C64};

const EIGEN_MAX_ITER: usize = 10_000;

/// An ordered list of `M` vectors in `N`-dimensional space, stored as the
/// columns of an `N x M` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSystem {
    vectors: DMatrix<C64>,
    field: Field,
}

impl FrameSystem {
    /// Builds a frame from column vectors. All vectors must share the same
    /// positive length.
    pub fn new(vectors: Vec<Vec<C64>>, field: Field) -> Result<Self> {
        let m = vectors.len();
        if m == 0 {
            return Err(Error::EmptySystem);
        }
        let n = vectors[0].len();
        if n == 0 {
            return Err(Error::EmptySystem);
        }
        if let Some(j) = vectors.iter().position(|v| v.len() != n) {
            return Err(Error::Precondition(format!(
                "vector {j} has {} entries, expected {n}",
                vectors[j].len()
            )));
        }
        let mat = DMatrix::from_fn(n, m, |i, j| vectors[j][i]);
        Self::from_columns(mat, field)
    }

    pub fn from_real(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let vs = vectors
            .into_iter()
            .map(|v| v.into_iter().map(|x| C64::new(x, 0.0)).collect())
            .collect();
        Self::new(vs, Field::Real)
    }

    pub fn from_columns(vectors: DMatrix<C64>, field: Field) -> Result<Self> {
        if vectors.nrows() == 0 || vectors.ncols() == 0 {
            return Err(Error::EmptySystem);
        }
        if field == Field::Real && vectors.iter().any(|z| z.im != 0.0) {
            return Err(Error::Precondition(
                "real-tagged frame has a nonzero imaginary part".into(),
            ));
        }
        Ok(Self { vectors, field })
    }

    /// Dimension `N` of the ambient space.
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    /// Number `M` of vectors.
    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn columns(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    pub fn vector(&self, j: usize) -> Vec<C64> {
        self.vectors.column(j).iter().copied().collect()
    }

    pub fn norm_sq(&self, j: usize) -> f64 {
        self.vectors.column(j).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norms_sq(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.norm_sq(j)).collect()
    }

    /// Largest squared norm, with the index attaining it (smallest index on ties).
    pub fn max_norm_sq(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for j in 0..self.len() {
            let v = self.norm_sq(j);
            if v > best.1 {
                best = (j, v);
            }
        }
        best
    }

    /// The frame restricted to the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<FrameSystem> {
        let cols = gather(&self.vectors, indices)?;
        FrameSystem::from_columns(cols, self.field)
    }
}

/// Frame bounds `0 <= A <= B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    #[serde(with = "crate::serde_dec")]
    pub lower: f64,
    #[serde(with = "crate::serde_dec")]
    pub upper: f64,
}

impl FrameBounds {
    pub const ZERO: FrameBounds = FrameBounds {
        lower: 0.0,
        upper: 0.0,
    };

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower < 0.0 || lower > upper {
            return Err(Error::Precondition(format!(
                "frame bounds must satisfy 0 <= A <= B, got ({lower}, {upper})"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn scaled(self, factor: f64) -> FrameBounds {
        FrameBounds {
            lower: self.lower * factor,
            upper: self.upper * factor,
        }
    }

    /// `upper / lower`, infinite when the lower bound vanishes.
    pub fn ratio(&self) -> f64 {
        if self.lower > 0.0 {
            self.upper / self.lower
        } else {
            f64::INFINITY
        }
    }
}

/// A Hermitian matrix. Construction symmetrizes `(S + S^*)/2`, so roundoff
/// asymmetry never reaches the eigensolver.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    entries: DMatrix<C64>,
    field: Field,
}

impl HermitianMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Precondition(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let field = Field::infer(m.iter());
        Ok(Self::symmetrized(m, field))
    }

    pub(crate) fn symmetrized(m: DMatrix<C64>, field: Field) -> Self {
        let mut s = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        if field == Field::Real {
            s.iter_mut().for_each(|z| z.im = 0.0);
        } else {
            for i in 0..s.nrows() {
                s[(i, i)].im = 0.0;
            }
        }
        Self { entries: s, field }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
            field: Field::Real,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).sum()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut vals = if n == 0 {
            Vec::new()
        } else if n == 1 {
            vec![self.entries[(0, 0)].re]
        } else if self.is_real() {
            let a = self.entries.map(|z| z.re);
            SymmetricEigen::try_new(a, f64::EPSILON, EIGEN_MAX_ITER)
                .ok_or(Error::EigenNonConvergence { dim: n })?
                .eigenvalues
                .iter()
                .copied()
                .collect::<Vec<_>>()
        } else {
            SymmetricEigen::try_new(self.entries.clone(), f64::EPSILON, EIGEN_MAX_ITER)
                .ok_or(Error::EigenNonConvergence { dim: n })?
                .eigenvalues
                .iter()
                .copied()
                .collect::<Vec<_>>()
        };
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }

    /// Smallest and largest eigenvalue.
    pub fn extreme_eigenvalues(&self) -> Result<(f64, f64)> {
        let vals = self.eigenvalues()?;
        match (vals.first(), vals.last()) {
            (Some(&lo), Some(&hi)) => Ok((lo, hi)),
            _ => Ok((0.0, 0.0)),
        }
    }

    /// Spectral norm of `self - I`.
    pub fn identity_deviation(&self) -> Result<f64> {
        let (lo, hi) = self.extreme_eigenvalues()?;
        Ok((1.0 - lo).abs().max((hi - 1.0).abs()))
    }

    /// Extreme eigenvalues of `self` measured relative to the positive definite
    /// `reference`, i.e. of `L^{-1} self L^{-*}` with `reference = L L^*`.
    pub fn relative_extremes(&self, reference: &HermitianMatrix) -> Result<(f64, f64)> {
        let n = self.dim();
        if reference.dim() != n {
            return Err(Error::Precondition(format!(
                "reference has dimension {}, expected {n}",
                reference.dim()
            )));
        }
        let chol = reference
            .entries
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { dim: n })?;
        let l = chol.l();
        // X = L^{-1} S, then K = L^{-1} X^* = L^{-1} S L^{-*}
        let x = l
            .solve_lower_triangular(&self.entries)
            .ok_or(Error::NotPositiveDefinite { dim: n })?;
        let k = l
            .solve_lower_triangular(&x.adjoint())
            .ok_or(Error::NotPositiveDefinite { dim: n })?;
        let field = if self.is_real() && reference.is_real() {
            Field::Real
        } else {
            Field::Complex
        };
        HermitianMatrix::symmetrized(k, field).extreme_eigenvalues()
    }

    fn is_real(&self) -> bool {
        self.field == Field::Real || self.entries.iter().all(|z| z.im == 0.0)
    }
}

pub(crate) fn gather(cols: &DMatrix<C64>, indices: &[usize]) -> Result<DMatrix<C64>> {
    let m = cols.ncols();
    if let Some(&bad) = indices.iter().find(|&&j| j >= m) {
        return Err(Error::Precondition(format!(
            "index {bad} out of range for {m} vectors"
        )));
    }
    Ok(DMatrix::from_fn(cols.nrows(), indices.len(), |i, k| {
        cols[(i, indices[k])]
    }))
}

/// `sum_j v_j v_j^*` over the columns of `cols`.
pub(crate) fn gram_of_columns(cols: &DMatrix<C64>, field: Field) -> HermitianMatrix {
    HermitianMatrix::symmetrized(pairwise_gram(cols, 0, cols.ncols()), field)
}

/// Blocks are summed as a balanced tree so roundoff grows with `log M`.
fn pairwise_gram(cols: &DMatrix<C64>, start: usize, len: usize) -> DMatrix<C64> {
    const BLOCK: usize = 32;
    if len <= BLOCK {
        let block = cols.columns(start, len);
        return &block * block.adjoint();
    }
    let half = len / 2;
    pairwise_gram(cols, start, half) + pairwise_gram(cols, start + half, len - half)
}

/// The frame operator `S = sum_j v_j v_j^*`.
pub fn frame_operator(frame: &FrameSystem) -> HermitianMatrix {
    gram_of_columns(&frame.vectors, frame.field)
}

/// `sum_{j in J} v_j v_j^*`. Indices may repeat; each occurrence counts.
pub fn subset_operator(frame: &FrameSystem, indices: &[usize]) -> Result<HermitianMatrix> {
    let cols = gather(&frame.vectors, indices)?;
    Ok(gram_of_columns(&cols, frame.field))
}

/// `sum_j weights[j] v_j v_j^*` for nonnegative weights.
pub fn weighted_operator(frame: &FrameSystem, weights: &[f64]) -> Result<HermitianMatrix> {
    if weights.len() != frame.len() {
        return Err(Error::Precondition(format!(
            "{} weights for {} vectors",
            weights.len(),
            frame.len()
        )));
    }
    if let Some(j) = weights.iter().position(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::Precondition(format!(
            "weight {j} is negative or not finite"
        )));
    }
    let mut cols = frame.vectors.clone();
    for (j, &w) in weights.iter().enumerate() {
        let s = C64::new(w.sqrt(), 0.0);
        cols.column_mut(j).iter_mut().for_each(|z| *z *= s);
    }
    Ok(gram_of_columns(&cols, frame.field))
}

/// Optimal frame bounds: the extreme eigenvalues of the frame operator.
pub fn frame_bounds(frame: &FrameSystem) -> Result<FrameBounds> {
    let (lo, hi) = frame_operator(frame).extreme_eigenvalues()?;
    Ok(FrameBounds {
        lower: lo,
        upper: hi,
    })
}

/// True iff both frame bounds lie in `[1 - tol, 1 + tol]`.
pub fn verify_tight(frame: &FrameSystem, tol: f64) -> bool {
    match frame_bounds(frame) {
        Ok(b) => (b.lower - 1.0).abs() <= tol && (b.upper - 1.0).abs() <= tol,
        Err(_) => false,
    }
}

/// Extreme eigenvalues of `sum_{j in J} v_j v_j^*`, without any rescaling.
/// The empty set gives `(0, 0)`.
pub fn subset_bounds(frame: &FrameSystem, indices: &[usize]) -> Result<FrameBounds> {
    if indices.is_empty() {
        return Ok(FrameBounds::ZERO);
    }
    let (lo, hi) = subset_operator(frame, indices)?.extreme_eigenvalues()?;
    Ok(FrameBounds {
        lower: lo,
        upper: hi,
    })
}
