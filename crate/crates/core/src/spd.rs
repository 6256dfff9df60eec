//! Symmetric positive-definite kernel.
//!
//! Every policy in this crate keeps a ridge design matrix `V = XᵀX + λI`
//! together with its inverse. [`SpdMatrix`] wraps a dense matrix that is
//! known to be symmetric positive definite and provides the three
//! operations the policies need: full inversion through a Cholesky
//! factorization, the Sherman–Morrison rank-one inverse update, and the
//! quadratic form `xᵀMx`.

use nalgebra::{DMatrix, DMatrixView, DVector};
use thiserror::Error;

/// Elementwise tolerance used when validating symmetry.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpdError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |m[{row},{col}] - m[{col},{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// A dense symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    inner: DMatrix<f64>,
}

impl SpdMatrix {
    /// Validates symmetry (within [`SYMMETRY_TOL`]) and positive
    /// definiteness (Cholesky succeeds).
    pub fn new(m: DMatrix<f64>) -> Result<Self, SpdError> {
        if m.nrows() != m.ncols() {
            return Err(SpdError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = (m[(i, j)] - m[(j, i)]).abs();
                if !(gap <= SYMMETRY_TOL) {
                    return Err(SpdError::NotSymmetric {
                        row: i,
                        col: j,
                        gap,
                    });
                }
            }
        }
        if m.clone().cholesky().is_none() {
            return Err(SpdError::NotPositiveDefinite);
        }
        Ok(Self { inner: m })
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    /// `scale · I`. Panics unless `scale > 0`.
    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        assert!(scale > 0.0, "scaled identity needs a positive scale");
        Self {
            inner: DMatrix::from_diagonal_element(dim, dim, scale),
        }
    }

    /// Diagonal matrix. Panics if any entry is not strictly positive.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(
            diag.iter().all(|&v| v > 0.0),
            "diagonal entries must be positive"
        );
        Self {
            inner: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    /// Full inverse through a Cholesky factorization. The result is
    /// re-symmetrized so that later rank-one updates stay exactly symmetric.
    pub fn inverse(&self) -> Result<SpdMatrix, SpdError> {
        let chol = self
            .inner
            .clone()
            .cholesky()
            .ok_or(SpdError::NotPositiveDefinite)?;
        let mut inv = chol.inverse();
        symmetrize(&mut inv);
        Ok(SpdMatrix { inner: inv })
    }

    /// Lower-triangular Cholesky factor `L` with `M = LLᵀ`.
    pub fn cholesky_factor(&self) -> Result<DMatrix<f64>, SpdError> {
        self.inner
            .clone()
            .cholesky()
            .map(|c| c.unpack())
            .ok_or(SpdError::NotPositiveDefinite)
    }

    /// `M ← M + xxᵀ`.
    pub fn add_outer(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dim());
        let x = DVector::from_column_slice(x);
        self.inner.ger(1.0, &x, &x, 1.0);
    }

    /// Treating `self` as `M⁻¹`, returns `(M + xxᵀ)⁻¹` by Sherman–Morrison.
    pub fn rank_one_inverse_update(&self, x: &[f64]) -> SpdMatrix {
        let mut out = self.clone();
        out.rank_one_inverse_update_in_place(x);
        out
    }

    /// In-place form of [`rank_one_inverse_update`](Self::rank_one_inverse_update).
    ///
    /// `Minv ← Minv − (Minv x)(Minv x)ᵀ / (1 + xᵀ Minv x)`. The denominator
    /// is at least one, and the outer product of a single vector keeps the
    /// result exactly symmetric.
    pub fn rank_one_inverse_update_in_place(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dim());
        let xv = DVector::from_column_slice(x);
        let u = &self.inner * &xv;
        let denom = 1.0 + xv.dot(&u);
        self.inner.ger(-1.0 / denom, &u, &u, 1.0);
    }

    /// `xᵀ M x`, clamped at zero against rounding.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim());
        // column-major: xᵀMx = Σ_j x_j (col_j · x)
        let mut acc = 0.0;
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let col = self.inner.column(j);
            let mut dot = 0.0;
            for (mij, xi) in col.iter().zip(x) {
                dot += mij * xi;
            }
            acc += xj * dot;
        }
        acc.max(0.0)
    }

    /// `xₐᵀ M xₐ` for each row `xₐ` of a row-major `K × d` block, computed
    /// with one matrix product. Agrees with [`quad_form`](Self::quad_form)
    /// up to rounding.
    pub fn quad_forms(&self, rows: &[f64]) -> Vec<f64> {
        let d = self.dim();
        assert!(d > 0 && rows.len().is_multiple_of(d));
        let k = rows.len() / d;
        // row-major K × d is column-major d × K
        let x = DMatrixView::from_slice(rows, d, k);
        let mx = &self.inner * x;
        (0..k)
            .map(|a| mx.column(a).dot(&x.column(a)).max(0.0))
            .collect()
    }

    /// `M v`.
    pub fn mul_vec(&self, v: &[f64]) -> DVector<f64> {
        assert_eq!(v.len(), self.dim());
        &self.inner * DVector::from_column_slice(v)
    }
}

/// Free-function form of [`SpdMatrix::inverse`].
pub fn spd_inverse(m: &SpdMatrix) -> Result<SpdMatrix, SpdError> {
    m.inverse()
}

/// Free-function form of [`SpdMatrix::rank_one_inverse_update`].
pub fn rank_one_inverse_update(m_inv: &SpdMatrix, x: &[f64]) -> SpdMatrix {
    m_inv.rank_one_inverse_update(x)
}

/// Free-function form of [`SpdMatrix::quad_form`].
pub fn quad_form(m_inv: &SpdMatrix, x: &[f64]) -> f64 {
    m_inv.quad_form(x)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
