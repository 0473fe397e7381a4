//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! Everything here works with symmetric positive-semidefinite matrices. The
//! eigendecomposition is cached in row-major form so the score kernels can run
//! allocation-free over plain slices.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Result};

/// Relative Frobenius tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues below `EIGEN_CLAMP * λ_max` are clamped to zero.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Eigenvalues more negative than `-NEGATIVE_REJECT * λ_max` mean the input is
/// not PSD at all and is rejected rather than clamped.
pub const NEGATIVE_REJECT: f64 = 1e-8;

/// Orthonormal eigenbasis `U` and clamped eigenvalues `λ` of a symmetric PSD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEig {
    dim: usize,
    /// Row-major `U`: `basis[i * dim + k] = U[i, k]`, column `k` is eigenvector `k`.
    basis: Vec<f64>,
    values: Vec<f64>,
}

impl SymEig {
    /// Decomposes a square matrix, checking symmetry and clamping tiny eigenvalues.
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(invalid(format!(
                "covariance must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(invalid("covariance has non-finite entries"));
        }
        let dim = m.nrows();
        let norm = m.norm();
        let asym = (m - m.transpose()).norm();
        if asym > SYMMETRY_TOL * norm.max(f64::MIN_POSITIVE) {
            return Err(invalid(format!(
                "covariance is not symmetric (relative asymmetry {:.3e})",
                asym / norm
            )));
        }
        let sym = (m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let lmax = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b));
        let mut values = Vec::with_capacity(dim);
        for &l in eig.eigenvalues.iter() {
            if l < -NEGATIVE_REJECT * lmax {
                return Err(invalid(format!(
                    "covariance has negative eigenvalue {l:.3e} (largest {lmax:.3e})"
                )));
            }
            values.push(if l < EIGEN_CLAMP * lmax { 0.0 } else { l });
        }
        let mut basis = vec![0.0; dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                basis[i * dim + k] = eig.eigenvectors[(i, k)];
            }
        }
        Ok(Self { dim, basis, values })
    }

    /// Builds a decomposition directly from an orthonormal basis and eigenvalues.
    pub fn from_parts(basis: &DMatrix<f64>, values: &[f64]) -> Result<Self> {
        let dim = values.len();
        if basis.nrows() != dim || basis.ncols() != dim {
            return Err(invalid("eigenbasis shape does not match eigenvalue count"));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(invalid("eigenvalues must be finite and nonnegative"));
        }
        let mut flat = vec![0.0; dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                flat[i * dim + k] = basis[(i, k)];
            }
        }
        Ok(Self {
            dim,
            basis: flat,
            values: values.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn basis(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.basis)
    }

    /// `out = Uᵀ v`.
    #[inline]
    pub fn project(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            let row = &self.basis[i * d..(i + 1) * d];
            for (o, &u) in out.iter_mut().zip(row) {
                *o += u * vi;
            }
        }
    }

    /// `out = U w`.
    #[inline]
    pub fn unproject(&self, w: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.basis[i * d..(i + 1) * d];
            *o = row.iter().zip(w).map(|(u, wk)| u * wk).sum();
        }
    }

    /// `U diag(f(λ)) Uᵀ` as a dense matrix.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let u = self.basis();
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim,
            self.values.iter().map(|&l| f(l)),
        ));
        &u * diag * u.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.spectral_map(|l| l)
    }

    pub fn sqrt(&self) -> DMatrix<f64> {
        self.spectral_map(f64::sqrt)
    }
}

/// Principal square root of a symmetric PSD matrix.
pub fn sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(SymEig::new(&symmetrize(m))?.sqrt())
}

/// `(m + mᵀ) / 2`; products of symmetric matrices drift off symmetry by rounding.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `ln Σ exp(v_i)`, stable for large-magnitude inputs.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// In-place softmax via the max-shift trick.
pub fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut total = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        total += *x;
    }
    for x in v.iter_mut() {
        *x /= total;
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(invalid("matrix rows have unequal lengths"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
