//! Complex Hermitian linear algebra helpers.
//!
//! The conic solver works over real symmetric cones, so every complex
//! Hermitian matrix `W = A + iB` is handled through its real embedding
//!
//! ```text
//!     embed(W) = [ A  -B ]
//!                [ B   A ]
//! ```
//!
//! which is symmetric PSD exactly when `W` is Hermitian PSD. Traces pick up a
//! factor of two: `Tr(embed(S) · embed(D)) = 2 · Re Tr(S · D)`.
//!
//! Hermitian decision blocks are parameterized by `n²` real scalars: the
//! upper-triangle real parts (column-major, diagonal included) followed by the
//! strict upper-triangle imaginary parts in the same order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `[ Re -Im; Im Re ]` real embedding of a complex matrix.
pub fn embed_complex(m: &CMatrix) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let v = m[(i, j)];
            out[(i, j)] = v.re;
            out[(i, j + c)] = -v.im;
            out[(i + r, j)] = v.im;
            out[(i + r, j + c)] = v.re;
        }
    }
    out
}

/// Inverse of [`embed_complex`] for square matrices, averaging over the
/// embedding structure so that inexact solver output maps to an exactly
/// Hermitian matrix.
pub fn complex_from_embedding(e: &DMatrix<f64>) -> CMatrix {
    let n = e.nrows() / 2;
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re = 0.5 * (e[(i, j)] + e[(i + n, j + n)]);
            let im = 0.5 * (e[(i + n, j)] - e[(i, j + n)]);
            out[(i, j)] = Complex64::new(re, im);
        }
    }
    // enforce exact Hermitian symmetry
    hermitian_part(&out)
}

/// `(M + M^H)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Relative deviation from Hermitian symmetry, `‖M − M^H‖ / max(1, ‖M‖)`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm() / m.norm().max(1.0)
}

/// Length of the packed upper triangle of an `n×n` symmetric matrix.
pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Pack a real symmetric matrix into the scaled upper-triangle vector used by
/// the PSD cone: column-major upper triangle, off-diagonals multiplied by √2,
/// so that `svec(A)·svec(B) = Tr(A·B)`.
pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(svec_len(n));
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                out.push(m[(i, j)]);
            } else {
                out.push(SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]));
            }
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn unsvec(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    let mut idx = 0;
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                out[(i, j)] = v[idx];
            } else {
                let x = v[idx] / SQRT2;
                out[(i, j)] = x;
                out[(j, i)] = x;
            }
            idx += 1;
        }
    }
    out
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the orthonormal eigenvectors, ordered to match `values`.
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermitianEigen { values, vectors }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_part(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Hermitian positive-definite square root and inverse square root.
pub fn sqrt_and_inv_sqrt_pd(m: &CMatrix, context: &'static str) -> Result<(CMatrix, CMatrix)> {
    let eig = hermitian_eigen(m);
    let scale = eig.values.last().copied().unwrap_or(0.0).abs().max(1.0);
    if eig.values.iter().any(|&l| l <= 1e-14 * scale) {
        return Err(Error::NotPositiveDefinite(context));
    }
    let n = m.nrows();
    let mut sqrt = CMatrix::zeros(n, n);
    let mut inv_sqrt = CMatrix::zeros(n, n);
    for j in 0..n {
        let v: CVector = eig.vectors.column(j).into();
        let outer = &v * v.adjoint();
        sqrt += outer.scale(eig.values[j].sqrt());
        inv_sqrt += outer.scale(1.0 / eig.values[j].sqrt());
    }
    Ok((sqrt, inv_sqrt))
}

/// `v v^H`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Real part of `Tr(S·W)`; exact trace for Hermitian pairs.
pub fn trace_product(s: &CMatrix, w: &CMatrix) -> f64 {
    let n = s.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (s[(i, j)] * w[(j, i)]).re;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Hermitian block parameterization (n² real scalars per block)
// ---------------------------------------------------------------------------

pub fn herm_param_count(n: usize) -> usize {
    n * n
}

/// Iterator order of the real-part parameters: upper triangle, column-major.
fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |j| (0..=j).map(move |i| (i, j)))
}

fn strict_upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |j| (0..j).map(move |i| (i, j)))
}

/// Reassemble an `n×n` Hermitian matrix from its parameter vector.
pub fn herm_from_params(n: usize, params: &[f64]) -> CMatrix {
    debug_assert_eq!(params.len(), herm_param_count(n));
    let mut out = CMatrix::zeros(n, n);
    let mut idx = 0;
    for (i, j) in upper_pairs(n) {
        out[(i, j)].re = params[idx];
        out[(j, i)].re = params[idx];
        idx += 1;
    }
    for (i, j) in strict_upper_pairs(n) {
        out[(i, j)].im = params[idx];
        out[(j, i)].im = -params[idx];
        idx += 1;
    }
    out
}

/// Parameter vector of a Hermitian matrix (inverse of [`herm_from_params`]).
pub fn herm_to_params(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(herm_param_count(n));
    for (i, j) in upper_pairs(n) {
        out.push(0.5 * (m[(i, j)].re + m[(j, i)].re));
    }
    for (i, j) in strict_upper_pairs(n) {
        out.push(0.5 * (m[(i, j)].im - m[(j, i)].im));
    }
    out
}

/// Unit Hermitian basis matrix for parameter index `p` of an `n×n` block:
/// `E_ii` for a diagonal real part, `E_ij + E_ji` for an off-diagonal real
/// part, `i·E_ij − i·E_ji` for an imaginary part.
pub fn herm_basis(n: usize, p: usize) -> CMatrix {
    let mut params = vec![0.0; herm_param_count(n)];
    params[p] = 1.0;
    herm_from_params(n, &params)
}

/// Coefficients of `Tr(S·W)` as a linear functional of the parameters of `W`,
/// for Hermitian `S`: `Tr(S·W) = Σ_p coeffs[p] · params(W)[p]`.
pub fn trace_functional(s: &CMatrix) -> Vec<f64> {
    let n = s.nrows();
    let mut out = Vec::with_capacity(herm_param_count(n));
    for (i, j) in upper_pairs(n) {
        if i == j {
            out.push(s[(i, i)].re);
        } else {
            out.push(2.0 * s[(j, i)].re);
        }
    }
    for (i, j) in strict_upper_pairs(n) {
        out.push(2.0 * s[(i, j)].im);
    }
    out
}
