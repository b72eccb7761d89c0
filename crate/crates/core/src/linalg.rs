//! Dense complex helpers shared by the solvers.
//!
//! Vectors that follow the long stacked layouts (the precoder, the IRS
//! coefficients) are plain `Vec<C64>`; the small per-user matrices are
//! `nalgebra` dense matrices.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// `a^H b` over slices.
pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    crate::math::sqrt(norm_sqr(v))
}

/// `‖a − b‖²`.
pub fn dist_sqr(a: &[C64], b: &[C64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

pub fn is_finite(v: &[C64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Solves `A x = b` for Hermitian positive definite `A`.
///
/// Falls back to LU when round-off makes the Cholesky factorization fail
/// on a numerically semidefinite matrix.
pub fn hermitian_solve(a: &CMat, b: &CVec) -> Result<CVec> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(dim_err("hermitian_solve: shape mismatch"));
    }
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Domain("singular covariance matrix".into()))
}

/// Largest eigenvalue of `Σ_i v_i v_iᴴ`, computed from the Gram matrix of the
/// generators (rank is at most the number of generators).
pub fn gram_lambda_max(generators: &[&[C64]]) -> f64 {
    let n = generators.len();
    if n == 0 {
        return 0.0;
    }
    let gram = CMat::from_fn(n, n, |i, j| dotc(generators[i], generators[j]));
    gram.symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, &x| if x > m { x } else { m })
}

/// `y = M x` for a dense matrix and a slice.
pub fn matvec(m: &CMat, x: &[C64]) -> Vec<C64> {
    debug_assert_eq!(m.ncols(), x.len());
    let mut y = alloc::vec![ZERO; m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == ZERO {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += m[(i, j)] * xj;
        }
    }
    y
}
