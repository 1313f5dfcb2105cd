//! Shrinkage operators: nonnegative vector shrinkage s_τ and matrix
//! shrinkage (singular value thresholding) D_τ.
//!
//! For a nonnegative vector x and τ > 0,
//!
//! ```text
//! s_τ(x)_i = x_i − τ   if x_i − τ > 0,
//!            0         otherwise,
//! ```
//!
//! and for a matrix A with SVD A = U·Diag(σ)·Vᵀ,
//!
//! ```text
//! D_τ(A) = U·Diag(s_τ(σ))·Vᵀ,
//! ```
//!
//! which is the proximal operator of τ‖·‖_* (the nuclear norm): the unique
//! minimizer of ½‖Z − A‖_F² + τ‖Z‖_* over Z.
//!
//! The backing decomposition is always a full economy-size SVD, chosen for
//! recoverability and simplicity over partial-spectrum heuristics.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::{cast, Scalar};
use crate::svd::svd_econ;

/// Economy-size SVD factors A = u·diag(sigma)·vᵀ.
///
/// `u` is m×r and `v` is n×r with orthonormal columns, r = min(m, n), and
/// `sigma` is nonincreasing and nonnegative.
#[derive(Debug, Clone)]
pub struct SvdFactors<T: Scalar> {
    pub u: Mat<T>,
    pub sigma: Vec<T>,
    pub v: Mat<T>,
}

impl<T: Scalar> SvdFactors<T> {
    /// Rebuilds u·diag(sigma)·vᵀ.
    pub fn reconstruct(&self) -> Mat<T> {
        scaled_product(&self.u, &self.sigma, &self.v)
    }
}

/// Nonnegative vector shrinkage s_τ.
pub fn vector_shrink<T: Scalar>(x: &[T], tau: T) -> Result<Vec<T>> {
    if !(tau > T::zero()) || !tau.is_finite() {
        return Err(Error::parameter("tau", format!("must be positive and finite, got {tau}")));
    }
    if let Some(bad) = x.iter().find(|&&e| !(e >= T::zero())) {
        return Err(Error::domain(format!("vector_shrink input entry {bad} is not nonnegative")));
    }
    Ok(x.iter().map(|&e| if e - tau > T::zero() { e - tau } else { T::zero() }).collect())
}

/// Full (economy-size) singular value decomposition.
pub fn svd_full<T: Scalar>(a: &Mat<T>) -> Result<SvdFactors<T>> {
    if a.data().iter().any(|e| !e.is_finite()) {
        return Err(Error::numerical("SVD input contains non-finite entries"));
    }
    let (u, sigma, v) = svd_econ(a)?;
    Ok(SvdFactors { u, sigma, v })
}

/// Matrix shrinkage D_τ(A) = U·Diag(s_τ(σ))·Vᵀ.
pub fn matrix_shrink<T: Scalar>(a: &Mat<T>, tau: T) -> Result<Mat<T>> {
    Ok(matrix_shrink_with_spectrum(a, tau)?.0)
}

/// Matrix shrinkage together with the shrunken singular values s_τ(σ(A)),
/// which are exactly the singular values of the result.
pub fn matrix_shrink_with_spectrum<T: Scalar>(a: &Mat<T>, tau: T) -> Result<(Mat<T>, Vec<T>)> {
    let factors = svd_full(a)?;
    let shrunk = vector_shrink(&factors.sigma, tau)?;
    let out = scaled_product(&factors.u, &shrunk, &factors.v);
    Ok((out, shrunk))
}

/// Numerical rank of a nonincreasing singular value vector: values below
/// 1e-13·σ_max count as zero.
pub fn numerical_rank<T: Scalar>(sigma: &[T]) -> usize {
    let max = sigma.first().copied().unwrap_or_else(T::zero);
    if max <= T::zero() {
        return 0;
    }
    let floor = cast::<T>(1e-13) * max;
    sigma.iter().take_while(|&&s| s > floor).count()
}

/// u·diag(s)·vᵀ, skipping zero entries of s so the cost is proportional to
/// the retained rank.
fn scaled_product<T: Scalar>(u: &Mat<T>, s: &[T], v: &Mat<T>) -> Mat<T> {
    let mut out = Mat::zeros(u.rows(), v.rows());
    for (j, &sj) in s.iter().enumerate() {
        if sj == T::zero() {
            continue;
        }
        let u_col = u.col(j);
        let v_col = v.col(j);
        for (c, &vc) in v_col.iter().enumerate() {
            let w = sj * vc;
            if w != T::zero() {
                let out_col = out.col_mut(c);
                for (o, &ui) in out_col.iter_mut().zip(u_col) {
                    *o += w * ui;
                }
            }
        }
    }
    out
}
