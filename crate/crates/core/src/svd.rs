//! Economy-size singular value decomposition.
//!
//! The decomposition runs in two stages, both classical:
//!
//! ```text
//! 1. Householder QR of the input (transposed first when it is wide, so the
//!    factored matrix is always tall): A = Q R with Q m×k, R k×k upper
//!    triangular, k = min(m, n).
//! 2. One-sided Jacobi on R: sweeps of plane rotations applied from the
//!    right until all column pairs are numerically orthogonal. The rotated
//!    columns are U·Σ, the accumulated rotations are V.
//! ```
//!
//! One-sided Jacobi converges quadratically once sweeps start to settle and
//! computes small singular values to high relative accuracy; running it on
//! the k×k triangular factor instead of the full matrix keeps the cost of a
//! sweep at O(k³) regardless of how rectangular the input is.
//!
//! Singular values are returned in descending order. Left singular vectors
//! for zero singular values are completed to an orthonormal basis so the
//! factor U always has exactly orthonormal columns, a Jacobi rotation count
//! of zero (the zero matrix) included.

use crate::error::{Error, Result};
use crate::mat::{dot, Mat};
use crate::scalar::{cast, Scalar};

/// Sweep limit for the Jacobi stage. Random inputs settle in well under ten
/// sweeps; hitting this limit is reported as a numerical error rather than
/// returning unconverged factors.
const MAX_SWEEPS: usize = 30;

/// Economy SVD: returns (u, sigma, v) with `a = u · diag(sigma) · vᵀ`,
/// u m×r, v n×r, r = min(m, n), sigma descending and nonnegative.
pub(crate) fn svd_econ<T: Scalar>(a: &Mat<T>) -> Result<(Mat<T>, Vec<T>, Mat<T>)> {
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let (u_t, sigma, v_t) = svd_tall(&a.transpose())?;
        Ok((v_t, sigma, u_t))
    }
}

/// SVD of a tall (rows ≥ cols) matrix via QR followed by one-sided Jacobi.
fn svd_tall<T: Scalar>(b: &Mat<T>) -> Result<(Mat<T>, Vec<T>, Mat<T>)> {
    let (q, r) = householder_qr(b);
    let (u_r, sigma, v) = jacobi_svd_square(&r)?;
    let u = q.matmul(&u_r).expect("q and u_r are conformable");
    Ok((u, sigma, v))
}

/// Householder QR of a tall m×k matrix: returns (thin Q m×k, R k×k).
fn householder_qr<T: Scalar>(b: &Mat<T>) -> (Mat<T>, Mat<T>) {
    let (m, k) = (b.rows(), b.cols());
    debug_assert!(m >= k);
    let mut a = b.clone();
    // Reflector j acts on rows j.. ; H_j = I − beta_j v_j v_jᵀ.
    let mut vs: Vec<Vec<T>> = Vec::with_capacity(k);
    let mut betas: Vec<T> = Vec::with_capacity(k);

    for j in 0..k {
        let x = &a.col(j)[j..];
        let sigma = dot(x, x).sqrt();
        if sigma == T::zero() {
            vs.push(Vec::new());
            betas.push(T::zero());
            continue;
        }
        // alpha = −sign(x₀)·‖x‖ avoids cancellation in v₀ = x₀ − alpha.
        let alpha = if x[0] >= T::zero() { -sigma } else { sigma };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let beta = cast::<T>(2.0) / dot(&v, &v);

        let col_j = &mut a.col_mut(j)[j..];
        col_j[0] = alpha;
        for e in col_j.iter_mut().skip(1) {
            *e = T::zero();
        }
        for c in j + 1..k {
            reflect(&mut a.col_mut(c)[j..], &v, beta);
        }
        vs.push(v);
        betas.push(beta);
    }

    let mut r = Mat::zeros(k, k);
    for j in 0..k {
        for i in 0..=j {
            r.set(i, j, a.get(i, j));
        }
    }

    // Thin Q: the first k columns of the identity with the reflectors
    // applied in reverse order.
    let mut q = Mat::zeros(m, k);
    for j in 0..k {
        q.set(j, j, T::one());
    }
    for j in (0..k).rev() {
        if betas[j] == T::zero() {
            continue;
        }
        for c in 0..k {
            reflect(&mut q.col_mut(c)[j..], &vs[j], betas[j]);
        }
    }
    (q, r)
}

/// Applies the reflector (I − beta v vᵀ) to a column segment in place.
#[inline]
fn reflect<T: Scalar>(col: &mut [T], v: &[T], beta: T) {
    let w = beta * dot(v, col);
    for (c, &vi) in col.iter_mut().zip(v) {
        *c -= w * vi;
    }
}

/// One-sided Jacobi SVD of a square k×k matrix.
///
/// A column pair counts as orthogonal when |⟨p, q⟩| ≤ k·ε·‖p‖‖q‖. The k·ε
/// factor is the rounding-noise level of the k-term dot product itself;
/// testing against bare ε would keep rotating on noise forever when the
/// column norms are strongly graded.
fn jacobi_svd_square<T: Scalar>(r: &Mat<T>) -> Result<(Mat<T>, Vec<T>, Mat<T>)> {
    let k = r.rows();
    debug_assert_eq!(k, r.cols());
    let mut w = r.clone();
    let mut v = Mat::identity(k);
    let tol = T::epsilon() * cast::<T>(k as f64);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k.saturating_sub(1) {
            for q in p + 1..k {
                let app = dot(w.col(p), w.col(p));
                let aqq = dot(w.col(q), w.col(q));
                let apq = dot(w.col(p), w.col(q));
                let gm = (app * aqq).sqrt();
                // gm == 0 also catches products that underflowed; columns
                // that small carry no resolvable direction.
                if gm == T::zero() || apq.abs() <= tol * gm {
                    continue;
                }
                // Rotation angle zeroing the (p, q) correlation
                // (Rutishauser's stable tangent formula).
                let tau = (aqq - app) / (cast::<T>(2.0) * apq);
                let t = {
                    let denom = tau.abs() + (T::one() + tau * tau).sqrt();
                    if denom.is_finite() {
                        if tau >= T::zero() { T::one() / denom } else { -T::one() / denom }
                    } else {
                        // tau² overflowed: the angle is tiny and 1/(2·tau)
                        // is its full-precision limit.
                        T::one() / (cast::<T>(2.0) * tau)
                    }
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                w.rotate_cols(p, q, c, s);
                v.rotate_cols(p, q, c, s);
                rotated = true;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numerical(format!(
            "Jacobi SVD did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    // Column norms are the singular values; sort descending.
    let norms: Vec<T> = (0..k).map(|j| dot(w.col(j), w.col(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));

    let mut sigma = Vec::with_capacity(k);
    let mut u = Mat::zeros(k, k);
    let mut v_sorted = Mat::zeros(k, k);
    let mut zero_slots = Vec::new();
    for (new_j, &old_j) in order.iter().enumerate() {
        sigma.push(norms[old_j]);
        v_sorted.col_mut(new_j).copy_from_slice(v.col(old_j));
        if norms[old_j] > T::zero() {
            let inv = T::one() / norms[old_j];
            for (dst, &src) in u.col_mut(new_j).iter_mut().zip(w.col(old_j)) {
                *dst = src * inv;
            }
        } else {
            zero_slots.push(new_j);
        }
    }
    for slot in zero_slots {
        complete_column(&mut u, slot)?;
    }
    Ok((u, sigma, v_sorted))
}

/// Fills column `slot` of `u` with a unit vector orthogonal to every other
/// nonzero column, by Gram–Schmidt over candidate basis vectors.
fn complete_column<T: Scalar>(u: &mut Mat<T>, slot: usize) -> Result<()> {
    let k = u.rows();
    let half = cast::<T>(0.5);
    for cand in 0..k {
        let mut x = vec![T::zero(); k];
        x[cand] = T::one();
        // Two orthogonalization passes keep the result orthogonal to working
        // precision even when the candidate is nearly in the span.
        for _ in 0..2 {
            for j in 0..u.cols() {
                if j == slot {
                    continue;
                }
                let cj = u.col(j);
                if cj.iter().all(|&e| e == T::zero()) {
                    continue;
                }
                let proj = dot(cj, &x);
                for (xi, &cji) in x.iter_mut().zip(cj) {
                    *xi -= proj * cji;
                }
            }
        }
        let nrm = dot(&x, &x).sqrt();
        if nrm > half {
            let inv = T::one() / nrm;
            for (dst, xi) in u.col_mut(slot).iter_mut().zip(&x) {
                *dst = *xi * inv;
            }
            return Ok(());
        }
    }
    Err(Error::numerical("orthonormal basis completion failed"))
}
