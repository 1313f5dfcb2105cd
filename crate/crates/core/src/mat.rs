//! Dense column-major matrices.
//!
//! This is the small matrix layer under the unfolding and proximal
//! operators: storage is one flat buffer, element (i, j) lives at
//! `data[i + j * rows]` (0-based). Column-major order is chosen so that the
//! columns manipulated by the QR and Jacobi kernels are contiguous, and so
//! that a mode-1 unfolding of a first-index-fastest tensor is a plain copy
//! of its buffer.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense matrix with column-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    /// Creates a zero matrix. Both dimensions must be at least 1.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    /// Creates the `n`-by-`n` identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i + i * n] = T::one();
        }
        m
    }

    /// Wraps a column-major buffer; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dimension("positive dimensions", format!("{rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::dimension(
                format!("{} elements for a {rows}x{cols} matrix", rows * cols),
                format!("{}", data.len()),
            ));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from rows given in row-major order (test convenience).
    pub fn from_rows(rows: &[&[T]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(Error::dimension("rectangular row list", format!("{r} rows")));
        }
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Flat column-major buffer.
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: T) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows] = x;
    }

    /// Contiguous slice holding column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Returns the transposed matrix.
    pub fn transpose(&self) -> Mat<T> {
        let mut t = Mat::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            let src = self.col(j);
            for i in 0..self.rows {
                t.data[j + i * self.cols] = src[i];
            }
        }
        t
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Mat<T>) -> Result<Mat<T>> {
        if self.cols != other.rows {
            return Err(Error::dimension(
                format!("inner dimension {}", self.cols),
                format!("{}", other.rows),
            ));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let out_col = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = other.data[k + j * other.rows];
                if b != T::zero() {
                    let a_col = &self.data[k * self.rows..(k + 1) * self.rows];
                    for (o, &a) in out_col.iter_mut().zip(a_col) {
                        *o += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Frobenius norm of the matrix.
    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Applies the Givens rotation with cosine `c` and sine `s` to columns
    /// `p` and `q` (right-multiplication by the rotation in the (p, q)
    /// plane): col_p ← c·col_p − s·col_q and col_q ← s·col_p + c·col_q.
    pub(crate) fn rotate_cols(&mut self, p: usize, q: usize, c: T, s: T) {
        debug_assert!(p < q && q < self.cols);
        let (head, tail) = self.data.split_at_mut(q * self.rows);
        let cp = &mut head[p * self.rows..(p + 1) * self.rows];
        let cq = &mut tail[..self.rows];
        for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = c * x - s * y;
            *b = s * x + c * y;
        }
    }
}

/// Dot product of two equally long slices (sequential order, deterministic).
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_neutral_for_matmul() {
        let a = Mat::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        let left = Mat::<f64>::identity(2).matmul(&a).unwrap();
        let right = a.matmul(&Mat::identity(3)).unwrap();
        assert_eq!(left, a);
        assert_eq!(right, a);
    }

    #[test]
    fn matmul_matches_hand_computation() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = Mat::from_rows(&[&[5.0, 6.0], &[7.0, 8.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c, Mat::from_rows(&[&[19.0, 22.0], &[43.0, 50.0]]).unwrap());
    }

    #[test]
    fn matmul_rejects_inner_mismatch() {
        let a = Mat::<f64>::zeros(2, 3);
        let b = Mat::<f64>::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::Dimension { .. })));
    }

    #[test]
    fn transpose_swaps_indices() {
        let a = Mat::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        let t = a.transpose();
        assert_eq!(t.rows(), 3);
        assert_eq!(t.cols(), 2);
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(a.get(i, j), t.get(j, i));
            }
        }
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(Mat::from_vec(2, 2, vec![1.0f64; 3]).is_err());
    }

    #[test]
    fn rotation_preserves_column_norms_sum() {
        let mut m = Mat::from_rows(&[&[3.0, 1.0], &[0.0, 2.0]]).unwrap();
        let before = m.frobenius_norm();
        let theta = 0.37f64;
        m.rotate_cols(0, 1, theta.cos(), theta.sin());
        assert!((m.frobenius_norm() - before).abs() < 1e-12);
    }
}
