//! Dense N-way tensors and their multilinear algebra.
//!
//! A tensor X ∈ ℝ^{n_1×⋯×n_N} is stored as one flat buffer in
//! first-index-fastest order: element (i_1, …, i_N) (1-based in all
//! documentation) lives at 0-based offset
//!
//! ```text
//! off = (i_1 − 1) + (i_2 − 1)·n_1 + (i_3 − 1)·n_1 n_2 + ⋯
//! ```
//!
//! Mode indices in the public API are 1-based, matching the algebra the
//! crate implements; they are converted to 0-based positions immediately at
//! the API boundary and nowhere else.
//!
//! The mode-n unfolding maps tensor element (i_1, …, i_N) to matrix element
//! (i_n, j) with
//!
//! ```text
//! j = 1 + Σ_{k≠n} (i_k − 1) · V_k,    V_k = Π_{m<k, m≠n} n_m,
//! ```
//!
//! the empty product being 1. With first-index-fastest storage the mode-1
//! unfolding is exactly the flat buffer reinterpreted column-major, and the
//! other modes are strided gathers.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;

/// Extents (n_1, …, n_N) of an N-way tensor, N ≥ 1, every extent ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    /// Validates extents: at least one mode, every extent positive, and the
    /// element count representable as `usize`.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::dimension("at least one mode", "0 modes"));
        }
        if dims.iter().any(|&n| n == 0) {
            return Err(Error::dimension("positive extents", format!("{dims:?}")));
        }
        let mut len: usize = 1;
        for &n in &dims {
            len = len
                .checked_mul(n)
                .ok_or_else(|| Error::dimension("element count within index range", format!("{dims:?}")))?;
        }
        Ok(Shape { dims })
    }

    /// Number of modes N.
    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Extents in mode order.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Extent of 1-based mode `n`.
    pub fn extent(&self, mode: usize) -> Result<usize> {
        self.check_mode(mode)?;
        Ok(self.dims[mode - 1])
    }

    /// Total element count Π n_i.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false // every extent is ≥ 1, so a valid shape has at least one element
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode == 0 || mode > self.ndim() {
            return Err(Error::Mode { mode, ndim: self.ndim() });
        }
        Ok(())
    }

    /// (P, n, Q) split around 1-based `mode`: P = Π_{k<mode} n_k (faster
    /// indices), n = n_mode, Q = Π_{k>mode} n_k (slower indices).
    pub(crate) fn mode_split(&self, mode: usize) -> (usize, usize, usize) {
        let m0 = mode - 1;
        let p: usize = self.dims[..m0].iter().product();
        let q: usize = self.dims[m0 + 1..].iter().product();
        (p, self.dims[m0], q)
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Dense N-way tensor over scalar type `T`, first-index-fastest layout.
///
/// The type is an immutable value for all reading operations; operations
/// that produce tensors allocate fresh buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<T: Scalar> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Scalar> DenseTensor<T> {
    /// The zero tensor of the given shape.
    pub fn zeros(shape: Shape) -> Self {
        let len = shape.len();
        DenseTensor { shape, data: vec![T::zero(); len] }
    }

    /// Wraps a flat buffer in first-index-fastest order.
    pub fn from_data(shape: Shape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::dimension(
                format!("{} elements for shape {shape}", shape.len()),
                format!("{}", data.len()),
            ));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Flat buffer in first-index-fastest order.
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Element at a 1-based multi-index (diagnostic accessor; bulk code works
    /// on the flat buffer).
    pub fn at(&self, index: &[usize]) -> Result<T> {
        Ok(self.data[self.offset_of(index)?])
    }

    /// 0-based flat offset of a 1-based multi-index.
    pub fn offset_of(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.ndim() {
            return Err(Error::dimension(
                format!("{}-way index", self.shape.ndim()),
                format!("{}-way index", index.len()),
            ));
        }
        let mut off = 0usize;
        let mut stride = 1usize;
        for (&i, &n) in index.iter().zip(self.shape.dims()) {
            if i == 0 || i > n {
                return Err(Error::dimension(format!("index within 1..={n}"), format!("{i}")));
            }
            off += (i - 1) * stride;
            stride *= n;
        }
        Ok(off)
    }

    /// True when every entry is finite (no NaN or infinity).
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Inner product ⟨a, b⟩ = Σ over all multi-indices of a·b.
    pub fn inner_product(&self, other: &DenseTensor<T>) -> Result<T> {
        if self.shape != other.shape {
            return Err(Error::dimension(self.shape.to_string(), other.shape.to_string()));
        }
        Ok(crate::mat::dot(&self.data, &other.data))
    }

    /// Frobenius norm √⟨a, a⟩.
    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Mode-n unfolding X_(n) (1-based `mode`).
    pub fn unfold(&self, mode: usize) -> Result<UnfoldedMatrix<T>> {
        self.shape.check_mode(mode)?;
        let (p, n, q) = self.shape.mode_split(mode);
        let cols = p * q;
        let mat = if mode == 1 {
            // First-index-fastest storage makes the mode-1 unfolding the flat
            // buffer itself, reinterpreted as an n × (Πother) column-major matrix.
            Mat::from_vec(n, cols, self.data.clone())?
        } else {
            let mut out = vec![T::zero(); self.data.len()];
            for qi in 0..q {
                for r in 0..n {
                    let src0 = p * (r + n * qi);
                    for pi in 0..p {
                        out[r + n * (pi + p * qi)] = self.data[src0 + pi];
                    }
                }
            }
            Mat::from_vec(n, cols, out)?
        };
        Ok(UnfoldedMatrix { mat, mode, origin_shape: self.shape.clone() })
    }

    /// i-mode product X ×_i U, defined by unfold(result, i) = U · X_(i).
    pub fn mode_product(&self, u: &Mat<T>, mode: usize) -> Result<DenseTensor<T>> {
        self.shape.check_mode(mode)?;
        let n_i = self.shape.dims()[mode - 1];
        if u.cols() != n_i {
            return Err(Error::dimension(
                format!("matrix with {n_i} columns for mode {mode}"),
                format!("{} columns", u.cols()),
            ));
        }
        let unfolded = self.unfold(mode)?;
        let product = u.matmul(&unfolded.mat)?;
        let mut dims = self.shape.dims().to_vec();
        dims[mode - 1] = u.rows();
        let shape = Shape::new(dims)?;
        UnfoldedMatrix { mat: product, mode, origin_shape: shape }.refold()
    }

    /// Applies `f` entrywise, producing a new tensor.
    pub fn map(&self, mut f: impl FnMut(T) -> T) -> DenseTensor<T> {
        DenseTensor { shape: self.shape.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }
}

/// A mode-n unfolding X_(n) together with the mode and shape it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedMatrix<T: Scalar> {
    /// The n_n × J_n matrix, J_n = Π_{k≠n} n_k.
    pub mat: Mat<T>,
    /// 1-based mode n.
    pub mode: usize,
    /// Shape of the tensor the matrix unfolds.
    pub origin_shape: Shape,
}

impl<T: Scalar> UnfoldedMatrix<T> {
    /// Inverse of [`DenseTensor::unfold`]: scatters the matrix back into a
    /// tensor of `origin_shape`. Bit-exact inverse (a pure permutation).
    pub fn refold(&self) -> Result<DenseTensor<T>> {
        self.origin_shape.check_mode(self.mode)?;
        let (p, n, q) = self.origin_shape.mode_split(self.mode);
        if self.mat.rows() != n || self.mat.cols() != p * q {
            return Err(Error::dimension(
                format!("{n}x{} matrix for mode {} of shape {}", p * q, self.mode, self.origin_shape),
                format!("{}x{}", self.mat.rows(), self.mat.cols()),
            ));
        }
        if self.mode == 1 {
            return DenseTensor::from_data(self.origin_shape.clone(), self.mat.data().to_vec());
        }
        let src = self.mat.data();
        let mut out = vec![T::zero(); src.len()];
        for qi in 0..q {
            for r in 0..n {
                let dst0 = p * (r + n * qi);
                for pi in 0..p {
                    out[dst0 + pi] = src[r + n * (pi + p * qi)];
                }
            }
        }
        DenseTensor::from_data(self.origin_shape.clone(), out)
    }
}
