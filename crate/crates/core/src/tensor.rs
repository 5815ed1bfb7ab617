//! Dense order-3 image tensors and order-6 operators.
//!
//! Layout convention used throughout the crate: an image tensor of dims
//! `(n1, n2, n3)` is stored row-major with the channel index fastest, so the
//! 0-based multi-index `(i1, i2, i3)` lives at flat offset
//! `(i1 * n2 + i2) * n3 + i3`. An order-6 operator stores entry
//! `(i1, i2, i3, j1, j2, j3)` at `flat(i) * n + flat(j)` with `n = n1 * n2 * n3`,
//! which makes its buffer identical to the row-major unfolded `n x n` matrix.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default limit on unknowns for materialized order-6 operators (16 x 16 x 3).
pub const DEFAULT_DENSE_CAP: usize = 16 * 16 * 3;

/// Default limit on unknowns accepted by [`direct_solve`].
pub const DEFAULT_DIRECT_SOLVE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims3 {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
}

impl Dims3 {
    pub const fn new(rows: usize, cols: usize, channels: usize) -> Self {
        Self {
            rows,
            cols,
            channels,
        }
    }

    pub const fn len(&self) -> usize {
        self.rows * self.cols * self.channels
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.rows, self.cols, self.channels]
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.rows && j < self.cols && k < self.channels);
        (i * self.cols + j) * self.channels + k
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.channels;
        let rest = idx / self.channels;
        [rest / self.cols, rest % self.cols, k]
    }

    fn check_positive(self) -> Result<Self> {
        if self.rows == 0 || self.cols == 0 || self.channels == 0 {
            Err(Error::EmptyDimensions(self))
        } else {
            Ok(self)
        }
    }
}

impl fmt::Display for Dims3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.rows, self.cols, self.channels)
    }
}

/// Order-3 real tensor (rows x cols x channels).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    dims: Dims3,
    data: Vec<f64>,
}

impl ImageTensor {
    /// Wraps a row-major buffer. Rejects empty dims, wrong lengths and
    /// non-finite values.
    pub fn new(dims: Dims3, data: Vec<f64>) -> Result<Self> {
        let dims = dims.check_positive()?;
        if data.len() != dims.len() {
            return Err(Error::BufferLength {
                dims,
                expected: dims.len(),
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at flat index {pos}")));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Dims3) -> Self {
        Self::filled(dims, 0.0)
    }

    pub fn filled(dims: Dims3, value: f64) -> Self {
        assert!(!dims.is_empty(), "tensor dims must be positive");
        Self {
            dims,
            data: vec![value; dims.len()],
        }
    }

    pub fn from_fn(dims: Dims3, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        assert!(!dims.is_empty(), "tensor dims must be positive");
        let mut data = Vec::with_capacity(dims.len());
        for i in 0..dims.rows {
            for j in 0..dims.cols {
                for k in 0..dims.channels {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { dims, data }
    }

    /// Internal constructor for buffers produced by library arithmetic.
    pub(crate) fn from_raw(dims: Dims3, data: Vec<f64>) -> Self {
        debug_assert_eq!(dims.len(), data.len());
        Self { dims, data }
    }

    pub fn dims(&self) -> Dims3 {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.dims.flat(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let idx = self.dims.flat(i, j, k);
        self.data[idx] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_raw(self.dims, self.data.iter().map(|v| c * v).collect())
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        ensure_same(self.dims, other.dims)?;
        Ok(Self::from_raw(
            self.dims,
            self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        ))
    }

    /// `self + other`, elementwise.
    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_same(self.dims, other.dims)?;
        Ok(Self::from_raw(
            self.dims,
            self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        ))
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Self) {
        assert_eq!(self.dims, x.dims);
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    /// `self = x + b * self`
    pub fn xpby(&mut self, x: &Self, b: f64) {
        assert_eq!(self.dims, x.dims);
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s = v + b * *s;
        }
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Copies channel `k` into a row-major `rows x cols` plane.
    pub fn channel(&self, k: usize) -> Vec<f64> {
        assert!(k < self.dims.channels);
        self.data
            .iter()
            .skip(k)
            .step_by(self.dims.channels)
            .copied()
            .collect()
    }

    pub fn set_channel(&mut self, k: usize, plane: &[f64]) {
        assert!(k < self.dims.channels);
        assert_eq!(plane.len(), self.dims.rows * self.dims.cols);
        let c = self.dims.channels;
        for (p, v) in plane.iter().enumerate() {
            self.data[p * c + k] = *v;
        }
    }
}

pub(crate) fn ensure_same(expected: Dims3, actual: Dims3) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Square order-6 operator acting on image tensors of a fixed shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator6 {
    dims: Dims3,
    data: Vec<f64>,
}

impl Operator6 {
    /// Materializes `T[i, j] = f(i, j)` over all multi-index pairs, refusing
    /// shapes above `cap` unknowns.
    pub fn from_fn_capped(
        dims: Dims3,
        cap: usize,
        mut f: impl FnMut([usize; 3], [usize; 3]) -> f64,
    ) -> Result<Self> {
        let dims = dims.check_positive()?;
        let n = dims.len();
        if n > cap {
            return Err(Error::DenseCapExceeded { unknowns: n, cap });
        }
        let mut data = Vec::with_capacity(n * n);
        for row in 0..n {
            let i = dims.unflat(row);
            for col in 0..n {
                data.push(f(i, dims.unflat(col)));
            }
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: Dims3, f: impl FnMut([usize; 3], [usize; 3]) -> f64) -> Result<Self> {
        Self::from_fn_capped(dims, DEFAULT_DENSE_CAP, f)
    }

    /// Wraps a buffer already laid out as the row-major unfolded matrix.
    pub fn from_unfolded(dims: Dims3, data: Vec<f64>) -> Result<Self> {
        let dims = dims.check_positive()?;
        let n = dims.len();
        if data.len() != n * n {
            return Err(Error::BufferLength {
                dims,
                expected: n * n,
                actual: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn identity(dims: Dims3) -> Result<Self> {
        Self::from_fn(dims, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn dims(&self) -> Dims3 {
        self.dims
    }

    pub fn unknowns(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: [usize; 3], j: [usize; 3]) -> f64 {
        let n = self.unknowns();
        self.data[self.dims.flat(i[0], i[1], i[2]) * n + self.dims.flat(j[0], j[1], j[2])]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.unknowns();
        (0..n).all(|r| (r + 1..n).all(|c| (self.data[r * n + c] - self.data[c * n + r]).abs() <= tol))
    }

    /// Contraction with the transposed operator: `Y[j] = sum_i T[i, j] X[i]`.
    pub fn transpose_product(&self, x: &ImageTensor) -> Result<ImageTensor> {
        ensure_same(self.dims, x.dims())?;
        let n = self.unknowns();
        let mut out = vec![0.0; n];
        for (row, xv) in self.data.chunks_exact(n).zip(x.data()) {
            for (o, t) in out.iter_mut().zip(row) {
                *o += t * xv;
            }
        }
        Ok(ImageTensor::from_raw(self.dims, out))
    }
}

/// `Y[i1,i2,i3] = sum_{j1,j2,j3} T[i1,i2,i3,j1,j2,j3] X[j1,j2,j3]`.
pub fn einstein_product(t: &Operator6, x: &ImageTensor) -> Result<ImageTensor> {
    ensure_same(t.dims, x.dims())?;
    let n = t.unknowns();
    let out = t
        .data
        .chunks_exact(n)
        .map(|row| row.iter().zip(x.data()).map(|(a, b)| a * b).sum())
        .collect();
    Ok(ImageTensor::from_raw(t.dims, out))
}

pub fn inner(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    ensure_same(a.dims(), b.dims())?;
    Ok(dot(a.data(), b.data()))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn fro_norm(a: &ImageTensor) -> f64 {
    dot(a.data(), a.data()).sqrt()
}

pub fn unfold_operator(t: &Operator6) -> DMatrix<f64> {
    let n = t.unknowns();
    DMatrix::from_row_slice(n, n, &t.data)
}

pub fn unfold_tensor(x: &ImageTensor) -> DVector<f64> {
    DVector::from_column_slice(x.data())
}

pub fn refold(v: &DVector<f64>, dims: Dims3) -> Result<ImageTensor> {
    ImageTensor::new(dims, v.as_slice().to_vec())
}

/// Solves `T *3 F = G` exactly through LU factorization of the unfolded matrix.
pub fn direct_solve(t: &Operator6, g: &ImageTensor) -> Result<ImageTensor> {
    direct_solve_capped(t, g, DEFAULT_DIRECT_SOLVE_CAP)
}

pub fn direct_solve_capped(t: &Operator6, g: &ImageTensor, cap: usize) -> Result<ImageTensor> {
    ensure_same(t.dims, g.dims())?;
    let n = t.unknowns();
    if n > cap {
        return Err(Error::DenseCapExceeded { unknowns: n, cap });
    }
    let a = unfold_operator(t);
    let lu = a.clone().lu();
    let (min_pivot, max_pivot) = lu
        .u()
        .diagonal()
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
    let pivot_ratio = if max_pivot > 0.0 { min_pivot / max_pivot } else { 0.0 };
    if !(pivot_ratio > 1e-14) {
        return Err(Error::Singular {
            pivot_ratio,
            condition_estimate: 1.0 / pivot_ratio,
        });
    }
    let b = unfold_tensor(g);
    let singular = || Error::Singular {
        pivot_ratio,
        condition_estimate: 1.0 / pivot_ratio,
    };
    let mut x = lu.solve(&b).ok_or_else(singular)?;
    // one round of iterative refinement
    let r = &b - &a * &x;
    x += lu.solve(&r).ok_or_else(singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    refold(&x, t.dims)
}
