//! Dense row-major tensors. Everything here is 1-D or 2-D in practice.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape("tensor data", &[n], &[data.len()]));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self {
            shape: vec![rows, cols],
            data,
        }
    }

    /// A 1-D tensor.
    pub fn vector(data: Vec<T>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    /// A `len × 1` column, the layout of a single-channel sequence.
    pub fn column(data: &[T]) -> Self {
        Self {
            shape: vec![data.len(), 1],
            data: data.to_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    pub fn cols(&self) -> usize {
        match self.shape.len() {
            0 | 1 => 1,
            _ => self.shape[1..].iter().product(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let c = self.cols();
        self.data[i * c + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let (r, c) = (self.rows(), self.cols());
        Self::from_fn(c, r, |i, j| self.get(j, i))
    }

    pub fn frobenius_sq(&self) -> T {
        self.data.iter().map(|&x| x * x).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub(crate) fn expect_shape(&self, context: &'static str, shape: &[usize]) -> Result<()> {
        if self.shape != shape {
            return Err(Error::shape(context, shape, &self.shape));
        }
        Ok(())
    }
}

/// `y += W x` for a row-major `rows × cols` weight block.
#[inline]
pub(crate) fn gemv_acc<T: Scalar>(w: &[T], cols: usize, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), cols);
    for (yi, wrow) in y.iter_mut().zip(w.chunks_exact(cols)) {
        let mut acc = T::zero();
        for (&a, &b) in wrow.iter().zip(x) {
            acc += a * b;
        }
        *yi += acc;
    }
}

/// `dx += Wᵀ dy`.
#[inline]
pub(crate) fn gemv_t_acc<T: Scalar>(w: &[T], cols: usize, dy: &[T], dx: &mut [T]) {
    debug_assert_eq!(dx.len(), cols);
    for (&g, wrow) in dy.iter().zip(w.chunks_exact(cols)) {
        if g == T::zero() {
            continue;
        }
        for (d, &a) in dx.iter_mut().zip(wrow) {
            *d += a * g;
        }
    }
}

/// `dW += dy xᵀ`.
#[inline]
pub(crate) fn outer_acc<T: Scalar>(dw: &mut [T], cols: usize, dy: &[T], x: &[T]) {
    for (&g, drow) in dy.iter().zip(dw.chunks_exact_mut(cols)) {
        if g == T::zero() {
            continue;
        }
        for (d, &b) in drow.iter_mut().zip(x) {
            *d += g * b;
        }
    }
}
