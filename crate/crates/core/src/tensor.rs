//! Dense row-major tensors and pairwise contraction.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul};

use num_complex::Complex64;

use crate::error::{invalid, shape, Error, Result};
use crate::rng::Rng;

/// Element type of a [`Tensor`].
pub trait Scalar:
    Copy + Debug + PartialEq + Add<Output = Self> + Mul<Output = Self> + AddAssign + Send + Sync + 'static
{
    const ZERO: Self;
    const ONE: Self;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T = f64> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(shape_err_zero(&shape));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(self::shape(format!(
                "shape {shape:?} holds {len} entries but {} were given",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = shape.iter().product();
        Self::new(shape, vec![T::ZERO; len])
    }

    /// Builds a tensor by evaluating `f` at every multi-index in row-major
    /// order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut index = vec![0; shape.len()];
        for _ in 0..len {
            data.push(f(&index));
            increment(&mut index, &shape);
        }
        Self::new(shape, data)
    }

    pub fn scalar(value: T) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
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

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len() {
            return Err(shape(format!(
                "index of rank {} into tensor of rank {}",
                index.len(),
                self.shape.len()
            )));
        }
        let mut offset = 0;
        for (axis, (&i, &extent)) in index.iter().zip(&self.shape).enumerate() {
            if i >= extent {
                return Err(shape(format!(
                    "index {i} out of range on axis {axis} (extent {extent})"
                )));
            }
            offset = offset * extent + i;
        }
        Ok(offset)
    }

    pub fn get(&self, index: &[usize]) -> Result<T> {
        Ok(self.data[self.offset(index)?])
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    /// Reorders axes so that axis `k` of the result is axis `axes[k]` of
    /// `self`.
    pub fn permute(&self, axes: &[usize]) -> Result<Self> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        if axes.len() != rank {
            return Err(shape(format!("permutation {axes:?} for rank {rank}")));
        }
        for &a in axes {
            if a >= rank || seen[a] {
                return Err(shape(format!("{axes:?} is not a permutation of 0..{rank}")));
            }
            seen[a] = true;
        }
        if axes.iter().enumerate().all(|(k, &a)| k == a) {
            return Ok(self.clone());
        }

        let src_strides = self.strides();
        let new_shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let moved_strides: Vec<usize> = axes.iter().map(|&a| src_strides[a]).collect();
        let mut data = Vec::with_capacity(self.len());
        let mut index = vec![0; rank];
        for _ in 0..self.len() {
            let src: usize = index.iter().zip(&moved_strides).map(|(i, s)| i * s).sum();
            data.push(self.data[src]);
            increment(&mut index, &new_shape);
        }
        Ok(Self { shape: new_shape, data })
    }

    pub fn scale(&self, alpha: T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| alpha * x).collect(),
        }
    }
}

impl Tensor<f64> {
    /// Entries i.i.d. uniform on `(-scale·√3, scale·√3)`: zero mean, standard
    /// deviation `scale`.
    pub fn random_init(shape: Vec<usize>, scale: f64, rng: &mut Rng) -> Result<Self> {
        if shape.is_empty() {
            return Err(invalid("random_init needs at least one axis"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid(format!("random_init scale must be positive, got {scale}")));
        }
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.centered(scale)).collect();
        Self::new(shape, data)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Sums over the paired axes of `a` and `b`.
///
/// The result carries the unpaired axes of `a` in their original order
/// followed by the unpaired axes of `b`. Pairing every axis gives a rank-0
/// tensor.
pub fn contract<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, pairs: &[(usize, usize)]) -> Result<Tensor<T>> {
    let mut used_a = vec![false; a.rank()];
    let mut used_b = vec![false; b.rank()];
    for &(axis_a, axis_b) in pairs {
        if axis_a >= a.rank() || axis_b >= b.rank() {
            return Err(shape(format!(
                "pair ({axis_a}, {axis_b}) out of range for ranks {} and {}",
                a.rank(),
                b.rank()
            )));
        }
        if used_a[axis_a] || used_b[axis_b] {
            return Err(shape(format!("axis paired twice in ({axis_a}, {axis_b})")));
        }
        if a.shape[axis_a] != b.shape[axis_b] {
            return Err(Error::Contraction {
                axis_a,
                axis_b,
                extent_a: a.shape[axis_a],
                extent_b: b.shape[axis_b],
            });
        }
        used_a[axis_a] = true;
        used_b[axis_b] = true;
    }

    let free_a: Vec<usize> = (0..a.rank()).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&i| !used_b[i]).collect();

    let perm_a: Vec<usize> = free_a.iter().copied().chain(pairs.iter().map(|p| p.0)).collect();
    let perm_b: Vec<usize> = pairs.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();
    let a_mat = a.permute(&perm_a)?;
    let b_mat = b.permute(&perm_b)?;

    let rows: usize = free_a.iter().map(|&i| a.shape[i]).product();
    let inner: usize = pairs.iter().map(|p| a.shape[p.0]).product();
    let cols: usize = free_b.iter().map(|&i| b.shape[i]).product();

    let data = matmul(&a_mat.data, &b_mat.data, rows, inner, cols);
    let shape = free_a
        .iter()
        .map(|&i| a.shape[i])
        .chain(free_b.iter().map(|&i| b.shape[i]))
        .collect();
    Ok(Tensor { shape, data })
}

/// Row-major `(rows × inner) · (inner × cols)`.
pub(crate) fn matmul<T: Scalar>(a: &[T], b: &[T], rows: usize, inner: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::ZERO; rows * cols];
    for i in 0..rows {
        let out_row = &mut out[i * cols..(i + 1) * cols];
        for k in 0..inner {
            let aik = a[i * inner + k];
            let b_row = &b[k * cols..(k + 1) * cols];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    out
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

/// Advances a row-major multi-index; wraps to all zeros after the last entry.
pub(crate) fn increment(index: &mut [usize], shape: &[usize]) {
    for k in (0..index.len()).rev() {
        index[k] += 1;
        if index[k] < shape[k] {
            return;
        }
        index[k] = 0;
    }
}

fn shape_err_zero(shape: &[usize]) -> Error {
    invalid(format!("tensor extents must be positive, got {shape:?}"))
}
