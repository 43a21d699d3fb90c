//! Dense 3-order tensors and their mode-n unfoldings.
//!
//! A [`Cube`] stores `H x W x B` values row-major with the band index
//! fastest: the linear index of `(i, j, k)` is `(i * W + j) * B + k`.
//!
//! Unfolding follows the usual convention where the remaining mode with the
//! lower number varies fastest along the columns. For mode 1 the column of
//! `(i, j, k)` is `j + k * W`, for mode 2 it is `i + k * H`, and for mode 3 it
//! is `i + j * H`.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

/// Cube extents `(height, width, bands)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub h: usize,
    pub w: usize,
    pub b: usize,
}

impl Dims {
    pub const fn new(h: usize, w: usize, b: usize) -> Self {
        Self { h, w, b }
    }

    pub const fn len(&self) -> usize {
        self.h * self.w * self.b
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Size of mode `mode` (1-based).
    pub fn mode_size(&self, mode: usize) -> Result<usize> {
        match mode {
            1 => Ok(self.h),
            2 => Ok(self.w),
            3 => Ok(self.b),
            m => Err(Error::ModeOutOfRange(m)),
        }
    }

    #[inline]
    pub const fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.w + j) * self.b + k
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.h, self.w, self.b)
    }
}

impl std::str::FromStr for Dims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['x', 'X']).collect();
        if parts.len() != 3 {
            return Err(Error::Argument(format!("expected HxWxB, got {s:?}")));
        }
        let mut v = [0usize; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .trim()
                .parse()
                .map_err(|_| Error::Argument(format!("bad dimension {p:?} in {s:?}")))?;
        }
        Ok(Dims::new(v[0], v[1], v[2]))
    }
}

/// A real 3-order tensor with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Cube {
    dims: Dims,
    data: Vec<f64>,
}

impl Cube {
    /// Builds a cube from raw data in band-fastest layout.
    ///
    /// Rejects zero extents, a length mismatch, or any NaN/Inf entry.
    pub fn from_vec(dims: Dims, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(shape_err(format!("cube dims {dims} must be positive")));
        }
        if data.len() != dims.len() {
            return Err(shape_err(format!(
                "data length {} does not match dims {dims} ({})",
                data.len(),
                dims.len()
            )));
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Dims) -> Self {
        Self::filled(dims, 0.0)
    }

    pub fn filled(dims: Dims, value: f64) -> Self {
        assert!(!dims.is_empty(), "cube dims must be positive");
        assert!(value.is_finite());
        Self {
            dims,
            data: vec![value; dims.len()],
        }
    }

    /// Builds a cube by evaluating `f(i, j, k)` at every voxel.
    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.len());
        for i in 0..dims.h {
            for j in 0..dims.w {
                for k in 0..dims.b {
                    data.push(f(i, j, k));
                }
            }
        }
        Self::from_vec(dims, data)
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.dims.index(i, j, k)]
    }

    /// Mutable access is crate-private so the finiteness invariant can only be
    /// broken by library code.
    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn from_vec_unchecked(dims: Dims, data: Vec<f64>) -> Self {
        debug_assert_eq!(dims.len(), data.len());
        Self { dims, data }
    }

    /// Spectrum of pixel `(i, j)`.
    pub fn spectrum(&self, i: usize, j: usize) -> &[f64] {
        let start = self.dims.index(i, j, 0);
        &self.data[start..start + self.dims.b]
    }

    fn check_same(&self, other: &Cube) -> Result<()> {
        if self.dims != other.dims {
            return Err(shape_err(format!(
                "dims {} and {} differ",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// Elementwise `self + other`.
    pub fn add(&self, other: &Cube) -> Result<Cube> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &Cube) -> Result<Cube> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Cube {
        self.map(|v| v * s)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Cube {
        Cube::from_vec_unchecked(self.dims, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Cube, f: impl Fn(f64, f64) -> f64) -> Result<Cube> {
        self.check_same(other)?;
        Ok(Cube::from_vec_unchecked(
            self.dims,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Cube) -> Result<()> {
        self.check_same(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Cube) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Copy of band `k` as an `H x W` row-major plane.
    pub fn band(&self, k: usize) -> Vec<f64> {
        let b = self.dims.b;
        self.data.iter().skip(k).step_by(b).copied().collect()
    }
}

/// Square root of the sum of squared entries.
pub fn frobenius_norm(x: &Cube) -> f64 {
    x.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(shape_err("ragged rows"));
        }
        Self::from_vec(r, c, rows.iter().flat_map(|row| row.iter().copied()).collect())
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(shape_err(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for p in 0..self.cols {
                let a = self.get(i, p);
                if a == 0.0 {
                    continue;
                }
                let src = &other.data[p * other.cols..(p + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(shape_err("matrix dims differ"));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Mode-n unfolding of a cube.
#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldedMatrix {
    mode: usize,
    matrix: Matrix,
}

impl UnfoldedMatrix {
    pub fn new(mode: usize, matrix: Matrix) -> Result<Self> {
        if !(1..=3).contains(&mode) {
            return Err(Error::ModeOutOfRange(mode));
        }
        Ok(Self { mode, matrix })
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }
}

/// Row and column of voxel `(i, j, k)` in the mode-`mode` unfolding.
#[inline]
fn unfold_position(dims: Dims, mode: usize, i: usize, j: usize, k: usize) -> (usize, usize) {
    match mode {
        1 => (i, j + k * dims.w),
        2 => (j, i + k * dims.h),
        _ => (k, i + j * dims.h),
    }
}

/// Mode-`mode` unfolding (`mode` in 1..=3).
pub fn unfold(x: &Cube, mode: usize) -> Result<UnfoldedMatrix> {
    let dims = x.dims;
    let rows = dims.mode_size(mode)?;
    let cols = dims.len() / rows;
    let mut data = vec![0.0; dims.len()];
    let mut idx = 0;
    for i in 0..dims.h {
        for j in 0..dims.w {
            for k in 0..dims.b {
                let (r, c) = unfold_position(dims, mode, i, j, k);
                data[r * cols + c] = x.data[idx];
                idx += 1;
            }
        }
    }
    Ok(UnfoldedMatrix {
        mode,
        matrix: Matrix { rows, cols, data },
    })
}

/// Inverse of [`unfold`] for a matrix laid out as the mode-`mode` unfolding
/// of a cube with extents `dims`.
pub fn fold(m: &Matrix, mode: usize, dims: Dims) -> Result<Cube> {
    let rows = dims.mode_size(mode)?;
    if dims.is_empty() {
        return Err(shape_err(format!("cube dims {dims} must be positive")));
    }
    if m.rows * m.cols != dims.len() || m.rows != rows {
        return Err(shape_err(format!(
            "cannot fold {}x{} matrix along mode {mode} into {dims}",
            m.rows, m.cols
        )));
    }
    let cols = m.cols;
    let mut data = Vec::with_capacity(dims.len());
    for i in 0..dims.h {
        for j in 0..dims.w {
            for k in 0..dims.b {
                let (r, c) = unfold_position(dims, mode, i, j, k);
                data.push(m.data[r * cols + c]);
            }
        }
    }
    Cube::from_vec(dims, data)
}
