//! Small dense linear algebra: row-major matrices and Cholesky factorization.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Jitter added to the diagonal on factorization failure, escalated ×10 per retry.
pub const JITTER_START: f64 = 1e-8;
pub const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
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
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[S]> {
        // chunks_exact panics on zero; an n×0 matrix still has n (empty) rows
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    /// Appends a row, fixing the column count on the first push into an empty matrix.
    pub fn push_row(&mut self, row: &[S]) -> Result<()> {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Leading `k` rows.
    pub fn head_rows(&self, k: usize) -> Self {
        let k = k.min(self.rows);
        Self {
            rows: k,
            cols: self.cols,
            data: self.data[..k * self.cols].to_vec(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn matvec(&self, v: &[S]) -> Result<Vec<S>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok(self.row_iter().map(|r| dot(r, v)).collect())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<T: Scalar>(&self) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| T::lit(v.as_f64())).collect(),
        }
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn euclidean<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = A + jitter·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<S> {
    l: Matrix<S>,
    jitter: S,
}

impl<S: Scalar> Cholesky<S> {
    /// Factorizes a symmetric matrix without jitter; only the lower triangle is read.
    pub fn new(a: &Matrix<S>) -> Result<Self> {
        factor(a, S::zero()).map_err(|(idx, pivot)| cholesky_error(a, idx, pivot, 0.0))
    }

    /// Factorizes, retrying with diagonal jitter 1e-8, 1e-7, …, 1e-4 on failure.
    pub fn with_jitter(a: &Matrix<S>) -> Result<Self> {
        let mut last = match factor(a, S::zero()) {
            Ok(c) => return Ok(c),
            Err(e) => e,
        };
        let mut jitter = JITTER_START;
        while jitter <= JITTER_MAX * 1.000_001 {
            match factor(a, S::lit(jitter)) {
                Ok(c) => return Ok(c),
                Err(e) => last = e,
            }
            jitter *= 10.0;
        }
        Err(cholesky_error(a, last.0, last.1, JITTER_MAX))
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.l.rows()
    }

    pub fn factor(&self) -> &Matrix<S> {
        &self.l
    }

    /// Diagonal jitter that was needed for the factorization to succeed.
    pub fn jitter(&self) -> S {
        self.jitter
    }

    /// Solves `L·x = b`.
    pub fn solve_lower(&self, b: &[S]) -> Vec<S> {
        let n = self.size();
        let mut x = b.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            let s = dot(&row[..i], &x[..i]);
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `Lᵀ·x = b`.
    pub fn solve_upper(&self, b: &[S]) -> Vec<S> {
        let n = self.size();
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.l[(i, i)];
            let xi = x[i];
            let row = self.l.row(i);
            for j in 0..i {
                x[j] -= row[j] * xi;
            }
        }
        x
    }

    /// Solves `(L·Lᵀ)·x = b`.
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `Σ log L_ii`, i.e. half the log-determinant.
    pub fn half_log_det(&self) -> S {
        (0..self.size()).map(|i| self.l[(i, i)].ln()).sum()
    }

    /// Dense inverse of `L·Lᵀ`.
    pub fn inverse(&self) -> Matrix<S> {
        let n = self.size();
        // L⁻¹ by forward substitution, stored lower-triangular
        let mut linv = Matrix::zeros(n, n);
        for j in 0..n {
            linv[(j, j)] = self.l[(j, j)].recip();
            for i in (j + 1)..n {
                let row = self.l.row(i);
                let mut s = S::zero();
                for k in j..i {
                    s += row[k] * linv[(k, j)];
                }
                linv[(i, j)] = -s / row[i];
            }
        }
        // A⁻¹ = L⁻ᵀ L⁻¹, (i, j) = Σ_{k ≥ max(i,j)} linv[k,i]·linv[k,j]
        let mut inv = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = S::zero();
                for k in i..n {
                    let r = linv.row(k);
                    s += r[i] * r[j];
                }
                inv[(i, j)] = s;
                inv[(j, i)] = s;
            }
        }
        inv
    }
}

fn factor<S: Scalar>(a: &Matrix<S>, jitter: S) -> std::result::Result<Cholesky<S>, (usize, f64)> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = {
                let (ri, rj) = (l.row(i), l.row(j));
                dot(&ri[..j], &rj[..j])
            };
            if i == j {
                let d = a[(i, i)] + jitter - s;
                if !(d > S::zero()) || !d.is_finite() {
                    return Err((i, d.as_f64()));
                }
                l[(i, i)] = d.sqrt();
            } else {
                l[(i, j)] = (a[(i, j)] - s) / l[(j, j)];
            }
        }
    }
    Ok(Cholesky { l, jitter })
}

fn cholesky_error<S: Scalar>(a: &Matrix<S>, pivot_index: usize, pivot: f64, max_jitter: f64) -> Error {
    let diag = (0..a.rows()).map(|i| a[(i, i)].as_f64());
    let (min_diag, max_diag) = diag.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
        (lo.min(d), hi.max(d))
    });
    Error::Cholesky {
        size: a.rows(),
        pivot_index,
        pivot,
        max_jitter,
        min_diag,
        max_diag,
    }
}
