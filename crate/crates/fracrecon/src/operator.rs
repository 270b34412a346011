//! Dense matrix representation of discretized linear operators.

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::real::Real;
use rayon::prelude::*;

/// Row-major dense matrix, optionally tagged with the grids its input and
/// output vectors live on.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator<R> {
    rows: usize,
    cols: usize,
    entries: Vec<R>,
    in_grid: Option<Grid1D<R>>,
    out_grid: Option<Grid1D<R>>,
}

impl<R: Real> DenseOperator<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![R::zero(); rows * cols],
            in_grid: None,
            out_grid: None,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut op = Self::zeros(n, n);
        for i in 0..n {
            op.entries[i * n + i] = R::one();
        }
        op
    }

    pub fn with_grids(mut self, in_grid: Grid1D<R>, out_grid: Grid1D<R>) -> Result<Self> {
        if in_grid.len() != self.cols || out_grid.len() != self.rows {
            return Err(Error::DimensionMismatch {
                detail: "grid sizes must match matrix shape".into(),
            });
        }
        self.in_grid = Some(in_grid);
        self.out_grid = Some(out_grid);
        Ok(self)
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
    pub fn in_grid(&self) -> Option<&Grid1D<R>> {
        self.in_grid.as_ref()
    }

    #[inline]
    pub fn out_grid(&self) -> Option<&Grid1D<R>> {
        self.out_grid.as_ref()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> R {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.entries[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: R) {
        self.entries[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [R] {
        &mut self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[R] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [R] {
        &mut self.entries
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    pub fn scale_in_place(&mut self, c: R) {
        for v in &mut self.entries {
            *v *= c;
        }
    }

    /// Matrix-vector product, row-parallel.
    pub fn apply(&self, x: &[R]) -> Result<Vec<R>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                detail: format!("operator has {} cols, vector has {}", self.cols, x.len()),
            });
        }
        let out: Vec<R> = (0..self.rows)
            .into_par_iter()
            .map(|i| dot(self.row(i), x))
            .collect();
        Ok(out)
    }

    /// Transposed matrix-vector product.
    pub fn apply_transpose(&self, y: &[R]) -> Result<Vec<R>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch {
                detail: format!("operator has {} rows, vector has {}", self.rows, y.len()),
            });
        }
        let out: Vec<R> = (0..self.cols)
            .into_par_iter()
            .map(|j| {
                let mut acc = R::zero();
                for i in 0..self.rows {
                    acc += self.entries[i * self.cols + j] * y[i];
                }
                acc
            })
            .collect();
        Ok(out)
    }

    /// Submatrix selecting the given rows and columns. Grid tags are dropped
    /// because the selection need not be contiguous.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            let row = self.row(i);
            for &j in cols {
                entries.push(row[j]);
            }
        }
        Self {
            rows: rows.len(),
            cols: cols.len(),
            entries,
            in_grid: None,
            out_grid: None,
        }
    }

    /// Gram matrix `A^T A`, used to set up regularized normal equations.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let entries: Vec<R> = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let j = idx / n;
                let k = idx % n;
                let mut acc = R::zero();
                for i in 0..self.rows {
                    acc += self.entries[i * n + j] * self.entries[i * n + k];
                }
                acc
            })
            .collect();
        Self {
            rows: n,
            cols: n,
            entries,
            in_grid: None,
            out_grid: None,
        }
    }

    /// `self += c * other`; shapes must match.
    pub fn add_scaled(&mut self, other: &Self, c: R) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                detail: "add_scaled needs matching shapes".into(),
            });
        }
        for (a, &b) in self.entries.iter_mut().zip(&other.entries) {
            *a += c * b;
        }
        Ok(())
    }
}

#[inline]
fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).fold(R::zero(), |acc, (&x, &y)| acc + x * y)
}
