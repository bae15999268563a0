//! Minimal dense row-major matrices over `f64` and `Complex64`.
//!
//! Row vectors are plain slices; every product here is a row vector times a
//! matrix, matching the row-vector convention used throughout the crate.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{dim_err, Result};

pub type C64 = Complex64;
pub type RealMatrix = Matrix<f64>;
pub type ComplexMatrix = Matrix<C64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim_err(rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(dim_err(
                    format!("{cols} columns"),
                    format!("{} in row {i}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl RealMatrix {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 })
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }
}

impl ComplexMatrix {
    /// Numerical rank by Gaussian elimination with partial pivoting.
    ///
    /// A pivot counts when its magnitude exceeds `rel_tol` times the largest
    /// entry magnitude of the input.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let mut a = self.clone();
        let scale = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0;
        }
        let tol = rel_tol * scale;
        let mut rank = 0;
        for col in 0..a.cols {
            if rank == a.rows {
                break;
            }
            let (pivot, mag) =
                (rank..a.rows)
                    .map(|r| (r, a[(r, col)].norm()))
                    .fold(
                        (rank, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if mag <= tol {
                continue;
            }
            a.swap_rows(rank, pivot);
            let p = a[(rank, col)];
            for r in rank + 1..a.rows {
                let f = a[(r, col)] / p;
                if f == C64::default() {
                    continue;
                }
                for c in col..a.cols {
                    let v = a[(rank, c)];
                    a[(r, c)] -= f * v;
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Row vector times real matrix: `out[j] = sum_i v[i] * m[i][j]`.
pub fn vec_mat(v: &[f64], m: &RealMatrix) -> Result<Vec<f64>> {
    if v.len() != m.rows {
        return Err(dim_err(
            format!("vector of length {}", m.rows),
            format!("length {}", v.len()),
        ));
    }
    let mut out = vec![0.0; m.cols];
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        for (o, &w) in out.iter_mut().zip(m.row(i)) {
            *o += vi * w;
        }
    }
    Ok(out)
}

/// Row vector times complex matrix, for a real or complex row vector.
pub fn vec_cmat<V: Copy + Into<C64>>(v: &[V], m: &ComplexMatrix) -> Result<Vec<C64>> {
    if v.len() != m.rows {
        return Err(dim_err(
            format!("vector of length {}", m.rows),
            format!("length {}", v.len()),
        ));
    }
    let mut out = vec![C64::default(); m.cols];
    for (i, &vi) in v.iter().enumerate() {
        let vi: C64 = vi.into();
        for (o, &w) in out.iter_mut().zip(m.row(i)) {
            *o += vi * w;
        }
    }
    Ok(out)
}
