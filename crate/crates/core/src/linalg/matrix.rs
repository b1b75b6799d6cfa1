use std::fmt;
use std::ops::{Index, IndexMut, Range};

use crate::error::{dim_err, PqrError, Result};

/// Dense real matrix stored column by column.
///
/// Used for everything from the tall `n×k` bases down to the small `s×s`
/// normalizers, so `rows >= cols` is not required.
#[derive(Clone, PartialEq)]
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
            m[(i, i)] = 1.0;
        }
        m
    }

    /// The first `cols` columns of the `rows×rows` identity.
    pub fn unit_columns(rows: usize, range: Range<usize>) -> Self {
        let mut m = Self::zeros(rows, range.len());
        for (j, i) in range.enumerate() {
            m[(i, j)] = 1.0;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return dim_err(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; handy for literals in tests.
    ///
    /// # Panics
    /// Panics if the rows have different lengths.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged row {i}");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
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

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Column `src` for reading alongside column `dst` for writing (`src < dst`).
    pub(crate) fn col_pair_mut(&mut self, src: usize, dst: usize) -> (&[f64], &mut [f64]) {
        assert!(src < dst);
        let rows = self.rows;
        let (head, tail) = self.data.split_at_mut(dst * rows);
        (&head[src * rows..(src + 1) * rows], &mut tail[..rows])
    }

    /// Copy of the column range `range`.
    pub fn columns(&self, range: Range<usize>) -> Matrix {
        assert!(range.end <= self.cols);
        Matrix {
            rows: self.rows,
            cols: range.len(),
            data: self.data[range.start * self.rows..range.end * self.rows].to_vec(),
        }
    }

    /// Copy of the selected columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// Copy of the selected rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)])
    }

    /// Copy of the row range `range` (all columns).
    pub fn row_block(&self, range: Range<usize>) -> Matrix {
        assert!(range.end <= self.rows);
        let mut data = Vec::with_capacity(range.len() * self.cols);
        for j in 0..self.cols {
            data.extend_from_slice(&self.col(j)[range.clone()]);
        }
        Matrix {
            rows: range.len(),
            cols: self.cols,
            data,
        }
    }

    /// Copy of the submatrix `rows × cols`.
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for j in cols.clone() {
            data.extend_from_slice(&self.col(j)[rows.clone()]);
        }
        Matrix {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    /// Overwrites the block starting at `(row, col)` with `src`.
    pub fn set_block(&mut self, row: usize, col: usize, src: &Matrix) {
        assert!(row + src.rows <= self.rows && col + src.cols <= self.cols);
        for j in 0..src.cols {
            let dst = &mut self.col_mut(col + j)[row..row + src.rows];
            dst.copy_from_slice(src.col(j));
        }
    }

    /// Appends the columns of `other` in place.
    pub fn append_columns(&mut self, other: &Matrix) -> Result<()> {
        if other.rows != self.rows {
            return dim_err(format!(
                "cannot append {} rows to a matrix with {} rows",
                other.rows, self.rows
            ));
        }
        self.data.extend_from_slice(&other.data);
        self.cols += other.cols;
        Ok(())
    }

    pub fn hstack(parts: &[&Matrix]) -> Result<Matrix> {
        let rows = parts.first().map_or(0, |m| m.rows);
        let mut out = Matrix::zeros(rows, 0);
        for p in parts {
            out.append_columns(p)?;
        }
        Ok(out)
    }

    pub fn vstack(parts: &[&Matrix]) -> Result<Matrix> {
        let cols = parts.first().map_or(0, |m| m.cols);
        if let Some(bad) = parts.iter().find(|m| m.cols != cols) {
            return dim_err(format!(
                "cannot stack a {}-column block onto {cols} columns",
                bad.cols
            ));
        }
        let rows = parts.iter().map(|m| m.rows).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut r = 0;
        for p in parts {
            out.set_block(r, 0, p);
            r += p.rows;
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn scaled(&self, alpha: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return dim_err(format!("{:?} += {:?}", self.shape(), other.shape()));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return dim_err(format!(
                "elementwise op on {:?} and {:?}",
                self.shape(),
                other.shape()
            ));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Returns a copy with `count` zero rows inserted before each listed
    /// old row position (`position == rows` appends). Positions must be
    /// non-decreasing.
    pub fn with_zero_rows(&self, insertions: &[(usize, usize)]) -> Matrix {
        let map = RowMap::new(self.rows, insertions);
        let mut out = Matrix::zeros(map.new_len, self.cols);
        for j in 0..self.cols {
            let src = self.col(j);
            let dst = out.col_mut(j);
            for (i, &ni) in map.old_to_new.iter().enumerate() {
                dst[ni] = src[i];
            }
        }
        out
    }
}

/// Old-to-new row index map produced by zero-row insertion.
#[derive(Debug, Clone)]
pub(crate) struct RowMap {
    pub(crate) new_len: usize,
    pub(crate) old_to_new: Vec<usize>,
}

impl RowMap {
    pub(crate) fn new(old_len: usize, insertions: &[(usize, usize)]) -> Self {
        let mut old_to_new = Vec::with_capacity(old_len);
        let mut shift = 0;
        let mut ins = insertions.iter().peekable();
        for i in 0..old_len {
            while let Some(&&(pos, count)) = ins.peek() {
                if pos > i {
                    break;
                }
                debug_assert!(pos == i, "insertions must be sorted");
                shift += count;
                ins.next();
            }
            old_to_new.push(i + shift);
        }
        let tail: usize = ins.map(|&(_, c)| c).sum();
        Self {
            new_len: old_len + shift + tail,
            old_to_new,
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(12) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(12) {
                write!(f, "{:>12.4e}", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Inner product with pairwise summation over blocks of 64 (deterministic, `O(ε log n)` error growth).
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n <= 64 {
        let mut acc = [0.0; 4];
        let mut chunks_a = a[..n].chunks_exact(4);
        let mut chunks_b = b[..n].chunks_exact(4);
        for (ca, cb) in (&mut chunks_a).zip(&mut chunks_b) {
            for l in 0..4 {
                acc[l] += ca[l] * cb[l];
            }
        }
        let tail: f64 = chunks_a
            .remainder()
            .iter()
            .zip(chunks_b.remainder())
            .map(|(x, y)| x * y)
            .sum();
        return (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail;
    }
    let half = (n / 2).next_multiple_of(4);
    dot(&a[..half], &b[..half]) + dot(&a[half..n], &b[half..n])
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `A·B`, or `Aᵀ·B` when `transpose_a` is set.
///
/// Summation order is fixed (ascending inner index), so results are
/// bit-reproducible.
pub fn matmul(a: &Matrix, b: &Matrix, transpose_a: bool) -> Result<Matrix> {
    if transpose_a {
        if a.rows != b.rows {
            return Err(PqrError::Dimension(format!(
                "Aᵀ·B with A {:?} and B {:?}",
                a.shape(),
                b.shape()
            )));
        }
        Ok(Matrix::from_fn(a.cols, b.cols, |i, j| dot(a.col(i), b.col(j))))
    } else {
        if a.cols != b.rows {
            return Err(PqrError::Dimension(format!(
                "A·B with A {:?} and B {:?}",
                a.shape(),
                b.shape()
            )));
        }
        let mut c = Matrix::zeros(a.rows, b.cols);
        for j in 0..b.cols {
            let cj = c.col_mut(j);
            for l in 0..a.cols {
                let blj = b[(l, j)];
                if blj != 0.0 {
                    axpy(blj, a.col(l), cj);
                }
            }
        }
        Ok(c)
    }
}

/// `C - A·B`, the update at the heart of every projection.
pub(crate) fn sub_matmul(c: &Matrix, a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!(a.cols, b.rows);
    debug_assert_eq!(c.shape(), (a.rows, b.cols));
    let mut out = c.clone();
    for j in 0..b.cols {
        let oj = out.col_mut(j);
        for l in 0..a.cols {
            let blj = b[(l, j)];
            if blj != 0.0 {
                axpy(-blj, a.col(l), oj);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_times_x_is_x() {
        let x = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let y = matmul(&Matrix::identity(3), &x, false).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn gram_of_column() {
        let a = Matrix::from_rows(&[&[1.0], &[2.0]]);
        let g = matmul(&a, &a, true).unwrap();
        assert_eq!(g, Matrix::from_rows(&[&[5.0]]));
    }

    #[test]
    fn nonconforming_product_is_rejected() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 2);
        assert!(matches!(
            matmul(&a, &b, false),
            Err(PqrError::Dimension(_))
        ));
    }

    #[test]
    fn col_major_length_checked() {
        assert!(Matrix::from_col_major(2, 2, vec![1.0; 3]).is_err());
        let m = Matrix::from_col_major(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m[(1, 0)], 2.0);
        assert_eq!(m[(0, 1)], 3.0);
    }

    #[test]
    fn zero_row_insertion() {
        let m = Matrix::from_rows(&[&[1.0], &[2.0], &[3.0]]);
        let out = m.with_zero_rows(&[(0, 1), (2, 2), (3, 1)]);
        let expect: Vec<f64> = vec![0.0, 1.0, 2.0, 0.0, 0.0, 3.0, 0.0];
        assert_eq!(out.as_slice(), &expect[..]);
    }

    #[test]
    fn stacking() {
        let a = Matrix::from_rows(&[&[1.0, 2.0]]);
        let b = Matrix::from_rows(&[&[3.0, 4.0]]);
        let v = Matrix::vstack(&[&a, &b]).unwrap();
        assert_eq!(v, Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]));
        let h = Matrix::hstack(&[&a, &b]).unwrap();
        assert_eq!(h, Matrix::from_rows(&[&[1.0, 2.0, 3.0, 4.0]]));
        assert!(Matrix::vstack(&[&a, &Matrix::zeros(1, 3)]).is_err());
    }
}
