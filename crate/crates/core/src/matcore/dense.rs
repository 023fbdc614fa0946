use std::ops::{Deref, DerefMut, Index, IndexMut};

use super::LinalgError;

/// Row-major dense matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Owned dense vector. Dereferences to `[f64]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for DenseVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl FromIterator<f64> for DenseVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl Deref for DenseVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DenseVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows. An empty slice gives a 0x0 matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch { expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Places `v` on the diagonal of a square matrix.
    pub fn from_diagonal(v: &[f64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in v.iter().enumerate() {
            m.data[i * n + i] = x;
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_row_major(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn column(&self, j: usize) -> DenseVector {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for (i, &x) in v.iter().enumerate() {
            self.data[i * self.cols + j] = x;
        }
    }

    pub fn diagonal(&self) -> DenseVector {
        (0..self.rows.min(self.cols)).map(|i| self.data[i * self.cols + i]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<(), LinalgError> {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        if row.len() != self.cols {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, found: row.len() });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Removes row `i`, shifting later rows up.
    pub fn remove_row(&mut self, i: usize) {
        let c = self.cols;
        self.data.drain(i * c..(i + 1) * c);
        self.rows -= 1;
    }

    /// Copies the rows in `range`.
    pub fn row_block(&self, start: usize, end: usize) -> DenseMatrix {
        DenseMatrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Copies the given columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, idx.len(), |i, j| self.data[i * self.cols + idx[j]])
    }

    /// Copies the leading `rows x cols` block.
    pub fn top_left(&self, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |i, j| self.data[i * self.cols + j])
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), orow);
                }
            }
        }
        Ok(out)
    }

    /// `self^T * other` without forming the transpose.
    pub fn tr_matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.rows, found: other.rows });
        }
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let brow = other.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, brow, &mut out.data[i * other.cols..(i + 1) * other.cols]);
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<DenseVector, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, found: v.len() });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// Writes `self * v` into `out` without allocating. Panics on size mismatch.
    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(self.cols, v.len());
        assert_eq!(self.rows, out.len());
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), v);
        }
    }

    /// `self^T * v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Result<DenseVector, LinalgError> {
        if self.rows != v.len() {
            return Err(LinalgError::DimensionMismatch { expected: self.rows, found: v.len() });
        }
        let mut out = DenseVector::zeros(self.cols);
        for (i, &x) in v.iter().enumerate() {
            if x != 0.0 {
                axpy(x, self.row(i), &mut out);
            }
        }
        Ok(out)
    }

    /// `A^T A`.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for k in 0..self.rows {
            let r = self.row(k);
            for i in 0..n {
                let a = r[i];
                if a != 0.0 {
                    let grow = &mut g.data[i * n..i * n + n];
                    for j in i..n {
                        grow[j] += a * r[j];
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    /// Replaces the matrix with `(A + A^T) / 2`. Panics if not square.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: f64, other: &DenseMatrix) -> Result<(), LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        axpy(s, &other.data, &mut self.data);
        Ok(())
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    /// `self += coeff * u v^T`.
    pub fn rank1_update(&mut self, coeff: f64, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.rows);
        assert_eq!(v.len(), self.cols);
        let c = self.cols;
        for (i, &ui) in u.iter().enumerate() {
            let f = coeff * ui;
            if f != 0.0 {
                axpy(f, v, &mut self.data[i * c..(i + 1) * c]);
            }
        }
    }

    /// `self += coeff * v v^T` on a symmetric matrix. Each entry is updated as
    /// `coeff * (v_i * v_j)`, so an exactly symmetric input stays exactly symmetric.
    pub fn sym_rank1_update(&mut self, coeff: f64, v: &[f64]) {
        let n = self.rows;
        assert_eq!(n, self.cols);
        assert_eq!(v.len(), n);
        for i in 0..n {
            let vi = v[i];
            let row = &mut self.data[i * n..(i + 1) * n];
            for (h, &vj) in row.iter_mut().zip(v) {
                *h += coeff * (vi * vj);
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators let the loop vectorize
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> DenseVector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> DenseVector {
    a.iter().map(|x| x * s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn matmul_small() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        assert_eq!(a.matmul(&b).unwrap(), m(&[&[19.0, 22.0], &[43.0, 50.0]]));
        assert_eq!(a.tr_matmul(&b).unwrap(), a.transpose().matmul(&b).unwrap());
    }

    #[test]
    fn gram_matches_transpose_product() {
        let a = m(&[&[1.0, 2.0, 0.5], &[3.0, -1.0, 2.0], &[0.0, 4.0, 1.0], &[2.0, 2.0, 2.0]]);
        let g = a.gram();
        let want = a.transpose().matmul(&a).unwrap();
        assert!(g.sub(&want).unwrap().max_abs() < 1e-12);
        assert_eq!(g.asymmetry(), 0.0);
    }

    #[test]
    fn sym_rank1_keeps_exact_symmetry() {
        let mut h = m(&[&[2.0, 0.3, 0.1], &[0.3, 1.5, -0.2], &[0.1, -0.2, 1.1]]);
        for k in 0..50 {
            let v = [0.1 * k as f64, (k as f64).sin(), 1.0 / (1.0 + k as f64)];
            h.sym_rank1_update(-0.01, &v);
        }
        assert_eq!(h.asymmetry(), 0.0);
    }

    #[test]
    fn dims_are_checked() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(a.matvec(&[1.0, 2.0]).is_err());
        assert!(a.matmul(&DenseMatrix::zeros(2, 2)).is_err());
        assert!(DenseMatrix::from_row_major(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn remove_and_push_rows() {
        let mut a = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        a.remove_row(1);
        assert_eq!(a, m(&[&[1.0, 2.0], &[5.0, 6.0]]));
        a.push_row(&[7.0, 8.0]).unwrap();
        assert_eq!(a.rows(), 3);
        assert!(a.push_row(&[1.0]).is_err());
    }

    #[test]
    fn dot_handles_tails() {
        let a: Vec<f64> = (0..7).map(f64::from).collect();
        assert_eq!(dot(&a, &a), 91.0);
    }
}
