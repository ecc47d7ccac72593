use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{dim_mismatch, Error, Result};

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Dense real vector.
#[derive(Clone, PartialEq, Default)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        check_finite(&data)?;
        Ok(Self { data })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![0.0; len],
        }
    }

    pub(crate) fn from_vec_unchecked(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        assert_eq!(self.len(), other.len(), "dot: length mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> DenseVector {
        Self::from_vec_unchecked(self.data.iter().map(|v| v * s).collect())
    }

    /// Concatenates `self` and `other`.
    pub fn concat(&self, other: &DenseVector) -> DenseVector {
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::from_vec_unchecked(data)
    }

    /// The vector as an n×1 matrix.
    pub fn to_column(&self) -> DenseMatrix {
        DenseMatrix::from_parts_unchecked(self.len(), 1, self.data.clone())
    }
}

impl fmt::Debug for DenseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.data).finish()
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl<'a> Add<&'a DenseVector> for &'a DenseVector {
    type Output = DenseVector;
    fn add(self, rhs: &DenseVector) -> DenseVector {
        assert_eq!(self.len(), rhs.len(), "add: length mismatch");
        DenseVector::from_vec_unchecked(self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect())
    }
}

impl<'a> Sub<&'a DenseVector> for &'a DenseVector {
    type Output = DenseVector;
    fn sub(self, rhs: &DenseVector) -> DenseVector {
        assert_eq!(self.len(), rhs.len(), "sub: length mismatch");
        DenseVector::from_vec_unchecked(self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &DenseVector {
    type Output = DenseVector;
    fn neg(self) -> DenseVector {
        self.scale(-1.0)
    }
}

/// Dense real matrix in row-major storage: entry (i, j) lives at `data[i * cols + j]`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting wrong lengths and non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim_mismatch("from_row_major", rows * cols, data.len()));
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(dim_mismatch("from_rows", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub(crate) fn from_parts_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
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

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 })
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> DenseVector {
        DenseVector::from_vec_unchecked((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        Self::from_parts_unchecked(self.rows, self.cols, self.data.iter().map(|v| v * s).collect())
    }

    pub fn matvec(&self, v: &DenseVector) -> DenseVector {
        assert_eq!(self.cols, v.len(), "matvec: dimension mismatch");
        DenseVector::from_vec_unchecked(
            (0..self.rows)
                .map(|i| self.row(i).iter().zip(v.iter()).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    /// Checked product, for use at public API boundaries.
    pub fn try_mul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(dim_mismatch(
                "matmul",
                format!("{} inner rows", self.cols),
                rhs.rows,
            ));
        }
        Ok(self * rhs)
    }

    /// Copy of the `nr`×`nc` block whose top-left corner is (r0, c0).
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> DenseMatrix {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "block out of range");
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &DenseMatrix) {
        assert!(
            r0 + block.rows <= self.rows && c0 + block.cols <= self.cols,
            "set_block out of range"
        );
        for i in 0..block.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + block.cols].copy_from_slice(block.row(i));
        }
    }

    /// Stacks `top` over `bottom`. Either may have zero rows.
    pub fn vstack(top: &DenseMatrix, bottom: &DenseMatrix) -> Result<DenseMatrix> {
        if top.rows > 0 && bottom.rows > 0 && top.cols != bottom.cols {
            return Err(dim_mismatch("vstack", top.cols, bottom.cols));
        }
        let cols = if top.rows > 0 { top.cols } else { bottom.cols };
        let mut data = top.data.clone();
        data.extend_from_slice(&bottom.data);
        Ok(Self::from_parts_unchecked(top.rows + bottom.rows, cols, data))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |M_ij − M_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    /// (M + Mᵀ) / 2.
    pub fn symmetrized(&self) -> DenseMatrix {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// `self · other · selfᵀ`.
    pub fn sandwich(&self, other: &DenseMatrix) -> DenseMatrix {
        (&(self * other) * &self.transpose()).symmetrized()
    }

    /// ‖self − other‖_F / max(‖other‖_F, tiny).
    pub fn relative_error(&self, reference: &DenseMatrix) -> f64 {
        let diff = (self - reference).frobenius_norm();
        diff / reference.frobenius_norm().max(f64::MIN_POSITIVE)
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a DenseMatrix> for &'a DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul: dimension mismatch");
        let mut out = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        DenseMatrix::from_parts_unchecked(self.rows, rhs.cols, out)
    }
}

impl<'a> Add<&'a DenseMatrix> for &'a DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add: shape mismatch");
        DenseMatrix::from_parts_unchecked(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        )
    }
}

impl<'a> Sub<&'a DenseMatrix> for &'a DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub: shape mismatch");
        DenseMatrix::from_parts_unchecked(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        )
    }
}

impl From<nalgebra::Matrix6<f64>> for DenseMatrix {
    fn from(m: nalgebra::Matrix6<f64>) -> Self {
        DenseMatrix::from_fn(6, 6, |i, j| m[(i, j)])
    }
}

impl From<nalgebra::Vector6<f64>> for DenseVector {
    fn from(v: nalgebra::Vector6<f64>) -> Self {
        DenseVector::from_vec_unchecked(v.iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_reject_bad_input() {
        assert!(matches!(
            DenseMatrix::from_row_major(2, 2, vec![1.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            DenseMatrix::from_row_major(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        );
        assert_eq!(
            DenseVector::new(vec![f64::INFINITY]),
            Err(Error::NonFinite { index: 0 })
        );
        assert!(DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0]]).is_err());
    }

    #[test]
    fn product_and_transpose() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        let ata = &a.transpose() * &a;
        assert_eq!(ata.shape(), (3, 3));
        assert_eq!(ata[(0, 0)], 17.0);
        assert_eq!(ata[(1, 2)], 2.0 * 3.0 + 5.0 * 6.0);
        assert!(a.try_mul(&a).is_err());
        let v = DenseVector::new(vec![1.0, 0.0, -1.0]).unwrap();
        assert_eq!(a.matvec(&v).as_slice(), &[-2.0, -2.0]);
    }

    #[test]
    fn blocks_and_stacking() {
        let mut m = DenseMatrix::zeros(3, 3);
        m.set_block(1, 1, &DenseMatrix::identity(2));
        assert_eq!(m.block(1, 1, 2, 2), DenseMatrix::identity(2));
        assert_eq!(m[(0, 0)], 0.0);
        let empty = DenseMatrix::zeros(0, 3);
        assert_eq!(DenseMatrix::vstack(&m, &empty).unwrap(), m);
        assert_eq!(DenseMatrix::vstack(&m, &m).unwrap().rows(), 6);
        assert!(DenseMatrix::vstack(&m, &DenseMatrix::zeros(1, 2)).is_err());
    }
}
