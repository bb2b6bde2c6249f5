//! Small dense linear algebra: a row-major matrix and Householder least squares.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use libm::{fabs, sqrt};

use crate::{Error, Result};

/// Columns whose norm after orthogonalization drops below this fraction of
/// their original norm are treated as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
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

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(alloc::format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            data: data.to_vec(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension("ragged rows".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a matrix from columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::Dimension("columns of unequal length".into()));
            }
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(alloc::format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows,
                self.cols,
                other.rows,
                other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(
                "vector length does not match columns".into(),
            ));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    /// Replaces the matrix with `(A + A') / 2`.
    pub fn symmetrize(&mut self) {
        debug_assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(fabs(*v)))
    }

    /// `B * M * B'` for square `B` and `M`.
    pub fn sandwich(bread: &Matrix, meat: &Matrix) -> Result<Matrix> {
        let mut v = bread.mul(meat)?.mul(&bread.transpose())?;
        v.symmetrize();
        Ok(v)
    }

    /// Inverse of a symmetric positive (semi)definite matrix via Gauss-Jordan
    /// elimination with partial pivoting; fails when a pivot vanishes
    /// relative to the matrix scale.
    pub fn inverse(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::Dimension("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let scale = self.max_abs();
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::SingularCovariance);
        }
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| fabs(a[(i, col)]).total_cmp(&fabs(a[(j, col)])))
                .unwrap_or(col);
            if fabs(a[(pivot, col)]) <= 1e-13 * scale {
                return Err(Error::SingularCovariance);
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[(i, j)] -= f * a[(col, j)];
                    inv[(i, j)] -= f * inv[(col, j)];
                }
            }
        }
        Ok(inv)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Least-squares solution from a Householder QR decomposition.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// `(X'X)^{-1}`, assembled as `R^{-1} R^{-T}`.
    pub xtx_inverse: Matrix,
}

/// Solves `min ||y - X b||` by Householder QR without forming `X'X`.
///
/// Columns are processed left to right; the first column that is (numerically)
/// a linear combination of the earlier ones is reported by index.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Result<LeastSquares> {
    let (m, n) = (x.rows(), x.cols());
    if y.len() != m {
        return Err(Error::Dimension(alloc::format!(
            "response has {} rows, design has {m}",
            y.len()
        )));
    }
    if m <= n {
        return Err(Error::InsufficientObservations {
            required: n + 1,
            available: m,
        });
    }
    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| x.column(j)).collect();
    let mut qty = y.to_vec();
    let original_norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();

    for j in 0..n {
        let (head, tail) = a.split_at_mut(j + 1);
        let col = &mut head[j];
        let sub_norm = norm(&col[j..]);
        if original_norms[j] == 0.0 || sub_norm <= RANK_TOLERANCE * original_norms[j] {
            return Err(Error::RankDeficient { column: j });
        }
        let alpha = if col[j] > 0.0 { -sub_norm } else { sub_norm };
        // v = x - alpha e1, stored in place of the column below the diagonal
        col[j] -= alpha;
        let v_norm_sq: f64 = col[j..].iter().map(|v| v * v).sum();
        let reflect = |target: &mut [f64]| {
            let dot: f64 = col[j..].iter().zip(&target[j..]).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / v_norm_sq;
            for (t, v) in target[j..].iter_mut().zip(&col[j..]) {
                *t -= f * v;
            }
        };
        for other in tail.iter_mut() {
            reflect(other);
        }
        reflect(&mut qty);
        // after reflection the column is alpha e1
        col[j] = alpha;
        for v in col[(j + 1)..].iter_mut() {
            *v = 0.0;
        }
    }

    // back substitution R b = Q'y
    let mut coefficients = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = qty[i];
        for k in (i + 1)..n {
            s -= a[k][i] * coefficients[k];
        }
        coefficients[i] = s / a[i][i];
    }

    // R^{-1}, upper triangular
    let mut r_inv = Matrix::zeros(n, n);
    for j in 0..n {
        r_inv[(j, j)] = 1.0 / a[j][j];
        for i in (0..j).rev() {
            let mut s = 0.0;
            for k in (i + 1)..=j {
                s += a[k][i] * r_inv[(k, j)];
            }
            r_inv[(i, j)] = -s / a[i][i];
        }
    }
    let mut xtx_inverse = r_inv.mul(&r_inv.transpose())?;
    xtx_inverse.symmetrize();
    Ok(LeastSquares {
        coefficients,
        xtx_inverse,
    })
}

fn norm(v: &[f64]) -> f64 {
    // scaled to avoid overflow on large columns
    let scale = v.iter().fold(0.0f64, |m, x| m.max(fabs(*x)));
    if scale == 0.0 {
        return 0.0;
    }
    scale * sqrt(v.iter().map(|x| (x / scale) * (x / scale)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let x = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]]).unwrap();
        let ls = least_squares(&x, &[1.0, 2.0, 4.0]).unwrap();
        assert!((ls.coefficients[0] + 2.0 / 3.0).abs() < 1e-14);
        assert!((ls.coefficients[1] - 1.5).abs() < 1e-14);
        // (X'X)^{-1} for this design: X'X = [[3,6],[6,14]], det 6
        let inv = &ls.xtx_inverse;
        assert!((inv[(0, 0)] - 14.0 / 6.0).abs() < 1e-13);
        assert!((inv[(0, 1)] + 1.0).abs() < 1e-13);
        assert!((inv[(1, 1)] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn reports_dependent_column() {
        let x = Matrix::from_rows(&[
            vec![1.0, 2.0, 4.0],
            vec![1.0, 3.0, 6.0],
            vec![1.0, 5.0, 10.0],
            vec![1.0, 7.0, 14.0],
        ])
        .unwrap();
        assert_eq!(
            least_squares(&x, &[1.0, 2.0, 3.0, 4.0]).unwrap_err(),
            Error::RankDeficient { column: 2 }
        );
    }

    #[test]
    fn inverse_round_trip() {
        let a = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let prod = a.mul(&a.inverse().unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - e).abs() < 1e-14);
            }
        }
        assert_eq!(
            Matrix::zeros(2, 2).inverse().unwrap_err(),
            Error::SingularCovariance
        );
    }
}
