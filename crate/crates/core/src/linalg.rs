//! Small dense linear algebra: column-major matrices, Householder QR with a
//! collinearity check, and Cholesky solves for Gram systems.

use crate::error::{Error, Result};

/// Column-major dense matrix.
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
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from columns of equal length. An empty slice gives a `0 x 0` matrix.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::invalid("columns have different lengths"));
        }
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            data.extend_from_slice(c);
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data,
        })
    }

    /// Build from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::invalid("row-major data has the wrong length"));
        }
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = values[i * cols + j];
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

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.cols).map(move |j| self.column(j))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    /// `X'X`
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in i..self.cols {
                let v = dot(self.column(i), self.column(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// `X'v`
    pub fn t_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        self.columns().map(|c| dot(c, v)).collect()
    }

    /// `Xb`
    pub fn mul_vec(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (c, &bj) in self.columns().zip(b) {
            if bj != 0.0 {
                axpy(bj, c, &mut out);
            }
        }
        out
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.rows, idx.len());
        for (k, &j) in idx.iter().enumerate() {
            m.column_mut(k).copy_from_slice(self.column(j));
        }
        m
    }

    /// Horizontal concatenation.
    pub fn hcat(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols > 0 && other.cols > 0 && self.rows != other.rows {
            return Err(Error::invalid("hcat: row counts differ"));
        }
        let rows = if self.cols > 0 { self.rows } else { other.rows };
        let mut data = Vec::with_capacity(rows * (self.cols + other.cols));
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows,
            cols: self.cols + other.cols,
            data,
        })
    }

    pub fn scale_columns(&mut self, factors: &[f64]) {
        for (j, &f) in factors.iter().enumerate() {
            self.column_mut(j).iter_mut().for_each(|x| *x *= f);
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.rows + i]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Columns whose squared residual norm on the preceding columns falls below
/// this fraction of their own squared norm are treated as collinear, i.e. an
/// (uncentred) R² above `1 - 1e-10`.
pub const COLLINEARITY_TOL: f64 = 1e-10;

/// Householder QR of a tall matrix, no pivoting.
#[derive(Clone, Debug)]
pub struct Qr {
    /// R on and above the diagonal, Householder vectors below.
    packed: Matrix,
    /// Leading entries of the Householder vectors.
    v0: Vec<f64>,
    betas: Vec<f64>,
    rdiag: Vec<f64>,
}

impl Qr {
    /// Factorise `x`. Fails with [`Error::RankDeficient`] naming the first column
    /// that is collinear with its predecessors.
    pub fn new(x: &Matrix) -> Result<Self> {
        let (n, k) = (x.rows(), x.cols());
        if n < k {
            return Err(Error::InsufficientData {
                what: "least squares",
                needed: k,
                got: n,
            });
        }
        let mut a = x.clone();
        let mut v0 = vec![0.0; k];
        let mut betas = vec![0.0; k];
        let mut rdiag = vec![0.0; k];
        for j in 0..k {
            let col_norm2 = dot(x.column(j), x.column(j));
            let (head, tail) = a.data.split_at_mut((j + 1) * n);
            let cj = &mut head[j * n..];
            let norm = cj[j..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if col_norm2 == 0.0 || norm * norm <= COLLINEARITY_TOL * col_norm2 {
                return Err(Error::RankDeficient { column: j });
            }
            let alpha = if cj[j] > 0.0 { -norm } else { norm };
            let lead = cj[j] - alpha;
            // v = (lead, cj[j+1..]); beta = 2 / v'v
            let vtv = lead * lead + cj[j + 1..].iter().map(|v| v * v).sum::<f64>();
            let beta = if vtv > 0.0 { 2.0 / vtv } else { 0.0 };
            for c in 0..(k - j - 1) {
                let col = &mut tail[c * n..(c + 1) * n];
                let s = lead * col[j] + dot(&cj[j + 1..], &col[j + 1..]);
                let f = beta * s;
                col[j] -= f * lead;
                for (ci, vi) in col[j + 1..].iter_mut().zip(&cj[j + 1..]) {
                    *ci -= f * vi;
                }
            }
            cj[j] = alpha;
            v0[j] = lead;
            betas[j] = beta;
            rdiag[j] = alpha;
        }
        Ok(Self {
            packed: a,
            v0,
            betas,
            rdiag,
        })
    }

    pub fn ncols(&self) -> usize {
        self.packed.cols()
    }

    pub fn nrows(&self) -> usize {
        self.packed.rows()
    }

    /// `Q'y`
    pub fn qt_mul(&self, y: &[f64]) -> Vec<f64> {
        let n = self.nrows();
        debug_assert_eq!(y.len(), n);
        let mut out = y.to_vec();
        for j in 0..self.ncols() {
            let v = &self.packed.column(j)[j + 1..];
            let s = self.v0[j] * out[j] + dot(v, &out[j + 1..]);
            let f = self.betas[j] * s;
            out[j] -= f * self.v0[j];
            for (oi, vi) in out[j + 1..].iter_mut().zip(v) {
                *oi -= f * vi;
            }
        }
        out
    }

    #[inline]
    pub fn r(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.rdiag[i]
        } else if i < j {
            self.packed[(i, j)]
        } else {
            0.0
        }
    }

    /// Solve `R[..m, ..m] b = qty[..m]` (coefficients of the regression on the
    /// first `m` columns).
    pub fn solve_prefix(&self, qty: &[f64], m: usize) -> Vec<f64> {
        let mut b = qty[..m].to_vec();
        for i in (0..m).rev() {
            let mut s = b[i];
            for j in i + 1..m {
                s -= self.r(i, j) * b[j];
            }
            b[i] = s / self.rdiag[i];
        }
        b
    }

    /// Diagonal of `(R'R)^{-1}` restricted to the first `m` columns.
    pub fn inv_gram_diag(&self, m: usize) -> Vec<f64> {
        // rows of R^{-1}
        let mut rinv = Matrix::zeros(m, m);
        for j in 0..m {
            rinv[(j, j)] = 1.0 / self.rdiag[j];
            for i in (0..j).rev() {
                let mut s = 0.0;
                for l in i + 1..=j {
                    s += self.r(i, l) * rinv[(l, j)];
                }
                rinv[(i, j)] = -s / self.rdiag[i];
            }
        }
        (0..m)
            .map(|i| (i..m).map(|j| rinv[(i, j)].powi(2)).sum())
            .collect()
    }
}

/// Cholesky factor (lower triangular) of a symmetric positive definite matrix.
/// Returns `None` when a pivot is not positive.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Solve `L L' x = b` given the Cholesky factor `l`.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[(k, i)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// Sub-matrix `a[idx, idx]` of a square matrix.
pub fn principal_submatrix(a: &Matrix, idx: &[usize]) -> Matrix {
    let mut m = Matrix::zeros(idx.len(), idx.len());
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            m[(r, c)] = a[(i, j)];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn qr_solves_small_system() {
        // y = 1 + 2x exactly
        let x = Matrix::from_columns(&[vec![1.0; 4], vec![0.0, 1.0, 2.0, 3.0]]).unwrap();
        let y = [1.0, 3.0, 5.0, 7.0];
        let qr = Qr::new(&x).unwrap();
        let b = qr.solve_prefix(&qr.qt_mul(&y), 2);
        assert!(approx(b[0], 1.0, 1e-12) && approx(b[1], 2.0, 1e-12));
    }

    #[test]
    fn qr_flags_collinear_column() {
        let x = Matrix::from_columns(&[
            vec![1.0, 2.0, 3.0, 4.0],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![2.0, 4.0, 6.0, 8.0],
        ])
        .unwrap();
        match Qr::new(&x) {
            Err(Error::RankDeficient { column }) => assert_eq!(column, 2),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn inv_gram_diag_matches_explicit_inverse() {
        let x = Matrix::from_columns(&[vec![1.0, 1.0, 1.0], vec![0.0, 1.0, 3.0]]).unwrap();
        // X'X = [[3, 4], [4, 10]], det = 14
        let d = Qr::new(&x).unwrap().inv_gram_diag(2);
        assert!(approx(d[0], 10.0 / 14.0, 1e-12));
        assert!(approx(d[1], 3.0 / 14.0, 1e-12));
    }

    #[test]
    fn cholesky_roundtrip() {
        let a = Matrix::from_row_major(2, 2, &[4.0, 2.0, 2.0, 3.0]).unwrap();
        let l = cholesky(&a).unwrap();
        let x = cholesky_solve(&l, &[2.0, 1.0]);
        // 4x + 2y = 2, 2x + 3y = 1 -> x = .5, y = 0
        assert!(approx(x[0], 0.5, 1e-12) && x[1].abs() < 1e-12);
        assert!(cholesky(&Matrix::from_row_major(1, 1, &[-1.0]).unwrap()).is_none());
    }
}
