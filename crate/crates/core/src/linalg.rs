//! Dense Gauss-Jordan elimination: numerical rank, reduced row-echelon form,
//! null-space bases and a small least-squares solver.
//!
//! The floating routines accept a pivot only when its magnitude exceeds
//! `eps * max|a_ij|` of the matrix as it was handed in. [`exact`] repeats the
//! elimination over arbitrary-precision rationals.

use serde::Serialize;

/// Default relative pivot tolerance.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged row {i}");
            m.row_mut(i).copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// Copy of the submatrix picked by `rows` x `cols` (in the given order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            let src = self.row(r);
            let dst = m.row_mut(i);
            for (j, &c) in cols.iter().enumerate() {
                dst[j] = src[c];
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
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

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (head, tail) = self.data.split_at_mut(hi * self.cols);
        head[lo * self.cols..(lo + 1) * self.cols].swap_with_slice(&mut tail[..self.cols]);
    }
}

/// Result of reducing a matrix to reduced row-echelon form.
#[derive(Clone, Debug)]
pub struct Rref {
    pub matrix: Matrix,
    /// Pivot column of each of the first `rank` rows.
    pub pivots: Vec<usize>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Columns without a pivot; each spans one null-space direction.
    pub fn free_columns(&self) -> Vec<usize> {
        let mut is_pivot = vec![false; self.matrix.cols()];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        (0..self.matrix.cols()).filter(|&c| !is_pivot[c]).collect()
    }

    /// Null-space vector for free column `free`, with a 1 in that coordinate.
    pub fn null_vector(&self, free: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.matrix.cols()];
        v[free] = 1.0;
        for (r, &p) in self.pivots.iter().enumerate() {
            v[p] = -self.matrix.get(r, free);
        }
        v
    }
}

/// Gauss-Jordan elimination with partial pivoting, producing the RREF.
pub fn rref(m: &Matrix, eps: f64) -> Rref {
    let mut a = m.clone();
    let threshold = eps * m.max_abs();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..a.cols() {
        if row == a.rows() {
            break;
        }
        let (best, best_abs) = (row..a.rows())
            .map(|r| (r, a.get(r, col).abs()))
            .fold((row, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best_abs <= threshold || best_abs == 0.0 {
            // below tolerance: treat the column as dependent
            for r in row..a.rows() {
                a.set(r, col, 0.0);
            }
            continue;
        }
        a.swap_rows(row, best);
        let p = a.get(row, col);
        for v in a.row_mut(row) {
            *v /= p;
        }
        a.set(row, col, 1.0);
        let pivot_row = a.row(row).to_vec();
        for r in 0..a.rows() {
            if r == row {
                continue;
            }
            let f = a.get(r, col);
            if f == 0.0 {
                continue;
            }
            for (v, pv) in a.row_mut(r).iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            a.set(r, col, 0.0);
        }
        pivots.push(col);
        row += 1;
    }
    Rref { matrix: a, pivots }
}

pub fn rank(m: &Matrix, eps: f64) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    rref(m, eps).rank()
}

/// Incrementally grown set of linearly independent rows (kept reduced), used to
/// pick basic measurement sets one candidate row at a time.
#[derive(Clone, Debug)]
pub struct RowBasis {
    threshold: f64,
    rows: Vec<Vec<f64>>,
    pivots: Vec<usize>,
}

impl RowBasis {
    /// `scale` is the largest absolute entry among all candidate rows.
    pub fn new(scale: f64, eps: f64) -> Self {
        RowBasis {
            threshold: eps * scale,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reduces `row` against the basis; keeps it and returns true when a pivot
    /// above tolerance remains.
    pub fn insert(&mut self, row: &[f64]) -> bool {
        let mut v = row.to_vec();
        for (b, &p) in self.rows.iter().zip(&self.pivots) {
            let f = v[p];
            if f != 0.0 {
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= f * y;
                }
                v[p] = 0.0;
            }
        }
        let (col, mag) = v
            .iter()
            .enumerate()
            .map(|(i, x)| (i, x.abs()))
            .fold((0, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if mag <= self.threshold || mag == 0.0 {
            return false;
        }
        let p = v[col];
        for x in v.iter_mut() {
            *x /= p;
        }
        v[col] = 1.0;
        for b in self.rows.iter_mut() {
            let f = b[col];
            if f != 0.0 {
                for (x, y) in b.iter_mut().zip(&v) {
                    *x -= f * y;
                }
                b[col] = 0.0;
            }
        }
        self.rows.push(v);
        self.pivots.push(col);
        true
    }
}

/// Solves the symmetric positive-definite system `a x = b` by Cholesky.
/// Returns `None` when `a` is not numerically positive definite.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    let mut l = Matrix::zeros(n, n);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if s <= 1e-12 * scale {
                    return None;
                }
                l.set(i, i, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    Some(x)
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Exact elimination over rationals. Every finite `f64` is a dyadic rational,
/// so converting the entries loses nothing.
pub mod exact {
    use super::Matrix;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Signed, Zero};

    pub fn to_rational(v: f64) -> BigRational {
        BigRational::from_float(v).expect("finite matrix entry")
    }

    pub fn rank(m: &Matrix) -> usize {
        let mut a: Vec<Vec<BigRational>> = (0..m.rows())
            .map(|r| m.row(r).iter().map(|&v| to_rational(v)).collect())
            .collect();
        rank_rational(&mut a, m.cols())
    }

    pub fn rank_rational(a: &mut [Vec<BigRational>], cols: usize) -> usize {
        let mut row = 0;
        for col in 0..cols {
            let Some(p) = (row..a.len()).find(|&r| !a[r][col].is_zero()) else {
                continue;
            };
            a.swap(row, p);
            let pivot = a[row][col].clone();
            let pivot_row: Vec<BigRational> = a[row].iter().map(|v| v / &pivot).collect();
            for r in row + 1..a.len() {
                if a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].clone();
                for (v, pv) in a[r].iter_mut().zip(&pivot_row) {
                    *v -= &f * pv;
                }
            }
            a[row] = pivot_row;
            row += 1;
            if row == a.len() {
                break;
            }
        }
        row
    }

    /// Exact rank of an integer matrix.
    pub fn rank_integer(rows: &[Vec<i64>]) -> usize {
        let cols = rows.first().map_or(0, Vec::len);
        let mut a: Vec<Vec<BigRational>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&v| BigRational::new(BigInt::from(v), BigInt::one()))
                    .collect()
            })
            .collect();
        rank_rational(&mut a, cols)
    }

    /// True when every entry of `v` is zero.
    pub fn is_zero_vector(v: &[BigRational]) -> bool {
        v.iter().all(|x| x.abs().is_zero())
    }
}
