//! Exact integer determinants behind the non-degeneracy of the symmetric
//! eigenfunction systems.
//!
//! `L_k` is the `k × k` tridiagonal matrix with 2 on the diagonal and 1 off
//! it; `det L_k = k + 1`. `A_n` is the `n × n` matrix whose row `k` carries
//! `2(−1)^k` in the first column, `+1` below the diagonal and `−1` above it,
//! with an extra `−1` in the bottom-right corner; `det A_n = (2n + 1)(−1)^n`.

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};

/// Square matrix of machine integers. Determinants are computed in
/// arbitrary precision, so no intermediate can overflow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be at least 1".into()));
        }
        Ok(Self { n, entries: vec![0; n * n] })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            m.set(i, i, 1);
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("rows must form a square matrix".into()));
        }
        let mut m = Self::zeros(n)?;
        m.entries = rows.concat();
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.entries[i * self.n + j] = v;
    }

    fn add(&mut self, i: usize, j: usize, v: i64) {
        self.entries[i * self.n + j] += v;
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.n).map(<[i64]>::to_vec).collect()
    }

    /// The matrix with row `row` and column `col` removed.
    pub fn minor(&self, row: usize, col: usize) -> Result<Self> {
        if self.n < 2 || row >= self.n || col >= self.n {
            return Err(Error::InvalidArgument(format!(
                "minor ({row}, {col}) of a {0}x{0} matrix",
                self.n
            )));
        }
        let mut out = Vec::with_capacity((self.n - 1) * (self.n - 1));
        for i in (0..self.n).filter(|&i| i != row) {
            for j in (0..self.n).filter(|&j| j != col) {
                out.push(self.get(i, j));
            }
        }
        Ok(Self { n: self.n - 1, entries: out })
    }
}

/// Tridiagonal matrix with 2 on the diagonal and 1 on both off-diagonals.
pub fn build_tridiag_l(size: usize) -> Result<IntMatrix> {
    let mut m = IntMatrix::zeros(size)?;
    for i in 0..size {
        m.set(i, i, 2);
        if i + 1 < size {
            m.set(i, i + 1, 1);
            m.set(i + 1, i, 1);
        }
    }
    Ok(m)
}

/// The matrix `A_n`, `n ≥ 2`. `A_2 = [[−2, −1], [3, −1]]`.
pub fn build_an(n: usize) -> Result<IntMatrix> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("A_n needs n >= 2, got {n}")));
    }
    let mut m = IntMatrix::zeros(n)?;
    for k in 1..=n {
        let r = k - 1;
        m.add(r, 0, if k % 2 == 0 { 2 } else { -2 });
        if k >= 2 {
            m.add(r, k - 2, 1);
        }
        if k < n {
            m.add(r, k, -1);
        }
    }
    m.add(n - 1, n - 1, -1);
    Ok(m)
}

/// The cofactor block `T_n` in the last-row expansion of `A_{n+1}`: delete
/// the last row and the first column. Lower triangular with `−1` on the
/// diagonal.
pub fn build_tn(n: usize) -> Result<IntMatrix> {
    let a = build_an(n + 1)?;
    a.minor(n, 0)
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn exact_det(m: &IntMatrix) -> BigInt {
    let n = m.dim();
    let mut a: Vec<Vec<BigInt>> =
        (0..n).map(|i| (0..n).map(|j| BigInt::from(m.get(i, j))).collect()).collect();
    let zero = BigInt::from(0);
    let mut sign = 1i32;
    let mut prev = BigInt::from(1);
    for k in 0..n.saturating_sub(1) {
        if a[k][k] == zero {
            match (k + 1..n).find(|&i| a[i][k] != zero) {
                Some(p) => {
                    a.swap(k, p);
                    sign = -sign;
                }
                None => return zero,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// One row of a determinant table.
#[derive(Debug, Clone, Serialize)]
pub struct DetRow {
    pub index: usize,
    pub det: String,
    pub expected: String,
    pub ok: bool,
}

fn row(index: usize, det: BigInt, expected: BigInt) -> DetRow {
    DetRow { index, ok: det == expected, det: det.to_string(), expected: expected.to_string() }
}

/// `det A_n` against `(2n + 1)(−1)^n` for `n = 2..=max_n`.
pub fn an_table(max_n: usize) -> Result<Vec<DetRow>> {
    (2..=max_n)
        .map(|n| {
            let sign: i64 = if n % 2 == 0 { 1 } else { -1 };
            Ok(row(n, exact_det(&build_an(n)?), BigInt::from(sign * (2 * n as i64 + 1))))
        })
        .collect()
}

/// `det L_{j−1}` against `j` for `j = 2..=max_j`.
pub fn tridiag_table(max_j: usize) -> Result<Vec<DetRow>> {
    (2..=max_j)
        .map(|j| Ok(row(j, exact_det(&build_tridiag_l(j - 1)?), BigInt::from(j as i64))))
        .collect()
}

/// `det A_{n+1}` against `−det A_n − 2 det T_n` for `n = 2..max_n`.
pub fn recurrence_table(max_n: usize) -> Result<Vec<DetRow>> {
    (2..max_n)
        .map(|n| {
            let lhs = exact_det(&build_an(n + 1)?);
            let rhs = -exact_det(&build_an(n)?) - 2 * exact_det(&build_tn(n)?);
            Ok(row(n, lhs, rhs))
        })
        .collect()
}
