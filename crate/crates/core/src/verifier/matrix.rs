//! Small dense interval matrices.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::interval::{add_up, Interval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Interval>,
}

impl IntervalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Interval::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Interval::ONE;
        }
        m
    }

    /// Degenerate intervals around the given floats (rows of equal length).
    pub fn from_points(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged matrix");
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = Interval::point(x);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entrywise upper endpoints.
    pub fn upper(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].hi()).collect())
            .collect()
    }

    pub fn checked_mul(&self, rhs: &IntervalMatrix) -> Result<IntervalMatrix, VerifyError> {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = Interval::ZERO;
                for k in 0..self.cols {
                    acc = acc.checked_add(self[(i, k)].checked_mul(rhs[(k, j)])?)?;
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    /// Enclosure of the inverse by Gauss-Jordan elimination, pivoting on the
    /// entry of largest magnitude in each column. A pivot whose enclosure
    /// contains zero is an error.
    pub fn inverse(&self) -> Result<IntervalMatrix, VerifyError> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| a[(r, col)].mag().total_cmp(&a[(s, col)].mag()))
                .expect("non-empty column");
            if a[(pivot_row, col)].contains_zero() {
                return Err(VerifyError::Singular { column: col });
            }
            a.swap_rows(col, pivot_row);
            inv.swap_rows(col, pivot_row);
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] = a[(col, j)].checked_div(p)?;
                inv[(col, j)] = inv[(col, j)].checked_div(p)?;
            }
            a[(col, col)] = Interval::ONE;
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == Interval::ZERO {
                    continue;
                }
                for j in 0..n {
                    a[(r, j)] = a[(r, j)].checked_sub(f.checked_mul(a[(col, j)])?)?;
                    inv[(r, j)] = inv[(r, j)].checked_sub(f.checked_mul(inv[(col, j)])?)?;
                }
                a[(r, col)] = Interval::ZERO;
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, r: usize, s: usize) {
        if r != s {
            for j in 0..self.cols {
                self.data.swap(r * self.cols + j, s * self.cols + j);
            }
        }
    }

    /// Upper bound on the maximum absolute row sum.
    pub fn row_sum_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).fold(0.0, |s, j| add_up(s, self[(i, j)].mag()).unwrap_or(f64::INFINITY)))
            .fold(0.0, f64::max)
    }

    /// Largest magnitude over all entries.
    pub fn max_mag(&self) -> f64 {
        self.data.iter().map(Interval::mag).fold(0.0, f64::max)
    }

    pub fn contains_points(&self, points: &[Vec<f64>]) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| self[(i, j)].contains(points[i][j])))
    }
}

impl Index<(usize, usize)> for IntervalMatrix {
    type Output = Interval;

    fn index(&self, (i, j): (usize, usize)) -> &Interval {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntervalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Interval {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for IntervalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let e = self[(i, j)];
                write!(f, "{}[{:.6e}, {:.6e}]", if j > 0 { " " } else { "" }, e.lo(), e.hi())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
