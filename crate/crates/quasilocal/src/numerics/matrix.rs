//! Dense row-major matrices over `f64`.
//!
//! All problem sizes in this crate are small (dimensions up to a few hundred,
//! with occasional wide basis matrices), so a plain dense representation is
//! both sufficient and the easiest to keep deterministic.

use crate::error::{Error, Result};

/// Dense real matrix with row-major storage. Entries are always finite;
/// constructors reject NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    /// Builds a matrix from row-major data. Fails if the length does not
    /// match `rows * cols` or any entry is non-finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "matrix data length {} does not match {rows}x{cols}",
                    data.len()
                ),
            });
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFiniteEntry {
                context: format!("{rows}x{cols} matrix"),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch {
                context: "rows of unequal length".into(),
            });
        }
        Self::new(r, c, rows.concat())
    }

    /// Builds a matrix entrywise from `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        debug_assert!(data.iter().all(|x| x.is_finite()));
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

    /// Column vector (n x 1) from a slice.
    pub fn column(v: &[f64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = value;
    }

    /// Row `r` as a contiguous slice.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Column `c` copied into a new vector.
    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }

    /// Row-major entries. This is also the vectorization convention used
    /// throughout the crate: `vec(A)[i * cols + j] = A[i, j]`.
    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i))
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "matmul {}x{} by {}x{}",
                    self.rows, self.cols, rhs.rows, rhs.cols
                ),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let lhs_row = self.row(i);
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rhs_row = rhs.row(k);
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::ShapeMismatch {
                context: format!("mul_vec {}x{} by length {}", self.rows, self.cols, v.len()),
            });
        }
        Ok((0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect())
    }

    /// `vᵀ · A` as a vector of length `cols`.
    pub fn vec_mul(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::ShapeMismatch {
                context: format!("vec_mul length {} by {}x{}", v.len(), self.rows, self.cols),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &a) in v.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, &b) in out.iter_mut().zip(self.row(i)) {
                *o += a * b;
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "elementwise op on {}x{} and {}x{}",
                    self.rows, self.cols, rhs.rows, rhs.cols
                ),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest absolute entrywise difference; the metric behind all
    /// "within tolerance" comparisons of maps in this crate.
    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "max_abs_diff on {}x{} and {}x{}",
                    self.rows, self.cols, rhs.rows, rhs.cols
                ),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&rhs.data)
            .fold(0.0, |m, (&a, &b)| m.max((a - b).abs())))
    }

    /// Operator 1-norm: maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.at(r, c).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (s, &x) in sums.iter_mut().zip(self.row(r)) {
                *s += x;
            }
        }
        sums
    }

    /// Kronecker product. Index convention:
    /// `C[(ia, ib), (ja, jb)] = A[ia, ja] * B[ib, jb]` where the joint row
    /// index is `ia * B.rows + ib` and likewise for columns (left factor most
    /// significant).
    pub fn kron(&self, rhs: &Self) -> Self {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        let mut out = Self::zeros(rows, cols);
        for ia in 0..self.rows {
            for ja in 0..self.cols {
                let a = self.at(ia, ja);
                if a == 0.0 {
                    continue;
                }
                for ib in 0..rhs.rows {
                    let base = (ia * rhs.rows + ib) * cols + ja * rhs.cols;
                    for jb in 0..rhs.cols {
                        out.data[base + jb] = a * rhs.at(ib, jb);
                    }
                }
            }
        }
        out
    }

    /// Kronecker product of a sequence, left to right. The empty product is
    /// the 1x1 identity.
    pub fn kron_all(factors: &[&Self]) -> Self {
        let mut out = Self::identity(1);
        for f in factors {
            out = out.kron(f);
        }
        out
    }

    /// Inverse via LU decomposition with partial pivoting, together with a
    /// reciprocal condition number estimate `1 / (‖A‖₁ ‖A⁻¹‖₁)`.
    ///
    /// Fails with `SingularMatrix` when a pivot vanishes.
    pub fn lu_inverse(&self) -> Result<(Self, f64)> {
        if self.rows != self.cols {
            return Err(Error::ShapeMismatch {
                context: format!("inverse of {}x{} matrix", self.rows, self.cols),
            });
        }
        let n = self.rows;
        let mut lu = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            // Partial pivoting: largest absolute entry in column k at or below the diagonal.
            let mut pivot_row = k;
            let mut pivot_val = lu[k * n + k].abs();
            for r in (k + 1)..n {
                let v = lu[r * n + k].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            if pivot_val == 0.0 {
                return Err(Error::SingularMatrix { rcond: 0.0 });
            }
            if pivot_row != k {
                for c in 0..n {
                    lu.swap(k * n + c, pivot_row * n + c);
                }
                perm.swap(k, pivot_row);
            }
            let pivot = lu[k * n + k];
            for r in (k + 1)..n {
                let factor = lu[r * n + k] / pivot;
                lu[r * n + k] = factor;
                for c in (k + 1)..n {
                    lu[r * n + c] -= factor * lu[k * n + c];
                }
            }
        }
        // Solve A X = I column by column using the factorization.
        let mut inv = Self::zeros(n, n);
        let mut x = vec![0.0; n];
        for col in 0..n {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = if perm[i] == col { 1.0 } else { 0.0 };
            }
            for i in 0..n {
                for j in 0..i {
                    x[i] -= lu[i * n + j] * x[j];
                }
            }
            for i in (0..n).rev() {
                for j in (i + 1)..n {
                    x[i] -= lu[i * n + j] * x[j];
                }
                x[i] /= lu[i * n + i];
            }
            for (i, &xi) in x.iter().enumerate() {
                inv.data[i * n + col] = xi;
            }
        }
        let rcond = 1.0 / (self.norm_one() * inv.norm_one()).max(f64::MIN_POSITIVE);
        Ok((inv, rcond))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
