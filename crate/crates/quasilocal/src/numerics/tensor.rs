//! Mixed-radix index arithmetic and structure-exploiting Kronecker products.
//!
//! Joint indices over several wires or parties follow one convention
//! everywhere: the first factor is the most significant digit, matching
//! [`RealMatrix::kron`](crate::numerics::RealMatrix::kron).

use crate::error::{Error, Result};
use crate::numerics::matrix::RealMatrix;

/// Packs per-factor digits into a joint index (first digit most significant).
pub fn joint_index(digits: &[usize], sizes: &[usize]) -> usize {
    debug_assert_eq!(digits.len(), sizes.len());
    let mut idx = 0;
    for (&d, &s) in digits.iter().zip(sizes) {
        debug_assert!(d < s);
        idx = idx * s + d;
    }
    idx
}

/// Splits a joint index into per-factor digits (inverse of [`joint_index`]).
pub fn split_index(mut idx: usize, sizes: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; sizes.len()];
    for i in (0..sizes.len()).rev() {
        digits[i] = idx % sizes[i];
        idx /= sizes[i];
    }
    debug_assert_eq!(idx, 0);
    digits
}

/// Applies `M₁ ⊗ … ⊗ Mₙ` to a vector by successive mode contractions,
/// without materializing the Kronecker product. The empty product acts as
/// the identity on scalars.
pub fn kron_apply(mats: &[&RealMatrix], v: &[f64]) -> Result<Vec<f64>> {
    let total_cols: usize = mats.iter().map(|m| m.cols()).product();
    if v.len() != total_cols {
        return Err(Error::ShapeMismatch {
            context: format!(
                "kron_apply on vector of length {} (expected {total_cols})",
                v.len()
            ),
        });
    }
    let mut cur = v.to_vec();
    let mut left = 1usize;
    let mut right = total_cols;
    for m in mats {
        let (rows, cols) = (m.rows(), m.cols());
        right /= cols;
        let mut next = vec![0.0; left * rows * right];
        for l in 0..left {
            for row in 0..rows {
                let dst = (l * rows + row) * right;
                for c in 0..cols {
                    let a = m.at(row, c);
                    if a == 0.0 {
                        continue;
                    }
                    let src = (l * cols + c) * right;
                    for k in 0..right {
                        next[dst + k] += a * cur[src + k];
                    }
                }
            }
        }
        cur = next;
        left *= rows;
    }
    Ok(cur)
}
