//! Householder QR with column pivoting, least squares, and affine solving.
//!
//! The factorization is rank-revealing, which lets the same machinery answer
//! "is this target in the span / affine hull of these vectors" with a
//! quantitative residual, extract particular solutions of underdetermined
//! systems, and produce orthonormal complements for facet enumeration.
//! Everything is deterministic: pivot ties resolve to the lowest index and
//! the parallel trailing update performs identical per-column arithmetic.

use crate::error::{Error, Result};
use crate::numerics::matrix::{dot, RealMatrix};
use crate::par;

/// Relative threshold below which a remaining column is treated as zero.
const RANK_TOL: f64 = 1e-12;

/// Rank-revealing QR factorization `A P = Q R` with Householder reflectors
/// and greedy column pivoting.
pub struct QrDecomposition {
    m: usize,
    rank: usize,
    /// Working matrix in column-major order: `R` occupies the upper triangle
    /// of the pivoted columns.
    factors: Vec<f64>,
    /// Householder vectors, one per elimination step; `reflectors[k]` acts on
    /// rows `k..m`.
    reflectors: Vec<Vec<f64>>,
    betas: Vec<f64>,
    /// `perm[k]` is the original index of the k-th pivoted column.
    perm: Vec<usize>,
}

impl QrDecomposition {
    pub fn factor(a: &RealMatrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        // Column-major copy.
        let mut w = vec![0.0; m * n];
        for j in 0..n {
            for i in 0..m {
                w[j * m + i] = a.at(i, j);
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut norms_sq: Vec<f64> = (0..n)
            .map(|j| dot(&w[j * m..(j + 1) * m], &w[j * m..(j + 1) * m]))
            .collect();
        let orig_norms_sq = norms_sq.clone();
        let max_norm_sq = norms_sq.iter().cloned().fold(0.0f64, f64::max);
        let stop_sq = (RANK_TOL * RANK_TOL * max_norm_sq).max(f64::MIN_POSITIVE);

        let steps = m.min(n);
        let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut betas: Vec<f64> = Vec::with_capacity(steps);
        let mut rank = 0;

        for k in 0..steps {
            // Pivot: column with the largest remaining norm; ties keep the
            // lowest index. Norms are downdated, so guard against drift by
            // recomputing near the cutoff.
            let mut best = k;
            for j in (k + 1)..n {
                if norms_sq[j] > norms_sq[best] {
                    best = j;
                }
            }
            let mut best_sq = norms_sq[best];
            if best_sq < 1e-6 * orig_norms_sq[perm[best]].max(f64::MIN_POSITIVE) {
                for j in k..n {
                    let col = &w[j * m + k..j * m + m];
                    norms_sq[j] = dot(col, col);
                }
                best = k;
                for j in (k + 1)..n {
                    if norms_sq[j] > norms_sq[best] {
                        best = j;
                    }
                }
                best_sq = norms_sq[best];
            }
            if best_sq <= stop_sq {
                break;
            }
            if best != k {
                for i in 0..m {
                    w.swap(k * m + i, best * m + i);
                }
                norms_sq.swap(k, best);
                perm.swap(k, best);
            }

            // Householder reflector zeroing rows k+1..m of column k.
            let col = &w[k * m + k..k * m + m];
            let norm = dot(col, col).sqrt();
            let alpha = if col[0] >= 0.0 { -norm } else { norm };
            let mut v: Vec<f64> = col.to_vec();
            v[0] -= alpha;
            let v_sq = dot(&v, &v);
            let beta = if v_sq > 0.0 { 2.0 / v_sq } else { 0.0 };
            w[k * m + k] = alpha;
            for i in (k + 1)..m {
                w[k * m + i] = 0.0;
            }

            // Apply the reflector to the trailing columns in parallel.
            let tail = &mut w[(k + 1) * m..];
            par::for_each_chunk_mut(tail, m, |_, colj| {
                let seg = &mut colj[k..];
                let t = beta * dot(&v, seg);
                if t != 0.0 {
                    for (s, &vi) in seg.iter_mut().zip(&v) {
                        *s -= t * vi;
                    }
                }
            });
            // Downdate remaining column norms by the eliminated component.
            for j in (k + 1)..n {
                let rkj = w[j * m + k];
                norms_sq[j] = (norms_sq[j] - rkj * rkj).max(0.0);
            }

            reflectors.push(v);
            betas.push(beta);
            rank = k + 1;
        }

        Self {
            m,
            rank,
            factors: w,
            reflectors,
            betas,
            perm,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Applies `Qᵀ` to a vector of length `m`.
    pub fn apply_q_transpose(&self, y: &mut [f64]) {
        debug_assert_eq!(y.len(), self.m);
        for (k, v) in self.reflectors.iter().enumerate() {
            let seg = &mut y[k..];
            let t = self.betas[k] * dot(v, seg);
            if t != 0.0 {
                for (s, &vi) in seg.iter_mut().zip(v) {
                    *s -= t * vi;
                }
            }
        }
    }

    /// Applies `Q` to a vector of length `m`.
    pub fn apply_q(&self, y: &mut [f64]) {
        debug_assert_eq!(y.len(), self.m);
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            let seg = &mut y[k..];
            let t = self.betas[k] * dot(v, seg);
            if t != 0.0 {
                for (s, &vi) in seg.iter_mut().zip(v) {
                    *s -= t * vi;
                }
            }
        }
    }

    /// Basic least-squares solution of `A x = b`: minimises `‖Ax − b‖₂` using
    /// only the `rank` pivot columns, zeros elsewhere. Returns the solution
    /// (length = original column count) and the 2-norm residual.
    pub fn solve_least_squares(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        if b.len() != self.m {
            return Err(Error::ShapeMismatch {
                context: format!("rhs length {} for {} rows", b.len(), self.m),
            });
        }
        let mut z = b.to_vec();
        self.apply_q_transpose(&mut z);
        let r = self.rank;
        let m = self.m;
        // Back-substitution on the leading r x r triangle.
        let mut wsol = vec![0.0; r];
        for i in (0..r).rev() {
            let mut s = z[i];
            for j in (i + 1)..r {
                s -= self.factors[j * m + i] * wsol[j];
            }
            wsol[i] = s / self.factors[i * m + i];
        }
        let mut x = vec![0.0; self.perm.len()];
        for (k, &wk) in wsol.iter().enumerate() {
            x[self.perm[k]] = wk;
        }
        let residual = dot(&z[r..], &z[r..]).sqrt();
        Ok((x, residual))
    }

    /// Row `k` of `R` re-expanded to the original column order, restricted to
    /// `k < rank`. Used to build reduced full-row-rank equality systems.
    pub fn reduced_row(&self, k: usize) -> Vec<f64> {
        debug_assert!(k < self.rank);
        let mut row = vec![0.0; self.perm.len()];
        for (j, &pj) in self.perm.iter().enumerate() {
            // R[k, j] lives at column j, row k of the working matrix; it is
            // zero below the diagonal by construction.
            if j >= k {
                row[pj] = self.factors[j * self.m + k];
            }
        }
        row
    }

    /// `Qᵀ b` truncated to the first `rank` entries; right-hand side of the
    /// reduced system matching [`Self::reduced_row`].
    pub fn reduced_rhs(&self, b: &[f64]) -> Vec<f64> {
        let mut z = b.to_vec();
        self.apply_q_transpose(&mut z);
        z.truncate(self.rank);
        z
    }

    /// Orthonormal basis of the orthogonal complement of the column span:
    /// the trailing `m − rank` columns of `Q`.
    pub fn complement_basis(&self) -> Vec<Vec<f64>> {
        (self.rank..self.m)
            .map(|k| {
                let mut e = vec![0.0; self.m];
                e[k] = 1.0;
                self.apply_q(&mut e);
                e
            })
            .collect()
    }
}

/// Weights expressing a target as an affine combination of basis vectors.
#[derive(Debug, Clone)]
pub struct AffineSolution {
    /// One weight per basis vector; the weights sum to 1 within solver
    /// tolerance.
    pub weights: Vec<f64>,
    /// `‖Σ wᵢ bᵢ − target‖∞` of the returned combination.
    pub residual_norm: f64,
    /// `Σ |wᵢ|`.
    pub l1_norm: f64,
}

/// Solves `Σ wᵢ bᵢ = target` with `Σ wᵢ = 1` for the columns of `basis`.
///
/// The affine constraint is absorbed by appending a row of ones to the basis
/// and a 1 to the target, reducing affine solving to linear least squares.
/// If the target lies in the affine hull within `tol` (∞-norm of the
/// recombination error), returns the minimum-norm solution; otherwise fails
/// with `Infeasible` carrying the least-squares residual.
pub fn solve_affine(basis: &RealMatrix, target: &[f64], tol: f64) -> Result<AffineSolution> {
    let hom = homogenize(basis, target)?;
    let qr = QrDecomposition::factor(&hom.matrix);
    let (weights, ls_residual) = qr.solve_least_squares(&hom.rhs)?;
    finish_affine(basis, target, weights, ls_residual, tol)
}

/// Like [`solve_affine`] but, among all weight vectors satisfying the
/// constraints, returns one minimizing `Σ |wᵢ|` (computed by linear
/// programming on the split positive/negative parts).
pub fn min_l1_affine(basis: &RealMatrix, target: &[f64], tol: f64) -> Result<AffineSolution> {
    use crate::numerics::simplex::{solve_lp, LpOutcome, SimplexOptions};

    let hom = homogenize(basis, target)?;
    let qr = QrDecomposition::factor(&hom.matrix);
    // Feasibility check with the least-squares solution first; the LP below
    // works on a consistent full-row-rank reduction of the system.
    let (ls_weights, ls_residual) = qr.solve_least_squares(&hom.rhs)?;
    let probe = finish_affine(basis, target, ls_weights, ls_residual, tol)?;

    // Reduce to a consistent full-row-rank system, then split the free
    // weights into positive and negative parts for the LP.
    let r = qr.rank();
    let n = basis.cols();
    let mut reduced = RealMatrix::zeros(r, 2 * n);
    for i in 0..r {
        let row = qr.reduced_row(i);
        for j in 0..n {
            reduced.set(i, j, row[j]);
            reduced.set(i, n + j, -row[j]);
        }
    }
    let rhs = qr.reduced_rhs(&hom.rhs);
    let cost = vec![1.0; 2 * n];
    let opts = SimplexOptions::default();
    match solve_lp(&cost, &reduced, &rhs, &opts)? {
        LpOutcome::Optimal { x, .. } => {
            let weights: Vec<f64> = (0..n).map(|j| x[j] - x[n + j]).collect();
            let solution = finish_affine(basis, target, weights, ls_residual, tol)?;
            // The LP optimises over the same feasible set, so it can never be
            // worse than a particular solution it contains.
            debug_assert!(solution.l1_norm <= probe.l1_norm + 1e-7);
            Ok(solution)
        }
        LpOutcome::Infeasible { .. } => Err(Error::Internal {
            context: "reduced affine system reported infeasible after consistency check".into(),
        }),
        LpOutcome::Unbounded => Err(Error::Unbounded),
    }
}

struct Homogenized {
    matrix: RealMatrix,
    rhs: Vec<f64>,
}

fn homogenize(basis: &RealMatrix, target: &[f64]) -> Result<Homogenized> {
    if target.len() != basis.rows() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "target length {} for basis of {} rows",
                target.len(),
                basis.rows()
            ),
        });
    }
    if basis.cols() == 0 {
        return Err(Error::ShapeMismatch {
            context: "empty basis".into(),
        });
    }
    let m = basis.rows();
    let matrix = RealMatrix::from_fn(m + 1, basis.cols(), |i, j| {
        if i < m {
            basis.at(i, j)
        } else {
            1.0
        }
    });
    let mut rhs = target.to_vec();
    rhs.push(1.0);
    Ok(Homogenized { matrix, rhs })
}

fn finish_affine(
    basis: &RealMatrix,
    target: &[f64],
    weights: Vec<f64>,
    ls_residual: f64,
    tol: f64,
) -> Result<AffineSolution> {
    let recombined = basis.mul_vec(&weights)?;
    let residual_norm = recombined
        .iter()
        .zip(target)
        .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
    let weight_sum: f64 = weights.iter().sum();
    if residual_norm > tol || (weight_sum - 1.0).abs() > tol {
        return Err(Error::Infeasible {
            residual: ls_residual.max(residual_norm).max((weight_sum - 1.0).abs()),
        });
    }
    let l1_norm = weights.iter().map(|w| w.abs()).sum();
    Ok(AffineSolution {
        weights,
        residual_norm,
        l1_norm,
    })
}
