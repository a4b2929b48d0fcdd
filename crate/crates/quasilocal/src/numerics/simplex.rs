//! Dense two-phase simplex for small equality-form linear programs.
//!
//! Solves `min cᵀx` subject to `A x = b`, `x ≥ 0`. The instances in this
//! crate are small and dense (cone membership certificates, minimum-ℓ1
//! affine decompositions), so a tableau method with Bland's anti-cycling
//! rule is simple, dependable, and fully deterministic: the entering column
//! is the lowest eligible index and ratio-test ties resolve to the lowest
//! basic variable index, which selects a unique basis among degenerate
//! optima.

use crate::error::{Error, Result};
use crate::numerics::matrix::RealMatrix;
use crate::par;

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Entries smaller than this never serve as pivots.
    pub pivot_tol: f64,
    /// Phase-1 objective values at or below this count as feasible.
    pub feasibility_tol: f64,
    /// Safety cap on pivot steps; Bland's rule terminates long before this.
    pub max_pivots: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            pivot_tol: crate::TOL_PIVOT,
            feasibility_tol: 1e-9,
            max_pivots: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        objective: f64,
    },
    /// No feasible point; carries the phase-1 objective, the minimal total
    /// artificial mass (an ℓ1 measure of constraint violation).
    Infeasible {
        infeasibility: f64,
    },
    Unbounded,
}

struct Tableau {
    m: usize,
    /// Structural variables; artificials occupy columns `n..n + m`.
    n: usize,
    width: usize,
    /// Row-major `m x width`; the last column is the right-hand side.
    rows: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i * self.width + self.width - 1]
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.width + j]
    }

    /// Pivots on `(row, col)`: normalizes the pivot row and eliminates the
    /// column from every other row. Rows are updated in parallel; each row's
    /// arithmetic is independent and fixed-order, so results do not depend
    /// on scheduling.
    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.width;
        let pivot_val = self.at(row, col);
        let start = row * width;
        let inv = 1.0 / pivot_val;
        for v in &mut self.rows[start..start + width] {
            *v *= inv;
        }
        self.rows[start + col] = 1.0;
        let pivot_row: Vec<f64> = self.rows[start..start + width].to_vec();
        par::for_each_chunk_mut(&mut self.rows, width, |i, r| {
            if i == row {
                return;
            }
            let factor = r[col];
            if factor == 0.0 {
                return;
            }
            for (x, &p) in r.iter_mut().zip(&pivot_row) {
                *x -= factor * p;
            }
            r[col] = 0.0;
        });
        self.basis[row] = col;
    }

    fn solution(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rhs(i);
            }
        }
        x
    }
}

/// Reduced cost row for the cost vector `c` (length `width - 1`, artificials
/// included with their own costs).
fn reduced_costs(t: &Tableau, c: &[f64]) -> Vec<f64> {
    let mut r = c.to_vec();
    for (i, &b) in t.basis.iter().enumerate() {
        let cb = c[b];
        if cb == 0.0 {
            continue;
        }
        let row = &t.rows[i * t.width..i * t.width + t.width - 1];
        for (rj, &a) in r.iter_mut().zip(row) {
            *rj -= cb * a;
        }
    }
    r
}

/// Runs simplex iterations until optimality, unboundedness, or the pivot cap.
/// `allowed` bounds the columns eligible to enter the basis.
fn iterate(
    t: &mut Tableau,
    c: &[f64],
    allowed: usize,
    opts: &SimplexOptions,
    pivots_left: &mut usize,
) -> Result<bool> {
    loop {
        let r = reduced_costs(t, c);
        // Bland: lowest-index column with negative reduced cost.
        let entering = (0..allowed).find(|&j| {
            r[j] < -opts.pivot_tol && !t.basis.contains(&j)
        });
        let Some(col) = entering else {
            return Ok(true);
        };
        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..t.m {
            let a = t.at(i, col);
            if a > opts.pivot_tol {
                let ratio = t.rhs(i) / a;
                match leaving {
                    None => leaving = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-15
                            || (ratio <= lr + 1e-15 && t.basis[i] < t.basis[li])
                        {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, _)) = leaving else {
            return Ok(false); // unbounded direction
        };
        if *pivots_left == 0 {
            return Err(Error::Internal {
                context: "simplex pivot cap exceeded".into(),
            });
        }
        *pivots_left -= 1;
        t.pivot(row, col);
    }
}

/// Solves `min cᵀx` s.t. `A x = b`, `x ≥ 0` by the two-phase tableau method.
pub fn solve_lp(c: &[f64], a: &RealMatrix, b: &[f64], opts: &SimplexOptions) -> Result<LpOutcome> {
    let (m, n) = (a.rows(), a.cols());
    if c.len() != n || b.len() != m {
        return Err(Error::ShapeMismatch {
            context: format!(
                "LP with {m} constraints, {n} variables, cost length {}, rhs length {}",
                c.len(),
                b.len()
            ),
        });
    }
    let width = n + m + 1;
    let mut rows = vec![0.0; m * width];
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            rows[i * width + j] = flip * a.at(i, j);
        }
        rows[i * width + n + i] = 1.0;
        rows[i * width + width - 1] = flip * b[i];
    }
    let mut t = Tableau {
        m,
        n,
        width,
        rows,
        basis: (n..n + m).collect(),
    };
    let mut pivots_left = opts.max_pivots;

    // Phase 1: minimize the total artificial mass.
    let mut phase1_cost = vec![0.0; width - 1];
    for j in n..n + m {
        phase1_cost[j] = 1.0;
    }
    let optimal = iterate(&mut t, &phase1_cost, n + m, opts, &mut pivots_left)?;
    debug_assert!(optimal, "phase 1 is bounded below by zero");
    let infeasibility: f64 = (0..m)
        .map(|i| if t.basis[i] >= n { t.rhs(i).max(0.0) } else { 0.0 })
        .sum();
    if infeasibility > opts.feasibility_tol {
        return Ok(LpOutcome::Infeasible { infeasibility });
    }

    // Drive residual artificials out of the basis; rows where no structural
    // pivot exists are redundant constraints and can be cleared.
    for i in 0..m {
        if t.basis[i] < n {
            continue;
        }
        let col = (0..n).find(|&j| t.at(i, j).abs() > opts.pivot_tol);
        match col {
            Some(j) => {
                if pivots_left == 0 {
                    return Err(Error::Internal {
                        context: "simplex pivot cap exceeded".into(),
                    });
                }
                pivots_left -= 1;
                t.pivot(i, j);
            }
            None => {
                // Redundant row: zero it so it can never constrain phase 2.
                for v in &mut t.rows[i * t.width..(i + 1) * t.width] {
                    *v = 0.0;
                }
            }
        }
    }

    // Phase 2 over the structural columns only.
    let mut phase2_cost = vec![0.0; width - 1];
    phase2_cost[..n].copy_from_slice(c);
    let optimal = iterate(&mut t, &phase2_cost, n, opts, &mut pivots_left)?;
    if !optimal {
        return Ok(LpOutcome::Unbounded);
    }
    let x = t.solution();
    let objective = c.iter().zip(&x).map(|(&ci, &xi)| ci * xi).sum();
    Ok(LpOutcome::Optimal { x, objective })
}

/// Feasibility of `G λ = x`, `λ ≥ 0` (phase 1 only). Returns the certificate
/// when feasible, or the minimal artificial mass when not.
pub fn nonnegative_solve(
    g: &RealMatrix,
    x: &[f64],
    opts: &SimplexOptions,
) -> Result<std::result::Result<Vec<f64>, f64>> {
    let c = vec![0.0; g.cols()];
    match solve_lp(&c, g, x, opts)? {
        LpOutcome::Optimal { x: lambda, .. } => Ok(Ok(lambda)),
        LpOutcome::Infeasible { infeasibility } => Ok(Err(infeasibility)),
        LpOutcome::Unbounded => Err(Error::Internal {
            context: "zero-cost LP reported unbounded".into(),
        }),
    }
}
