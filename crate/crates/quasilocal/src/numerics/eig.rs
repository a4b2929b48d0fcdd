//! Symmetric eigenvalue decomposition via cyclic Jacobi rotations.
//!
//! Used for positive-semidefiniteness tests of small Hermitian matrices
//! (through their real embedding) and for Moore-Penrose pseudo-inverses of
//! small Gram matrices. Deterministic: the sweep order is fixed.

use crate::error::{Error, Result};
use crate::numerics::matrix::RealMatrix;

/// Eigenvalues (ascending) and orthonormal eigenvectors (as columns) of a
/// symmetric matrix. Symmetry is the caller's responsibility; the strictly
/// lower triangle is ignored.
pub fn symmetric_eigen(a: &RealMatrix) -> Result<(Vec<f64>, RealMatrix)> {
    if a.rows() != a.cols() {
        return Err(Error::ShapeMismatch {
            context: format!("symmetric_eigen of {}x{} matrix", a.rows(), a.cols()),
        });
    }
    let n = a.rows();
    let mut m: Vec<f64> = a.entries().to_vec();
    // Work on the symmetrised copy so a slightly asymmetric input cannot
    // derail convergence.
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
    let mut v = RealMatrix::identity(n);
    let scale = m.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(1.0);
    const MAX_SWEEPS: usize = 50;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[i * n + j].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-16 * scale {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                // Stable tangent of the rotation angle.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v.at(k, p);
                    let vkq = v.at(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = RealMatrix::from_fn(n, n, |r, c| v.at(r, order[c]));
    Ok((eigenvalues, vectors))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &RealMatrix) -> Result<f64> {
    let (eigs, _) = symmetric_eigen(a)?;
    Ok(eigs.first().copied().unwrap_or(0.0))
}

/// Moore-Penrose pseudo-inverse. Works through the Gram matrix on the smaller
/// side, so it is cheap whenever one dimension is small:
/// `A⁺ = Aᵀ (A Aᵀ)⁺` for wide matrices and `A⁺ = (Aᵀ A)⁺ Aᵀ` for tall ones.
pub fn pseudo_inverse(a: &RealMatrix) -> Result<RealMatrix> {
    if a.rows() <= a.cols() {
        let gram = a.matmul(&a.transpose())?;
        let gram_pinv = symmetric_pseudo_inverse(&gram)?;
        a.transpose().matmul(&gram_pinv)
    } else {
        let gram = a.transpose().matmul(a)?;
        let gram_pinv = symmetric_pseudo_inverse(&gram)?;
        gram_pinv.matmul(&a.transpose())
    }
}

/// Pseudo-inverse of a symmetric positive-semidefinite matrix, truncating
/// eigenvalues below `1e-12` times the largest.
fn symmetric_pseudo_inverse(g: &RealMatrix) -> Result<RealMatrix> {
    let (eigs, vecs) = symmetric_eigen(g)?;
    let max_eig = eigs.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let cutoff = 1e-12 * max_eig.max(f64::MIN_POSITIVE);
    let n = g.rows();
    let mut out = RealMatrix::zeros(n, n);
    for (k, &lambda) in eigs.iter().enumerate() {
        if lambda <= cutoff {
            continue;
        }
        let inv_lambda = 1.0 / lambda;
        for i in 0..n {
            let vi = vecs.at(i, k);
            if vi == 0.0 {
                continue;
            }
            for j in 0..n {
                let val = out.at(i, j) + inv_lambda * vi * vecs.at(j, k);
                out.set(i, j, val);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonalizes_known_symmetric_matrix() {
        // Eigenvalues of [[2,1],[1,2]] are 1 and 3.
        let a = RealMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let (eigs, vecs) = symmetric_eigen(&a).unwrap();
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
        // A v = lambda v for each column.
        for k in 0..2 {
            let v = vecs.col(k);
            let av = a.mul_vec(&v).unwrap();
            for i in 0..2 {
                assert!((av[i] - eigs[k] * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn min_eigenvalue_detects_indefiniteness() {
        let a = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!((min_eigenvalue(&a).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pseudo_inverse_satisfies_penrose_identities() {
        // Rank-deficient 3x4 matrix.
        let a = RealMatrix::from_rows(&[
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0, 1.0],
        ])
        .unwrap();
        let p = pseudo_inverse(&a).unwrap();
        let apa = a.matmul(&p).unwrap().matmul(&a).unwrap();
        assert!(apa.max_abs_diff(&a).unwrap() < 1e-10);
        let pap = p.matmul(&a).unwrap().matmul(&p).unwrap();
        assert!(pap.max_abs_diff(&p).unwrap() < 1e-10);
        // A A⁺ symmetric.
        let aap = a.matmul(&p).unwrap();
        assert!(aap.max_abs_diff(&aap.transpose()).unwrap() < 1e-10);
    }
}
