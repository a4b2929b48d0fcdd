//! Cone descriptions and membership tests.
//!
//! Two kinds of cones appear in this crate. Polyhedral cones are given by
//! finite generator lists; membership is an LP feasibility question and
//! strict interiority reduces to slack on the facet inequalities recovered
//! from the generators. Qubit-type state and effect cones are not polyhedral;
//! they are represented by a positive-semidefiniteness predicate through the
//! Hermitian-basis isomorphism, and the generator-based operations reject
//! them with `UnsupportedCone`.

use crate::error::{Error, Result};
use crate::numerics::eig::min_eigenvalue;
use crate::numerics::matrix::{dot, RealMatrix};
use crate::numerics::qr::QrDecomposition;
use crate::numerics::simplex::{nonnegative_solve, SimplexOptions};

/// A closed convex cone in a finite-dimensional real vector space.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeDescription {
    /// Conic hull of finitely many generators.
    Polyhedral {
        ambient_dim: usize,
        generators: Vec<Vec<f64>>,
    },
    /// Vectors whose tensor-Pauli-basis reconstruction is positive
    /// semidefinite; ambient dimension `4^qubits`. Scale-invariant, so the
    /// same predicate serves state and effect cones.
    PauliPsd { qubits: usize },
}

impl ConeDescription {
    pub fn polyhedral(ambient_dim: usize, generators: Vec<Vec<f64>>) -> Result<Self> {
        for g in &generators {
            if g.len() != ambient_dim {
                return Err(Error::ShapeMismatch {
                    context: format!(
                        "generator of length {} in ambient dimension {ambient_dim}",
                        g.len()
                    ),
                });
            }
            if !g.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFiniteEntry {
                    context: "cone generator".into(),
                });
            }
        }
        Ok(Self::Polyhedral {
            ambient_dim,
            generators,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Self::Polyhedral { ambient_dim, .. } => *ambient_dim,
            Self::PauliPsd { qubits } => 4usize.pow(*qubits as u32),
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        matches!(self, Self::Polyhedral { .. })
    }

    /// Membership test that works for both kinds of cone. For polyhedral
    /// cones this is the LP of [`cone_member`]; for PSD cones the smallest
    /// eigenvalue of the reconstruction must be at least `-tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.membership_violation(x, tol)? <= tol)
    }

    /// Quantitative violation of membership: 0 when the vector is in the
    /// cone, otherwise the minimal artificial mass of the membership LP
    /// (polyhedral) or the magnitude of the most negative eigenvalue (PSD).
    pub fn membership_violation(&self, x: &[f64], tol: f64) -> Result<f64> {
        if x.len() != self.ambient_dim() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "vector of length {} in cone of ambient dimension {}",
                    x.len(),
                    self.ambient_dim()
                ),
            });
        }
        match self {
            Self::Polyhedral { .. } => {
                let membership = cone_member(self, x, tol)?;
                Ok(membership.violation)
            }
            Self::PauliPsd { qubits } => {
                let h = pauli_reconstruction(*qubits, x);
                let min_eig = min_eigenvalue(&h)?;
                Ok((-min_eig).max(0.0))
            }
        }
    }

    fn generators(&self) -> Result<&[Vec<f64>]> {
        match self {
            Self::Polyhedral { generators, .. } => Ok(generators),
            Self::PauliPsd { .. } => Err(Error::UnsupportedCone {
                context: "operation requires a polyhedral cone".into(),
            }),
        }
    }

    /// Generator matrix with generators as columns.
    pub fn generator_matrix(&self) -> Result<RealMatrix> {
        let gens = self.generators()?;
        let d = self.ambient_dim();
        Ok(RealMatrix::from_fn(d, gens.len(), |i, j| gens[j][i]))
    }
}

/// Outcome of a polyhedral cone membership test.
#[derive(Debug, Clone)]
pub struct ConeMembership {
    pub member: bool,
    /// Nonnegative generator weights reproducing the vector, when a member.
    pub certificate: Option<Vec<f64>>,
    /// Minimal total artificial mass of the membership LP; 0 when a member.
    pub violation: f64,
}

/// Tests `x ∈ cone(generators)` by LP feasibility of `G λ = x`, `λ ≥ 0`
/// within `tol`, returning the certificate `λ` when feasible.
///
/// Fails with `UnsupportedCone` for non-polyhedral cones.
pub fn cone_member(cone: &ConeDescription, x: &[f64], tol: f64) -> Result<ConeMembership> {
    let g = cone.generator_matrix()?;
    if x.len() != g.rows() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "vector of length {} in cone of ambient dimension {}",
                x.len(),
                g.rows()
            ),
        });
    }
    if g.cols() == 0 {
        // The trivial cone {0}.
        let violation: f64 = x.iter().map(|v| v.abs()).sum();
        return Ok(ConeMembership {
            member: violation <= tol,
            certificate: if violation <= tol { Some(vec![]) } else { None },
            violation,
        });
    }
    let opts = SimplexOptions {
        feasibility_tol: tol,
        ..SimplexOptions::default()
    };
    match nonnegative_solve(&g, x, &opts)? {
        Ok(lambda) => Ok(ConeMembership {
            member: true,
            certificate: Some(lambda),
            violation: 0.0,
        }),
        Err(infeasibility) => Ok(ConeMembership {
            member: false,
            certificate: None,
            violation: infeasibility,
        }),
    }
}

/// Unit normals of the facets of a full-dimensional polyhedral cone, oriented
/// so that `n · g ≥ 0` for every generator `g`.
///
/// Every facet of a full-dimensional cone is spanned by `d − 1` linearly
/// independent generators, so scanning the (d−1)-subsets finds them all.
/// Fails with `DegenerateCone` when the generators do not span the space.
pub fn facet_normals(cone: &ConeDescription) -> Result<Vec<Vec<f64>>> {
    let gens = cone.generators()?;
    let d = cone.ambient_dim();
    let gen_matrix = cone.generator_matrix()?;
    let rank = QrDecomposition::factor(&gen_matrix).rank();
    if rank < d {
        return Err(Error::DegenerateCone {
            rank,
            ambient_dim: d,
        });
    }
    if d == 1 {
        // Facet structure is trivial on a line: the cone is a ray or all of R.
        let has_pos = gens.iter().any(|g| g[0] > 0.0);
        let has_neg = gens.iter().any(|g| g[0] < 0.0);
        return Ok(match (has_pos, has_neg) {
            (true, false) => vec![vec![1.0]],
            (false, true) => vec![vec![-1.0]],
            _ => vec![],
        });
    }

    let mut normals: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..d - 1).collect();
    let support_tol = 1e-9;
    loop {
        // Candidate normal: orthogonal complement of the subset's span.
        let sub = RealMatrix::from_fn(d, d - 1, |i, j| gens[subset[j]][i]);
        let qr = QrDecomposition::factor(&sub);
        if qr.rank() == d - 1 {
            let comp = qr.complement_basis();
            debug_assert_eq!(comp.len(), 1);
            let mut n = comp.into_iter().next().unwrap();
            let mut min_side = f64::INFINITY;
            let mut max_side = f64::NEG_INFINITY;
            for g in gens {
                let s = dot(&n, g);
                min_side = min_side.min(s);
                max_side = max_side.max(s);
            }
            let supporting = if min_side >= -support_tol {
                true
            } else if max_side <= support_tol {
                for v in &mut n {
                    *v = -*v;
                }
                true
            } else {
                false
            };
            if supporting && !normals.iter().any(|m| close(m, &n, 1e-8)) {
                normals.push(n);
            }
        }
        // Next (d−1)-subset in lexicographic order.
        if !advance_subset(&mut subset, gens.len()) {
            break;
        }
    }
    Ok(normals)
}

fn advance_subset(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - (k - i) {
            subset[i] += 1;
            for j in (i + 1)..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(&x, &y)| (x - y).abs() <= tol)
}

/// Tests whether `x` lies strictly inside a full-dimensional polyhedral cone:
/// every facet inequality must hold with slack at least `tol` (facet normals
/// are unit vectors, so the slack is a geometric distance scale).
///
/// Fails with `UnsupportedCone` for non-polyhedral cones and `DegenerateCone`
/// when the generators do not span the ambient space.
pub fn strict_interior(cone: &ConeDescription, x: &[f64], tol: f64) -> Result<bool> {
    if x.len() != cone.ambient_dim() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "vector of length {} in cone of ambient dimension {}",
                x.len(),
                cone.ambient_dim()
            ),
        });
    }
    let facets = facet_normals(cone)?;
    Ok(facets.iter().all(|n| dot(n, x) >= tol))
}

// ---------------------------------------------------------------------------
// Tensor-Pauli reconstruction for PSD membership.
// ---------------------------------------------------------------------------

/// Complex 2x2 matrix as ((re, im) rows); enough structure for Pauli algebra.
type C2 = [[(f64, f64); 2]; 2];

const PAULIS: [C2; 4] = [
    // I
    [[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (1.0, 0.0)]],
    // X
    [[(0.0, 0.0), (1.0, 0.0)], [(1.0, 0.0), (0.0, 0.0)]],
    // Y
    [[(0.0, 0.0), (0.0, -1.0)], [(0.0, 1.0), (0.0, 0.0)]],
    // Z
    [[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (-1.0, 0.0)]],
];

/// Real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]` of the Hermitian
/// matrix `H = Σ_α x_α B_α`, where `B_α` ranges over tensor products of
/// Pauli matrices with the leftmost factor most significant. The embedding
/// has the same eigenvalues as `H`, each doubled, so PSD tests carry over.
pub(crate) fn pauli_reconstruction(qubits: usize, coords: &[f64]) -> RealMatrix {
    let side = 1usize << qubits;
    debug_assert_eq!(coords.len(), 4usize.pow(qubits as u32));
    let mut re = RealMatrix::zeros(side, side);
    let mut im = RealMatrix::zeros(side, side);
    for (alpha, &c) in coords.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        // Tensor product B_α accumulated left to right.
        let mut term_re = RealMatrix::identity(1);
        let mut term_im = RealMatrix::zeros(1, 1);
        let mut idx = alpha;
        let mut digits = vec![0usize; qubits];
        for q in (0..qubits).rev() {
            digits[q] = idx % 4;
            idx /= 4;
        }
        for &digit in &digits {
            let p = &PAULIS[digit];
            let p_re = RealMatrix::from_fn(2, 2, |i, j| p[i][j].0);
            let p_im = RealMatrix::from_fn(2, 2, |i, j| p[i][j].1);
            let new_re = term_re.kron(&p_re).sub(&term_im.kron(&p_im)).unwrap();
            let new_im = term_re.kron(&p_im).add(&term_im.kron(&p_re)).unwrap();
            term_re = new_re;
            term_im = new_im;
        }
        re = re.add(&term_re.scale(c)).unwrap();
        im = im.add(&term_im.scale(c)).unwrap();
    }
    RealMatrix::from_fn(2 * side, 2 * side, |i, j| {
        let (bi, bj) = (i / side, j / side);
        let (ri, rj) = (i % side, j % side);
        match (bi, bj) {
            (0, 0) | (1, 1) => re.at(ri, rj),
            (0, 1) => -im.at(ri, rj),
            (1, 0) => im.at(ri, rj),
            _ => unreachable!(),
        }
    })
}
