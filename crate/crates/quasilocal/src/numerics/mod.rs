//! Dense numerical kernels: matrices, rank-revealing QR, a two-phase simplex
//! solver, symmetric eigendecomposition, and polyhedral cone geometry.
//!
//! Everything here is hand-rolled and dependency-free by design: the problem
//! sizes are small and dense, and exact reproducibility of pivot choices and
//! iteration orders matters more than raw throughput.

pub mod cone;
pub mod eig;
pub mod matrix;
pub mod qr;
pub mod simplex;
pub mod tensor;

pub use cone::{cone_member, facet_normals, strict_interior, ConeDescription, ConeMembership};
pub use eig::{min_eigenvalue, pseudo_inverse, symmetric_eigen};
pub use matrix::RealMatrix;
pub use qr::{min_l1_affine, solve_affine, AffineSolution, QrDecomposition};
pub use simplex::{solve_lp, LpOutcome, SimplexOptions};
pub use tensor::{joint_index, kron_apply, split_index};
