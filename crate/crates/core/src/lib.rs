//! Sparse Jacobi operators with `a_n ≡ 1`, their orthonormal polynomials and
//! Christoffel-Darboux kernels, and numerical checks of sine-kernel bulk
//! universality.
//!
//! The crate is organised bottom-up:
//!
//! - [`chebyshev`]: free solutions, transfer matrices, interval bounds and
//!   the sine-kernel target.
//! - [`jacobi`]: sparse parameter specs and the three-term recurrence.
//! - [`cdkernel`]: kernels through the CD formula and the defining sum.
//! - [`varparam`]: variation-of-parameters coefficients `A_n`.
//! - [`sparsifier`]: adaptive placement of sparse sites with certificates.
//! - [`harness`]: sweeps, convergence tables, quadrature and output.

pub mod chebyshev;
pub mod jacobi;
pub mod mat2;
pub mod scalar;
pub mod cdkernel;
pub mod varparam;
pub mod sparsifier;
pub mod harness;
