//! Exact computer algebra for twist deformation of Hopf-algebraic structures.
//!
//! Everything here is computed over the truncated formal series ring
//! `K = Q[h]/(h^{N+1})` with arbitrary-precision rational coefficients; there
//! is no floating point and no numerical tolerance anywhere.  Setting `N = 0`
//! recovers plain `Q`.
//!
//! The library builds, deforms and *mechanically verifies* the following tower
//! of structures on concrete finite instances:
//!
//! * [`scalar`] — the coefficient ring `K`.
//! * [`hopf`] — Hopf algebras in two backends (finite-dimensional tables and
//!   abelian PBW generators), elements, tensor powers, and an axiom checker.
//! * [`twist`] — twists `F`, the twisted Hopf algebra `H^F`, dequantization,
//!   and (triangular) R-matrices.
//! * [`modalg`] — module algebras and free H-covariant bimodules, star
//!   products, and quasi-commutativity checks.
//! * [`calculus`] — differential calculi over polynomial algebras and their
//!   deformations.
//! * [`homdef`] — operator expressions, adjoint actions, the quantization map
//!   on homomorphisms and the tensor-quotient isomorphism.
//! * [`braid`] — braidings from R-matrices and braided tensor products of
//!   homomorphisms.
//! * [`connection`] — connections, their quantization, and braided sums.
//!
//! Each deformation theorem in scope has a corresponding `*_check` function
//! that probes the identity on a finite, deterministic probe set and returns a
//! [`check::CheckReport`]; on failure the report carries the offending inputs
//! and both sides in normal form.  Checks never assert — callers decide what a
//! failure means.
//!
//! Values are kept in canonical normal form at all times (sorted term maps,
//! zero coefficients removed), so equality is structural equality.

pub mod braid;
pub mod calculus;
pub mod check;
pub mod connection;
pub mod error;
pub mod homdef;
pub mod hopf;
pub mod modalg;
pub mod probe;
pub mod scalar;
#[cfg(test)]
pub(crate) mod testkit;
pub mod twist;

pub use check::{CheckReport, CheckStatus, Witness};
pub use error::Error;
pub use scalar::Scalar;
