//! Exact symbolic tensor calculus on coordinate charts for Jacobi, contact and
//! locally conformal symplectic structures, together with contact groupoid
//! actions and point-wise reduction.
//!
//! The crate is `no_std` (with `alloc`). Every computation is exact: scalars
//! are canonicalized rational functions over the atoms
//! {coordinates, exp-atoms, root-atoms, opaque function jets}, and numeric
//! sampling evaluates in the multi-quadratic field spanned by square roots of
//! squarefree integers, so a `Falsified` verdict always carries a residual
//! that is nonzero exactly, never merely beyond a float tolerance.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod action;
pub mod chart;
pub mod expr;
pub mod groupoid;
pub mod jacobi;
pub mod linalg;
pub mod map;
pub mod orbit;
pub mod surd;
pub mod tensor;
pub mod verdict;

pub use chart::{Chart, Constraint, ConstraintKind};
pub use expr::{Expr, ExprError, RawExpr};
pub use verdict::{Method, SamplingConfig, Status, Verdict, Witness};

/// Rational scalar used throughout: arbitrary precision `BigInt` ratio.
pub type Rat = num_rational::BigRational;

/// Shorthand for building a rational from an integer.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(num_bigint::BigInt::from(n))
}

/// Shorthand for building a rational from a numerator/denominator pair.
///
/// Panics if `d == 0`; callers pass literal constants.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(num_bigint::BigInt::from(n), num_bigint::BigInt::from(d))
}
