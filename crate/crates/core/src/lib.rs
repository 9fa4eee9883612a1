//! Exact-arithmetic operator calculus on Hochschild and cyclic complexes.
//!
//! Everything is computed over the rationals (or an Artinian test ring with a
//! rational basis); equality of results is literal equality of reduced
//! fractions. There are no floating-point numbers and no tolerances anywhere.
//!
//! Grading conventions used throughout:
//! * cohomological degrees; a homologically graded object `X_i` sits in
//!   cohomological degree `-i`;
//! * a cochain block of arity `n` (a map with `n` tensor slots) has degree
//!   `n - 1`;
//! * a chain with `n` shifted tensor factors has cohomological degree `-n`;
//! * the formal variable `u` has cohomological degree `2`, and the shift
//!   `s^r` adds `-r` to the degree of the underlying chain.

pub mod exactla;
pub mod algebra;
pub mod calculus;
pub mod cyclic;
pub mod duality;
pub mod mc;
pub mod cydeform;
pub mod linfty;
pub mod commutative;
pub mod report;

/// The scalar type used by every concrete computation: arbitrary-precision
/// rationals. The linear-algebra layer is generic over [`exactla::Field`];
/// this alias is the instantiation the rest of the crate uses.
pub type Rat = num_rational::BigRational;

/// Shorthand for building a `Rat` from an integer.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// Shorthand for building a `Rat` from a numerator/denominator pair.
pub fn ratq(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}
