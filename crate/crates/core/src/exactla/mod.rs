//! Exact linear algebra over a field, plus the Artinian coefficient rings
//! used by the deformation functors.
//!
//! All elimination is deterministic: columns are processed left to right, the
//! pivot is the surviving row of smallest index, and free variables are set
//! to zero. Reruns therefore produce identical solutions, kernel bases and
//! homology representatives.

mod matrix;
mod homology;
mod testring;

pub use homology::{verify_chain_map, Homology};
pub use matrix::{Echelon, SolveOutcome, SparseMat};
pub use testring::{lift_coords, reduce_coords, CoeffRing, Qq, Rr, TestRing};

use crate::Rat;
use num_traits::{One, Zero};

/// Exact field scalars. The concrete instantiation used everywhere is
/// [`crate::Rat`]; the trait keeps the elimination kernel independent of it.
pub trait Field:
    Clone
    + PartialEq
    + std::fmt::Debug
    + std::fmt::Display
    + Zero
    + One
    + std::ops::Neg<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Div<Output = Self>
{
}

impl Field for Rat {}

/// Errors from the linear-algebra layer.
#[derive(Debug, thiserror::Error)]
pub enum LinearError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("composite of the two differentials is nonzero at column {col}")]
    NotAComplex { col: usize },
    #[error("vector is not in the span of the cycle space")]
    NotACycle,
    #[error("linear system is inconsistent")]
    Inconsistent,
}

/// Parse a rational written as `p` or `p/q`.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: num_bigint::BigInt = num.parse().map_err(|e| format!("bad numerator {num:?}: {e}"))?;
    let d: num_bigint::BigInt = den.parse().map_err(|e| format!("bad denominator {den:?}: {e}"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(Rat::new(n, d))
}

/// Format a rational as `p` or `p/q`.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
