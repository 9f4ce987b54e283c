//! Exact arithmetic substrate: cyclotomic integers, multivariate Laurent
//! polynomials over them, truncated formal series, formal delta expressions,
//! and exact fractions of polynomials.
//!
//! Conventions used throughout the crate:
//! - `v` is the reserved quantum variable with `q = v^2`, so half-integer
//!   powers of `q` stay polynomial in `v`.
//! - roots of unity live in `Z[x]/Phi_L(x)`; the level `L` of a computation is
//!   the lcm of the levels of its inputs.

mod cyclo;
mod delta;
mod frac;
mod laurent;
mod series;

pub use cyclo::{cyclotomic_poly, euler_phi, CycloElem};
pub use delta::{delta_normalize, series_window_compare, DeltaExpr, DeltaTerm, WindowReport};
pub use frac::Ratio;
pub use laurent::{CycloLaurent, Op};
pub use series::{iota_expand, Orientation, TruncSeries};

use std::fmt;

/// Hard cap on cyclotomic levels; all in-scope computations stay far below it.
pub const MAX_LEVEL: u32 = 1 << 14;

/// Errors from the exact-arithmetic layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExactError {
    /// Binary operation on elements of different cyclotomic levels.
    LevelMismatch { left: u32, right: u32 },
    /// Requested level exceeds `MAX_LEVEL` or is zero.
    LevelCap { level: u32 },
    /// Series with incompatible expansion variables or truncation orders.
    SeriesMismatch { detail: String },
    /// Exact division failed: divisor does not divide the operand.
    NotDivisible { detail: String },
    /// A coefficient or scale that must be invertible is not.
    NotUnit { detail: String },
    /// An argument that must be a single monomial has several terms.
    NotMonomial { detail: String },
    /// Denominator factor list describes the zero polynomial.
    ZeroDenominator,
    /// Expansion input is not homogeneous in the two series variables.
    NotHomogeneous { detail: String },
    /// Delta derivative orders above 1 are not represented.
    DerivOrder { order: u32 },
    /// Pole of multiplicity above 2 in a window comparison.
    RepeatedRoot { mult: u32 },
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactError::LevelMismatch { left, right } => {
                write!(f, "cyclotomic level mismatch: {left} vs {right}")
            }
            ExactError::LevelCap { level } => write!(f, "cyclotomic level {level} out of range"),
            ExactError::SeriesMismatch { detail } => write!(f, "series mismatch: {detail}"),
            ExactError::NotDivisible { detail } => write!(f, "not divisible: {detail}"),
            ExactError::NotUnit { detail } => write!(f, "not a unit: {detail}"),
            ExactError::NotMonomial { detail } => write!(f, "not a monomial: {detail}"),
            ExactError::ZeroDenominator => write!(f, "denominator is zero"),
            ExactError::NotHomogeneous { detail } => write!(f, "not homogeneous: {detail}"),
            ExactError::DerivOrder { order } => {
                write!(f, "delta derivative order {order} not supported (max 1)")
            }
            ExactError::RepeatedRoot { mult } => {
                write!(f, "pole multiplicity {mult} not supported (max 2)")
            }
        }
    }
}

impl std::error::Error for ExactError {}
