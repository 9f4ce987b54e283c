//! Exact computer algebra for generalized Cartan matrices, diagram foldings,
//! twisted quantum Serre polynomial families, and the identity checks that
//! support them.
//!
//! Everything here is exact: coefficients live in cyclotomic integer rings
//! extended by a formal quantum unit `v` (with `q = v^2`), series are carried
//! to explicit truncation orders, and every verification either produces an
//! identically-zero residual or reports the nonzero witness.

pub mod exactalg;
pub mod gcm;
pub mod folding;
pub mod catalogue;
pub mod serrepoly;
pub mod identities;
pub mod gcomb;
pub mod rootcheck;
