//! Decision procedures for the spectra of two-variable logic with counting.
//!
//! The pipeline parses two-variable sentences with counting quantifiers,
//! rewrites them over complete structures into quantified modal logic with
//! counting, compiles the result into a positive-existential Presburger
//! formula whose models are exactly the cardinalities of finite models, and
//! answers spectrum queries (membership, enumeration, witness construction,
//! unary-image membership) against it. Everything is cross-checked by
//! brute-force oracles at small scale.

pub mod error;
pub mod extnat;
pub mod graphs;
pub mod oracle;
pub mod presburger;

pub use error::{Budget, Error, Result};
