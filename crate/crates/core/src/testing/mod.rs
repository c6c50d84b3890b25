//! Fuzzers and independent reference oracles for the property and acceptance suites.
//!
//! Nothing here is used by the library proper; the oracles deliberately share no
//! evaluation code with the production paths they check.

mod generate;
mod oracle;

pub use generate::{random_formula, random_trace, FormulaShape};
pub use oracle::{enumerate_satisfiable, naive_bool, naive_robustness, EnumerationLimit};
