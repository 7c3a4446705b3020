//! Dynamic evaluation of Hanf-normal-form (HNF) queries over relational
//! databases whose Gaifman graph has bounded degree.
//!
//! The engine maintains a fixed query under single-tuple inserts and deletes
//! and serves four read operations whose cost does not grow with the size of
//! the database: Boolean answering, tuple membership testing, result
//! counting, and constant-delay enumeration of the result set.
//!
//! Module map:
//! - [`db`]: schema, update commands, the store itself (with its Gaifman
//!   adjacency and degree guard), neighborhood extraction and isomorphism.
//! - [`logic`]: abstract syntax for FO+MOD and HNF queries plus the
//!   brute-force evaluation oracle used for differential testing.
//! - [`sexp`] / [`parse`]: the s-expression surface syntax.
//! - [`types`]: canonical forms for neighborhood types, the intern table,
//!   signatures, and the acceptance predicate for HNF queries.
//! - [`sphere`]: the incrementally maintained substrate mapping every
//!   relevant tuple to its neighborhood type, with conflict edges.
//! - [`answer`]: counter-based maintenance of Boolean (sentence) queries.
//! - [`tester`]: O(k^2) membership tests against accepted signatures.
//! - [`counter`]: inclusion-exclusion result counting over colored views.
//! - [`enumerate`]: constant-delay enumeration with skip tables.
//! - [`engine`]: ties the pieces together behind one update/query facade.
//! - [`ops`]: the elementary-operation counter used by cost assertions.

pub mod answer;
pub mod counter;
pub mod db;
pub mod engine;
pub mod enumerate;
pub mod logic;
pub mod ops;
pub mod parse;
pub mod sexp;
pub mod sphere;
pub mod tester;
pub mod types;

pub use db::{Constant, Database, NeighborhoodDb, RelId, Schema, Tuple, UpdateCmd, UpdateOutcome};
pub use engine::Engine;
