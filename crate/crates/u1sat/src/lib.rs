//! Satisfiability toolkit for the uniform one-dimensional fragment (U1) of
//! first-order logic over linearly ordered structures.
//!
//! The crate provides:
//!
//! - a parser, printer and fragment checker for U1 and its variants
//!   ([`formula`], [`fragment`]),
//! - generalized Scott normal form conversion ([`normal_form`]),
//! - 1-types, k-tables and royalty classification ([`types_tables`]),
//! - finite relational structures with model checking and bounded
//!   enumeration ([`structures`]),
//! - cloning extensions, courts, canonical partitions and canonical
//!   admissibility tuples ([`constructions`]),
//! - admissibility tuples, their six-condition classification and a
//!   deterministic budgeted candidate enumeration ([`admissibility`]),
//! - the pseudo-ordering axiom sentence `Ax(Γ)` ([`axioms`]),
//! - a budgeted decision pipeline with a brute-force ordered oracle,
//!   a backtracking model finder and certificate verification ([`solver`]),
//! - reconstruction of ordered models from certificates, finite or
//!   symbolic ([`reconstruction`]),
//! - the domino tiling reduction into U1 with two free linear orders
//!   ([`reductions`]).
//!
//! All solver entry points are deterministic under fixed budgets; the
//! `parallel` feature (on by default) parallelizes candidate batches with
//! rayon without changing results.

pub mod admissibility;
pub mod axioms;
pub mod constructions;
pub mod corpus;
pub mod formula;
pub mod fragment;
pub mod normal_form;
pub mod par;
pub mod parser;
pub mod reconstruction;
pub mod reductions;
pub mod solver;
pub mod structures;
pub mod types_tables;
pub mod vocab;

pub use formula::{Formula, QuantKind};
pub use fragment::{check_fragment, FragmentProfile, FragmentReport, ViolationKind};
pub use normal_form::{to_normal_form, validate_normal_form, NormalFormSentence};
pub use parser::parse_formula;
pub use solver::{Budgets, SolveVerdict};
pub use structures::FiniteStructure;
pub use types_tables::{KTable, OneType};
pub use vocab::Vocabulary;
