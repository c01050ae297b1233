//! Graded linear λ-calculus with quantitative (V-)equational reasoning:
//! typing, rewriting, bound synthesis, and finite models to audit bounds.

pub mod quantale;
pub mod syntax;
pub mod typecheck;
pub mod equational;
pub mod prob_model;
pub mod bound;
pub mod vequation;
pub mod met_model;
pub mod oracles;
pub mod generator;

pub use quantale::{Ext, Grade, QValue, Quantale, QuantaleKind, Rat, Semiring, SemiringKind};
pub use syntax::{Context, Name, OpSym, Signature, Term, TypeExpr};
