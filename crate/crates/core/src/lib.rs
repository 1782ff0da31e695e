//! Finite-model workbench for team-semantics logics.
//!
//! The crate evaluates formulas built from first-order literals, dependency
//! atoms (`dep`, `inc`, `indep`, `excl`), splitting and team-level
//! connectives, and four quantifier variants over finite structures and
//! teams, entirely by exhaustive search within explicit budgets. On top of
//! the evaluator sit checkers for structural properties of team satisfaction
//! (flatness, closure laws, locality, substitution), a team-level
//! ultraproduct construction, a translation into existential second-order
//! sentences, and a coherence system for merging partial teams.

pub mod enumerate;
pub mod error;
pub mod compactness;
pub mod corpus;
pub mod eso;
pub mod eval;
pub mod formula;
pub mod model;
pub mod properties;
pub mod suite;
pub mod ultraproduct;
pub mod team;

pub use error::{Error, Result};
pub use eval::{
    check_substitution, eval, eval_flat_fo, eval_with_options, sat_search, sat_teams,
    team_substitute_term, verify_certificate, Certificate, EvalBudget, EvalOptions, Evaluator,
};
pub use formula::{Formula, Term};
pub use model::{Signature, Structure};
pub use team::{Assignment, SupplementFunction, Team};
