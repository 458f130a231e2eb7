//! Explicit-state reference semantics over small finite universes.
//!
//! Used to cross-check the symbolic procedures: bounded forward search for
//! counterexample traces, exhaustive model enumeration, and a bounded test
//! of the cover extension property.

mod eval;
mod explore;
mod models;
mod universe;

use num::rational::Rational64;
use thiserror::Error;

pub use eval::{Db, State, Symbols};
pub use explore::{explore, Exploration, Explorer, Step, Target, Trace};
pub use models::{bounded_sat, check_cover_by_extension, enumerate_dbs, enumerate_models, Model};
pub use universe::{ArithDomain, Bounds, Universe};

/// A carrier element. `Elem(0)` is `undef` in id and value sorts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Val {
    Elem(u32),
    Num(Rational64),
    Bool(bool),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("bounded universe too large: more than {limit} {what}")]
    UniverseTooLarge { what: String, limit: usize },
    #[error("not supported by the explicit-state oracle: {0}")]
    Unsupported(String),
}
