//! Forward symbolic exploration of networks of timed automata.
//!
//! Semantics: committed locations forbid delay and restrict the next move
//! to one involving a committed automaton; handshake channels pair one
//! emitter with one receiver; broadcast channels pair an emitter with every
//! automaton that has an enabled receiving edge. A synchronising move is
//! disabled on the part of the zone where a move on a channel of strictly
//! higher priority, sharing an automaton with it, is enabled. Silent moves
//! never block and are never blocked.

mod formula;
mod graph;
mod intervals;
pub mod moves;
mod packed;
mod query;

use thiserror::Error;

pub use formula::{FormulaError, StateFormula};
pub use graph::{describe_zone, BuildOptions, Stats, Termination, ZoneGraph, DEFAULT_STATE_BUDGET};
pub use intervals::IntervalSet;
pub use query::{Extremum, Mode};

use crate::automata::EvalError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("state budget of {budget} symbolic states exhausted after expanding {explored}")]
    BudgetExceeded { budget: usize, explored: usize },
    #[error("{error}; path to the failing state:\n{trace}")]
    Eval { error: EvalError, trace: String },
    #[error("the initial valuation violates an invariant")]
    InitialInvariant,
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown clock {0}")]
    UnknownClock(String),
    #[error("clock {0} is subject to extrapolation; exempt it to query its value")]
    ExtrapolatedClock(String),
    #[error("clock {clock} exceeds the extrapolation ceiling {ceiling}; raise the ceiling")]
    CeilingExceeded { clock: String, ceiling: i64 },
    #[error("formula '{0}' uses constants not registered before exploration")]
    Unregistered(String),
    #[error("difference constraints cannot be queried on an extrapolated graph")]
    Diagonal,
    #[error("clock {0} is unbounded")]
    Unbounded(String),
    #[error("clock {clock} has a strict endpoint in {state}")]
    StrictEndpoint { clock: String, state: String },
    #[error("discrete evaluation failed: {0}")]
    Eval(String),
}
