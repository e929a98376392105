//! Exact inter-core timing bounds for partitioned fixed-priority multicore
//! systems, computed with a small timed-automata model checker.
//!
//! The pipeline is: describe the system ([`rts`]) and where events are
//! produced ([`abstraction::EventSpec`]), extract the exact absolute
//! production intervals on each core network, generate one small exact
//! abstraction automaton per core, and measure latencies with an observer
//! ([`bounds`]). The [`oracle`] module is an independent integer-time
//! explorer used to cross-check everything on small instances.

pub mod abstraction;
pub mod automata;
pub mod bounds;
pub mod dbm;
pub mod diag;
pub mod explorer;
pub mod oracle;
pub mod rts;

pub use diag::{Diagnostic, Severity};
