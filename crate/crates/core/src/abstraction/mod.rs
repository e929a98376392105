//! Exact production intervals of events on each core network, and the small
//! automata that reproduce exactly those intervals.

mod events;
mod generate;
mod intervals;

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::automata::{ComposeError, Network, TimedAutomaton};
use crate::diag::Diagnostic;
use crate::explorer::{ExploreError, QueryError, DEFAULT_STATE_BUDGET};
use crate::rts::{validate_rts, GenerateError, RtsSpec};

pub use events::{validate_event_spec, Emission, EventSpec, Producer};
pub use generate::{
    abstraction_name, abstraction_part, compose_abstract_network, generate_abstraction_general,
    generate_abstraction_single_job, generate_coarse_abstraction,
};
pub use intervals::{compute_exact_intervals, compute_exact_intervals_on, CoreIntervals, IvTable, SegmentIntervals};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("invalid input: {}", .0.iter().filter(|d| d.is_error()).map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error("no task on core {0} produces an event")]
    NoProducer(String),
    #[error("{task}/{segment} produces nothing in instance {k}; is the system schedulable?")]
    EmptyPeriod { task: String, segment: String, k: usize },
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    NetworkMismatch(String),
}

impl AbstractionError {
    /// True for failures caused by resource limits rather than by the input.
    pub fn is_resource(&self) -> bool {
        matches!(self, AbstractionError::Explore(ExploreError::BudgetExceeded { .. }))
    }
}

#[derive(Debug, Clone)]
pub struct AbstractOptions {
    pub force: bool,
    pub coarse: bool,
    pub state_budget: usize,
    /// Worker threads for the per-core stages; 0 picks a default.
    pub jobs: usize,
    /// Core networks to use instead of generating them, by core name.
    pub core_networks: Option<BTreeMap<String, Network>>,
}

impl Default for AbstractOptions {
    fn default() -> Self {
        AbstractOptions {
            force: false,
            coarse: false,
            state_budget: DEFAULT_STATE_BUDGET,
            jobs: 0,
            core_networks: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AbstractionResult {
    pub intervals: IvTable,
    /// One automaton per producing core, in core declaration order.
    pub automata: Vec<TimedAutomaton>,
    /// Their composition with one broadcast channel per event.
    pub network: Network,
    pub warnings: Vec<Diagnostic>,
}

/// Validates both inputs. Returns the warnings, or every diagnostic as an
/// error when one of them is an error.
pub fn check_inputs(r: &RtsSpec, e: &EventSpec, force: bool) -> Result<Vec<Diagnostic>, AbstractionError> {
    let mut d = validate_rts(r).diagnostics;
    if !d.iter().any(Diagnostic::is_error) {
        d.extend(validate_event_spec(r, e, force));
    }
    if d.iter().any(Diagnostic::is_error) {
        Err(AbstractionError::Invalid(d))
    } else {
        Ok(d)
    }
}

fn run_parallel<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Interval extraction on every producing core.
pub fn compute_interval_table(r: &RtsSpec, e: &EventSpec, opts: &AbstractOptions) -> Result<IvTable, AbstractionError> {
    let cores = e.producing_cores(r);
    let results: Vec<Result<CoreIntervals, AbstractionError>> = run_parallel(opts.jobs, || {
        cores
            .par_iter()
            .map(|c| match opts.core_networks.as_ref() {
                Some(nets) => {
                    let n = nets.get(c).ok_or_else(|| {
                        AbstractionError::NetworkMismatch(format!("no network supplied for core {c}"))
                    })?;
                    compute_exact_intervals_on(n, r, e, c, opts.state_budget)
                }
                None => compute_exact_intervals(r, e, c, opts.state_budget),
            })
            .collect()
    });
    Ok(IvTable {
        cores: results.into_iter().collect::<Result<_, _>>()?,
    })
}

/// Whole pipeline: validation, interval extraction, generation and
/// composition.
pub fn abstract_system(
    r: &RtsSpec,
    e: &EventSpec,
    opts: &AbstractOptions,
) -> Result<AbstractionResult, AbstractionError> {
    let warnings = check_inputs(r, e, opts.force)?;
    let intervals = compute_interval_table(r, e, opts)?;
    let automata = intervals
        .cores
        .iter()
        .map(|iv| {
            if opts.coarse {
                generate_coarse_abstraction(e, iv)
            } else {
                generate_abstraction_general(e, iv)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let parts: Vec<Network> = automata.iter().map(|a| abstraction_part(e, a.clone())).collect();
    let network = compose_abstract_network(&parts)?;
    Ok(AbstractionResult {
        intervals,
        automata,
        network,
        warnings,
    })
}
