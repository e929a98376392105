//! Latency requirements, the observer automata that measure them, and the
//! final bound query on an abstract network.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::EventSpec;
use crate::automata::{compose, ComposeError, Edge, Location, Model, Network, TimedAutomaton};
use crate::diag::Diagnostic;
use crate::explorer::{
    BuildOptions, ExploreError, Extremum, Mode, QueryError, StateFormula, Termination, ZoneGraph, DEFAULT_STATE_BUDGET,
};
use crate::rts::from_json_with_path;
use crate::rts::InputError;

pub const OBSERVER: &str = "Obs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequirementKind {
    /// Largest delay from an occurrence of the first event to the next
    /// occurrence of the second.
    SimpleMax,
    /// First-to-first chain `w -> r -> w2`.
    Ff,
    /// Last-to-first chain `w -> r -> w2`.
    Lf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Requirement {
    pub kind: RequirementKind,
    pub events: Vec<String>,
    pub mode: Mode,
}

impl Requirement {
    pub fn from_json(text: &str) -> Result<Requirement, InputError> {
        from_json_with_path(text)
    }

    pub fn simple_max(a: &str, b: &str) -> Requirement {
        Requirement {
            kind: RequirementKind::SimpleMax,
            events: vec![a.into(), b.into()],
            mode: Mode::Max,
        }
    }

    pub fn chain(kind: RequirementKind, w: &str, r: &str, w2: &str, mode: Mode) -> Requirement {
        Requirement {
            kind,
            events: vec![w.into(), r.into(), w2.into()],
            mode,
        }
    }
}

pub fn validate_requirement(req: &Requirement, e: &EventSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let arity = match req.kind {
        RequirementKind::SimpleMax => 2,
        RequirementKind::Ff | RequirementKind::Lf => 3,
    };
    if req.events.len() != arity {
        out.push(Diagnostic::error(
            "/events",
            format!("this requirement takes {arity} events, got {}", req.events.len()),
        ));
    }
    for (i, ev) in req.events.iter().enumerate() {
        if !e.events.contains(ev) {
            out.push(Diagnostic::error(
                format!("/events/{i}"),
                format!("undeclared event {ev}"),
            ));
        }
    }
    if arity == 3 {
        let mut v = req.events.clone();
        v.sort();
        v.dedup();
        if v.len() != req.events.len() {
            out.push(Diagnostic::error("/events", "chain events must be pairwise distinct"));
        }
    }
    if req.kind == RequirementKind::SimpleMax && req.mode == Mode::Min {
        out.push(Diagnostic::error(
            "/mode",
            "the simple observer ignores repeated start events and cannot measure minimal bounds",
        ));
    }
    out
}

/// Observer automaton `Obs` with clock `x` and measurement location `recv`.
/// Every edge receives on an event channel, except the silent restart edge
/// out of the committed `recv` of chain observers.
pub fn build_observer(req: &Requirement) -> TimedAutomaton {
    let ev = |i: usize| req.events[i].as_str();
    let (locations, edges) = match req.kind {
        RequirementKind::SimpleMax => (
            vec![Location::new("idle").initial(), Location::new("recv")],
            vec![
                Edge::new("idle", "recv").receive(ev(0)).reset(&["x"]),
                Edge::new("recv", "idle").receive(ev(1)),
            ],
        ),
        RequirementKind::Ff | RequirementKind::Lf => {
            let mut edges = vec![
                Edge::new("await_w_1", "await_r_1").receive(ev(0)).reset(&["x"]),
                Edge::new("await_r_1", "await_w_2").receive(ev(1)),
                Edge::new("await_w_2", "await_w_2").receive(ev(0)),
                Edge::new("await_w_2", "await_r_1").receive(ev(0)).reset(&["x"]),
                Edge::new("await_w_2", "recv").receive(ev(2)),
                Edge::new("recv", "await_w_1"),
            ];
            if req.kind == RequirementKind::Lf {
                edges.insert(1, Edge::new("await_r_1", "await_r_1").receive(ev(0)).reset(&["x"]));
            }
            (
                vec![
                    Location::new("await_w_1").initial(),
                    Location::new("await_r_1"),
                    Location::new("await_w_2"),
                    Location::new("recv").committed(),
                ],
                edges,
            )
        }
    };
    TimedAutomaton {
        name: OBSERVER.into(),
        clocks: vec!["x".into()],
        locations,
        edges,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error("invalid requirement: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("event channel {0} is not declared by the network")]
    UnknownChannel(String),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error("observer network does not compile: {0}")]
    Compile(String),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

impl BoundError {
    pub fn is_resource(&self) -> bool {
        matches!(self, BoundError::Explore(ExploreError::BudgetExceeded { .. }))
    }
}

#[derive(Debug, Clone)]
pub struct BoundOptions {
    pub state_budget: usize,
    /// Largest latency the measurement clock tracks; derived from the
    /// network constants when absent.
    pub ceiling: Option<i64>,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            state_budget: DEFAULT_STATE_BUDGET,
            ceiling: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub bound: Extremum,
    pub states_explored: usize,
    pub wall_time: f64,
    /// Set when the chain never completes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
}

/// Extremum of the observer clock at `recv` over `network || Obs`.
pub fn compute_bound(network: &Network, req: &Requirement, opts: &BoundOptions) -> Result<BoundResult, BoundError> {
    let started = Instant::now();
    for ev in &req.events {
        if network.channel(ev).is_none() {
            return Err(BoundError::UnknownChannel(ev.clone()));
        }
    }
    let observed = compose(&[
        network.clone(),
        Network {
            automata: vec![build_observer(req)],
            ..Default::default()
        },
    ])?;
    let model = Model::compile(&observed).map_err(|e| BoundError::Compile(e.to_string()))?;
    let recv = StateFormula::parse(&model, &format!("{OBSERVER}.recv")).expect("observer has recv");
    let clock = format!("{OBSERVER}.x");
    let g = ZoneGraph::build(
        &model,
        &BuildOptions {
            termination: Termination::Extrapolate {
                exempt: vec![model.clock_index(&clock).expect("observer clock")],
                ceiling: opts.ceiling,
            },
            state_budget: opts.state_budget,
            formulas: vec![recv.clone()],
            ..Default::default()
        },
    )?;
    let bound = g.extremum(&recv, &clock, req.mode)?;
    let hint = (bound == Extremum::Unsatisfied).then(|| {
        format!(
            "the chain {} never completes; check that the requirement describes a bound that exists",
            req.events.join(" -> ")
        )
    });
    Ok(BoundResult {
        bound,
        states_explored: g.stats().explored,
        wall_time: started.elapsed().as_secs_f64(),
        hint,
    })
}
