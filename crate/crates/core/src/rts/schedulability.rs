use serde::Serialize;
use thiserror::Error;

use super::{build_core_network, build_ref_ta, GenerateError, RtsSpec};
use crate::automata::{compose, Model, Network};
use crate::explorer::{BuildOptions, ExploreError, Extremum, Mode, QueryError, StateFormula, ZoneGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchedulabilityError {
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskResponse {
    pub task: String,
    pub period: u64,
    /// Latest completion relative to activation.
    pub wcrt: Extremum,
    pub schedulable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchedulabilityReport {
    pub core: String,
    pub hyperperiod: u64,
    pub tasks: Vec<TaskResponse>,
    pub states: usize,
}

impl SchedulabilityReport {
    pub fn schedulable(&self) -> bool {
        self.tasks.iter().all(|t| t.schedulable)
    }
}

/// `N_c || Ref(hp)`: the core network bounded to one hyperperiod.
pub fn bounded_core_network(r: &RtsSpec, core: &str, horizon: i64) -> Result<Network, GenerateError> {
    let n = build_core_network(r, core)?;
    let reference = Network {
        automata: vec![build_ref_ta(horizon)],
        ..Default::default()
    };
    Ok(compose(&[n, reference]).expect("Ref never clashes with generated names"))
}

/// Worst-case response time of every task of `core`, read off the task's
/// `x` clock at its `end` location.
///
/// The horizon runs one longest period past the hyperperiod so that a job
/// released just before it can still be seen overrunning its deadline.
pub fn check_schedulability(
    r: &RtsSpec,
    core: &str,
    state_budget: usize,
) -> Result<SchedulabilityReport, SchedulabilityError> {
    let hp = r
        .hyperperiod(core)
        .ok_or_else(|| GenerateError::EmptyPartition(core.into()))?;
    let longest = r.partition(core).iter().map(|t| t.period.get()).max().unwrap_or(0);
    let net = bounded_core_network(r, core, (hp + longest) as i64)?;
    let model = Model::compile(&net).expect("generated networks are well-formed");
    let g = ZoneGraph::build(
        &model,
        &BuildOptions {
            state_budget,
            ..Default::default()
        },
    )?;
    let mut tasks = Vec::new();
    for t in r.partition(core) {
        let f = StateFormula::parse(&model, &format!("{}.end", t.name)).expect("generated names parse");
        let wcrt = g.extremum(&f, &format!("{}.x", t.name), Mode::Max)?;
        let mut schedulable = matches!(wcrt, Extremum::Finite { value, .. } if value <= t.period.get() as i64);
        // an active job past its deadline, whether or not it ever ends
        let period = t.period.get();
        for l in model.automata[model.automaton_index(&t.name).expect("task automaton")]
            .locations
            .iter()
        {
            if !schedulable || l.name == "wait" || l.name == "start" {
                continue;
            }
            let f = StateFormula::parse(&model, &format!("{}.{} and {}.x > {period}", t.name, l.name, t.name))
                .expect("generated names parse");
            schedulable = !g.reachable(&f)?;
        }
        tasks.push(TaskResponse {
            task: t.name.clone(),
            period: t.period.get(),
            wcrt,
            schedulable,
        });
    }
    Ok(SchedulabilityReport {
        core: core.into(),
        hyperperiod: hp,
        tasks,
        states: g.stats().stored,
    })
}
