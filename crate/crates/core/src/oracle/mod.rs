//! Brute-force integer-time semantics of networks, written independently of
//! the zone-based explorer and used as ground truth on small instances.
//!
//! Time advances in unit steps. Between two steps every action sequence is
//! explored. For closed constraints (no `<` or `>`) the integer instants
//! reachable this way are exactly the integer instants reachable in dense
//! time, so networks with strict constraints are refused.

mod monitors;

use std::collections::{BTreeSet, HashSet};
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

use crate::automata::{all_hold, CSync, Model, Network};
use crate::dbm::Constraint;

pub use monitors::{
    instrument_core_network, oracle_bound, oracle_emissions, oracle_intervals, oracle_intervals_on, oracle_pairs,
    ChainMonitor, EventLog, PairLog,
};

pub const DEFAULT_ORACLE_BUDGET: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("strict clock constraints cannot be explored in integer time")]
    OpenConstraint,
    #[error("network does not compile: {0}")]
    Compile(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error("more than {budget} concrete states")]
    BudgetExceeded { budget: usize },
    #[error("the initial state violates an invariant")]
    InitialInvariant,
    #[error("{0}")]
    Input(String),
}

#[derive(Debug, Clone)]
pub struct OracleOptions {
    /// Last absolute instant explored.
    pub horizon: i64,
    pub state_budget: usize,
    /// Qualified clocks kept exact; the others saturate one unit above
    /// their largest constant.
    pub exact_clocks: Vec<String>,
}

impl OracleOptions {
    pub fn new(horizon: i64) -> Self {
        OracleOptions {
            horizon,
            state_budget: DEFAULT_ORACLE_BUDGET,
            exact_clocks: Vec::new(),
        }
    }
}

/// Locations, discrete values and integer clock values at an instant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConcreteState {
    pub locs: Box<[u32]>,
    pub disc: Box<[i64]>,
    /// Indexed like `Model::clocks`.
    pub clocks: Box<[i64]>,
    pub time: i64,
}

impl ConcreteState {
    /// Value of a clock by DBM index (0 is the reference clock).
    fn value(&self, i: usize) -> i64 {
        if i == 0 {
            0
        } else {
            self.clocks[i - 1]
        }
    }

    fn satisfies(&self, c: &Constraint) -> bool {
        let d = self.value(c.i) - self.value(c.j);
        match c.bound.value() {
            None => true,
            Some(v) if c.bound.is_strict() => d < v,
            Some(v) => d <= v,
        }
    }

    pub fn location<'m>(&self, model: &'m Model, automaton: usize) -> &'m str {
        &model.automata[automaton].locations[self.locs[automaton] as usize].name
    }
}

/// One fired action: `(automaton, edge)` pairs, emitter first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub parts: Vec<(usize, usize)>,
    pub channel: Option<usize>,
}

impl Step {
    /// Emitted channel name and emitting automaton, if any.
    pub fn emission<'m>(&self, model: &'m Model) -> Option<(&'m str, &'m str)> {
        let ch = self.channel?;
        let (a, _) = self.parts[0];
        Some((&model.channels[ch].name, &model.automata[a].name))
    }
}

/// Observes an exploration. Its state is part of the explored state, so
/// it may branch; observations are collected into a set.
pub trait Monitor {
    type State: Clone + Eq + Hash;
    type Obs: Ord + Clone;

    fn initial(&self) -> Self::State;

    fn on_state(&self, _model: &Model, _s: &ConcreteState, _m: &Self::State, _out: &mut Vec<Self::Obs>) {}

    fn on_step(
        &self,
        model: &Model,
        m: &Self::State,
        step: &Step,
        time: i64,
        out: &mut Vec<(Self::State, Option<Self::Obs>)>,
    );
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exploration<O> {
    pub states: usize,
    pub observations: BTreeSet<O>,
}

struct Semantics<'m> {
    model: &'m Model,
    /// Saturation value per clock (indexed like `Model::clocks`).
    caps: Vec<i64>,
}

impl<'m> Semantics<'m> {
    fn new(model: &'m Model, exact: &[String]) -> Result<Self, OracleError> {
        if model.has_strict {
            return Err(OracleError::OpenConstraint);
        }
        let mut caps = vec![0i64; model.clocks.len()];
        let mut note = |c: &Constraint| {
            let v = c.bound.value().map_or(0, i64::abs);
            for k in [c.i, c.j] {
                if k > 0 {
                    caps[k - 1] = caps[k - 1].max(v + 1);
                }
            }
        };
        for a in &model.automata {
            for l in &a.locations {
                l.invariant.iter().for_each(&mut note);
            }
            for e in &a.edges {
                e.clock_guard.iter().for_each(&mut note);
            }
        }
        for (k, name) in model.clocks.iter().enumerate() {
            if model.has_diagonal || exact.contains(name) {
                caps[k] = i64::MAX;
            }
        }
        Ok(Semantics { model, caps })
    }

    fn invariants_hold(&self, s: &ConcreteState) -> bool {
        s.locs.iter().enumerate().all(|(a, &l)| {
            self.model.automata[a].locations[l as usize]
                .invariant
                .iter()
                .all(|c| s.satisfies(c))
        })
    }

    fn committed(&self, s: &ConcreteState) -> Vec<bool> {
        s.locs
            .iter()
            .enumerate()
            .map(|(a, &l)| self.model.automata[a].locations[l as usize].committed)
            .collect()
    }

    fn enabled_edges(&self, s: &ConcreteState) -> Result<Vec<Vec<usize>>, OracleError> {
        let mut out = Vec::with_capacity(s.locs.len());
        for (a, aut) in self.model.automata.iter().enumerate() {
            let mut v = Vec::new();
            for (ei, e) in aut.edges.iter().enumerate() {
                if e.source != s.locs[a] as usize || !e.clock_guard.iter().all(|c| s.satisfies(c)) {
                    continue;
                }
                if all_hold(&e.guard, &self.model.layout, &s.disc).map_err(|e| OracleError::Eval(e.to_string()))? {
                    v.push(ei);
                }
            }
            out.push(v);
        }
        Ok(out)
    }

    fn steps(&self, s: &ConcreteState) -> Result<Vec<Step>, OracleError> {
        let model = self.model;
        let en = self.enabled_edges(s)?;
        let sync = |a: usize, e: usize| model.automata[a].edges[e].sync;
        let receivers = |b: usize, ch: usize| -> Vec<usize> {
            en[b]
                .iter()
                .copied()
                .filter(|&f| sync(b, f) == CSync::Receive(ch))
                .collect()
        };
        let mut steps = Vec::new();
        for a in 0..en.len() {
            for &e in &en[a] {
                match sync(a, e) {
                    CSync::Silent => steps.push(Step {
                        parts: vec![(a, e)],
                        channel: None,
                    }),
                    CSync::Receive(_) => {}
                    CSync::Emit(ch) if model.channels[ch].kind == crate::automata::ChannelKind::Broadcast => {
                        let mut partial = vec![vec![(a, e)]];
                        for b in (0..en.len()).filter(|&b| b != a) {
                            let rx = receivers(b, ch);
                            if rx.is_empty() {
                                continue;
                            }
                            let mut next = Vec::new();
                            for p in &partial {
                                for &f in &rx {
                                    let mut q = p.clone();
                                    q.push((b, f));
                                    next.push(q);
                                }
                            }
                            partial = next;
                        }
                        steps.extend(partial.into_iter().map(|parts| Step {
                            parts,
                            channel: Some(ch),
                        }));
                    }
                    CSync::Emit(ch) => {
                        for b in (0..en.len()).filter(|&b| b != a) {
                            for f in receivers(b, ch) {
                                steps.push(Step {
                                    parts: vec![(a, e), (b, f)],
                                    channel: Some(ch),
                                });
                            }
                        }
                    }
                }
            }
        }
        let committed = self.committed(s);
        if committed.iter().any(|&c| c) {
            steps.retain(|st| st.parts.iter().any(|&(a, _)| committed[a]));
        }
        // a synchronisation yields to a higher-priority one over a shared automaton
        let prio = |st: &Step| st.channel.map(|c| model.channels[c].priority);
        let blocked: Vec<bool> = steps
            .iter()
            .map(|st| {
                let Some(p) = prio(st) else { return false };
                steps.iter().any(|o| {
                    prio(o).is_some_and(|q| q > p) && o.parts.iter().any(|x| st.parts.iter().any(|y| x.0 == y.0))
                })
            })
            .collect();
        Ok(steps
            .into_iter()
            .zip(blocked)
            .filter(|(_, b)| !b)
            .map(|(s, _)| s)
            .collect())
    }

    fn fire(&self, s: &ConcreteState, st: &Step) -> Result<Option<ConcreteState>, OracleError> {
        let mut t = s.clone();
        for &(a, e) in &st.parts {
            let edge = &self.model.automata[a].edges[e];
            for u in &edge.updates {
                u.apply(&self.model.layout, &mut t.disc)
                    .map_err(|e| OracleError::Eval(e.to_string()))?;
            }
            for &r in &edge.resets {
                t.clocks[r - 1] = 0;
            }
            t.locs[a] = edge.target as u32;
        }
        Ok(self.invariants_hold(&t).then_some(t))
    }

    fn delay(&self, s: &ConcreteState) -> Option<ConcreteState> {
        if self.committed(s).iter().any(|&c| c) {
            return None;
        }
        let mut t = s.clone();
        t.time += 1;
        for (k, v) in t.clocks.iter_mut().enumerate() {
            *v = (*v + 1).min(self.caps[k]);
        }
        self.invariants_hold(&t).then_some(t)
    }
}

/// Explores `model` up to the horizon under `monitor`.
pub fn explore_with<M: Monitor>(
    model: &Model,
    monitor: &M,
    opts: &OracleOptions,
) -> Result<Exploration<M::Obs>, OracleError> {
    let sem = Semantics::new(model, &opts.exact_clocks)?;
    let init = ConcreteState {
        locs: model.initial_locations(),
        disc: model.layout.initial(),
        clocks: vec![0; model.clocks.len()].into(),
        time: 0,
    };
    if !sem.invariants_hold(&init) {
        return Err(OracleError::InitialInvariant);
    }
    let mut observations = BTreeSet::new();
    let mut total = 0usize;
    let mut frontier: Vec<(ConcreteState, M::State)> = vec![(init, monitor.initial())];
    let mut obs = Vec::new();
    let mut next_mon = Vec::new();
    loop {
        // every action sequence at the current instant
        let mut layer: HashSet<(ConcreteState, M::State)> = HashSet::new();
        let mut stack = Vec::new();
        for n in frontier.drain(..) {
            if layer.insert(n.clone()) {
                stack.push(n);
            }
        }
        while let Some((s, m)) = stack.pop() {
            monitor.on_state(model, &s, &m, &mut obs);
            observations.extend(obs.drain(..));
            for st in sem.steps(&s)? {
                let Some(t) = sem.fire(&s, &st)? else { continue };
                monitor.on_step(model, &m, &st, s.time, &mut next_mon);
                for (m2, o) in next_mon.drain(..) {
                    if let Some(o) = o {
                        observations.insert(o);
                    }
                    let n = (t.clone(), m2);
                    if !layer.contains(&n) {
                        layer.insert(n.clone());
                        stack.push(n);
                    }
                }
            }
            if total + layer.len() > opts.state_budget {
                return Err(OracleError::BudgetExceeded {
                    budget: opts.state_budget,
                });
            }
        }
        total += layer.len();
        let Some((any, _)) = layer.iter().next() else { break };
        if any.time >= opts.horizon {
            break;
        }
        let mut next: HashSet<(ConcreteState, M::State)> = HashSet::new();
        for (s, m) in layer {
            if let Some(t) = sem.delay(&s) {
                next.insert((t, m));
            }
        }
        frontier = next.into_iter().collect();
        if frontier.is_empty() {
            break;
        }
    }
    Ok(Exploration {
        states: total,
        observations,
    })
}

pub fn compile(n: &Network) -> Result<Model, OracleError> {
    Model::compile(n).map_err(|e| OracleError::Compile(e.to_string()))
}

/// An emission observed at an integer instant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TraceEvent {
    pub time: i64,
    pub event: String,
    pub automaton: String,
}

/// All states up to the horizon, with every emission that occurs.
pub fn digitized_explore(n: &Network, opts: &OracleOptions) -> Result<Exploration<TraceEvent>, OracleError> {
    explore_with(&compile(n)?, &EventLog, opts)
}

/// `event,time,automaton` lines with a header.
pub fn events_csv<'a>(events: impl IntoIterator<Item = &'a TraceEvent>) -> String {
    let mut s = String::from("event,time,automaton\n");
    for e in events {
        s.push_str(&format!("{},{},{}\n", e.event, e.time, e.automaton));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{Channel, ClockAtom, CmpOp, Edge, Location, TimedAutomaton};

    fn single(inv: i64) -> Network {
        Network {
            automata: vec![TimedAutomaton {
                name: "A".into(),
                clocks: vec!["x".into()],
                locations: vec![Location::new("l")
                    .initial()
                    .with_invariant(vec![ClockAtom::le("x", inv)])],
                edges: vec![],
            }],
            ..Default::default()
        }
    }

    #[test]
    fn invariant_only_automaton() {
        let r = digitized_explore(&single(5), &OracleOptions::new(100)).unwrap();
        assert_eq!(r.states, 6);
        assert!(r.observations.is_empty());
    }

    #[test]
    fn strict_constraints_are_refused() {
        let mut n = single(5);
        n.automata[0].locations[0].invariant[0].op = CmpOp::Lt;
        assert_eq!(
            digitized_explore(&n, &OracleOptions::new(10)),
            Err(OracleError::OpenConstraint)
        );
    }

    #[test]
    fn emissions_and_csv() {
        let n = Network {
            automata: vec![TimedAutomaton {
                name: "P".into(),
                clocks: vec!["x".into()],
                locations: vec![
                    Location::new("a").initial().with_invariant(vec![ClockAtom::le("x", 3)]),
                    Location::new("b"),
                ],
                edges: vec![Edge::new("a", "b").clock_guard(vec![ClockAtom::ge("x", 2)]).emit("go")],
            }],
            channels: vec![Channel::broadcast("go", 0)],
            variables: vec![],
        };
        let r = digitized_explore(&n, &OracleOptions::new(6)).unwrap();
        let times: Vec<i64> = r.observations.iter().map(|e| e.time).collect();
        assert_eq!(times, vec![2, 3]);
        assert_eq!(events_csv(&r.observations).lines().nth(1), Some("go,2,P"));
    }
}
