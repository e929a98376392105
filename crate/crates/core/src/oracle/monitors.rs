use std::collections::BTreeMap;

use super::{compile, explore_with, ConcreteState, Exploration, Monitor, OracleError, OracleOptions, Step, TraceEvent};
use crate::abstraction::{CoreIntervals, EventSpec, SegmentIntervals};
use crate::automata::{compose, Channel, ClockAtom, Edge, Location, Model, Network};
use crate::bounds::{Requirement, RequirementKind};
use crate::explorer::{Extremum, IntervalSet, Mode};
use crate::rts::{build_core_network, build_ref_ta, RtsSpec};

/// Records every emission.
pub struct EventLog;

impl Monitor for EventLog {
    type State = ();
    type Obs = TraceEvent;

    fn initial(&self) {}

    fn on_step(&self, model: &Model, _m: &(), step: &Step, time: i64, out: &mut Vec<((), Option<TraceEvent>)>) {
        let obs = step.emission(model).map(|(event, automaton)| TraceEvent {
            time,
            event: event.into(),
            automaton: automaton.into(),
        });
        out.push(((), obs));
    }
}

/// Records `(e, t, e', t')` whenever an automaton emits `e'` at `t'` right
/// after emitting `e` at `t`, for the listed `(e, e')` pairs.
pub struct PairLog {
    automata: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairLog {
    pub fn new(model: &Model, pairs: &[(String, String)]) -> Result<Self, OracleError> {
        let ch = |name: &str| {
            model
                .channel_index(name)
                .ok_or_else(|| OracleError::Input(format!("unknown channel {name}")))
        };
        Ok(PairLog {
            automata: model.automata.len(),
            pairs: pairs
                .iter()
                .map(|(a, b)| Ok((ch(a)?, ch(b)?)))
                .collect::<Result<_, OracleError>>()?,
        })
    }
}

impl Monitor for PairLog {
    /// Last emission per automaton.
    type State = Vec<Option<(usize, i64)>>;
    type Obs = (String, i64, String, i64);

    fn initial(&self) -> Self::State {
        vec![None; self.automata]
    }

    fn on_step(
        &self,
        model: &Model,
        m: &Self::State,
        step: &Step,
        time: i64,
        out: &mut Vec<(Self::State, Option<Self::Obs>)>,
    ) {
        let Some(ch) = step.channel.filter(|_| step.emission(model).is_some()) else {
            out.push((m.clone(), None));
            return;
        };
        let a = step.parts[0].0;
        let obs = m[a].and_then(|(prev, t)| {
            self.pairs.contains(&(prev, ch)).then(|| {
                (
                    model.channels[prev].name.clone(),
                    t,
                    model.channels[ch].name.clone(),
                    time,
                )
            })
        });
        let mut next = m.clone();
        next[a] = Some((ch, time));
        out.push((next, obs));
    }
}

/// Integer shadow of the observers: tracks chain progress and reports the
/// latency of every completed chain.
pub struct ChainMonitor {
    kind: RequirementKind,
    events: Vec<usize>,
}

impl ChainMonitor {
    pub fn new(model: &Model, req: &Requirement) -> Result<Self, OracleError> {
        let events = req
            .events
            .iter()
            .map(|e| {
                model
                    .channel_index(e)
                    .ok_or_else(|| OracleError::Input(format!("unknown event {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let arity = if req.kind == RequirementKind::SimpleMax { 2 } else { 3 };
        if events.len() != arity {
            return Err(OracleError::Input(format!("expected {arity} events")));
        }
        Ok(ChainMonitor { kind: req.kind, events })
    }
}

/// Chain progress: 0 waits for the start event; 1 and 2 carry the start
/// instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Progress(u8, i64);

impl Monitor for ChainMonitor {
    type State = Progress;
    type Obs = i64;

    fn initial(&self) -> Progress {
        Progress(0, 0)
    }

    fn on_step(&self, model: &Model, m: &Progress, step: &Step, t: i64, out: &mut Vec<(Progress, Option<i64>)>) {
        let Some(ch) = step.channel.filter(|_| step.emission(model).is_some()) else {
            out.push((*m, None));
            return;
        };
        let is = |k: usize| self.events[k] == ch;
        let Progress(phase, start) = *m;
        match self.kind {
            RequirementKind::SimpleMax => match phase {
                0 if is(0) => out.push((Progress(1, t), None)),
                1 if is(1) => out.push((Progress(0, 0), Some(t - start))),
                _ => out.push((*m, None)),
            },
            RequirementKind::Ff | RequirementKind::Lf => match phase {
                0 if is(0) => out.push((Progress(1, t), None)),
                1 if is(1) => out.push((Progress(2, start), None)),
                1 if is(0) && self.kind == RequirementKind::Lf => out.push((Progress(1, t), None)),
                2 if is(0) => {
                    out.push((*m, None));
                    out.push((Progress(1, t), None));
                }
                2 if is(2) => out.push((Progress(0, 0), Some(t - start))),
                _ => out.push((*m, None)),
            },
        }
    }
}

/// Emissions of every automaton of `n` up to the horizon.
pub fn oracle_emissions(n: &Network, opts: &OracleOptions) -> Result<Exploration<TraceEvent>, OracleError> {
    explore_with(&compile(n)?, &EventLog, opts)
}

/// Consecutive emission pairs of `n`, restricted to the given event pairs.
pub fn oracle_pairs(
    n: &Network,
    pairs: &[(String, String)],
    opts: &OracleOptions,
) -> Result<Exploration<(String, i64, String, i64)>, OracleError> {
    let model = compile(n)?;
    explore_with(&model, &PairLog::new(&model, pairs)?, opts)
}

/// Extremal latency of the requirement's chain over all integer runs of
/// `n` up to the horizon. Only completed chains count.
pub fn oracle_bound(n: &Network, req: &Requirement, opts: &OracleOptions) -> Result<Extremum, OracleError> {
    let model = compile(n)?;
    let run = explore_with(&model, &ChainMonitor::new(&model, req)?, opts)?;
    let value = match req.mode {
        Mode::Max => run.observations.last(),
        Mode::Min => run.observations.first(),
    };
    Ok(match value {
        Some(&value) => Extremum::Finite { value, attained: true },
        None => Extremum::Unsatisfied,
    })
}

struct Watch {
    loc: usize,
    y: usize,
    lb: i64,
    rb: i64,
}

/// Instants where the producing task sits in a producing segment with its
/// segment clock inside the first event's window.
struct IntervalMonitor {
    task: usize,
    x: usize,
    period: i64,
    watches: Vec<Watch>,
}

impl Monitor for IntervalMonitor {
    type State = ();
    type Obs = (usize, usize, i64);

    fn initial(&self) {}

    fn on_state(&self, _model: &Model, s: &ConcreteState, _m: &(), out: &mut Vec<Self::Obs>) {
        for (w_i, w) in self.watches.iter().enumerate() {
            let y = s.clocks[w.y - 1];
            if s.locs[self.task] as usize == w.loc && w.lb <= y && y <= w.rb {
                let k = (s.time - s.clocks[self.x - 1]) / self.period + 1;
                out.push((w_i, k as usize, s.time));
            }
        }
    }

    fn on_step(&self, _: &Model, _: &(), _: &Step, _: i64, out: &mut Vec<((), Option<Self::Obs>)>) {
        out.push(((), None));
    }
}

/// Integer production instants of every first event on `core`, grouped
/// per job instance, computed on the generated core network.
pub fn oracle_intervals(r: &RtsSpec, e: &EventSpec, core: &str, budget: usize) -> Result<CoreIntervals, OracleError> {
    let n = build_core_network(r, core).map_err(|err| OracleError::Input(err.to_string()))?;
    oracle_intervals_on(&n, r, e, core, budget)
}

pub fn oracle_intervals_on(
    n: &Network,
    r: &RtsSpec,
    e: &EventSpec,
    core: &str,
    budget: usize,
) -> Result<CoreIntervals, OracleError> {
    let task = e
        .producing_tasks(r)
        .into_iter()
        .find(|t| t.affinity == core)
        .ok_or_else(|| OracleError::Input(format!("no producing task on {core}")))?;
    let hp = r
        .hyperperiod(core)
        .ok_or_else(|| OracleError::Input(format!("core {core} has no hyperperiod")))? as i64;
    let bounded = compose(&[
        n.clone(),
        Network {
            automata: vec![build_ref_ta(hp)],
            ..Default::default()
        },
    ])
    .map_err(|err| OracleError::Input(err.to_string()))?;
    let model = compile(&bounded)?;
    let a = model
        .automaton_index(&task.name)
        .ok_or_else(|| OracleError::Input(format!("no automaton {}", task.name)))?;
    let clock = |c: &str| {
        model
            .clock_index(&format!("{}.{c}", task.name))
            .ok_or_else(|| OracleError::Input(format!("{} has no clock {c}", task.name)))
    };
    let producers = e.producers_of(task);
    let mut watches = Vec::new();
    for p in &producers {
        watches.push(Watch {
            loc: model
                .location_index(a, &p.segment)
                .ok_or_else(|| OracleError::Input(format!("no location {}", p.segment)))?,
            y: clock("y")?,
            lb: p.emits[0].lb as i64,
            rb: p.emits[0].rb as i64,
        });
    }
    let monitor = IntervalMonitor {
        task: a,
        x: clock("x")?,
        period: task.period.get() as i64,
        watches,
    };
    let opts = OracleOptions {
        horizon: hp,
        state_budget: budget,
        exact_clocks: vec![format!("{}.x", task.name)],
    };
    let run = explore_with(&model, &monitor, &opts)?;
    let instances = (hp / monitor.period) as usize;
    let mut points: BTreeMap<(usize, usize), Vec<i64>> = BTreeMap::new();
    for &(w, k, t) in &run.observations {
        points.entry((w, k)).or_default().push(t);
    }
    let segments = producers
        .iter()
        .enumerate()
        .map(|(w, p)| {
            let periods: Vec<IntervalSet> = (1..=instances)
                .map(|k| IntervalSet::from_points(points.get(&(w, k)).cloned().unwrap_or_default()))
                .collect();
            let global = IntervalSet::from_points(
                points
                    .iter()
                    .filter(|((w2, _), _)| *w2 == w)
                    .flat_map(|(_, v)| v.iter().copied()),
            );
            SegmentIntervals {
                segment: p.segment.clone(),
                event: p.emits[0].event.clone(),
                global,
                periods,
            }
        })
        .collect();
    Ok(CoreIntervals {
        core: core.into(),
        task: task.name.clone(),
        hyperperiod: hp,
        period: monitor.period,
        segments,
        states: run.states,
    })
}

/// The core network with each producing segment `s` of `core` refined into
/// a chain `s -> s__1 -> ... -> s__m`, one emission per step. Step `j`
/// emits the `j`-th event with the segment clock in its window; the
/// segment's own exits leave from the last location.
pub fn instrument_core_network(r: &RtsSpec, e: &EventSpec, core: &str) -> Result<Network, OracleError> {
    let mut n = build_core_network(r, core).map_err(|err| OracleError::Input(err.to_string()))?;
    let task = e
        .producing_tasks(r)
        .into_iter()
        .find(|t| t.affinity == core)
        .ok_or_else(|| OracleError::Input(format!("no producing task on {core}")))?;
    let ta = n
        .automata
        .iter_mut()
        .find(|a| a.name == task.name)
        .expect("generated network holds every task");
    for p in e.producers_of(task) {
        let s = &p.segment;
        let wcet = task.segment(s).expect("validated producer").wcet.get() as i64;
        let step = |j: usize| format!("{s}__{j}");
        let m = p.emits.len();
        for edge in ta.edges.iter_mut().filter(|ed| &ed.source == s) {
            edge.source = step(m);
        }
        let loc = ta
            .locations
            .iter_mut()
            .find(|l| &l.name == s)
            .expect("segment location");
        loc.invariant = vec![ClockAtom::le("y", p.emits[0].rb as i64)];
        let at = ta
            .locations
            .iter()
            .position(|l| &l.name == s)
            .expect("segment location");
        for j in 1..=m {
            let bound = if j < m { p.emits[j].rb as i64 } else { wcet };
            ta.locations.insert(
                at + j,
                Location::new(step(j)).with_invariant(vec![ClockAtom::le("y", bound)]),
            );
            let from = if j == 1 { s.clone() } else { step(j - 1) };
            ta.edges.push(
                Edge::new(from, step(j))
                    .clock_guard(vec![ClockAtom::ge("y", p.emits[j - 1].lb as i64)])
                    .emit(&p.emits[j - 1].event),
            );
        }
    }
    for ev in &e.events {
        if n.channel(ev).is_none() {
            n.channels.push(Channel::broadcast(ev, 0));
        }
    }
    Ok(n)
}
