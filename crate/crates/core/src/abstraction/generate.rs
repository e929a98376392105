use std::collections::HashSet;

use super::{AbstractionError, CoreIntervals, Emission, EventSpec, SegmentIntervals};
use crate::automata::{compose, Channel, ClockAtom, Edge, Location, Network, TimedAutomaton};

pub fn abstraction_name(core: &str) -> String {
    format!("A_{core}")
}

/// A producing segment together with its intervals and emissions.
struct Producing<'a> {
    iv: &'a SegmentIntervals,
    emits: &'a [Emission],
}

impl Producing<'_> {
    fn name(&self, k: usize) -> String {
        format!("{}_{k}", self.iv.segment)
    }

    fn branch(&self, k: usize, i: usize, j: usize) -> String {
        format!("{}_{k}_{i}_{j}", self.iv.segment)
    }

    fn multi(&self) -> bool {
        self.emits.len() != 1
    }

    fn lb(&self, j: usize) -> i64 {
        self.emits[j - 1].lb as i64
    }

    fn rb(&self, j: usize) -> i64 {
        self.emits[j - 1].rb as i64
    }

    fn event(&self, j: usize) -> &str {
        &self.emits[j - 1].event
    }

    /// `s_k` and its branch locations.
    fn locations(&self, out: &mut Vec<Location>) {
        for (k, ivk) in self.iv.periods.iter().enumerate().map(|(k, p)| (k + 1, p)) {
            let last = ivk.intervals().last().expect("nonempty period").1;
            out.push(Location::new(self.name(k)).with_invariant(vec![ClockAtom::le("x", last)]));
            for (i, &(_, hi)) in ivk.intervals().iter().enumerate().map(|(i, v)| (i + 1, v)) {
                for j in 2..=self.emits.len() {
                    out.push(Location::new(self.branch(k, i, j)).with_invariant(vec![
                        ClockAtom::le("x", hi + self.rb(j) - self.rb(1)),
                        ClockAtom::le("y", self.rb(j) - self.lb(j - 1)),
                    ]));
                }
            }
        }
    }

    fn edge1(&self, k: usize, iv: (i64, i64), succ: String, reset: &[&str]) -> Edge {
        Edge::new(self.name(k), succ)
            .clock_guard(vec![ClockAtom::ge("x", iv.0), ClockAtom::le("x", iv.1)])
            .emit(self.event(1))
            .reset(reset)
    }

    fn edge2(&self, k: usize, i: usize, j: usize, iv: (i64, i64), succ: String, reset: &[&str]) -> Edge {
        Edge::new(self.branch(k, i, j), succ)
            .clock_guard(vec![
                ClockAtom::ge("x", iv.0 + self.lb(j) - self.lb(1)),
                ClockAtom::ge("y", self.lb(j) - self.rb(j - 1)),
            ])
            .emit(self.event(j))
            .reset(reset)
    }

    /// Per-instance edges; the last instance leads to `wait`.
    fn edges(&self, out: &mut Vec<Edge>) {
        let n = self.iv.periods.len();
        let next = |k: usize| if k != n { self.name(k + 1) } else { "wait".to_string() };
        for (k, ivk) in self.iv.periods.iter().enumerate().map(|(k, p)| (k + 1, p)) {
            for (i, &iv) in ivk.intervals().iter().enumerate().map(|(i, v)| (i + 1, v)) {
                if self.multi() {
                    out.push(self.edge1(k, iv, self.branch(k, i, 2), &["y"]));
                } else {
                    out.push(self.edge1(k, iv, next(k), &[]));
                }
                for j in 2..=self.emits.len() {
                    if j != self.emits.len() {
                        out.push(self.edge2(k, i, j, iv, self.branch(k, i, j + 1), &["y"]));
                    } else {
                        out.push(self.edge2(k, i, j, iv, next(k), &[]));
                    }
                }
            }
        }
    }
}

fn producing<'a>(e: &'a EventSpec, iv: &'a CoreIntervals) -> Result<Vec<Producing<'a>>, AbstractionError> {
    let n = iv.instances();
    iv.segments
        .iter()
        .map(|s| {
            let p = e.producer(&iv.task, &s.segment).ok_or_else(|| {
                AbstractionError::Precondition(format!("{}/{} produces no event", iv.task, s.segment))
            })?;
            if p.emits.is_empty() || p.emits[0].event != s.event {
                return Err(AbstractionError::Precondition(format!(
                    "intervals of {}/{} do not match its first event",
                    iv.task, s.segment
                )));
            }
            if s.periods.len() != n || s.periods.iter().any(|p| p.is_empty()) {
                return Err(AbstractionError::Precondition(format!(
                    "{}/{} needs a nonempty interval set for each of the {n} instances",
                    iv.task, s.segment
                )));
            }
            Ok(Producing { iv: s, emits: &p.emits })
        })
        .collect()
}

fn finish(
    iv: &CoreIntervals,
    multi: bool,
    locations: Vec<Location>,
    edges: Vec<Edge>,
) -> Result<TimedAutomaton, AbstractionError> {
    let mut seen = HashSet::new();
    if let Some(l) = locations.iter().find(|l| !seen.insert(l.name.as_str())) {
        return Err(AbstractionError::Precondition(format!(
            "segment names of {} produce the location name {} twice",
            iv.task, l.name
        )));
    }
    let mut clocks = vec!["x".to_string()];
    if multi {
        clocks.push("y".into());
    }
    Ok(TimedAutomaton {
        name: abstraction_name(&iv.core),
        clocks,
        locations,
        edges,
    })
}

/// Abstraction of a core whose producing task has exactly one producing
/// segment.
pub fn generate_abstraction_single_job(e: &EventSpec, iv: &CoreIntervals) -> Result<TimedAutomaton, AbstractionError> {
    let segs = producing(e, iv)?;
    let [s] = segs.as_slice() else {
        return Err(AbstractionError::Precondition(format!(
            "{} has {} producing segments, expected one",
            iv.task,
            segs.len()
        )));
    };
    let mut locations = Vec::new();
    s.locations(&mut locations);
    locations.push(Location::new("wait").with_invariant(vec![ClockAtom::le("x", iv.hyperperiod)]));
    locations[0].initial = true;

    let mut edges = Vec::new();
    s.edges(&mut edges);
    edges.push(
        Edge::new("wait", s.name(1))
            .clock_guard(vec![ClockAtom::eq("x", iv.hyperperiod)])
            .reset(&["x"]),
    );
    finish(iv, s.multi(), locations, edges)
}

/// Abstraction of a core in the general case: with several producing
/// segments, a committed `act` location picks the first one and every
/// instance may hand over to another segment in the next instance.
pub fn generate_abstraction_general(e: &EventSpec, iv: &CoreIntervals) -> Result<TimedAutomaton, AbstractionError> {
    let segs = producing(e, iv)?;
    if segs.len() == 1 {
        return generate_abstraction_single_job(e, iv);
    }
    if segs.is_empty() {
        return Err(AbstractionError::NoProducer(iv.core.clone()));
    }
    let multi = segs.iter().any(Producing::multi);
    let mut locations = vec![
        Location::new("act").initial().committed(),
        Location::new("wait").with_invariant(vec![ClockAtom::le("x", iv.hyperperiod)]),
    ];
    for s in &segs {
        s.locations(&mut locations);
    }

    let mut edges = Vec::new();
    for s in &segs {
        edges.push(Edge::new("act", s.name(1)));
        s.edges(&mut edges);
    }
    let n = iv.instances();
    for s in &segs {
        for k in 1..n {
            for (i, &v) in s.iv.periods[k - 1]
                .intervals()
                .iter()
                .enumerate()
                .map(|(i, v)| (i + 1, v))
            {
                for other in segs.iter().filter(|o| o.iv.segment != s.iv.segment) {
                    let succ = other.name(k + 1);
                    edges.push(if s.multi() {
                        s.edge2(k, i, s.emits.len(), v, succ, &[])
                    } else {
                        s.edge1(k, v, succ, &[])
                    });
                }
            }
        }
    }
    edges.push(
        Edge::new("wait", "act")
            .clock_guard(vec![ClockAtom::eq("x", iv.hyperperiod)])
            .reset(&["x"]),
    );
    finish(iv, multi, locations, edges)
}

/// Same construction on the hull of every per-instance interval set.
pub fn generate_coarse_abstraction(e: &EventSpec, iv: &CoreIntervals) -> Result<TimedAutomaton, AbstractionError> {
    generate_abstraction_general(e, &iv.coarse())
}

/// Wraps an abstraction automaton with a broadcast channel per event.
pub fn abstraction_part(e: &EventSpec, ta: TimedAutomaton) -> Network {
    Network {
        automata: vec![ta],
        channels: e.events.iter().map(|ev| Channel::broadcast(ev, 0)).collect(),
        variables: vec![],
    }
}

/// Parallel composition of at least two per-core abstractions.
pub fn compose_abstract_network(parts: &[Network]) -> Result<Network, AbstractionError> {
    if parts.len() < 2 {
        return Err(AbstractionError::Precondition(format!(
            "an abstract network needs at least two cores, got {}",
            parts.len()
        )));
    }
    Ok(compose(parts)?)
}
