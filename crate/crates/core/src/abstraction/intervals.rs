use serde::{Deserialize, Serialize};

use super::{AbstractionError, EventSpec};
use crate::automata::{compose, Model, Network};
use crate::explorer::{BuildOptions, IntervalSet, StateFormula, ZoneGraph};
use crate::rts::{build_core_network, build_ref_ta, RtsSpec, REF_AUTOMATON};

/// Absolute production times of the first event of one producing segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentIntervals {
    pub segment: String,
    pub event: String,
    /// All instants within the hyperperiod.
    pub global: IntervalSet,
    /// `periods[k - 1]` holds the instants of the `k`-th job instance.
    pub periods: Vec<IntervalSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreIntervals {
    pub core: String,
    pub task: String,
    pub hyperperiod: i64,
    pub period: i64,
    pub segments: Vec<SegmentIntervals>,
    pub states: usize,
}

impl CoreIntervals {
    pub fn instances(&self) -> usize {
        (self.hyperperiod / self.period) as usize
    }

    pub fn segment(&self, name: &str) -> Option<&SegmentIntervals> {
        self.segments.iter().find(|s| s.segment == name)
    }

    /// Every per-instance set replaced by its hull.
    pub fn coarse(&self) -> CoreIntervals {
        let mut c = self.clone();
        for s in &mut c.segments {
            for p in &mut s.periods {
                *p = p.hull();
            }
        }
        c
    }
}

/// Content of `intervals.json`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IvTable {
    pub cores: Vec<CoreIntervals>,
}

impl IvTable {
    pub fn core(&self, name: &str) -> Option<&CoreIntervals> {
        self.cores.iter().find(|c| c.core == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable") + "\n"
    }
}

/// Generates `N_c` and extracts its intervals.
pub fn compute_exact_intervals(
    r: &RtsSpec,
    e: &EventSpec,
    core: &str,
    state_budget: usize,
) -> Result<CoreIntervals, AbstractionError> {
    let n = build_core_network(r, core)?;
    compute_exact_intervals_on(&n, r, e, core, state_budget)
}

/// Exact production instants of each first event on `core`, using the
/// supplied core network `n` (which must contain the producing task's
/// automaton under the task's name).
///
/// One zone graph of `n || Ref(hp)` is built. Each instance `k` is singled
/// out by the offset between the reference clock and the task's activation
/// clock, which is exactly `(k - 1) * P` while instance `k` runs.
pub fn compute_exact_intervals_on(
    n: &Network,
    r: &RtsSpec,
    e: &EventSpec,
    core: &str,
    state_budget: usize,
) -> Result<CoreIntervals, AbstractionError> {
    let task = e
        .producing_tasks(r)
        .into_iter()
        .find(|t| t.affinity == core)
        .ok_or_else(|| AbstractionError::NoProducer(core.into()))?;
    let hp = r
        .hyperperiod(core)
        .ok_or_else(|| AbstractionError::Precondition(format!("core {core} has no hyperperiod")))? as i64;
    let period = task.period.get() as i64;
    if n.automaton(&task.name).is_none() {
        return Err(AbstractionError::NetworkMismatch(format!(
            "the network for {core} has no automaton {}",
            task.name
        )));
    }
    let bounded = compose(&[
        n.clone(),
        Network {
            automata: vec![build_ref_ta(hp)],
            ..Default::default()
        },
    ])
    .map_err(|err| AbstractionError::NetworkMismatch(err.to_string()))?;
    let model = Model::compile(&bounded).map_err(|err| AbstractionError::NetworkMismatch(err.to_string()))?;
    let g = ZoneGraph::build(
        &model,
        &BuildOptions {
            state_budget,
            ..Default::default()
        },
    )?;
    let parse = |text: &str| {
        StateFormula::parse(&model, text).map_err(|err| AbstractionError::NetworkMismatch(err.to_string()))
    };
    let x = format!("{REF_AUTOMATON}.x");

    let mut segments = Vec::new();
    for p in e.producers_of(task) {
        let first = &p.emits[0];
        let base = format!(
            "{t}.{s} and {lb} <= {t}.y <= {rb} and {REF_AUTOMATON}.hper",
            t = task.name,
            s = p.segment,
            lb = first.lb,
            rb = first.rb
        );
        let global = g.bounds(&parse(&base)?, &x)?;
        let mut periods = Vec::new();
        for k in 1..=hp / period {
            let f = format!("{base} and {x} - {t}.x == {off}", t = task.name, off = (k - 1) * period);
            let set = g.bounds(&parse(&f)?, &x)?;
            if set.is_empty() {
                return Err(AbstractionError::EmptyPeriod {
                    task: task.name.clone(),
                    segment: p.segment.clone(),
                    k: k as usize,
                });
            }
            periods.push(set);
        }
        segments.push(SegmentIntervals {
            segment: p.segment.clone(),
            event: first.event.clone(),
            global,
            periods,
        });
    }
    Ok(CoreIntervals {
        core: core.into(),
        task: task.name.clone(),
        hyperperiod: hp,
        period,
        segments,
        states: g.stats().stored,
    })
}
