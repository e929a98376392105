use thiserror::Error;

use super::{validate_rts, RtsSpec, Task, END};
use crate::automata::{
    Channel, ClockAtom, CmpOp, DiscreteAtom, Edge, Expr, Location, Network, TimedAutomaton, Update, VarDecl,
};
use crate::diag::Diagnostic;

pub const REF_AUTOMATON: &str = "Ref";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("the task system is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidSpec(Vec<Diagnostic>),
    #[error("unknown core {0}")]
    UnknownCore(String),
    #[error("core {0} has no task")]
    EmptyPartition(String),
    #[error("unknown task {0}")]
    UnknownTask(String),
}

/// Channel, variable and automaton names used for one core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreNames {
    pub core: String,
}

impl CoreNames {
    pub fn new(core: &str) -> Self {
        CoreNames { core: core.into() }
    }
    pub fn scheduler(&self) -> String {
        format!("H_{}", self.core)
    }
    pub fn queue(&self) -> String {
        format!("Q_{}", self.core)
    }
    pub fn busy(&self) -> String {
        format!("busy_{}", self.core)
    }
    pub fn ins(&self) -> String {
        format!("ins_{}", self.core)
    }
    pub fn cmp(&self) -> String {
        format!("cmp_{}", self.core)
    }
    pub fn exe(&self) -> String {
        format!("exe_{}", self.core)
    }
    pub fn pre(&self) -> String {
        format!("pre_{}", self.core)
    }
    pub fn ter(&self) -> String {
        format!("ter_{}", self.core)
    }
    pub fn rel(&self, id: usize) -> String {
        format!("rel_{}[{id}]", self.core)
    }
}

fn checked(r: &RtsSpec) -> Result<(), GenerateError> {
    let errors: Vec<Diagnostic> = validate_rts(r)
        .diagnostics
        .into_iter()
        .filter(|d| d.is_error())
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(GenerateError::InvalidSpec(errors))
    }
}

fn partition<'a>(r: &'a RtsSpec, core: &str) -> Result<Vec<&'a Task>, GenerateError> {
    if !r.cores.iter().any(|c| c == core) {
        return Err(GenerateError::UnknownCore(core.into()));
    }
    let part = r.partition(core);
    if part.is_empty() {
        return Err(GenerateError::EmptyPartition(core.into()));
    }
    Ok(part)
}

/// One clock `x`, one location `hper` with `x <= hp` and no edges: time
/// cannot pass beyond `hp`, which bounds exploration.
pub fn build_ref_ta(hp: i64) -> TimedAutomaton {
    assert!(hp > 0, "hyperperiod must be positive");
    TimedAutomaton {
        name: REF_AUTOMATON.into(),
        clocks: vec!["x".into()],
        locations: vec![Location::new("hper")
            .initial()
            .with_invariant(vec![ClockAtom::le("x", hp)])],
        edges: vec![],
    }
}

/// Task automaton of `task`. Its id is its position within the partition.
pub fn generate_task_ta(r: &RtsSpec, task: &str) -> Result<TimedAutomaton, GenerateError> {
    checked(r)?;
    let t = r.task(task).ok_or_else(|| GenerateError::UnknownTask(task.into()))?;
    let part = partition(r, &t.affinity)?;
    let id = part
        .iter()
        .position(|p| p.name == t.name)
        .expect("task in its partition");
    let highest = part.iter().all(|p| p.priority <= t.priority);
    Ok(task_ta(t, id, highest, &CoreNames::new(&t.affinity)))
}

fn task_ta(t: &Task, id: usize, highest: bool, n: &CoreNames) -> TimedAutomaton {
    let period = t.period.get() as i64;
    let add = || {
        vec![Update::Add {
            queue: n.queue(),
            id: Expr::int(id as i64),
            priority: Expr::int(t.priority),
        }]
    };
    let preemptible = |s: &str| !highest && !t.segment_successors(s).is_empty();

    let mut locations = vec![Location::new("start").initial().committed(), Location::new("act")];
    for s in &t.segments {
        locations.push(Location::new(&s.name).with_invariant(vec![ClockAtom::le("y", s.wcet.get() as i64)]));
    }
    for s in t.segments.iter().filter(|s| preemptible(&s.name)) {
        locations.push(Location::new(format!("{}_pr", s.name)));
    }
    locations.push(Location::new(END).committed());
    locations.push(Location::new("wait").with_invariant(vec![ClockAtom::le("x", period)]));

    let mut edges = vec![Edge::new("start", "act").emit(n.ins()).updates(add())];
    for s in t.successors(super::ACT) {
        edges.push(Edge::new("act", s).receive(n.rel(id)).reset(&["y"]));
    }
    for s in &t.segments {
        let done = vec![ClockAtom::ge("y", s.bcet.get() as i64)];
        for next in t.successors(&s.name) {
            let e = Edge::new(&s.name, next).clock_guard(done.clone());
            edges.push(if next == END { e } else { e.emit(n.exe()).reset(&["y"]) });
        }
        if preemptible(&s.name) {
            edges.push(
                Edge::new(&s.name, format!("{}_pr", s.name))
                    .clock_guard(done.clone())
                    .receive(n.pre()),
            );
        }
    }
    for s in t.segments.iter().filter(|s| preemptible(&s.name)) {
        for next in t.segment_successors(&s.name) {
            edges.push(
                Edge::new(format!("{}_pr", s.name), next)
                    .receive(n.rel(id))
                    .reset(&["y"]),
            );
        }
    }
    edges.push(Edge::new(END, "wait").emit(n.ter()));
    edges.push(
        Edge::new("wait", "act")
            .clock_guard(vec![ClockAtom::eq("x", period)])
            .emit(n.ins())
            .reset(&["x"])
            .updates(add()),
    );

    TimedAutomaton {
        name: t.name.clone(),
        clocks: vec!["x".into(), "y".into()],
        locations,
        edges,
    }
}

fn atom(lhs: Expr, op: CmpOp, rhs: i64) -> DiscreteAtom {
    DiscreteAtom::new(lhs, op, Expr::int(rhs))
}

/// Scheduler automaton of `core`.
pub fn generate_scheduler_ta(r: &RtsSpec, core: &str) -> Result<TimedAutomaton, GenerateError> {
    checked(r)?;
    let part = partition(r, core)?;
    Ok(scheduler_ta(part.len(), &CoreNames::new(core)))
}

fn scheduler_ta(tasks: usize, n: &CoreNames) -> TimedAutomaton {
    let q = n.queue();
    let busy = || Expr::var(&n.busy());
    let len = || Expr::Len(q.clone());
    let pr_at = |i: i64| Expr::PrAt {
        queue: q.clone(),
        index: Box::new(Expr::int(i)),
    };
    let set_busy = |v: i64| Update::Assign {
        var: n.busy(),
        value: Expr::int(v),
    };
    // one release edge per task id, guarded on the queue head
    let releases = |from: &str| -> Vec<Edge> {
        (0..tasks)
            .map(|id| {
                Edge::new(from, "wait")
                    .guard(vec![
                        atom(len(), CmpOp::Gt, 0),
                        atom(Expr::Head(q.clone()), CmpOp::Eq, id as i64),
                    ])
                    .emit(n.rel(id))
                    .updates(vec![set_busy(1)])
            })
            .collect()
    };

    let locations = vec![
        Location::new("wait").initial(),
        Location::new("insert").committed(),
        Location::new("decide").committed(),
        Location::new("release").committed(),
        Location::new("preempt"),
        Location::new("update").committed(),
        Location::new("release2").committed(),
    ];
    let mut edges = vec![
        Edge::new("wait", "insert").receive(n.ins()),
        Edge::new("insert", "insert").receive(n.ins()),
        Edge::new("preempt", "insert").receive(n.ins()),
        Edge::new("insert", "decide")
            .guard(vec![atom(busy(), CmpOp::Eq, 1)])
            .emit(n.cmp())
            .updates(vec![Update::SortBehindHead(q.clone())]),
        Edge::new("insert", "decide")
            .guard(vec![atom(busy(), CmpOp::Eq, 0)])
            .emit(n.cmp())
            .updates(vec![Update::Resort(q.clone())]),
        Edge::new("decide", "release").guard(vec![atom(busy(), CmpOp::Eq, 0)]),
        Edge::new("decide", "wait").guard(vec![
            atom(busy(), CmpOp::Eq, 1),
            atom(len(), CmpOp::Ge, 2),
            DiscreteAtom::new(pr_at(1), CmpOp::Le, pr_at(0)),
        ]),
        Edge::new("decide", "wait").guard(vec![atom(busy(), CmpOp::Eq, 1), atom(len(), CmpOp::Eq, 1)]),
        Edge::new("decide", "preempt").guard(vec![
            atom(busy(), CmpOp::Eq, 1),
            atom(len(), CmpOp::Ge, 2),
            DiscreteAtom::new(pr_at(1), CmpOp::Gt, pr_at(0)),
        ]),
        Edge::new("preempt", "release2")
            .emit(n.pre())
            .updates(vec![Update::Resort(q.clone()), set_busy(0)]),
        Edge::new("preempt", "release2")
            .receive(n.ter())
            .updates(vec![Update::Dequeue(q.clone()), set_busy(0)]),
        Edge::new("wait", "update")
            .receive(n.ter())
            .updates(vec![Update::Dequeue(q.clone()), set_busy(0)]),
        Edge::new("update", "wait").guard(vec![atom(len(), CmpOp::Eq, 0)]),
    ];
    edges.extend(releases("release"));
    edges.extend(releases("release2"));
    edges.extend(releases("update"));

    TimedAutomaton {
        name: n.scheduler(),
        clocks: vec![],
        locations,
        edges,
    }
}

/// `H_c || TA_τ ...` for every task of the partition of `core`.
pub fn build_core_network(r: &RtsSpec, core: &str) -> Result<Network, GenerateError> {
    checked(r)?;
    let part = partition(r, core)?;
    let n = CoreNames::new(core);
    let top = part.iter().map(|t| t.priority).max().expect("nonempty");
    let mut automata = vec![scheduler_ta(part.len(), &n)];
    for (id, t) in part.iter().enumerate() {
        automata.push(task_ta(t, id, t.priority == top, &n));
    }
    let mut channels = vec![
        Channel::handshake(n.ins(), 1),
        Channel::broadcast(n.cmp(), 0),
        Channel::broadcast(n.exe(), 1),
        Channel::handshake(n.pre(), 2),
        Channel::handshake(n.ter(), 1),
    ];
    channels.extend((0..part.len()).map(|id| Channel::handshake(n.rel(id), 1)));
    Ok(Network {
        automata,
        channels,
        variables: vec![
            VarDecl::Queue {
                name: n.queue(),
                capacity: part.len(),
            },
            VarDecl::Scalar {
                name: n.busy(),
                min: 0,
                max: 1,
                initial: 0,
            },
        ],
    })
}
