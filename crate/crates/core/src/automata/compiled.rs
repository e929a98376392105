//! Name-resolved form of a validated network.

use thiserror::Error;

use super::expr::{CAtom, CExpr, CUpdate, DiscreteLayout, QueueSlot, ScalarSlot};
use super::{
    validate_network, Channel, ChannelKind, ClockAtom, CmpOp, DiscreteAtom, Expr, Network, Sync, Update, VarDecl,
};
use crate::dbm::{Bound, Constraint};
use crate::diag::Diagnostic;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("network is not well-formed ({} diagnostics, first: {})", .0.len(), .0[0])]
    Invalid(Vec<Diagnostic>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CSync {
    Silent,
    Emit(usize),
    Receive(usize),
}

#[derive(Debug, Clone)]
pub struct CLocation {
    pub name: String,
    pub invariant: Vec<Constraint>,
    pub committed: bool,
}

#[derive(Debug, Clone)]
pub struct CEdge {
    pub source: usize,
    pub target: usize,
    pub clock_guard: Vec<Constraint>,
    pub guard: Vec<CAtom>,
    pub sync: CSync,
    pub resets: Vec<usize>,
    pub updates: Vec<CUpdate>,
}

#[derive(Debug, Clone)]
pub struct CAutomaton {
    pub name: String,
    pub locations: Vec<CLocation>,
    pub edges: Vec<CEdge>,
    /// Edge indices leaving each location, in declaration order.
    pub outgoing: Vec<Vec<usize>>,
    pub initial: usize,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub automata: Vec<CAutomaton>,
    /// Qualified clock names; clock `clocks[i]` has DBM index `i + 1`.
    pub clocks: Vec<String>,
    pub channels: Vec<Channel>,
    pub layout: DiscreteLayout,
    /// Largest constant each clock is compared against in guards and
    /// invariants, indexed by DBM index (entry 0 is unused).
    pub max_constants: Vec<i64>,
    pub has_diagonal: bool,
    pub has_strict: bool,
    pub source: Network,
}

/// Translates `lhs - rhs op value` into DBM constraints. `rhs` is 0 for a
/// plain clock bound.
pub fn atom_constraints(lhs: usize, rhs: usize, op: CmpOp, value: i64) -> Vec<Constraint> {
    match op {
        CmpOp::Le => vec![Constraint::new(lhs, rhs, Bound::le(value))],
        CmpOp::Lt => vec![Constraint::new(lhs, rhs, Bound::lt(value))],
        CmpOp::Ge => vec![Constraint::new(rhs, lhs, Bound::le(-value))],
        CmpOp::Gt => vec![Constraint::new(rhs, lhs, Bound::lt(-value))],
        CmpOp::Eq => vec![
            Constraint::new(lhs, rhs, Bound::le(value)),
            Constraint::new(rhs, lhs, Bound::le(-value)),
        ],
        CmpOp::Ne => unreachable!("rejected by validation"),
    }
}

impl Model {
    pub fn compile(n: &Network) -> Result<Model, CompileError> {
        let diags = validate_network(n);
        if !diags.is_empty() {
            return Err(CompileError::Invalid(diags));
        }

        let mut clocks = Vec::new();
        for a in &n.automata {
            for c in &a.clocks {
                clocks.push(format!("{}.{}", a.name, c));
            }
        }

        let mut layout = DiscreteLayout::default();
        for v in &n.variables {
            match v {
                VarDecl::Scalar {
                    name,
                    min,
                    max,
                    initial,
                } => {
                    layout.scalars.push(ScalarSlot {
                        name: name.clone(),
                        min: *min,
                        max: *max,
                        initial: *initial,
                        slot: layout.size,
                    });
                    layout.size += 1;
                }
                VarDecl::Queue { name, capacity } => {
                    layout.queues.push(QueueSlot {
                        name: name.clone(),
                        capacity: *capacity,
                        base: layout.size,
                    });
                    layout.size += 1 + 2 * capacity;
                }
            }
        }

        let clock_names = clocks.clone();
        let mut model = Model {
            automata: Vec::new(),
            max_constants: vec![0; clocks.len() + 1],
            clocks,
            channels: n.channels.clone(),
            layout,
            has_diagonal: false,
            has_strict: false,
            source: n.clone(),
        };

        for a in &n.automata {
            let resolve = |name: &str| -> usize {
                let q = if name.contains('.') {
                    name.to_string()
                } else {
                    format!("{}.{}", a.name, name)
                };
                clock_names.iter().position(|c| *c == q).expect("validated clock") + 1
            };
            let loc_index = |name: &str| {
                a.locations
                    .iter()
                    .position(|l| l.name == name)
                    .expect("validated location")
            };

            let mut locations = Vec::new();
            let mut atoms_seen = Vec::new();
            for l in &a.locations {
                let inv = clock_constraints(&l.invariant, &resolve);
                atoms_seen.extend(l.invariant.iter().cloned());
                locations.push(CLocation {
                    name: l.name.clone(),
                    invariant: inv,
                    committed: l.committed,
                });
            }
            let mut edges = Vec::new();
            let mut outgoing = vec![Vec::new(); a.locations.len()];
            for e in &a.edges {
                atoms_seen.extend(e.clock_guard.iter().cloned());
                let sync = match &e.sync {
                    None => CSync::Silent,
                    Some(Sync::Emit(c)) => CSync::Emit(model.channel_index(c).expect("validated channel")),
                    Some(Sync::Receive(c)) => CSync::Receive(model.channel_index(c).expect("validated channel")),
                };
                let source = loc_index(&e.source);
                outgoing[source].push(edges.len());
                edges.push(CEdge {
                    source,
                    target: loc_index(&e.target),
                    clock_guard: clock_constraints(&e.clock_guard, &resolve),
                    guard: e.guard.iter().map(|g| model.compile_atom(g)).collect(),
                    sync,
                    resets: e.resets.iter().map(|r| resolve(r)).collect(),
                    updates: e.updates.iter().map(|u| model.compile_update(u)).collect(),
                });
            }
            for atom in &atoms_seen {
                model.has_strict |= atom.op.is_strict();
                if let Some(m) = &atom.minus {
                    model.has_diagonal = true;
                    let (i, j) = (resolve(&atom.clock), resolve(m));
                    let v = atom.value.abs();
                    model.max_constants[i] = model.max_constants[i].max(v);
                    model.max_constants[j] = model.max_constants[j].max(v);
                } else {
                    let i = resolve(&atom.clock);
                    model.max_constants[i] = model.max_constants[i].max(atom.value.abs());
                }
            }
            let initial = a.locations.iter().position(|l| l.initial).expect("validated initial");
            model.automata.push(CAutomaton {
                name: a.name.clone(),
                locations,
                edges,
                outgoing,
                initial,
            });
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.clocks.len() + 1
    }

    /// DBM index of a qualified clock name.
    pub fn clock_index(&self, qualified: &str) -> Option<usize> {
        self.clocks.iter().position(|c| c == qualified).map(|i| i + 1)
    }

    pub fn clock_name(&self, index: usize) -> &str {
        if index == 0 {
            "0"
        } else {
            &self.clocks[index - 1]
        }
    }

    pub fn automaton_index(&self, name: &str) -> Option<usize> {
        self.automata.iter().position(|a| a.name == name)
    }

    pub fn location_index(&self, automaton: usize, name: &str) -> Option<usize> {
        self.automata[automaton].locations.iter().position(|l| l.name == name)
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    pub fn is_broadcast(&self, ch: usize) -> bool {
        self.channels[ch].kind == ChannelKind::Broadcast
    }

    pub fn initial_locations(&self) -> Box<[u32]> {
        self.automata.iter().map(|a| a.initial as u32).collect()
    }

    pub fn compile_expr(&self, e: &Expr) -> CExpr {
        let q = |name: &str| self.layout.queue(name).expect("validated queue");
        match e {
            Expr::Const(v) => CExpr::Const(*v),
            Expr::Var(v) => CExpr::Scalar(self.layout.scalar(v).expect("validated scalar")),
            Expr::Add(a, b) => CExpr::Add(Box::new(self.compile_expr(a)), Box::new(self.compile_expr(b))),
            Expr::Sub(a, b) => CExpr::Sub(Box::new(self.compile_expr(a)), Box::new(self.compile_expr(b))),
            Expr::Mul(a, b) => CExpr::Mul(Box::new(self.compile_expr(a)), Box::new(self.compile_expr(b))),
            Expr::Len(n) => CExpr::Len(q(n)),
            Expr::Head(n) => CExpr::Head(q(n)),
            Expr::IdAt { queue, index } => CExpr::IdAt(q(queue), Box::new(self.compile_expr(index))),
            Expr::PrAt { queue, index } => CExpr::PrAt(q(queue), Box::new(self.compile_expr(index))),
        }
    }

    pub fn compile_atom(&self, a: &DiscreteAtom) -> CAtom {
        CAtom {
            lhs: self.compile_expr(&a.lhs),
            op: a.op,
            rhs: self.compile_expr(&a.rhs),
        }
    }

    fn compile_update(&self, u: &Update) -> CUpdate {
        let q = |name: &str| self.layout.queue(name).expect("validated queue");
        match u {
            Update::Assign { var, value } => CUpdate::Assign(
                self.layout.scalar(var).expect("validated scalar"),
                self.compile_expr(value),
            ),
            Update::Add { queue, id, priority } => CUpdate::Add {
                queue: q(queue),
                id: self.compile_expr(id),
                priority: self.compile_expr(priority),
            },
            Update::Dequeue(n) => CUpdate::Dequeue(q(n)),
            Update::Resort(n) => CUpdate::Resort(q(n)),
            Update::SortBehindHead(n) => CUpdate::SortBehindHead(q(n)),
        }
    }

    /// Largest absolute constant anywhere in the clock constraints.
    pub fn largest_constant(&self) -> i64 {
        self.max_constants.iter().copied().max().unwrap_or(0)
    }
}

fn clock_constraints(atoms: &[ClockAtom], resolve: &impl Fn(&str) -> usize) -> Vec<Constraint> {
    atoms
        .iter()
        .flat_map(|a| {
            let lhs = resolve(&a.clock);
            let rhs = a.minus.as_deref().map(resolve).unwrap_or(0);
            atom_constraints(lhs, rhs, a.op, a.value)
        })
        .collect()
}
