//! Extended timed automata: syntax, serialization, validation, composition,
//! and the compiled form the explorers run on.
//!
//! Clock names inside an automaton are local (`x`); everywhere else they are
//! qualified by the automaton name (`TA_t1.x`).

mod compiled;
mod compose;
mod expr;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use compiled::{atom_constraints, CAutomaton, CEdge, CLocation, CSync, CompileError, Model};
pub use compose::{compose, ComposeError};
pub use expr::{all_hold, CAtom, CExpr, CUpdate, DiscreteLayout, DiscreteState, EvalError, QueueSlot, ScalarSlot};
pub use validate::validate_network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl CmpOp {
    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    /// The operator with its operands swapped: `a < b` iff `b > a`.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, CmpOp::Lt | CmpOp::Gt | CmpOp::Ne)
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `clock op value`, or `clock - minus op value` for a diagonal constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockAtom {
    pub clock: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minus: Option<String>,
    pub op: CmpOp,
    pub value: i64,
}

impl ClockAtom {
    pub fn new(clock: impl Into<String>, op: CmpOp, value: i64) -> Self {
        ClockAtom {
            clock: clock.into(),
            minus: None,
            op,
            value,
        }
    }

    pub fn le(clock: &str, value: i64) -> Self {
        ClockAtom::new(clock, CmpOp::Le, value)
    }

    pub fn ge(clock: &str, value: i64) -> Self {
        ClockAtom::new(clock, CmpOp::Ge, value)
    }

    pub fn eq(clock: &str, value: i64) -> Self {
        ClockAtom::new(clock, CmpOp::Eq, value)
    }
}

impl fmt::Display for ClockAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.minus {
            Some(m) => write!(f, "{} - {} {} {}", self.clock, m, self.op, self.value),
            None => write!(f, "{} {} {}", self.clock, self.op, self.value),
        }
    }
}

/// Integer expression over the discrete state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Const(i64),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Number of records in a queue.
    Len(String),
    /// Task id stored at the head of a queue.
    Head(String),
    IdAt {
        queue: String,
        index: Box<Expr>,
    },
    PrAt {
        queue: String,
        index: Box<Expr>,
    },
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn int(v: i64) -> Expr {
        Expr::Const(v)
    }
}

/// `lhs op rhs` over discrete expressions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteAtom {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

impl DiscreteAtom {
    pub fn new(lhs: Expr, op: CmpOp, rhs: Expr) -> Self {
        DiscreteAtom { lhs, op, rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Update {
    Assign {
        var: String,
        value: Expr,
    },
    /// Append a `(id, priority)` record to a queue.
    Add {
        queue: String,
        id: Expr,
        priority: Expr,
    },
    /// Remove the head record.
    Dequeue(String),
    /// Stable sort of the whole queue by descending priority.
    Resort(String),
    /// Stable sort of everything behind the head by descending priority.
    SortBehindHead(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sync {
    Emit(String),
    Receive(String),
}

impl Sync {
    pub fn channel(&self) -> &str {
        match self {
            Sync::Emit(c) | Sync::Receive(c) => c,
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Location {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invariant: Vec<ClockAtom>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub committed: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub initial: bool,
}

impl Location {
    pub fn new(name: impl Into<String>) -> Self {
        Location {
            name: name.into(),
            invariant: Vec::new(),
            committed: false,
            initial: false,
        }
    }

    pub fn with_invariant(mut self, inv: Vec<ClockAtom>) -> Self {
        self.invariant = inv;
        self
    }

    pub fn committed(mut self) -> Self {
        self.committed = true;
        self
    }

    pub fn initial(mut self) -> Self {
        self.initial = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clock_guard: Vec<ClockAtom>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guard: Vec<DiscreteAtom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sync: Option<Sync>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resets: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub updates: Vec<Update>,
}

impl Edge {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Edge {
            source: source.into(),
            target: target.into(),
            clock_guard: Vec::new(),
            guard: Vec::new(),
            sync: None,
            resets: Vec::new(),
            updates: Vec::new(),
        }
    }

    pub fn clock_guard(mut self, g: Vec<ClockAtom>) -> Self {
        self.clock_guard = g;
        self
    }

    pub fn guard(mut self, g: Vec<DiscreteAtom>) -> Self {
        self.guard = g;
        self
    }

    pub fn emit(mut self, ch: impl Into<String>) -> Self {
        self.sync = Some(Sync::Emit(ch.into()));
        self
    }

    pub fn receive(mut self, ch: impl Into<String>) -> Self {
        self.sync = Some(Sync::Receive(ch.into()));
        self
    }

    pub fn reset(mut self, clocks: &[&str]) -> Self {
        self.resets = clocks.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn updates(mut self, u: Vec<Update>) -> Self {
        self.updates = u;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimedAutomaton {
    pub name: String,
    #[serde(default)]
    pub clocks: Vec<String>,
    pub locations: Vec<Location>,
    #[serde(default)]
    pub edges: Vec<Edge>,
}

impl TimedAutomaton {
    pub fn location(&self, name: &str) -> Option<&Location> {
        self.locations.iter().find(|l| l.name == name)
    }

    pub fn initial_location(&self) -> Option<&Location> {
        self.locations.iter().find(|l| l.initial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Handshake,
    Broadcast,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    pub name: String,
    pub kind: ChannelKind,
    /// Higher value means higher priority.
    #[serde(default)]
    pub priority: i64,
}

impl Channel {
    pub fn handshake(name: impl Into<String>, priority: i64) -> Self {
        Channel {
            name: name.into(),
            kind: ChannelKind::Handshake,
            priority,
        }
    }

    pub fn broadcast(name: impl Into<String>, priority: i64) -> Self {
        Channel {
            name: name.into(),
            kind: ChannelKind::Broadcast,
            priority,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VarDecl {
    Scalar {
        name: String,
        min: i64,
        max: i64,
        initial: i64,
    },
    /// A queue of `(task id, priority)` records.
    Queue { name: String, capacity: usize },
}

impl VarDecl {
    pub fn name(&self) -> &str {
        match self {
            VarDecl::Scalar { name, .. } | VarDecl::Queue { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub automata: Vec<TimedAutomaton>,
    #[serde(default)]
    pub channels: Vec<Channel>,
    #[serde(default)]
    pub variables: Vec<VarDecl>,
}

impl Network {
    pub fn automaton(&self, name: &str) -> Option<&TimedAutomaton> {
        self.automata.iter().find(|a| a.name == name)
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    /// Pretty JSON with a trailing newline. Field order follows the type
    /// definitions and every collection is a `Vec`, so the output is
    /// byte-stable.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("network serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Network, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_shapes() {
        let e = Edge::new("a", "b")
            .clock_guard(vec![ClockAtom::ge("x", 2)])
            .emit("e1")
            .reset(&["y"])
            .updates(vec![Update::Add {
                queue: "Q".into(),
                id: Expr::int(0),
                priority: Expr::int(3),
            }]);
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(
            json,
            r#"{"source":"a","target":"b","clock_guard":[{"clock":"x","op":">=","value":2}],"sync":{"emit":"e1"},"resets":["y"],"updates":[{"add":{"queue":"Q","id":{"const":0},"priority":{"const":3}}}]}"#
        );
        let back: Edge = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
        let v: VarDecl = serde_json::from_str(r#"{"kind":"queue","name":"Q","capacity":2}"#).unwrap();
        assert_eq!(
            v,
            VarDecl::Queue {
                name: "Q".into(),
                capacity: 2
            }
        );
    }
}
