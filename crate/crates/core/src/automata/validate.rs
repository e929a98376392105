use std::collections::{HashMap, HashSet};

use super::{ChannelKind, ClockAtom, CmpOp, DiscreteAtom, Expr, Network, Sync, TimedAutomaton, Update, VarDecl};
use crate::diag::Diagnostic;

#[derive(Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Scalar,
    Queue,
}

struct Scope<'a> {
    network: &'a Network,
    vars: HashMap<&'a str, VarKind>,
}

impl<'a> Scope<'a> {
    fn clock_known(&self, owner: &TimedAutomaton, name: &str) -> bool {
        match name.split_once('.') {
            Some((aut, clock)) => self
                .network
                .automaton(aut)
                .is_some_and(|a| a.clocks.iter().any(|c| c == clock)),
            None => owner.clocks.iter().any(|c| c == name),
        }
    }

    fn check_expr(&self, e: &Expr, path: &str, out: &mut Vec<Diagnostic>) {
        let want = |name: &str, kind: VarKind, out: &mut Vec<Diagnostic>| match self.vars.get(name) {
            Some(k) if *k == kind => {}
            Some(_) => out.push(Diagnostic::error(path, format!("variable {name} has the wrong kind"))),
            None => out.push(Diagnostic::error(path, format!("undeclared variable {name}"))),
        };
        match e {
            Expr::Const(_) => {}
            Expr::Var(v) => want(v, VarKind::Scalar, out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                self.check_expr(a, path, out);
                self.check_expr(b, path, out);
            }
            Expr::Len(q) | Expr::Head(q) => want(q, VarKind::Queue, out),
            Expr::IdAt { queue, index } | Expr::PrAt { queue, index } => {
                want(queue, VarKind::Queue, out);
                self.check_expr(index, path, out);
            }
        }
    }

    fn check_clock_atoms(&self, owner: &TimedAutomaton, atoms: &[ClockAtom], path: &str, out: &mut Vec<Diagnostic>) {
        for (i, a) in atoms.iter().enumerate() {
            let p = format!("{path}/{i}");
            for c in std::iter::once(&a.clock).chain(a.minus.iter()) {
                if !self.clock_known(owner, c) {
                    out.push(Diagnostic::error(&p, format!("undeclared clock {c}")));
                }
            }
            if a.op == CmpOp::Ne {
                out.push(Diagnostic::error(&p, "clock constraints cannot use !="));
            }
        }
    }

    fn check_discrete(&self, atoms: &[DiscreteAtom], path: &str, out: &mut Vec<Diagnostic>) {
        for (i, a) in atoms.iter().enumerate() {
            let p = format!("{path}/{i}");
            self.check_expr(&a.lhs, &p, out);
            self.check_expr(&a.rhs, &p, out);
        }
    }
}

fn duplicates<'a>(names: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut dup = Vec::new();
    for n in names {
        if !seen.insert(n) && !dup.contains(&n) {
            dup.push(n);
        }
    }
    dup
}

/// Checks every well-formedness rule of a network. An empty result means
/// the network can be compiled and explored.
pub fn validate_network(n: &Network) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for d in duplicates(n.automata.iter().map(|a| a.name.as_str())) {
        out.push(Diagnostic::error("automata", format!("duplicate automaton {d}")));
    }
    for d in duplicates(n.channels.iter().map(|c| c.name.as_str())) {
        out.push(Diagnostic::error("channels", format!("duplicate channel {d}")));
    }
    for d in duplicates(n.variables.iter().map(VarDecl::name)) {
        out.push(Diagnostic::error("variables", format!("duplicate variable {d}")));
    }

    let mut vars = HashMap::new();
    for (i, v) in n.variables.iter().enumerate() {
        let path = format!("variables/{i}");
        match v {
            VarDecl::Scalar {
                name,
                min,
                max,
                initial,
            } => {
                if min > max || initial < min || initial > max {
                    out.push(Diagnostic::error(
                        path,
                        format!("scalar {name} needs min <= initial <= max"),
                    ));
                }
                vars.insert(name.as_str(), VarKind::Scalar);
            }
            VarDecl::Queue { name, capacity } => {
                if *capacity == 0 {
                    out.push(Diagnostic::error(
                        path,
                        format!("queue {name} needs a positive capacity"),
                    ));
                }
                vars.insert(name.as_str(), VarKind::Queue);
            }
        }
    }
    let scope = Scope { network: n, vars };

    for a in &n.automata {
        let base = format!("automata/{}", a.name);
        if a.name.is_empty() || a.name.contains('.') {
            out.push(Diagnostic::error(
                &base,
                "automaton names must be non-empty and contain no '.'",
            ));
        }
        for d in duplicates(a.clocks.iter().map(String::as_str)) {
            out.push(Diagnostic::error(
                format!("{base}/clocks"),
                format!("duplicate clock {d}"),
            ));
        }
        for d in duplicates(a.locations.iter().map(|l| l.name.as_str())) {
            out.push(Diagnostic::error(
                format!("{base}/locations"),
                format!("duplicate location {d}"),
            ));
        }
        let initials = a.locations.iter().filter(|l| l.initial).count();
        if initials != 1 {
            out.push(Diagnostic::error(
                format!("{base}/locations"),
                format!("expected exactly one initial location, found {initials}"),
            ));
        }
        for (i, l) in a.locations.iter().enumerate() {
            scope.check_clock_atoms(a, &l.invariant, &format!("{base}/locations/{i}/invariant"), &mut out);
            for (j, atom) in l.invariant.iter().enumerate() {
                if atom.minus.is_none() && matches!(atom.op, CmpOp::Ge | CmpOp::Gt | CmpOp::Eq) {
                    out.push(Diagnostic::error(
                        format!("{base}/locations/{i}/invariant/{j}"),
                        "invariants must be upper bounds",
                    ));
                }
            }
        }
        for (i, e) in a.edges.iter().enumerate() {
            let path = format!("{base}/edges/{i}");
            for (field, loc) in [("source", &e.source), ("target", &e.target)] {
                if a.location(loc).is_none() {
                    out.push(Diagnostic::error(
                        format!("{path}/{field}"),
                        format!("undeclared location {loc}"),
                    ));
                }
            }
            scope.check_clock_atoms(a, &e.clock_guard, &format!("{path}/clock_guard"), &mut out);
            scope.check_discrete(&e.guard, &format!("{path}/guard"), &mut out);
            for r in &e.resets {
                if !scope.clock_known(a, r) {
                    out.push(Diagnostic::error(
                        format!("{path}/resets"),
                        format!("undeclared clock {r}"),
                    ));
                }
            }
            for (j, u) in e.updates.iter().enumerate() {
                let p = format!("{path}/updates/{j}");
                match u {
                    Update::Assign { var, value } => {
                        scope.check_expr(&Expr::Var(var.clone()), &p, &mut out);
                        scope.check_expr(value, &p, &mut out);
                    }
                    Update::Add { queue, id, priority } => {
                        scope.check_expr(&Expr::Len(queue.clone()), &p, &mut out);
                        scope.check_expr(id, &p, &mut out);
                        scope.check_expr(priority, &p, &mut out);
                    }
                    Update::Dequeue(q) | Update::Resort(q) | Update::SortBehindHead(q) => {
                        scope.check_expr(&Expr::Len(q.clone()), &p, &mut out);
                    }
                }
            }
            if let Some(sync) = &e.sync {
                match n.channel(sync.channel()) {
                    None => out.push(Diagnostic::error(
                        format!("{path}/sync"),
                        format!("undeclared channel {}", sync.channel()),
                    )),
                    Some(ch) => {
                        if ch.kind == ChannelKind::Broadcast
                            && matches!(sync, Sync::Receive(_))
                            && !e.clock_guard.is_empty()
                        {
                            out.push(Diagnostic::error(
                                format!("{path}/clock_guard"),
                                "broadcast receiving edges may only carry discrete guards",
                            ));
                        }
                    }
                }
            }
        }
    }
    out
}
