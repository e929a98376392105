//! Periodic task systems under partitioned fixed-priority scheduling with
//! limited preemption, and their translation into timed-automata networks.

mod generate;
mod schedulability;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::num::NonZeroU64;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;

pub use generate::{
    build_core_network, build_ref_ta, generate_scheduler_ta, generate_task_ta, CoreNames, GenerateError, REF_AUTOMATON,
};
pub use schedulability::{
    bounded_core_network, check_schedulability, SchedulabilityError, SchedulabilityReport, TaskResponse,
};

/// Input could not be decoded; `path` is a JSON pointer to the culprit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct InputError {
    pub path: String,
    pub message: String,
}

/// Deserialises JSON with JSON-pointer error locations.
pub fn from_json_with_path<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let mut path = String::new();
        for seg in e.path().iter() {
            match seg {
                serde_path_to_error::Segment::Seq { index } => path.push_str(&format!("/{index}")),
                serde_path_to_error::Segment::Map { key } => path.push_str(&format!("/{key}")),
                serde_path_to_error::Segment::Enum { variant } => path.push_str(&format!("/{variant}")),
                serde_path_to_error::Segment::Unknown => path.push_str("/?"),
            }
        }
        InputError {
            path: if path.is_empty() { "/".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub name: String,
    pub bcet: NonZeroU64,
    pub wcet: NonZeroU64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fsm {
    /// Pairs over `act`, `end` and segment names.
    pub transitions: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub name: String,
    /// Also the relative deadline.
    pub period: NonZeroU64,
    /// Higher value means higher priority.
    pub priority: i64,
    pub affinity: String,
    pub segments: Vec<Segment>,
    pub fsm: Fsm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_unit: Option<String>,
    pub cores: Vec<String>,
    pub tasks: Vec<Task>,
}

pub const ACT: &str = "act";
pub const END: &str = "end";
const RESERVED: [&str; 4] = ["start", "wait", ACT, END];

impl Task {
    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn segment_index(&self, name: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.name == name)
    }

    /// Successors of a state in declaration order of segments, with `end`
    /// last.
    pub fn successors(&self, state: &str) -> Vec<&str> {
        let targets: Vec<&str> = self
            .fsm
            .transitions
            .iter()
            .filter(|(a, _)| a == state)
            .map(|(_, b)| b.as_str())
            .collect();
        let mut out: Vec<&str> = self
            .segments
            .iter()
            .map(|s| s.name.as_str())
            .filter(|s| targets.contains(s))
            .collect();
        if targets.contains(&END) {
            out.push(END);
        }
        out
    }

    /// Segment successors only.
    pub fn segment_successors(&self, state: &str) -> Vec<&str> {
        self.successors(state).into_iter().filter(|s| *s != END).collect()
    }
}

impl RtsSpec {
    pub fn from_json(text: &str) -> Result<RtsSpec, InputError> {
        from_json_with_path(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable") + "\n"
    }

    pub fn task(&self, name: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.name == name)
    }

    /// Tasks allocated to `core`, in declaration order.
    pub fn partition(&self, core: &str) -> Vec<&Task> {
        self.tasks.iter().filter(|t| t.affinity == core).collect()
    }

    /// Least common multiple of the periods on `core`, `None` if the core
    /// has no task or the value overflows.
    pub fn hyperperiod(&self, core: &str) -> Option<u64> {
        let mut hp: u64 = 1;
        let mut any = false;
        for t in self.partition(core) {
            any = true;
            let p = t.period.get();
            hp = (hp / gcd(hp, p)).checked_mul(p)?;
        }
        (any && hp <= i64::MAX as u64 / 4).then_some(hp)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RtsValidation {
    pub diagnostics: Vec<Diagnostic>,
    /// Hyperperiod of every core that has tasks.
    pub hyperperiods: BTreeMap<String, u64>,
}

/// Checks every structural rule of a task system. Errors make the spec
/// unusable; warnings do not.
pub fn validate_rts(r: &RtsSpec) -> RtsValidation {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    if r.cores.is_empty() {
        out.push(Diagnostic::error("/cores", "at least one core is required"));
    }
    for (i, c) in r.cores.iter().enumerate() {
        if !valid_ident(c) {
            out.push(Diagnostic::error(
                format!("/cores/{i}"),
                format!("core name {c:?} is not an identifier"),
            ));
        }
        if !seen.insert(c.as_str()) {
            out.push(Diagnostic::error(format!("/cores/{i}"), format!("duplicate core {c}")));
        }
    }

    let mut names = HashSet::new();
    for (ti, t) in r.tasks.iter().enumerate() {
        let base = format!("/tasks/{ti}");
        if !valid_ident(&t.name) || t.name == crate::rts::REF_AUTOMATON || t.name.starts_with("H_") {
            out.push(Diagnostic::error(
                format!("{base}/name"),
                format!(
                    "task name {:?} must be an identifier, not 'Ref' and not starting with 'H_'",
                    t.name
                ),
            ));
        }
        if !names.insert(t.name.as_str()) {
            out.push(Diagnostic::error(
                format!("{base}/name"),
                format!("duplicate task {}", t.name),
            ));
        }
        if !r.cores.contains(&t.affinity) {
            out.push(Diagnostic::error(
                format!("{base}/affinity"),
                format!("undeclared core {}", t.affinity),
            ));
        }
        validate_task(t, &base, &mut out);
    }

    let mut hyperperiods = BTreeMap::new();
    for c in &r.cores {
        let part = r.partition(c);
        if part.is_empty() {
            out.push(Diagnostic::warning("/cores", format!("core {c} has no task")));
            continue;
        }
        let mut prios: HashMap<i64, &str> = HashMap::new();
        for t in &part {
            if let Some(other) = prios.insert(t.priority, &t.name) {
                out.push(Diagnostic::error(
                    "/tasks",
                    format!("tasks {other} and {} share priority {} on core {c}", t.name, t.priority),
                ));
            }
        }
        match r.hyperperiod(c) {
            Some(hp) => {
                hyperperiods.insert(c.clone(), hp);
            }
            None => out.push(Diagnostic::error(
                "/tasks",
                format!("hyperperiod of core {c} overflows"),
            )),
        }
    }
    RtsValidation {
        diagnostics: out,
        hyperperiods,
    }
}

fn validate_task(t: &Task, base: &str, out: &mut Vec<Diagnostic>) {
    let mut seg_names = HashSet::new();
    for (si, s) in t.segments.iter().enumerate() {
        let p = format!("{base}/segments/{si}");
        if !valid_ident(&s.name) || RESERVED.contains(&s.name.as_str()) || s.name.ends_with("_pr") {
            out.push(Diagnostic::error(
                format!("{p}/name"),
                format!("segment name {:?} is reserved or not an identifier", s.name),
            ));
        }
        if !seg_names.insert(s.name.as_str()) {
            out.push(Diagnostic::error(
                format!("{p}/name"),
                format!("duplicate segment {}", s.name),
            ));
        }
        if s.bcet > s.wcet {
            out.push(Diagnostic::error(
                p,
                format!("segment {} has bcet {} > wcet {}", s.name, s.bcet, s.wcet),
            ));
        }
    }
    if t.segments.is_empty() {
        out.push(Diagnostic::error(
            format!("{base}/segments"),
            "a task needs at least one segment",
        ));
    }

    let fsm = format!("{base}/fsm/transitions");
    let known = |s: &str| s == ACT || s == END || seg_names.contains(s);
    let mut structural = true;
    for (i, (a, b)) in t.fsm.transitions.iter().enumerate() {
        for s in [a, b] {
            if !known(s) {
                structural = false;
                out.push(Diagnostic::error(format!("{fsm}/{i}"), format!("unknown state {s}")));
            }
        }
        if b == ACT {
            structural = false;
            out.push(Diagnostic::error(format!("{fsm}/{i}"), "act cannot have predecessors"));
        }
        if a == END {
            structural = false;
            out.push(Diagnostic::error(format!("{fsm}/{i}"), "end cannot have successors"));
        }
        if a == ACT && b == END {
            structural = false;
            out.push(Diagnostic::error(
                format!("{fsm}/{i}"),
                "a job needs at least one segment",
            ));
        }
    }
    if !structural {
        return;
    }

    // cycle detection on segments (white/grey/black DFS)
    let mut colour: HashMap<&str, u8> = HashMap::new();
    fn visit<'a>(t: &'a Task, s: &'a str, colour: &mut HashMap<&'a str, u8>) -> bool {
        match colour.get(s) {
            Some(1) => return false,
            Some(2) => return true,
            _ => {}
        }
        colour.insert(s, 1);
        for n in t.segment_successors(s) {
            if !visit(t, n, colour) {
                return false;
            }
        }
        colour.insert(s, 2);
        true
    }
    for s in &t.segments {
        if !visit(t, &s.name, &mut colour) {
            out.push(Diagnostic::error(
                &fsm,
                format!("task {} has a cycle through segment {}", t.name, s.name),
            ));
            return;
        }
    }

    // every segment on some act -> end path
    let mut reach: HashSet<&str> = HashSet::new();
    let mut stack = vec![ACT];
    while let Some(s) = stack.pop() {
        for n in t.successors(s) {
            if reach.insert(n) {
                stack.push(n);
            }
        }
    }
    let mut coreach: HashSet<&str> = HashSet::from([END]);
    loop {
        let before = coreach.len();
        for (a, b) in &t.fsm.transitions {
            if coreach.contains(b.as_str()) {
                coreach.insert(a.as_str());
            }
        }
        if coreach.len() == before {
            break;
        }
    }
    if !reach.contains(END) {
        out.push(Diagnostic::error(&fsm, format!("task {} never reaches end", t.name)));
    }
    for s in &t.segments {
        if !reach.contains(s.name.as_str()) || !coreach.contains(s.name.as_str()) {
            out.push(Diagnostic::error(
                &fsm,
                format!("segment {} of task {} lies on no path from act to end", s.name, t.name),
            ));
        }
    }
}

/// All maximal act→end paths as segment sequences. Successors are visited
/// in segment declaration order, with termination last.
pub fn enumerate_jobs(t: &Task) -> Vec<Vec<String>> {
    fn walk(t: &Task, state: &str, path: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        for n in t.successors(state) {
            if n == END {
                out.push(path.clone());
            } else {
                path.push(n.to_string());
                walk(t, n, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(t, ACT, &mut Vec::new(), &mut out);
    out
}
