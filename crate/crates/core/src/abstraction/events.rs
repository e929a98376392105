use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::rts::{enumerate_jobs, from_json_with_path, InputError, RtsSpec, Task};

/// One event a segment produces, at a time relative to the segment start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emission {
    pub event: String,
    pub lb: u64,
    pub rb: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Producer {
    pub task: String,
    pub segment: String,
    /// Ordered by occurrence.
    pub emits: Vec<Emission>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub events: Vec<String>,
    pub producers: Vec<Producer>,
}

impl EventSpec {
    pub fn from_json(text: &str) -> Result<EventSpec, InputError> {
        from_json_with_path(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable") + "\n"
    }

    /// Producing segments of `task`, in the task's segment declaration order.
    pub fn producers_of<'a>(&'a self, task: &Task) -> Vec<&'a Producer> {
        let mut out: Vec<&Producer> = self.producers.iter().filter(|p| p.task == task.name).collect();
        out.sort_by_key(|p| task.segment_index(&p.segment).unwrap_or(usize::MAX));
        out
    }

    pub fn producer(&self, task: &str, segment: &str) -> Option<&Producer> {
        self.producers.iter().find(|p| p.task == task && p.segment == segment)
    }

    /// Tasks with at least one producing segment, in declaration order.
    pub fn producing_tasks<'a>(&self, r: &'a RtsSpec) -> Vec<&'a Task> {
        r.tasks
            .iter()
            .filter(|t| self.producers.iter().any(|p| p.task == t.name))
            .collect()
    }

    /// Cores hosting a producing task, in core declaration order.
    pub fn producing_cores(&self, r: &RtsSpec) -> Vec<String> {
        let tasks = self.producing_tasks(r);
        r.cores
            .iter()
            .filter(|c| tasks.iter().any(|t| &t.affinity == *c))
            .cloned()
            .collect()
    }
}

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Checks an event specification against a valid task system.
///
/// With `force`, a job that produces no event is reported as a warning
/// instead of an error; exactness then depends on the requirement.
pub fn validate_event_spec(r: &RtsSpec, e: &EventSpec, force: bool) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut declared = HashSet::new();
    for (i, ev) in e.events.iter().enumerate() {
        let path = format!("/events/{i}");
        if !valid_ident(ev) {
            out.push(Diagnostic::error(&path, format!("invalid event name {ev:?}")));
        }
        if !declared.insert(ev.as_str()) {
            out.push(Diagnostic::error(&path, format!("duplicate event {ev}")));
        }
    }

    let mut seen = HashSet::new();
    let mut emitted = HashSet::new();
    for (i, p) in e.producers.iter().enumerate() {
        let path = format!("/producers/{i}");
        if !seen.insert((p.task.as_str(), p.segment.as_str())) {
            out.push(Diagnostic::error(
                &path,
                format!("segment {}/{} is listed twice", p.task, p.segment),
            ));
        }
        let Some(task) = r.task(&p.task) else {
            out.push(Diagnostic::error(
                format!("{path}/task"),
                format!("unknown task {}", p.task),
            ));
            continue;
        };
        let Some(seg) = task.segment(&p.segment) else {
            out.push(Diagnostic::error(
                format!("{path}/segment"),
                format!("task {} has no segment {}", p.task, p.segment),
            ));
            continue;
        };
        if p.emits.is_empty() {
            out.push(Diagnostic::error(
                format!("{path}/emits"),
                "a producer must emit at least one event",
            ));
        }
        for (j, em) in p.emits.iter().enumerate() {
            let ep = format!("{path}/emits/{j}");
            emitted.insert(em.event.as_str());
            if !declared.contains(em.event.as_str()) {
                out.push(Diagnostic::error(
                    format!("{ep}/event"),
                    format!("undeclared event {}", em.event),
                ));
            }
            if em.lb > em.rb {
                out.push(Diagnostic::error(&ep, format!("empty interval [{},{}]", em.lb, em.rb)));
            }
            if em.rb > seg.wcet.get() {
                out.push(Diagnostic::error(
                    format!("{ep}/rb"),
                    format!("{} exceeds the wcet {} of {}", em.rb, seg.wcet, seg.name),
                ));
            }
            if j > 0 {
                let prev = &p.emits[j - 1];
                if em.lb < prev.lb || em.rb < prev.rb {
                    out.push(Diagnostic::error(
                        &ep,
                        format!("{} must not start or end before the preceding {}", em.event, prev.event),
                    ));
                }
            }
        }
    }
    if has_errors(&out) {
        return out;
    }

    let tasks = e.producing_tasks(r);
    let mut by_core: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for t in &tasks {
        by_core.entry(t.affinity.as_str()).or_default().push(&t.name);
    }
    for (core, names) in &by_core {
        if names.len() > 1 {
            out.push(Diagnostic::error(
                "/producers",
                format!(
                    "tasks {} share core {core}; producing tasks need distinct cores",
                    names.join(", ")
                ),
            ));
        }
    }
    if by_core.len() < 2 {
        out.push(Diagnostic::error(
            "/producers",
            "events must be produced on at least two cores",
        ));
    }

    for t in &tasks {
        let producing: Vec<&str> = e.producers_of(t).iter().map(|p| p.segment.as_str()).collect();
        let jobs = enumerate_jobs(t);
        for job in &jobs {
            let inside: Vec<&str> = producing
                .iter()
                .copied()
                .filter(|s| job.iter().any(|j| j == s))
                .collect();
            if inside.len() > 1 {
                out.push(Diagnostic::error(
                    "/producers",
                    format!("segments {} of {} lie on the same job", inside.join(", "), t.name),
                ));
            }
        }
        if jobs.len() > 1 {
            out.push(Diagnostic::warning(
                format!("/tasks/{}", t.name),
                format!(
                    "{} has several jobs; make sure the requirement measures a bound that exists on every job",
                    t.name
                ),
            ));
            for job in jobs
                .iter()
                .filter(|job| !job.iter().any(|s| producing.contains(&s.as_str())))
            {
                let msg = format!("job {{{}}} of {} produces no event", job.join(","), t.name);
                out.push(if force {
                    Diagnostic::warning("/producers", format!("{msg}; exactness is left to the requirement"))
                } else {
                    Diagnostic::error("/producers", format!("{msg}; add a producer or use force"))
                });
            }
        }
    }

    for ev in &e.events {
        if !emitted.contains(ev.as_str()) {
            out.push(Diagnostic::warning("/events", format!("event {ev} is never produced")));
        }
    }
    out
}

fn has_errors(d: &[Diagnostic]) -> bool {
    d.iter().any(Diagnostic::is_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rts() -> RtsSpec {
        RtsSpec::from_json(include_str!("../../../../fixtures/example1/rts.json")).unwrap()
    }

    type Row<'a> = (&'a str, &'a str, &'a [(&'a str, u64, u64)]);

    fn spec(producers: &[Row]) -> EventSpec {
        let mut events: Vec<String> = Vec::new();
        let producers = producers
            .iter()
            .map(|(t, s, em)| Producer {
                task: t.to_string(),
                segment: s.to_string(),
                emits: em
                    .iter()
                    .map(|&(ev, lb, rb)| {
                        if !events.iter().any(|x| x == ev) {
                            events.push(ev.into());
                        }
                        Emission {
                            event: ev.into(),
                            lb,
                            rb,
                        }
                    })
                    .collect(),
            })
            .collect();
        EventSpec { events, producers }
    }

    #[test]
    fn example_one_is_clean() {
        let e = spec(&[("tau3", "s5", &[("e1", 2, 4)]), ("tau1", "s1", &[("e2", 2, 3)])]);
        assert!(validate_event_spec(&rts(), &e, false).is_empty());
    }

    #[test]
    fn distinct_affinity_and_core_count() {
        let e = spec(&[("tau3", "s5", &[("e1", 2, 4)]), ("tau4", "s6", &[("e2", 2, 3)])]);
        let d = validate_event_spec(&rts(), &e, false);
        assert!(d.iter().any(|d| d.is_error() && d.message.contains("share core c2")));
        assert!(d.iter().any(|d| d.message.contains("at least two cores")));
    }

    #[test]
    fn interval_rules() {
        let e = spec(&[
            ("tau3", "s5", &[("e1", 2, 5), ("e3", 1, 5)]),
            ("tau1", "s1", &[("e2", 3, 2)]),
        ]);
        let d = validate_event_spec(&rts(), &e, false);
        assert!(d.iter().any(|d| d.path == "/producers/0/emits/0/rb"));
        assert!(d.iter().any(|d| d.path == "/producers/0/emits/1"));
        assert!(d.iter().any(|d| d.path == "/producers/1/emits/0"));
    }

    #[test]
    fn job_coverage_and_force() {
        let e = spec(&[("tau3", "s5", &[("e3", 0, 1)]), ("tau2", "s2", &[("e4", 0, 3)])]);
        let strict = validate_event_spec(&rts(), &e, false);
        assert!(strict
            .iter()
            .any(|d| d.is_error() && d.message.contains("{s4,s3} of tau2")));
        let forced = validate_event_spec(&rts(), &e, true);
        assert!(!has_errors(&forced));
        assert_eq!(
            forced
                .iter()
                .filter(|d| d.message.contains("produces no event"))
                .count(),
            2
        );
        assert!(forced.iter().any(|d| d.message.contains("several jobs")));
    }

    #[test]
    fn same_job_producers() {
        let e = spec(&[
            ("tau3", "s5", &[("e1", 2, 4)]),
            ("tau2", "s2", &[("e2", 0, 1)]),
            ("tau2", "s3", &[("e4", 0, 1)]),
            ("tau2", "s4", &[("e5", 0, 1)]),
        ]);
        let d = validate_event_spec(&rts(), &e, false);
        assert!(d.iter().any(|d| d.message.contains("s2, s3 of tau2")));
        assert!(d.iter().any(|d| d.message.contains("s3, s4 of tau2")));
    }
}
