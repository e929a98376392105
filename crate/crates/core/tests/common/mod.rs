//! Shared helpers for the integration targets: fixture loading and the
//! random instance generator used by the symbolic-versus-oracle checks.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::num::NonZeroU64;
use std::path::PathBuf;

use interbound::abstraction::{abstract_system, AbstractOptions, Emission, EventSpec, Producer};
use interbound::automata::Model;
use interbound::bounds::{compute_bound, BoundOptions, Requirement, RequirementKind};
use interbound::explorer::{Extremum, Mode};
use interbound::oracle::{explore_with, oracle_bound, oracle_intervals, ConcreteState, Monitor, OracleOptions, Step};
use interbound::rts::{bounded_core_network, check_schedulability, Fsm, RtsSpec, Segment, Task};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

pub fn load(dir: &str) -> (RtsSpec, EventSpec) {
    let r = RtsSpec::from_json(&std::fs::read_to_string(fixture(&format!("{dir}/rts.json"))).unwrap()).unwrap();
    let e = EventSpec::from_json(&std::fs::read_to_string(fixture(&format!("{dir}/events.json"))).unwrap()).unwrap();
    (r, e)
}

/// Values of `<task>.x` whenever `<task>` sits at `end`.
pub struct Completion {
    task: usize,
    end: usize,
    x: usize,
}

impl Monitor for Completion {
    type State = ();
    type Obs = (i64, i64);

    fn initial(&self) {}

    fn on_state(&self, _: &Model, s: &ConcreteState, _: &(), out: &mut Vec<(i64, i64)>) {
        if s.locs[self.task] as usize == self.end {
            out.push((s.clocks[self.x - 1], s.time));
        }
    }

    fn on_step(&self, _: &Model, _: &(), _: &Step, _: i64, out: &mut Vec<((), Option<(i64, i64)>)>) {
        out.push(((), None));
    }
}

/// `(response time, completion instant)` of every integer run of `task`.
pub fn completions(dir: &str, core: &str, task: &str, hp: i64) -> BTreeSet<(i64, i64)> {
    let (r, _) = load(dir);
    let model = Model::compile(&bounded_core_network(&r, core, hp).unwrap()).unwrap();
    let a = model.automaton_index(task).unwrap();
    let m = Completion {
        task: a,
        end: model.location_index(a, "end").unwrap(),
        x: model.clock_index(&format!("{task}.x")).unwrap(),
    };
    let mut opts = OracleOptions::new(hp);
    opts.exact_clocks.push(format!("{task}.x"));
    explore_with(&model, &m, &opts).unwrap().observations
}

const PERIODS: [u64; 4] = [4, 5, 8, 10];

#[derive(Clone, Copy)]
enum Shape {
    Chain(usize),
    /// act -> a | b, both -> c -> end
    Diamond,
    /// act -> a | b, a -> c, b -> c | end
    Skip,
}

fn transitions(shape: Shape, names: &[String]) -> Vec<(String, String)> {
    let t = |a: &str, b: &str| (a.to_string(), b.to_string());
    match shape {
        Shape::Chain(n) => {
            let mut v = vec![t("act", &names[0])];
            for i in 1..n {
                v.push(t(&names[i - 1], &names[i]));
            }
            v.push(t(&names[n - 1], "end"));
            v
        }
        Shape::Diamond => vec![
            t("act", &names[0]),
            t("act", &names[1]),
            t(&names[0], &names[2]),
            t(&names[1], &names[2]),
            t(&names[2], "end"),
        ],
        Shape::Skip => vec![
            t("act", &names[0]),
            t("act", &names[1]),
            t(&names[0], &names[2]),
            t(&names[1], &names[2]),
            t(&names[1], "end"),
        ],
    }
}

fn segment_count(shape: Shape) -> usize {
    match shape {
        Shape::Chain(n) => n,
        _ => 3,
    }
}

fn random_shape(rng: &mut ChaCha8Rng) -> Shape {
    match rng.gen_range(0..6) {
        0 => Shape::Diamond,
        1 => Shape::Skip,
        _ => Shape::Chain(rng.gen_range(1..=3)),
    }
}

fn emissions(rng: &mut ChaCha8Rng, seg: &Segment, names: &[String]) -> Vec<Emission> {
    let (bcet, wcet) = (seg.bcet.get(), seg.wcet.get());
    if names.len() == 1 {
        let lb = rng.gen_range(0..=bcet);
        let rb = rng.gen_range(lb..=wcet);
        return vec![Emission {
            event: names[0].clone(),
            lb,
            rb,
        }];
    }
    let a = rng.gen_range(0..=bcet);
    let lb = rng.gen_range(a..=bcet);
    let rb = rng.gen_range(lb..=wcet);
    vec![
        Emission {
            event: names[0].clone(),
            lb: a,
            rb: a,
        },
        Emission {
            event: names[1].clone(),
            lb,
            rb,
        },
    ]
}

/// A random two-core system with one producing task per core.
pub fn random_instance(seed: u64) -> (RtsSpec, EventSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cores = vec!["c1".to_string(), "c2".to_string()];
    let mut tasks = Vec::new();
    let mut events: Vec<String> = Vec::new();
    let mut producers = Vec::new();
    let mut next_seg = 0;
    for (ci, core) in cores.iter().enumerate() {
        let n = rng.gen_range(1..=3);
        let producing = rng.gen_range(0..n);
        for ti in 0..n {
            let period = *PERIODS.choose(&mut rng).unwrap();
            let shape = random_shape(&mut rng);
            let names: Vec<String> = (0..segment_count(shape))
                .map(|_| {
                    next_seg += 1;
                    format!("s{next_seg}")
                })
                .collect();
            let segments: Vec<Segment> = names
                .iter()
                .map(|name| {
                    let wcet = rng.gen_range(1..=period.min(10) / 2);
                    let bcet = rng.gen_range(1..=wcet);
                    Segment {
                        name: name.clone(),
                        bcet: NonZeroU64::new(bcet).unwrap(),
                        wcet: NonZeroU64::new(wcet).unwrap(),
                    }
                })
                .collect();
            let task = Task {
                name: format!("t{}_{ti}", ci + 1),
                period: NonZeroU64::new(period).unwrap(),
                priority: -(ti as i64),
                affinity: core.clone(),
                fsm: Fsm {
                    transitions: transitions(shape, &names),
                },
                segments,
            };
            if ti == producing {
                // chains need three distinct events
                let count = if ci == 1 && events.len() < 2 {
                    2
                } else {
                    rng.gen_range(1..=2)
                };
                let evs: Vec<String> = (0..count).map(|k| format!("e{}", events.len() + k + 1)).collect();
                events.extend(evs.iter().cloned());
                let emitting: Vec<usize> = match shape {
                    Shape::Chain(n) => vec![rng.gen_range(0..n)],
                    Shape::Diamond if rng.gen_bool(0.5) => vec![2],
                    _ => vec![0, 1],
                };
                for i in emitting {
                    let seg = &task.segments[i];
                    producers.push(Producer {
                        task: task.name.clone(),
                        segment: seg.name.clone(),
                        emits: emissions(&mut rng, seg, &evs),
                    });
                }
            }
            tasks.push(task);
        }
    }
    (
        RtsSpec {
            time_unit: None,
            cores,
            tasks,
        },
        EventSpec { events, producers },
    )
}

/// The `index`-th random instance that is schedulable on both cores.
pub fn schedulable_instance(index: u64) -> (u64, RtsSpec, EventSpec) {
    let mut seed = index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    loop {
        let (r, e) = random_instance(seed);
        if r.cores
            .iter()
            .all(|c| check_schedulability(&r, c, 1_000_000).is_ok_and(|s| s.schedulable()))
        {
            return (seed, r, e);
        }
        seed = seed.wrapping_add(1);
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Tally {
    pub interval_sets: usize,
    pub bounds: usize,
    /// Chains the symbolic engine proved to have no finite bound; the
    /// finite-horizon oracle cannot confirm those.
    pub unbounded: usize,
}

impl Tally {
    pub fn add(&mut self, o: Tally) {
        self.interval_sets += o.interval_sets;
        self.bounds += o.bounds;
        self.unbounded += o.unbounded;
    }
}

fn requirements(rng: &mut ChaCha8Rng, e: &EventSpec) -> Vec<Requirement> {
    let mut evs = e.events.clone();
    evs.shuffle(rng);
    let mut out = vec![Requirement::simple_max(&evs[0], &evs[1])];
    let mode = if rng.gen_bool(0.5) { Mode::Max } else { Mode::Min };
    for kind in [RequirementKind::Ff, RequirementKind::Lf] {
        out.push(Requirement::chain(kind, &evs[0], &evs[1], &evs[2], mode));
    }
    out
}

/// Compares the symbolic engine with the oracle on one instance.
pub fn check_instance(seed: u64, r: &RtsSpec, e: &EventSpec) -> Result<Tally, String> {
    let ctx = |what: &str| format!("seed {seed}: {what}\n{}\n{}", r.to_json(), e.to_json());
    let mut tally = Tally::default();
    let res = abstract_system(r, e, &AbstractOptions::default()).map_err(|err| ctx(&err.to_string()))?;
    for sym in &res.intervals.cores {
        let orc = oracle_intervals(r, e, &sym.core, 2_000_000).map_err(|err| ctx(&err.to_string()))?;
        for (a, b) in sym.segments.iter().zip(&orc.segments) {
            if a.periods.len() != b.periods.len() {
                return Err(ctx(&format!("{}: instance counts differ", a.segment)));
            }
            for (k, (p, q)) in a.periods.iter().zip(&b.periods).enumerate() {
                if p.integer_points() != q.integer_points() {
                    return Err(ctx(&format!(
                        "{} instance {}: symbolic {p} oracle {q}",
                        a.segment,
                        k + 1
                    )));
                }
                tally.interval_sets += 1;
            }
        }
    }

    let lcm = res.intervals.cores.iter().fold(1, |acc, c| num_lcm(acc, c.hyperperiod));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for req in requirements(&mut rng, e) {
        let sym = match compute_bound(&res.network, &req, &BoundOptions::default()) {
            Ok(b) => b.bound,
            Err(err) if err.to_string().contains("ceiling") => {
                tally.unbounded += 1;
                continue;
            }
            Err(err) => return Err(ctx(&format!("{req:?}: {err}"))),
        };
        let orc =
            oracle_bound(&res.network, &req, &OracleOptions::new(4 * lcm)).map_err(|err| ctx(&err.to_string()))?;
        let same = match (sym, orc) {
            (Extremum::Finite { value: a, .. }, Extremum::Finite { value: b, .. }) => a == b,
            (a, b) => a == b,
        };
        if !same {
            return Err(ctx(&format!("{req:?}: symbolic {sym:?} oracle {orc:?}")));
        }
        tally.bounds += 1;
    }
    Ok(tally)
}

fn num_lcm(a: i64, b: i64) -> i64 {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}
