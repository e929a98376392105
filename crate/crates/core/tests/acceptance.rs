//! Acceptance suite: one PASS/FAIL line per criterion. Every paper-derived
//! number is an exact integer, so the tolerance is zero throughout.
//!
//! Runs without the libtest harness; the process fails if any criterion
//! fails. `ACCEPTANCE_ONLY=3,7` restricts the run to some criteria.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{check_instance, completions, fixture, load, schedulable_instance, Tally};
use interbound::abstraction::{abstract_system, abstraction_part, compute_exact_intervals, AbstractOptions};
use interbound::automata::{compose, Model, Network};
use interbound::bounds::{compute_bound, BoundOptions, Requirement};
use interbound::explorer::{BuildOptions, ExploreError, Extremum, IntervalSet, Mode, StateFormula, ZoneGraph};
use interbound::oracle::{instrument_core_network, oracle_emissions, oracle_pairs, OracleOptions};
use interbound::rts::{bounded_core_network, build_ref_ta, check_schedulability};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const FAST: Duration = Duration::from_secs(1);
const RANDOM_INSTANCES: u64 = 200;
const STRESS_TIME: Duration = Duration::from_secs(600);
const STRESS_MEMORY_KIB: u64 = 8 * 1024 * 1024;
const PRODUCT_BUDGET: usize = 1_000_000;

fn sets(v: &[&[(i64, i64)]]) -> Vec<IntervalSet> {
    v.iter()
        .map(|s| IntervalSet::from_intervals(s.iter().copied()))
        .collect()
}

fn interval_extraction() -> Outcome {
    let mut times = Vec::new();
    for (dir, expected) in [
        ("example1", sets(&[&[(2, 4)], &[(22, 26), (32, 38)]])),
        ("example2", sets(&[&[(0, 1)], &[(20, 23), (30, 35)]])),
    ] {
        let (r, e) = load(dir);
        let started = Instant::now();
        let c2 = compute_exact_intervals(&r, &e, "c2", 1_000_000).map_err(|e| e.to_string())?;
        let took = started.elapsed();
        ensure!(
            c2.segments[0].periods == expected,
            "{dir}: got {:?}",
            c2.segments[0].periods
        );
        ensure!(took < FAST, "{dir} took {took:?}");
        times.push(format!("{dir} {took:.1?}"));
    }
    Ok(times.join(", "))
}

fn coarse_extrema() -> Outcome {
    let (r, e) = load("example1");
    let mut out = Vec::new();
    for (core, expected) in [("c1", vec![(7, 9), (27, 29), (47, 50)]), ("c2", vec![(2, 4), (22, 38)])] {
        let iv = compute_exact_intervals(&r, &e, core, 1_000_000)
            .map_err(|e| e.to_string())?
            .coarse();
        let got: Vec<(i64, i64)> = iv.segments[0]
            .periods
            .iter()
            .map(|p| (p.min().unwrap(), p.max().unwrap()))
            .collect();
        ensure!(got == expected, "{core}: {got:?}");
        out.push(format!("{core} {got:?}"));
    }
    Ok(out.join("; "))
}

fn hole_phenomenon() -> Outcome {
    let (r, e) = load("example1");
    let req = Requirement::from_json(&std::fs::read_to_string(fixture("example1/simplemax.req.json")).unwrap())
        .map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for (coarse, expected) in [(true, 23), (false, 18)] {
        let started = Instant::now();
        let a = abstract_system(
            &r,
            &e,
            &AbstractOptions {
                coarse,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let b = compute_bound(&a.network, &req, &BoundOptions::default()).map_err(|e| e.to_string())?;
        let took = started.elapsed();
        ensure!(b.bound.value() == Some(expected), "coarse={coarse}: {:?}", b.bound);
        ensure!(took < FAST, "coarse={coarse} took {took:?}");
        out.push(format!(
            "{} {expected} in {took:.1?}",
            if coarse { "coarse" } else { "exact" }
        ));
    }
    Ok(out.join(", "))
}

fn abstraction_structure() -> Outcome {
    let mut checked = 0;
    for (dir, core) in [
        ("example1", "c2"),
        ("example1", "c1"),
        ("example2", "c2"),
        ("example3", "c1"),
        ("example3", "c2"),
    ] {
        let (r, e) = load(dir);
        let res = abstract_system(&r, &e, &AbstractOptions::default()).map_err(|e| e.to_string())?;
        let a = res
            .automata
            .iter()
            .find(|a| a.name == format!("A_{core}"))
            .ok_or("missing automaton")?;
        let path = fixture(&format!("golden/{dir}_A_{core}.ta.json"));
        let golden = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        ensure!(
            abstraction_part(&e, a.clone()).to_json() == golden,
            "{dir} A_{core} differs from its golden file"
        );
        checked += 1;
    }
    let (r, e) = load("example2");
    let res = abstract_system(&r, &e, &AbstractOptions::default()).map_err(|e| e.to_string())?;
    let a = res.automata.iter().find(|a| a.name == "A_c2").unwrap();
    let loc = a.location("s5_2_1_2").ok_or("no s5_2_1_2")?;
    let inv: Vec<String> = loc.invariant.iter().map(ToString::to_string).collect();
    ensure!(inv == ["x <= 26", "y <= 4"], "invariant {inv:?}");
    let out: Vec<_> = a.edges.iter().filter(|e| e.source == "s5_2_1_2").collect();
    let guard: Vec<String> = out
        .iter()
        .flat_map(|e| e.clock_guard.iter().map(ToString::to_string))
        .collect();
    ensure!(guard == ["x >= 22", "y >= 1"], "guard {guard:?}");
    Ok(format!("{checked} golden files, branch location checked"))
}

fn scheduler_fidelity() -> Outcome {
    let (r, _) = load("example1");
    let n = bounded_core_network(&r, "c2", 40).map_err(|e| e.to_string())?;
    let model = Model::compile(&n).map_err(|e| e.to_string())?;
    let g = ZoneGraph::build(&model, &BuildOptions::default()).map_err(|e| e.to_string())?;
    let q = |f: &str| -> Result<IntervalSet, String> {
        let f = StateFormula::parse(&model, f).map_err(|e| e.to_string())?;
        g.bounds(&f, "Ref.x").map_err(|e| e.to_string())
    };
    for (f, expected) in [
        ("tau4.s6 and tau4.y >= 16", IntervalSet::from_intervals([(18, 22)])),
        ("tau4.end", IntervalSet::from_intervals([(30, 40)])),
        (
            "tau3.end and Ref.x >= 20",
            IntervalSet::from_intervals([(22, 26), (32, 38)]),
        ),
    ] {
        let got = q(f)?;
        ensure!(got == expected, "{f}: {got}");
    }
    Ok("s6 completes in [18,22], tau4 ends in [30,40], tau3 second completion {[22,26],[32,38]}".into())
}

fn schedulability() -> Outcome {
    let (r, _) = load("example1");
    // ground truth first
    let truth = |core: &str, task: &str, hp: i64| completions("example1", core, task, hp).iter().map(|o| o.0).max();
    ensure!(
        truth("c2", "tau3", 40) == Some(18),
        "oracle tau3 {:?}",
        truth("c2", "tau3", 40)
    );
    ensure!(
        truth("c2", "tau4", 40) == Some(40),
        "oracle tau4 {:?}",
        truth("c2", "tau4", 40)
    );
    let mut out = Vec::new();
    for core in ["c1", "c2"] {
        let rep = check_schedulability(&r, core, 1_000_000).map_err(|e| e.to_string())?;
        ensure!(rep.schedulable(), "{core} not schedulable: {rep:?}");
        for t in &rep.tasks {
            if let Some(o) = truth(core, &t.task, rep.hyperperiod as i64) {
                ensure!(
                    t.wcrt.value() == Some(o),
                    "{}: symbolic {:?} oracle {o}",
                    t.task,
                    t.wcrt
                );
            }
            out.push(format!("{} {}", t.task, t.wcrt.value().unwrap_or(-1)));
        }
    }
    Ok(format!("WCRT {}", out.join(", ")))
}

fn oracle_equivalence() -> Outcome {
    let mut tally = Tally::default();
    for i in 0..RANDOM_INSTANCES {
        let (seed, r, e) = schedulable_instance(i);
        tally.add(check_instance(seed, &r, &e)?);
    }
    Ok(format!(
        "{RANDOM_INSTANCES} instances, 0 mismatches: {} interval sets, {} bounds; {} chains proved unbounded",
        tally.interval_sets, tally.bounds, tally.unbounded
    ))
}

/// Instants of the declared events; scheduler channels are left out.
fn emissions(n: &Network, events: &[String], hp: i64) -> Result<BTreeSet<(String, i64)>, String> {
    let run = oracle_emissions(n, &OracleOptions::new(hp)).map_err(|e| e.to_string())?;
    Ok(run
        .observations
        .into_iter()
        .filter(|t| events.contains(&t.event))
        .map(|t| (t.event, t.time))
        .collect())
}

fn with_ref(n: Network, hp: i64) -> Network {
    compose(&[
        n,
        Network {
            automata: vec![build_ref_ta(hp)],
            ..Default::default()
        },
    ])
    .expect("Ref has its own names")
}

fn per_core_exactness() -> Outcome {
    let mut compared = 0;
    for dir in ["example1", "example2", "example3"] {
        let (r, e) = load(dir);
        let res = abstract_system(&r, &e, &AbstractOptions::default()).map_err(|e| e.to_string())?;
        for (a, iv) in res.automata.iter().zip(&res.intervals.cores) {
            let hp = iv.hyperperiod;
            let abs = with_ref(abstraction_part(&e, a.clone()), hp);
            let concrete = with_ref(
                instrument_core_network(&r, &e, &iv.core).map_err(|e| e.to_string())?,
                hp,
            );
            let (x, y) = (emissions(&abs, &e.events, hp)?, emissions(&concrete, &e.events, hp)?);
            ensure!(
                x == y,
                "{dir} {}: only abstract {:?}, only concrete {:?}",
                iv.core,
                x.difference(&y).collect::<Vec<_>>(),
                y.difference(&x).collect::<Vec<_>>()
            );
            compared += x.len();
        }
    }
    let (r, e) = load("example2");
    let res = abstract_system(&r, &e, &AbstractOptions::default()).map_err(|e| e.to_string())?;
    let pairs = [("e3".to_string(), "e1".to_string())];
    let a = res.automata.iter().find(|a| a.name == "A_c2").unwrap();
    let opts = OracleOptions::new(40);
    let abs = oracle_pairs(&with_ref(abstraction_part(&e, a.clone()), 40), &pairs, &opts).map_err(|e| e.to_string())?;
    let con = oracle_pairs(
        &with_ref(instrument_core_network(&r, &e, "c2").map_err(|e| e.to_string())?, 40),
        &pairs,
        &opts,
    )
    .map_err(|e| e.to_string())?;
    ensure!(!abs.observations.is_empty(), "no (e3, e1) pair observed");
    ensure!(abs.observations == con.observations, "pair timings differ");
    Ok(format!(
        "{compared} (event, instant) pairs, {} (e3, e1) timings",
        abs.observations.len()
    ))
}

fn graphs(dir: &str, subsumption: bool) -> Result<Vec<(ZoneGraph, Vec<String>)>, String> {
    let (r, _) = load(dir);
    let mut out = Vec::new();
    for core in &r.cores {
        let hp = r.hyperperiod(core).ok_or("empty core")? as i64;
        let model = Model::compile(&bounded_core_network(&r, core, hp).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let g = ZoneGraph::build(
            &model,
            &BuildOptions {
                subsumption,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let mut formulas = Vec::new();
        for t in r.partition(core) {
            formulas.push(format!("{}.end", t.name));
            for s in &t.segments {
                formulas.push(format!("{}.{}", t.name, s.name));
                formulas.push(format!("{}.{} and {}.y >= {}", t.name, s.name, t.name, s.bcet));
            }
        }
        out.push((g, formulas));
    }
    Ok(out)
}

fn answers(g: &ZoneGraph, f: &str) -> Result<(IntervalSet, Extremum, Extremum), String> {
    let f = StateFormula::parse(g.model(), f).map_err(|e| e.to_string())?;
    let q = |m| g.extremum(&f, "Ref.x", m).map_err(|e| e.to_string());
    Ok((
        g.bounds(&f, "Ref.x").map_err(|e| e.to_string())?,
        q(Mode::Min)?,
        q(Mode::Max)?,
    ))
}

fn query_consistency() -> Outcome {
    let mut count = 0;
    for dir in ["example1", "example2", "example3", "example3_eventless"] {
        let on = graphs(dir, true)?;
        let off = graphs(dir, false)?;
        for ((g, formulas), (h, _)) in on.iter().zip(&off) {
            for f in formulas {
                let (set, lo, hi) = answers(g, f)?;
                ensure!(
                    set.min() == lo.value() && set.max() == hi.value(),
                    "{dir} {f}: {set} vs {lo:?} {hi:?}"
                );
                ensure!(
                    answers(h, f)? == (set, lo, hi),
                    "{dir} {f}: subsumption changes the answer"
                );
                count += 1;
            }
        }
    }
    Ok(format!("{count} queries, subsumption on and off agree"))
}

fn peak_memory_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn stress() -> Outcome {
    let (r, e) = load("stress");
    let segments: usize = r.tasks.iter().map(|t| t.segments.len()).sum();
    let started = Instant::now();
    let iv = interbound::abstraction::compute_interval_table(&r, &e, &AbstractOptions::default())
        .map_err(|e| e.to_string())?;
    let took = started.elapsed();
    let mem = peak_memory_kib();
    ensure!(took < STRESS_TIME, "interval extraction took {took:?}");
    ensure!(mem.is_none_or(|m| m < STRESS_MEMORY_KIB), "peak memory {mem:?} KiB");
    let states: usize = iv.cores.iter().map(|c| c.states).sum();

    let res = abstract_system(&r, &e, &AbstractOptions::default()).map_err(|e| e.to_string())?;
    let req = Requirement::simple_max("w", "r");
    let abstract_bound = compute_bound(&res.network, &req, &BoundOptions::default()).map_err(|e| e.to_string())?;

    let parts: Vec<Network> = r
        .cores
        .iter()
        .map(|c| instrument_core_network(&r, &e, c))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let product = compose(&parts).map_err(|e| e.to_string())?;
    let direct = compute_bound(
        &product,
        &req,
        &BoundOptions {
            state_budget: PRODUCT_BUDGET,
            ceiling: None,
        },
    );
    let exhausted = matches!(
        &direct,
        Err(interbound::bounds::BoundError::Explore(
            ExploreError::BudgetExceeded { .. }
        ))
    );
    ensure!(
        exhausted,
        "direct product did not exhaust {PRODUCT_BUDGET} states: {:?}",
        direct.map(|b| b.bound)
    );
    Ok(format!(
        "{} tasks, {segments} segments: intervals in {took:.1?} ({states} states, peak {} MiB), abstract bound {:?} over {} states; direct product exhausted {PRODUCT_BUDGET} states",
        r.tasks.len(),
        mem.unwrap_or(0) / 1024,
        abstract_bound.bound.value(),
        abstract_bound.states_explored
    ))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [Criterion; 10] = [
        ("interval extraction", interval_extraction),
        ("coarse extremum values", coarse_extrema),
        ("hole phenomenon", hole_phenomenon),
        ("abstraction structure", abstraction_structure),
        ("scheduler fidelity", scheduler_fidelity),
        ("schedulability", schedulability),
        ("oracle equivalence", oracle_equivalence),
        ("per-core exactness", per_core_exactness),
        ("query consistency", query_consistency),
        ("stress fixture", stress),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let took = started.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail} [{took:.1?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {why} [{took:.1?}]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
