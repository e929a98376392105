mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use interbound::abstraction::{
    abstract_system, abstraction_part, check_inputs, compute_interval_table, AbstractOptions, AbstractionError,
    EventSpec, IvTable,
};
use interbound::automata::Network;
use interbound::bounds::{compute_bound, validate_requirement, BoundError, BoundOptions, Requirement};
use interbound::explorer::{Extremum, DEFAULT_STATE_BUDGET};
use interbound::oracle::{events_csv, oracle_bound, oracle_emissions, oracle_intervals, OracleError, OracleOptions};
use interbound::rts::{build_core_network, check_schedulability, validate_rts, RtsSpec, SchedulabilityError};
use interbound::Diagnostic;
use serde_json::json;

use manifest::RunManifest;

/// Exact inter-core timing bounds for partitioned fixed-priority systems.
#[derive(Debug, Parser)]
#[command(name = "interbound", version)]
struct Cli {
    /// Worker threads for per-core stages (0 = one per CPU).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Symbolic states explored before giving up.
    #[arg(long, global = true, default_value_t = DEFAULT_STATE_BUDGET)]
    state_budget: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SystemFiles {
    rts: PathBuf,
    events: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a task system, and optionally an event specification and a requirement.
    Validate {
        rts: PathBuf,
        events: Option<PathBuf>,
        requirement: Option<PathBuf>,
        /// Report eventless jobs as warnings.
        #[arg(long)]
        force: bool,
    },
    /// Worst-case response time of every task.
    Schedulability {
        rts: PathBuf,
        /// Only this core.
        #[arg(long)]
        core: Option<String>,
    },
    /// Per-instance production intervals of every producing segment.
    Intervals {
        #[command(flatten)]
        files: SystemFiles,
        /// Output file.
        #[arg(short, long, default_value = "intervals.json")]
        output: PathBuf,
        /// Print the table.
        #[arg(long)]
        verbose: bool,
        #[arg(long)]
        force: bool,
    },
    /// Write core networks, abstractions and a run manifest to a directory.
    Abstract {
        #[command(flatten)]
        files: SystemFiles,
        #[arg(short, long)]
        output: PathBuf,
        /// Accept jobs that produce no event.
        #[arg(long)]
        force: bool,
        /// Read N_<core>.ta.json from this directory instead of generating them.
        #[arg(long)]
        xta: Option<PathBuf>,
        /// Per-instance hulls instead of exact unions.
        #[arg(long)]
        coarse: bool,
    },
    /// Latency bound of a requirement on the abstract network.
    Bound {
        #[command(flatten)]
        files: SystemFiles,
        requirement: PathBuf,
        #[arg(long)]
        coarse: bool,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        xta: Option<PathBuf>,
    },
    /// Cross-check by integer-time enumeration.
    Oracle {
        #[command(flatten)]
        files: SystemFiles,
        requirement: PathBuf,
        /// Last instant explored for the bound; defaults to twice the
        /// least common multiple of the producing cores' hyperperiods.
        #[arg(long)]
        horizon: Option<i64>,
        /// Write every (event, time) pair of the abstract network here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        force: bool,
        /// Integer states enumerated before giving up.
        #[arg(long, default_value_t = interbound::oracle::DEFAULT_ORACLE_BUDGET)]
        oracle_budget: usize,
    },
}

/// Why a run stopped; decides the exit code.
#[derive(Debug)]
enum Failure {
    Diagnostics(Vec<Diagnostic>),
    Message(String),
    Resource(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Resource(_) => 2,
            _ => 1,
        }
    }
}

impl From<AbstractionError> for Failure {
    fn from(e: AbstractionError) -> Self {
        match e {
            AbstractionError::Invalid(d) => Failure::Diagnostics(d),
            e if e.is_resource() => Failure::Resource(e.to_string()),
            e => Failure::Message(e.to_string()),
        }
    }
}

impl From<BoundError> for Failure {
    fn from(e: BoundError) -> Self {
        match e {
            BoundError::Invalid(d) => Failure::Diagnostics(d),
            e if e.is_resource() => Failure::Resource(e.to_string()),
            e => Failure::Message(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded { .. } => Failure::Resource(e.to_string()),
            e => Failure::Message(e.to_string()),
        }
    }
}

impl From<SchedulabilityError> for Failure {
    fn from(e: SchedulabilityError) -> Self {
        match e {
            SchedulabilityError::Explore(interbound::explorer::ExploreError::BudgetExceeded { .. }) => {
                Failure::Resource(e.to_string())
            }
            e => Failure::Message(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Loaded<T> {
    value: T,
    bytes: Vec<u8>,
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Message(format!("{}: {e}", path.display())))
}

fn parse<T>(path: &Path, f: impl Fn(&str) -> Result<T, interbound::rts::InputError>) -> Result<Loaded<T>, Failure> {
    let bytes = read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let value = f(&text).map_err(|e| {
        Failure::Diagnostics(vec![Diagnostic::error(
            format!("{}#{}", path.display(), e.path),
            e.message,
        )])
    })?;
    Ok(Loaded { value, bytes })
}

fn load_rts(path: &Path) -> Result<Loaded<RtsSpec>, Failure> {
    parse(path, RtsSpec::from_json)
}

fn load_events(path: &Path) -> Result<Loaded<EventSpec>, Failure> {
    parse(path, EventSpec::from_json)
}

fn load_requirement(path: &Path) -> Result<Loaded<Requirement>, Failure> {
    parse(path, Requirement::from_json)
}

fn write(path: &Path, content: &str) -> Outcome {
    fs::write(path, content).map_err(|e| Failure::Message(format!("{}: {e}", path.display())))
}

fn report(warnings: &[Diagnostic]) {
    for w in warnings {
        eprintln!("{w}");
    }
}

fn net_file(core: &str) -> String {
    format!("N_{core}.ta.json")
}

/// Core networks from `dir`, one per producing core.
fn load_core_networks(dir: &Path, r: &RtsSpec, e: &EventSpec) -> Result<BTreeMap<String, Network>, Failure> {
    let mut out = BTreeMap::new();
    for core in e.producing_cores(r) {
        let path = dir.join(net_file(&core));
        let bytes = read(&path)?;
        let n = Network::from_json(&String::from_utf8_lossy(&bytes))
            .map_err(|err| Failure::Message(format!("{}: {err}", path.display())))?;
        out.insert(core, n);
    }
    Ok(out)
}

fn options(cli: &Cli, force: bool, coarse: bool, xta: Option<BTreeMap<String, Network>>) -> AbstractOptions {
    AbstractOptions {
        force,
        coarse,
        state_budget: cli.state_budget,
        jobs: cli.jobs,
        core_networks: xta,
    }
}

fn states(t: &IvTable) -> usize {
    t.cores.iter().map(|c| c.states).sum()
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Validate {
            rts,
            events,
            requirement,
            force,
        } => {
            let r = load_rts(rts)?.value;
            let mut diags = validate_rts(&r).diagnostics;
            if let (Some(ev), false) = (events, interbound::diag::has_errors(&diags)) {
                let e = load_events(ev)?.value;
                diags.extend(interbound::abstraction::validate_event_spec(&r, &e, *force));
                if let Some(req) = requirement {
                    diags.extend(validate_requirement(&load_requirement(req)?.value, &e));
                }
            }
            if interbound::diag::has_errors(&diags) {
                return Err(Failure::Diagnostics(diags));
            }
            report(&diags);
            println!("ok");
            Ok(())
        }
        Command::Schedulability { rts, core } => {
            let r = load_rts(rts)?.value;
            let v = validate_rts(&r);
            if interbound::diag::has_errors(&v.diagnostics) {
                return Err(Failure::Diagnostics(v.diagnostics));
            }
            report(&v.diagnostics);
            let cores: Vec<String> = match core {
                Some(c) if v.hyperperiods.contains_key(c) => vec![c.clone()],
                Some(c) => return Err(Failure::Message(format!("no task runs on core {c}"))),
                None => v.hyperperiods.keys().cloned().collect(),
            };
            let mut all = true;
            for c in cores {
                let rep = check_schedulability(&r, &c, cli.state_budget)?;
                println!(
                    "core {} hyperperiod {} states {}",
                    rep.core, rep.hyperperiod, rep.states
                );
                for t in &rep.tasks {
                    let wcrt = match t.wcrt {
                        Extremum::Finite { value, .. } => value.to_string(),
                        Extremum::Unbounded => "unbounded".into(),
                        Extremum::Unsatisfied => "never completes".into(),
                    };
                    let verdict = if t.schedulable { "ok" } else { "MISS" };
                    println!("  {} period {} wcrt {wcrt} {verdict}", t.task, t.period);
                }
                all &= rep.schedulable();
            }
            if all {
                Ok(())
            } else {
                Err(Failure::Message("deadline miss".into()))
            }
        }
        Command::Intervals {
            files,
            output,
            verbose,
            force,
        } => {
            let r = load_rts(&files.rts)?.value;
            let e = load_events(&files.events)?.value;
            let warnings = check_inputs(&r, &e, *force)?;
            report(&warnings);
            let table = compute_interval_table(&r, &e, &options(cli, *force, false, None))?;
            write(output, &table.to_json())?;
            if *verbose {
                for c in &table.cores {
                    println!(
                        "core {} task {} hyperperiod {} period {}",
                        c.core, c.task, c.hyperperiod, c.period
                    );
                    for s in &c.segments {
                        println!("  {} ({}) all {}", s.segment, s.event, s.global);
                        for (k, p) in s.periods.iter().enumerate() {
                            println!("    instance {} {}", k + 1, p);
                        }
                    }
                }
            }
            Ok(())
        }
        Command::Abstract {
            files,
            output,
            force,
            xta,
            coarse,
        } => {
            let mut m = RunManifest::new("abstract");
            let r = load_rts(&files.rts)?;
            let e = load_events(&files.events)?;
            m.input(&files.rts, &r.bytes);
            m.input(&files.events, &e.bytes);
            let (r, e) = (r.value, e.value);
            check_inputs(&r, &e, *force)?;

            let started = Instant::now();
            let nets = match xta {
                Some(dir) => load_core_networks(dir, &r, &e)?,
                None => {
                    let mut out = BTreeMap::new();
                    for c in e.producing_cores(&r) {
                        let n = build_core_network(&r, &c).map_err(|err| Failure::Message(err.to_string()))?;
                        out.insert(c, n);
                    }
                    out
                }
            };
            m.stage("networks", started, None);

            let started = Instant::now();
            let res = abstract_system(&r, &e, &options(cli, *force, *coarse, Some(nets.clone())))?;
            m.stage("abstraction", started, Some(states(&res.intervals)));
            report(&res.warnings);
            m.warn(&res.warnings, *force);

            fs::create_dir_all(output).map_err(|err| Failure::Message(format!("{}: {err}", output.display())))?;
            for (core, n) in &nets {
                write(&output.join(net_file(core)), &n.to_json())?;
            }
            for a in &res.automata {
                write(
                    &output.join(format!("{}.ta.json", a.name)),
                    &abstraction_part(&e, a.clone()).to_json(),
                )?;
            }
            write(&output.join("abstract.ta.json"), &res.network.to_json())?;
            write(&output.join("intervals.json"), &res.intervals.to_json())?;
            write(
                &output.join("manifest.json"),
                &(serde_json::to_string_pretty(&m).expect("serialisable") + "\n"),
            )?;
            if let Some(d) = &m.disclaimer {
                eprintln!("warning: {d}");
            }
            Ok(())
        }
        Command::Bound {
            files,
            requirement,
            coarse,
            force,
            xta,
        } => {
            let mut m = RunManifest::new("bound");
            let r = load_rts(&files.rts)?;
            let e = load_events(&files.events)?;
            let q = load_requirement(requirement)?;
            m.input(&files.rts, &r.bytes);
            m.input(&files.events, &e.bytes);
            m.input(requirement, &q.bytes);
            let (r, e, q) = (r.value, e.value, q.value);
            let d = validate_requirement(&q, &e);
            if interbound::diag::has_errors(&d) {
                return Err(Failure::Diagnostics(d));
            }
            let nets = match xta {
                Some(dir) => Some(load_core_networks(dir, &r, &e)?),
                None => None,
            };

            let started = Instant::now();
            let res = abstract_system(&r, &e, &options(cli, *force, *coarse, nets))?;
            m.stage("abstraction", started, Some(states(&res.intervals)));
            report(&res.warnings);
            m.warn(&res.warnings, *force);

            let b = compute_bound(
                &res.network,
                &q,
                &BoundOptions {
                    state_budget: cli.state_budget,
                    ceiling: None,
                },
            )?;
            m.stages.push(manifest::Stage {
                name: "bound".into(),
                seconds: b.wall_time,
                states: Some(b.states_explored),
            });
            if let Some(h) = &b.hint {
                eprintln!("hint: {h}");
            }
            let record = json!({
                "bound": bound_value(b.bound),
                "unit": "time units",
                "states_explored": b.states_explored,
                "wall_time": b.wall_time,
                "manifest": m,
            });
            println!("{}", serde_json::to_string_pretty(&record).expect("serialisable"));
            Ok(())
        }
        Command::Oracle {
            files,
            requirement,
            horizon,
            csv,
            force,
            oracle_budget,
        } => {
            let r = load_rts(&files.rts)?.value;
            let e = load_events(&files.events)?.value;
            let q = load_requirement(requirement)?.value;
            let d = validate_requirement(&q, &e);
            if interbound::diag::has_errors(&d) {
                return Err(Failure::Diagnostics(d));
            }
            let res = abstract_system(&r, &e, &options(cli, *force, false, None))?;
            report(&res.warnings);

            let mut intervals = IvTable::default();
            for c in e.producing_cores(&r) {
                intervals.cores.push(oracle_intervals(&r, &e, &c, *oracle_budget)?);
            }
            let horizon = match horizon {
                Some(h) => *h,
                None => 2 * lcm(intervals.cores.iter().map(|c| c.hyperperiod)),
            };
            let mut opts = OracleOptions::new(horizon);
            opts.state_budget = *oracle_budget;
            let bound = oracle_bound(&res.network, &q, &opts)?;
            if let Some(path) = csv {
                let run = oracle_emissions(&res.network, &opts)?;
                write(path, &events_csv(&run.observations))?;
            }
            let agree = intervals.cores.iter().zip(&res.intervals.cores).all(|(o, s)| {
                o.segments.iter().zip(&s.segments).all(|(a, b)| {
                    a.periods.len() == b.periods.len()
                        && a.periods
                            .iter()
                            .zip(&b.periods)
                            .all(|(p, q)| p.integer_points() == q.integer_points())
                })
            });
            let record = json!({
                "horizon": horizon,
                "bound": bound_value(bound),
                "intervals": intervals,
                "intervals_match_symbolic": agree,
            });
            println!("{}", serde_json::to_string_pretty(&record).expect("serialisable"));
            Ok(())
        }
    }
}

fn bound_value(b: Extremum) -> serde_json::Value {
    match b {
        Extremum::Finite { value, .. } => json!(value),
        Extremum::Unbounded => json!("unbounded"),
        Extremum::Unsatisfied => serde_json::Value::Null,
    }
}

fn lcm(values: impl Iterator<Item = i64>) -> i64 {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    values.fold(1, |acc, v| acc / gcd(acc, v) * v)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Diagnostics(d) => report(d),
                Failure::Message(s) | Failure::Resource(s) => eprintln!("error: {s}"),
            }
            ExitCode::from(f.code())
        }
    }
}
