use std::collections::{HashMap, VecDeque};

use tracing::debug;

use super::formula::StateFormula;
use super::moves::{self, Move};
use super::packed::PackedZone;
use super::ExploreError;
use crate::automata::Model;
use crate::dbm::Dbm;

pub const DEFAULT_STATE_BUDGET: usize = 50_000_000;

/// How termination of the forward exploration is ensured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Termination {
    /// No abstraction. Only safe when the network itself bounds time, for
    /// instance through an automaton whose invariant stops time.
    Exact,
    /// Max-constant extrapolation. Clocks in `exempt` (DBM indices) keep
    /// their exact value up to `ceiling`; the default ceiling is four times
    /// the largest constant of the model plus one.
    Extrapolate { exempt: Vec<usize>, ceiling: Option<i64> },
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub termination: Termination,
    /// Drop states whose zone is included in a stored zone with the same
    /// discrete part.
    pub subsumption: bool,
    pub state_budget: usize,
    /// States satisfying this formula on their whole zone are stored but
    /// not expanded.
    pub stop: Option<StateFormula>,
    /// Formulas that will be queried; their constants take part in the
    /// extrapolation bounds.
    pub formulas: Vec<StateFormula>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            termination: Termination::Exact,
            subsumption: true,
            state_budget: DEFAULT_STATE_BUDGET,
            stop: None,
            formulas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub stored: usize,
    pub explored: usize,
    pub covered: usize,
    pub transitions: usize,
    pub zone_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct Key {
    pub locs: Box<[u32]>,
    pub disc: Box<[i64]>,
}

const NONE: u32 = u32::MAX;

#[derive(Debug)]
pub(crate) struct Node {
    pub key: u32,
    pub parent: u32,
    pub label: u32,
    pub covered: bool,
    pub zone: PackedZone,
}

/// The symbolic state space of a network.
#[derive(Debug)]
pub struct ZoneGraph {
    pub(crate) model: Model,
    pub(crate) keys: Vec<Key>,
    key_index: HashMap<Key, u32>,
    buckets: Vec<Vec<u32>>,
    pub(crate) nodes: Vec<Node>,
    pub(crate) labels: Vec<Move>,
    label_index: HashMap<Move, u32>,
    /// Extrapolation constants when [`Termination::Extrapolate`] is used.
    pub(crate) max: Option<Vec<i64>>,
    pub(crate) exempt: Vec<usize>,
    pub(crate) ceiling: i64,
    subsumption: bool,
    budget: usize,
    waiting: VecDeque<u32>,
    stats: Stats,
}

impl ZoneGraph {
    pub fn build(model: &Model, opts: &BuildOptions) -> Result<ZoneGraph, ExploreError> {
        let mut g = ZoneGraph {
            model: model.clone(),
            keys: Vec::new(),
            key_index: HashMap::new(),
            buckets: Vec::new(),
            nodes: Vec::new(),
            labels: Vec::new(),
            label_index: HashMap::new(),
            max: None,
            exempt: Vec::new(),
            ceiling: i64::MAX,
            subsumption: opts.subsumption,
            budget: opts.state_budget,
            waiting: VecDeque::new(),
            stats: Stats::default(),
        };

        if let Termination::Extrapolate { exempt, ceiling } = &opts.termination {
            let diagonal = model.has_diagonal
                || opts
                    .formulas
                    .iter()
                    .chain(opts.stop.iter())
                    .any(StateFormula::has_diagonal);
            if diagonal {
                return Err(ExploreError::Unsupported(
                    "difference constraints cannot be combined with extrapolation".into(),
                ));
            }
            let mut max = model.max_constants.clone();
            for f in opts.formulas.iter().chain(opts.stop.iter()) {
                for (k, v) in f.clock_constants() {
                    max[k] = max[k].max(v);
                }
            }
            let largest = max.iter().copied().max().unwrap_or(0);
            let ceiling = ceiling.unwrap_or(4 * largest + 1);
            for &e in exempt {
                if e == 0 || e >= max.len() {
                    return Err(ExploreError::Unsupported(format!("clock index {e} does not exist")));
                }
                max[e] = max[e].max(ceiling);
            }
            g.max = Some(max);
            g.exempt = exempt.clone();
            g.ceiling = ceiling;
        }

        g.explore(opts.stop.as_ref())?;
        Ok(g)
    }

    fn explore(&mut self, stop: Option<&StateFormula>) -> Result<(), ExploreError> {
        let model = &self.model;
        let locs = model.initial_locations();
        let disc = model.layout.initial();
        let mut zone = Dbm::zero(model.clocks.len());
        let inv: Vec<_> = moves::invariants(model, &locs).collect();
        if !zone.constrain_all(&inv) {
            return Err(ExploreError::InitialInvariant);
        }
        if !moves::any_committed(model, &locs) {
            zone.up_mut();
            zone.constrain_all(&inv);
        }
        if let Some(max) = &self.max {
            zone.extrapolate_mut(max);
        }
        self.insert(Key { locs, disc }, zone, NONE, NONE)?;

        while let Some(id) = self.waiting.pop_front() {
            let node = &self.nodes[id as usize];
            if node.covered {
                continue;
            }
            let key = self.keys[node.key as usize].clone();
            let zone = node.zone.unpack(self.model.dim());
            if let Some(f) = stop {
                let inside = f.clock.iter().all(|c| zone.get(c.i, c.j) <= c.bound);
                let disc_ok = f
                    .holds_discrete(&self.model, &key.locs, &key.disc)
                    .map_err(|error| self.eval_error(id, error))?;
                if inside && disc_ok {
                    continue;
                }
            }
            self.stats.explored += 1;
            for (label, key, zone) in self.successors(id, &key, &zone)? {
                self.stats.transitions += 1;
                self.insert(key, zone, id, label)?;
            }
        }
        self.stats.covered = self.nodes.iter().filter(|n| n.covered).count();
        debug!(
            stored = self.stats.stored,
            explored = self.stats.explored,
            covered = self.stats.covered,
            "zone graph complete"
        );
        Ok(())
    }

    fn eval_error(&self, id: u32, error: crate::automata::EvalError) -> ExploreError {
        ExploreError::Eval {
            error,
            trace: self.format_trace(id as usize),
        }
    }

    fn label(&mut self, m: &Move) -> u32 {
        if let Some(&l) = self.label_index.get(m) {
            return l;
        }
        let l = self.labels.len() as u32;
        self.labels.push(m.clone());
        self.label_index.insert(m.clone(), l);
        l
    }

    fn successors(&mut self, id: u32, key: &Key, zone: &Dbm) -> Result<Vec<(u32, Key, Dbm)>, ExploreError> {
        let model = &self.model;
        let all = moves::enabled_moves(model, &key.locs, &key.disc).map_err(|e| self.eval_error(id, e))?;
        let block = moves::blockers(model, &all);
        let mut out = Vec::new();
        for (mi, m) in all.iter().enumerate() {
            let mut start = zone.clone();
            if !start.constrain_all(&m.clock_guard(model)) {
                continue;
            }
            let mut pieces = vec![start];
            for &b in &block[mi] {
                let g = all[b].clock_guard(model);
                pieces = pieces.iter().flat_map(|p| p.subtract(&g)).collect();
                if pieces.is_empty() {
                    break;
                }
            }
            if pieces.is_empty() {
                continue;
            }
            let (locs, disc) =
                moves::fire_discrete(model, m, &key.locs, &key.disc).map_err(|e| self.eval_error(id, e))?;
            let inv: Vec<_> = moves::invariants(model, &locs).collect();
            let delay = !moves::any_committed(model, &locs);
            let resets: Vec<usize> = moves::resets(model, m).collect();
            let mut targets = Vec::new();
            for mut p in pieces {
                for &r in &resets {
                    p.reset_mut(r);
                }
                if !p.constrain_all(&inv) {
                    continue;
                }
                if delay {
                    p.up_mut();
                    p.constrain_all(&inv);
                }
                if let Some(max) = &self.max {
                    p.extrapolate_mut(max);
                }
                targets.push(p);
            }
            if targets.is_empty() {
                continue;
            }
            let key = Key { locs, disc };
            out.extend(targets.into_iter().map(|z| (mi, key.clone(), z)));
        }
        Ok(out.into_iter().map(|(mi, k, z)| (self.label(&all[mi]), k, z)).collect())
    }

    fn insert(&mut self, key: Key, zone: Dbm, parent: u32, label: u32) -> Result<(), ExploreError> {
        let k = match self.key_index.get(&key) {
            Some(&k) => k,
            None => {
                let k = self.keys.len() as u32;
                self.keys.push(key.clone());
                self.key_index.insert(key, k);
                self.buckets.push(Vec::new());
                k
            }
        };
        let nodes = &mut self.nodes;
        let bucket = &mut self.buckets[k as usize];
        for &s in bucket.iter() {
            let stored = &nodes[s as usize].zone;
            if stored.includes(&zone) && (self.subsumption || stored.included_in(&zone)) {
                return Ok(());
            }
        }
        if self.subsumption {
            bucket.retain(|&s| {
                let n = &mut nodes[s as usize];
                if n.zone.included_in(&zone) {
                    n.covered = true;
                    // keep the node for traces, drop its zone
                    n.zone = PackedZone::Narrow(Box::new([]));
                    false
                } else {
                    true
                }
            });
        }
        if nodes.len() >= self.budget {
            return Err(ExploreError::BudgetExceeded {
                budget: self.budget,
                explored: self.stats.explored,
            });
        }
        let id = nodes.len() as u32;
        let packed = PackedZone::pack(&zone);
        self.stats.zone_bytes += packed.bytes();
        nodes.push(Node {
            key: k,
            parent,
            label,
            covered: false,
            zone: packed,
        });
        bucket.push(id);
        self.stats.stored += 1;
        self.waiting.push_back(id);
        Ok(())
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    /// Number of symbolic states not covered by another state.
    pub fn live_states(&self) -> usize {
        self.nodes.iter().filter(|n| !n.covered).count()
    }

    /// Extrapolation ceiling for exempt clocks, if extrapolation is on.
    pub fn ceiling(&self) -> Option<i64> {
        self.max.as_ref().map(|_| self.ceiling)
    }

    /// Live states as `(id, locations, discrete state, zone)`.
    pub fn states(&self) -> impl Iterator<Item = (usize, &[u32], &[i64], Dbm)> + '_ {
        let dim = self.model.dim();
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| !n.covered)
            .map(move |(i, n)| {
                let k = &self.keys[n.key as usize];
                (i, &k.locs[..], &k.disc[..], n.zone.unpack(dim))
            })
    }

    /// Human-readable path from the initial state to state `id`.
    pub fn format_trace(&self, id: usize) -> String {
        let mut chain = Vec::new();
        let mut cur = id as u32;
        while cur != NONE {
            chain.push(cur);
            cur = self.nodes[cur as usize].parent;
        }
        chain.reverse();
        let mut out = String::new();
        for (step, &n) in chain.iter().enumerate() {
            let node = &self.nodes[n as usize];
            if node.label != NONE {
                out.push_str(&format!(
                    "  --[{}]-->\n",
                    moves::describe(&self.model, &self.labels[node.label as usize])
                ));
            }
            out.push_str(&format!("{step}: {}\n", self.describe_state(n as usize)));
        }
        out
    }

    pub fn describe_state(&self, id: usize) -> String {
        let node = &self.nodes[id];
        let key = &self.keys[node.key as usize];
        let locs: Vec<String> = key
            .locs
            .iter()
            .enumerate()
            .map(|(a, &l)| {
                let aut = &self.model.automata[a];
                format!("{}.{}", aut.name, aut.locations[l as usize].name)
            })
            .collect();
        let mut s = format!("({})", locs.join(", "));
        let disc = self.model.layout.describe(&key.disc);
        if !disc.is_empty() {
            s.push_str(&format!(" {disc}"));
        }
        if node.covered {
            s.push_str(" [covered]");
        } else {
            s.push_str(&format!(
                " {}",
                describe_zone(&self.model, &node.zone.unpack(self.model.dim()))
            ));
        }
        s
    }
}

/// Per-clock projection of a zone, e.g. `A.x∈[2,4)`.
pub fn describe_zone(model: &Model, z: &Dbm) -> String {
    let mut parts = Vec::new();
    for i in 1..z.dim() {
        let (lo, hi) = z.clock_interval(i).expect("index in range");
        let left = if lo.is_strict() { '(' } else { '[' };
        let right = match hi.value() {
            None => "inf)".to_string(),
            Some(v) => format!("{v}{}", if hi.is_strict() { ')' } else { ']' }),
        };
        parts.push(format!(
            "{}∈{left}{},{right}",
            model.clock_name(i),
            lo.value().unwrap_or(0)
        ));
    }
    parts.join(" ")
}
