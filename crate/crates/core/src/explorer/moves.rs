//! Discrete side of the network semantics: which combinations of edges may
//! fire together from a given location vector and discrete state.

use crate::automata::{all_hold, CSync, EvalError, Model};
use crate::dbm::Constraint;

/// One joint transition. `parts` lists `(automaton, edge)` pairs, emitter
/// first, then receivers in automaton order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Move {
    pub parts: Vec<(u32, u32)>,
    pub channel: Option<usize>,
}

impl Move {
    pub fn clock_guard(&self, model: &Model) -> Vec<Constraint> {
        self.parts
            .iter()
            .flat_map(|&(a, e)| model.automata[a as usize].edges[e as usize].clock_guard.iter().copied())
            .collect()
    }

    fn touches(&self, other: &Move) -> bool {
        self.parts.iter().any(|p| other.parts.iter().any(|q| p.0 == q.0))
    }
}

pub fn any_committed(model: &Model, locs: &[u32]) -> bool {
    locs.iter()
        .enumerate()
        .any(|(a, &l)| model.automata[a].locations[l as usize].committed)
}

/// Moves whose discrete guards hold, after the committed filter.
pub fn enabled_moves(model: &Model, locs: &[u32], disc: &[i64]) -> Result<Vec<Move>, EvalError> {
    let layout = &model.layout;
    let edges_with = |a: usize, want: &dyn Fn(CSync) -> bool| -> Result<Vec<u32>, EvalError> {
        let aut = &model.automata[a];
        let mut out = Vec::new();
        for &e in &aut.outgoing[locs[a] as usize] {
            let edge = &aut.edges[e];
            if want(edge.sync) && all_hold(&edge.guard, layout, disc)? {
                out.push(e as u32);
            }
        }
        Ok(out)
    };

    let mut moves = Vec::new();
    for a in 0..model.automata.len() {
        for e in edges_with(a, &|s| !matches!(s, CSync::Receive(_)))? {
            let head = (a as u32, e);
            match model.automata[a].edges[e as usize].sync {
                CSync::Silent => moves.push(Move {
                    parts: vec![head],
                    channel: None,
                }),
                CSync::Emit(ch) if model.is_broadcast(ch) => {
                    // every automaton with an enabled receiver must take part
                    let mut combos: Vec<Vec<(u32, u32)>> = vec![vec![head]];
                    for b in (0..model.automata.len()).filter(|&b| b != a) {
                        let rx = edges_with(b, &|s| s == CSync::Receive(ch))?;
                        if rx.is_empty() {
                            continue;
                        }
                        combos = combos
                            .into_iter()
                            .flat_map(|c| {
                                rx.iter().map(move |&f| {
                                    let mut c = c.clone();
                                    c.push((b as u32, f));
                                    c
                                })
                            })
                            .collect();
                    }
                    moves.extend(combos.into_iter().map(|parts| Move {
                        parts,
                        channel: Some(ch),
                    }));
                }
                CSync::Emit(ch) => {
                    for b in (0..model.automata.len()).filter(|&b| b != a) {
                        for f in edges_with(b, &|s| s == CSync::Receive(ch))? {
                            moves.push(Move {
                                parts: vec![head, (b as u32, f)],
                                channel: Some(ch),
                            });
                        }
                    }
                }
                CSync::Receive(_) => unreachable!(),
            }
        }
    }

    if any_committed(model, locs) {
        moves.retain(|m| {
            m.parts
                .iter()
                .any(|&(a, _)| model.automata[a as usize].locations[locs[a as usize] as usize].committed)
        });
    }
    Ok(moves)
}

/// For each move, the indices of moves that may pre-empt it: synchronising
/// moves on a channel of strictly higher priority that share an automaton.
pub fn blockers(model: &Model, moves: &[Move]) -> Vec<Vec<usize>> {
    let prio = |m: &Move| m.channel.map(|c| model.channels[c].priority);
    moves
        .iter()
        .map(|m| match prio(m) {
            None => Vec::new(),
            Some(p) => moves
                .iter()
                .enumerate()
                .filter(|(_, o)| prio(o).is_some_and(|q| q > p) && m.touches(o))
                .map(|(i, _)| i)
                .collect(),
        })
        .collect()
}

/// Locations and discrete variables of a state.
pub type DiscretePart = (Box<[u32]>, Box<[i64]>);

/// Target locations and discrete state after firing `m`.
pub fn fire_discrete(model: &Model, m: &Move, locs: &[u32], disc: &[i64]) -> Result<DiscretePart, EvalError> {
    let mut l: Box<[u32]> = locs.into();
    let mut d: Box<[i64]> = disc.into();
    for &(a, e) in &m.parts {
        let edge = &model.automata[a as usize].edges[e as usize];
        for u in &edge.updates {
            u.apply(&model.layout, &mut d)?;
        }
        l[a as usize] = edge.target as u32;
    }
    Ok((l, d))
}

pub fn resets<'m>(model: &'m Model, m: &'m Move) -> impl Iterator<Item = usize> + 'm {
    m.parts
        .iter()
        .flat_map(|&(a, e)| model.automata[a as usize].edges[e as usize].resets.iter().copied())
}

pub fn invariants<'m>(model: &'m Model, locs: &'m [u32]) -> impl Iterator<Item = Constraint> + 'm {
    locs.iter()
        .enumerate()
        .flat_map(|(a, &l)| model.automata[a].locations[l as usize].invariant.iter().copied())
}

pub fn describe(model: &Model, m: &Move) -> String {
    let mut s = String::new();
    for (k, &(a, e)) in m.parts.iter().enumerate() {
        let aut = &model.automata[a as usize];
        let edge = &aut.edges[e as usize];
        if k > 0 {
            s.push_str(", ");
        }
        let sync = match edge.sync {
            CSync::Silent => String::new(),
            CSync::Emit(c) => format!(" {}!", model.channels[c].name),
            CSync::Receive(c) => format!(" {}?", model.channels[c].name),
        };
        s.push_str(&format!(
            "{}: {} -> {}{}",
            aut.name, aut.locations[edge.source].name, aut.locations[edge.target].name, sync
        ));
    }
    s
}
