use serde::{Deserialize, Serialize};

use super::formula::StateFormula;
use super::graph::ZoneGraph;
use super::intervals::IntervalSet;
use super::QueryError;
use crate::dbm::{Bound, Dbm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Max,
    Min,
}

/// Supremum or infimum of a clock over the states satisfying a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extremum {
    Unsatisfied,
    /// `attained` is false when the extremum is only approached (strict
    /// bound).
    Finite {
        value: i64,
        attained: bool,
    },
    Unbounded,
}

impl Extremum {
    pub fn value(self) -> Option<i64> {
        match self {
            Extremum::Finite { value, .. } => Some(value),
            _ => None,
        }
    }
}

impl ZoneGraph {
    fn resolve_clock(&self, clock: &str) -> Result<usize, QueryError> {
        let k = self
            .model
            .clock_index(clock)
            .ok_or_else(|| QueryError::UnknownClock(clock.into()))?;
        if self.max.is_some() && !self.exempt.contains(&k) {
            return Err(QueryError::ExtrapolatedClock(clock.into()));
        }
        Ok(k)
    }

    fn check_formula(&self, f: &StateFormula) -> Result<(), QueryError> {
        if let Some(max) = &self.max {
            if f.has_diagonal() {
                return Err(QueryError::Diagonal);
            }
            if f.clock_constants().iter().any(|&(k, v)| v > max[k]) {
                return Err(QueryError::Unregistered(f.to_string()));
            }
        }
        Ok(())
    }

    /// Live states satisfying `f`, with their zones restricted to `f`.
    pub fn matching(&self, f: &StateFormula) -> Result<Vec<(usize, Dbm)>, QueryError> {
        self.check_formula(f)?;
        let mut out = Vec::new();
        for (id, locs, disc, zone) in self.states() {
            let ok = f
                .holds_discrete(&self.model, locs, disc)
                .map_err(|e| QueryError::Eval(e.to_string()))?;
            if ok {
                if let Some(z) = f.restrict(&zone) {
                    out.push((id, z));
                }
            }
        }
        Ok(out)
    }

    pub fn reachable(&self, f: &StateFormula) -> Result<bool, QueryError> {
        Ok(self.witness(f)?.is_some())
    }

    /// Some state satisfying `f`, for trace printing.
    pub fn witness(&self, f: &StateFormula) -> Result<Option<usize>, QueryError> {
        Ok(self.matching(f)?.first().map(|m| m.0))
    }

    pub fn extremum(&self, f: &StateFormula, clock: &str, mode: Mode) -> Result<Extremum, QueryError> {
        let k = self.resolve_clock(clock)?;
        let ceiling = self.ceiling();
        let mut best: Option<Bound> = None;
        for (_, z) in self.matching(f)? {
            let (lo, hi) = z.clock_interval(k).expect("index in range");
            match mode {
                Mode::Max => {
                    if hi.is_infinite() {
                        return match ceiling {
                            Some(c) => Err(QueryError::CeilingExceeded {
                                clock: clock.into(),
                                ceiling: c,
                            }),
                            None => Ok(Extremum::Unbounded),
                        };
                    }
                    best = Some(best.map_or(hi, |b| b.max(hi)));
                }
                Mode::Min => {
                    // a strict lower bound is "larger" than the same value attained
                    let key = Bound::new(lo.value().unwrap_or(0), !lo.is_strict());
                    best = Some(best.map_or(key, |b| b.min(key)));
                }
            }
        }
        // zones past the ceiling only matter when nothing lies below it
        if let (Mode::Min, Some(b), Some(c)) = (mode, best, ceiling) {
            if b.value() > Some(c) || (b.value() == Some(c) && !b.is_strict()) {
                return Err(QueryError::CeilingExceeded {
                    clock: clock.into(),
                    ceiling: c,
                });
            }
        }
        Ok(match (best, mode) {
            (None, _) => Extremum::Unsatisfied,
            (Some(b), Mode::Max) => Extremum::Finite {
                value: b.value().expect("finite"),
                attained: !b.is_strict(),
            },
            (Some(b), Mode::Min) => Extremum::Finite {
                value: b.value().expect("finite"),
                attained: b.is_strict(),
            },
        })
    }

    /// Exact set of values `clock` takes in states satisfying `f`, as a
    /// union of closed intervals. Fails on strict or unbounded endpoints.
    pub fn bounds(&self, f: &StateFormula, clock: &str) -> Result<IntervalSet, QueryError> {
        let k = self.resolve_clock(clock)?;
        let mut set = IntervalSet::new();
        for (id, z) in self.matching(f)? {
            let (lo, hi) = z.clock_interval(k).expect("index in range");
            let Some(h) = hi.value() else {
                return Err(match self.ceiling() {
                    Some(c) => QueryError::CeilingExceeded {
                        clock: clock.into(),
                        ceiling: c,
                    },
                    None => QueryError::Unbounded(clock.into()),
                });
            };
            if lo.is_strict() || hi.is_strict() {
                return Err(QueryError::StrictEndpoint {
                    clock: clock.into(),
                    state: self.describe_state(id),
                });
            }
            set.insert(lo.value().unwrap_or(0), h);
        }
        Ok(set)
    }
}
