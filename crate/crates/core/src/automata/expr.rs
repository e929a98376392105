//! Discrete state layout and evaluation of compiled expressions and updates.

use thiserror::Error;

use super::CmpOp;

/// Flat discrete valuation. Scalars occupy one slot each; a queue occupies
/// `1 + 2 * capacity` slots: its length followed by `(id, priority)` pairs.
/// Unused queue slots are kept at zero so equal queues hash equally.
pub type DiscreteState = Box<[i64]>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("queue {queue} overflows its capacity {capacity}")]
    QueueOverflow { queue: String, capacity: usize },
    #[error("queue {queue} is empty")]
    QueueEmpty { queue: String },
    #[error("index {index} out of range for queue {queue} of length {len}")]
    IndexOutOfRange { queue: String, index: i64, len: usize },
    #[error("value {value} out of range [{min}, {max}] for variable {var}")]
    OutOfBounds {
        var: String,
        value: i64,
        min: i64,
        max: i64,
    },
    #[error("arithmetic overflow")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarSlot {
    pub name: String,
    pub min: i64,
    pub max: i64,
    pub initial: i64,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueSlot {
    pub name: String,
    pub capacity: usize,
    pub base: usize,
}

impl QueueSlot {
    pub fn len(&self, s: &[i64]) -> usize {
        s[self.base] as usize
    }

    pub fn is_empty(&self, s: &[i64]) -> bool {
        self.len(s) == 0
    }

    pub fn record(&self, s: &[i64], i: usize) -> (i64, i64) {
        let at = self.base + 1 + 2 * i;
        (s[at], s[at + 1])
    }

    pub fn records(&self, s: &[i64]) -> Vec<(i64, i64)> {
        (0..self.len(s)).map(|i| self.record(s, i)).collect()
    }

    fn store(&self, s: &mut [i64], records: &[(i64, i64)]) {
        s[self.base] = records.len() as i64;
        for i in 0..self.capacity {
            let at = self.base + 1 + 2 * i;
            let (id, pr) = records.get(i).copied().unwrap_or((0, 0));
            s[at] = id;
            s[at + 1] = pr;
        }
    }

    fn index(&self, s: &[i64], index: i64) -> Result<usize, EvalError> {
        let len = self.len(s);
        if index < 0 || index as usize >= len {
            Err(EvalError::IndexOutOfRange {
                queue: self.name.clone(),
                index,
                len,
            })
        } else {
            Ok(index as usize)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiscreteLayout {
    pub scalars: Vec<ScalarSlot>,
    pub queues: Vec<QueueSlot>,
    pub size: usize,
}

impl DiscreteLayout {
    pub fn initial(&self) -> DiscreteState {
        let mut s = vec![0; self.size];
        for v in &self.scalars {
            s[v.slot] = v.initial;
        }
        s.into_boxed_slice()
    }

    pub fn scalar(&self, name: &str) -> Option<usize> {
        self.scalars.iter().position(|v| v.name == name)
    }

    pub fn queue(&self, name: &str) -> Option<usize> {
        self.queues.iter().position(|q| q.name == name)
    }

    /// Human-readable valuation, for traces.
    pub fn describe(&self, s: &[i64]) -> String {
        let mut parts: Vec<String> = self
            .scalars
            .iter()
            .map(|v| format!("{}={}", v.name, s[v.slot]))
            .collect();
        for q in &self.queues {
            let recs: Vec<String> = q.records(s).iter().map(|(id, pr)| format!("({id},{pr})")).collect();
            parts.push(format!("{}=[{}]", q.name, recs.join(",")));
        }
        parts.join(" ")
    }
}

/// Expression with names resolved against a [`DiscreteLayout`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CExpr {
    Const(i64),
    Scalar(usize),
    Add(Box<CExpr>, Box<CExpr>),
    Sub(Box<CExpr>, Box<CExpr>),
    Mul(Box<CExpr>, Box<CExpr>),
    Len(usize),
    Head(usize),
    IdAt(usize, Box<CExpr>),
    PrAt(usize, Box<CExpr>),
}

impl CExpr {
    pub fn eval(&self, layout: &DiscreteLayout, s: &[i64]) -> Result<i64, EvalError> {
        Ok(match self {
            CExpr::Const(v) => *v,
            CExpr::Scalar(i) => s[layout.scalars[*i].slot],
            CExpr::Add(a, b) => a
                .eval(layout, s)?
                .checked_add(b.eval(layout, s)?)
                .ok_or(EvalError::Overflow)?,
            CExpr::Sub(a, b) => a
                .eval(layout, s)?
                .checked_sub(b.eval(layout, s)?)
                .ok_or(EvalError::Overflow)?,
            CExpr::Mul(a, b) => a
                .eval(layout, s)?
                .checked_mul(b.eval(layout, s)?)
                .ok_or(EvalError::Overflow)?,
            CExpr::Len(q) => layout.queues[*q].len(s) as i64,
            CExpr::Head(q) => {
                let q = &layout.queues[*q];
                if q.is_empty(s) {
                    return Err(EvalError::QueueEmpty { queue: q.name.clone() });
                }
                q.record(s, 0).0
            }
            CExpr::IdAt(q, i) => {
                let q = &layout.queues[*q];
                let i = q.index(s, i.eval(layout, s)?)?;
                q.record(s, i).0
            }
            CExpr::PrAt(q, i) => {
                let q = &layout.queues[*q];
                let i = q.index(s, i.eval(layout, s)?)?;
                q.record(s, i).1
            }
        })
    }
}

/// Compiled discrete comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CAtom {
    pub lhs: CExpr,
    pub op: CmpOp,
    pub rhs: CExpr,
}

impl CAtom {
    pub fn holds(&self, layout: &DiscreteLayout, s: &[i64]) -> Result<bool, EvalError> {
        Ok(self.op.holds(self.lhs.eval(layout, s)?, self.rhs.eval(layout, s)?))
    }
}

/// Evaluates a conjunction left to right, stopping at the first false atom,
/// so later atoms may rely on earlier ones (e.g. a length check before an
/// indexed access).
pub fn all_hold(atoms: &[CAtom], layout: &DiscreteLayout, s: &[i64]) -> Result<bool, EvalError> {
    for a in atoms {
        if !a.holds(layout, s)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CUpdate {
    Assign(usize, CExpr),
    Add { queue: usize, id: CExpr, priority: CExpr },
    Dequeue(usize),
    Resort(usize),
    SortBehindHead(usize),
}

impl CUpdate {
    pub fn apply(&self, layout: &DiscreteLayout, s: &mut [i64]) -> Result<(), EvalError> {
        match self {
            CUpdate::Assign(i, e) => {
                let v = e.eval(layout, s)?;
                let var = &layout.scalars[*i];
                if v < var.min || v > var.max {
                    return Err(EvalError::OutOfBounds {
                        var: var.name.clone(),
                        value: v,
                        min: var.min,
                        max: var.max,
                    });
                }
                s[var.slot] = v;
            }
            CUpdate::Add { queue, id, priority } => {
                let id = id.eval(layout, s)?;
                let pr = priority.eval(layout, s)?;
                let q = &layout.queues[*queue];
                let mut recs = q.records(s);
                if recs.len() >= q.capacity {
                    return Err(EvalError::QueueOverflow {
                        queue: q.name.clone(),
                        capacity: q.capacity,
                    });
                }
                recs.push((id, pr));
                q.store(s, &recs);
            }
            CUpdate::Dequeue(queue) => {
                let q = &layout.queues[*queue];
                let mut recs = q.records(s);
                if recs.is_empty() {
                    return Err(EvalError::QueueEmpty { queue: q.name.clone() });
                }
                recs.remove(0);
                q.store(s, &recs);
            }
            CUpdate::Resort(queue) => {
                let q = &layout.queues[*queue];
                let mut recs = q.records(s);
                // stable: equal priorities keep arrival order
                recs.sort_by_key(|r| std::cmp::Reverse(r.1));
                q.store(s, &recs);
            }
            CUpdate::SortBehindHead(queue) => {
                let q = &layout.queues[*queue];
                let mut recs = q.records(s);
                if recs.len() > 1 {
                    recs[1..].sort_by_key(|r| std::cmp::Reverse(r.1));
                }
                q.store(s, &recs);
            }
        }
        Ok(())
    }
}
