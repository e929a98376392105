//! Difference bound matrices.
//!
//! A [`Dbm`] of dimension `n + 1` represents a convex set of valuations of
//! `n` clocks. Index 0 is the reference clock, which is always zero, so the
//! entry at `(i, j)` bounds the difference `x_i - x_j`. Every public
//! operation keeps the matrix in canonical (shortest-path closed) form.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DbmError {
    #[error("clock index {index} out of range for a zone over {clocks} clocks")]
    UnknownClock { index: usize, clocks: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// A single matrix entry: an integer bound paired with its strictness, or
/// +infinity.
///
/// Stored as `value << 1 | non_strict` so that the natural integer order is
/// the bound order: `(v, <)` sorts below `(v, <=)`, which sorts below
/// `(v + 1, <)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(i64);

impl Bound {
    pub const INFINITY: Bound = Bound(i64::MAX);
    pub const LE_ZERO: Bound = Bound(1);
    pub const LT_ZERO: Bound = Bound(0);

    pub const fn le(value: i64) -> Bound {
        Bound((value << 1) | 1)
    }

    pub const fn lt(value: i64) -> Bound {
        Bound(value << 1)
    }

    pub const fn new(value: i64, strict: bool) -> Bound {
        if strict {
            Bound::lt(value)
        } else {
            Bound::le(value)
        }
    }

    /// The encoded form, `value << 1 | non_strict` (or `i64::MAX`).
    pub const fn bits(self) -> i64 {
        self.0
    }

    pub const fn from_bits(bits: i64) -> Bound {
        Bound(bits)
    }

    pub const fn is_infinite(self) -> bool {
        self.0 == i64::MAX
    }

    pub const fn is_strict(self) -> bool {
        self.0 & 1 == 0
    }

    /// Finite value of the bound, `None` for +infinity.
    pub const fn value(self) -> Option<i64> {
        if self.is_infinite() {
            None
        } else {
            Some(self.0 >> 1)
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Bound) -> Bound {
        if self.is_infinite() || other.is_infinite() {
            return Bound::INFINITY;
        }
        let value = (self.0 >> 1) + (other.0 >> 1);
        Bound((value << 1) | (self.0 & other.0 & 1))
    }

    /// The bound of the complementary constraint: `not (a - b <= c)` is
    /// `b - a < -c`, and `not (a - b < c)` is `b - a <= -c`.
    pub fn complement(self) -> Bound {
        debug_assert!(!self.is_infinite());
        let value = self.0 >> 1;
        Bound::new(-value, !self.is_strict())
    }

    /// Whether `difference ≺ self` holds for a difference of `numerator / scale`.
    pub fn admits_scaled(self, numerator: i64, scale: i64) -> bool {
        match self.value() {
            None => true,
            Some(v) if self.is_strict() => numerator < v * scale,
            Some(v) => numerator <= v * scale,
        }
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            None => write!(f, "<inf"),
            Some(v) if self.is_strict() => write!(f, "<{v}"),
            Some(v) => write!(f, "<={v}"),
        }
    }
}

/// Atomic constraint `x_i - x_j ≺ c` over clock indices of a zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub i: usize,
    pub j: usize,
    pub bound: Bound,
}

impl Constraint {
    pub const fn new(i: usize, j: usize, bound: Bound) -> Self {
        Constraint { i, j, bound }
    }

    /// `x <= c` (or `x < c`).
    pub const fn upper(clock: usize, bound: Bound) -> Self {
        Constraint { i: clock, j: 0, bound }
    }

    /// `x >= c`, written as `0 - x <= -c`.
    pub const fn lower(clock: usize, value: i64, strict: bool) -> Self {
        Constraint {
            i: 0,
            j: clock,
            bound: Bound::new(-value, strict),
        }
    }

    pub fn negate(self) -> Constraint {
        Constraint {
            i: self.j,
            j: self.i,
            bound: self.bound.complement(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dbm {
    dim: usize,
    m: Box<[Bound]>,
}

impl Dbm {
    /// The zone where every clock equals zero.
    pub fn zero(clocks: usize) -> Dbm {
        let dim = clocks + 1;
        Dbm {
            dim,
            m: vec![Bound::LE_ZERO; dim * dim].into_boxed_slice(),
        }
    }

    /// The zone of all non-negative valuations.
    pub fn unconstrained(clocks: usize) -> Dbm {
        let dim = clocks + 1;
        let mut m = vec![Bound::INFINITY; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = Bound::LE_ZERO;
            m[i] = Bound::LE_ZERO;
        }
        Dbm {
            dim,
            m: m.into_boxed_slice(),
        }
    }

    /// Builds the zone `unconstrained ∧ constraints`, `None` if empty.
    pub fn from_constraints(clocks: usize, constraints: &[Constraint]) -> Result<Option<Dbm>, DbmError> {
        let mut z = Dbm::unconstrained(clocks);
        for c in constraints {
            z.check(c.i)?;
            z.check(c.j)?;
            if !z.constrain_mut(*c) {
                return Ok(None);
            }
        }
        Ok(Some(z))
    }

    /// Builds a matrix from raw entries, without closure. Use
    /// [`Dbm::canonicalize`] to obtain a canonical zone.
    pub fn from_raw(dim: usize, entries: Vec<Bound>) -> Dbm {
        assert_eq!(entries.len(), dim * dim, "raw DBM needs dim² entries");
        Dbm {
            dim,
            m: entries.into_boxed_slice(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Bound] {
        &self.m
    }

    /// Number of clocks, excluding the reference clock.
    pub fn clocks(&self) -> usize {
        self.dim - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.m[i * self.dim + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.m[i * self.dim + j] = b;
    }

    fn check(&self, clock: usize) -> Result<(), DbmError> {
        if clock >= self.dim {
            Err(DbmError::UnknownClock {
                index: clock,
                clocks: self.clocks(),
            })
        } else {
            Ok(())
        }
    }

    /// All-pairs shortest path closure. Returns `None` when the zone is empty.
    pub fn canonicalize(mut self) -> Option<Dbm> {
        if self.close() {
            Some(self)
        } else {
            None
        }
    }

    fn close(&mut self) -> bool {
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let ik = self.get(i, k);
                if ik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let via = ik.add(self.get(k, j));
                    if via < self.get(i, j) {
                        self.set(i, j, via);
                    }
                }
            }
            if self.get(k, k) < Bound::LE_ZERO {
                return false;
            }
        }
        (0..n).all(|i| self.get(i, i) >= Bound::LE_ZERO)
    }

    /// Intersects with one atomic constraint, in place. Returns `false` if the
    /// zone became empty, in which case the matrix contents are unspecified.
    pub fn constrain_mut(&mut self, c: Constraint) -> bool {
        let Constraint { i, j, bound } = c;
        if bound >= self.get(i, j) {
            return true;
        }
        if self.get(j, i).add(bound) < Bound::LE_ZERO {
            return false;
        }
        let n = self.dim;
        let col_i: Vec<Bound> = (0..n).map(|k| self.get(k, i)).collect();
        let row_j: Vec<Bound> = (0..n).map(|l| self.get(j, l)).collect();
        for (k, &c) in col_i.iter().enumerate() {
            let ki = c.add(bound);
            if ki.is_infinite() {
                continue;
            }
            for (l, &r) in row_j.iter().enumerate() {
                let via = ki.add(r);
                if via < self.get(k, l) {
                    self.set(k, l, via);
                }
            }
        }
        true
    }

    /// Intersection with an atomic constraint, `None` if empty.
    pub fn constrain(&self, c: Constraint) -> Result<Option<Dbm>, DbmError> {
        self.check(c.i)?;
        self.check(c.j)?;
        let mut z = self.clone();
        Ok(if z.constrain_mut(c) { Some(z) } else { None })
    }

    /// Intersection with a conjunction of constraints, in place.
    pub fn constrain_all(&mut self, cs: &[Constraint]) -> bool {
        cs.iter().all(|c| self.constrain_mut(*c))
    }

    /// Delay closure: removes the upper bounds of all clocks.
    pub fn up_mut(&mut self) {
        for i in 1..self.dim {
            self.set(i, 0, Bound::INFINITY);
        }
    }

    pub fn up(&self) -> Dbm {
        let mut z = self.clone();
        z.up_mut();
        z
    }

    pub fn reset_mut(&mut self, x: usize) {
        for j in 0..self.dim {
            let zj = self.get(0, j);
            let jz = self.get(j, 0);
            self.set(x, j, zj);
            self.set(j, x, jz);
        }
        self.set(x, x, Bound::LE_ZERO);
    }

    pub fn reset(&self, x: usize) -> Result<Dbm, DbmError> {
        self.check(x)?;
        if x == 0 {
            return Ok(self.clone());
        }
        let mut z = self.clone();
        z.reset_mut(x);
        Ok(z)
    }

    /// Forgets everything about clock `x` except `x >= 0`.
    pub fn free_mut(&mut self, x: usize) {
        for j in 0..self.dim {
            if j != x {
                let j0 = self.get(j, 0);
                self.set(x, j, Bound::INFINITY);
                self.set(j, x, j0);
            }
        }
    }

    /// Zone inclusion: `self ⊇ other`.
    pub fn includes(&self, other: &Dbm) -> Result<bool, DbmError> {
        if self.dim != other.dim {
            return Err(DbmError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(self.m.iter().zip(other.m.iter()).all(|(a, b)| a >= b))
    }

    /// Projection of the zone onto clock `x`: `(lower, upper)` where the
    /// lower bound is returned as a value/strictness pair for `x >= value`
    /// (or `x > value` when strict).
    pub fn clock_interval(&self, x: usize) -> Result<(Bound, Bound), DbmError> {
        self.check(x)?;
        let lower = self.get(0, x);
        let lower = Bound::new(-(lower.value().unwrap_or(0)), lower.is_strict());
        Ok((lower, self.get(x, 0)))
    }

    /// Classic max-constant extrapolation. `max[i]` is the largest constant
    /// clock `i` is compared against (`max[0]` is ignored). A clock that is
    /// never compared should get 0.
    pub fn extrapolate_mut(&mut self, max: &[i64]) {
        let n = self.dim;
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let b = self.get(i, j);
                if b.is_infinite() {
                    continue;
                }
                if i != 0 && b > Bound::le(max[i]) {
                    self.set(i, j, Bound::INFINITY);
                    changed = true;
                } else if j != 0 && b < Bound::lt(-max[j]) {
                    self.set(i, j, Bound::lt(-max[j]));
                    changed = true;
                }
            }
        }
        if changed {
            let ok = self.close();
            debug_assert!(ok, "extrapolation never empties a zone");
        }
    }

    /// Set difference `self \ (self ∧ guard)` as a list of zones whose union
    /// is exact. Pieces are pairwise disjoint.
    pub fn subtract(&self, guard: &[Constraint]) -> Vec<Dbm> {
        let mut pieces = Vec::new();
        let mut rest = self.clone();
        for c in guard {
            if c.bound >= rest.get(c.i, c.j) {
                continue;
            }
            let mut outside = rest.clone();
            if outside.constrain_mut(c.negate()) {
                pieces.push(outside);
            }
            if !rest.constrain_mut(*c) {
                return pieces;
            }
        }
        pieces
    }

    /// Membership of a point given as `numerators / scale` (index 0 is the
    /// reference clock and must be 0).
    pub fn contains_scaled(&self, point: &[i64], scale: i64) -> bool {
        debug_assert_eq!(point.len(), self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                if !self.get(i, j).admits_scaled(point[i] - point[j], scale) {
                    return false;
                }
            }
        }
        true
    }

    /// True if some entry carries a strict bound (other than +infinity).
    pub fn has_strict_bound(&self) -> bool {
        self.m.iter().any(|b| !b.is_infinite() && b.is_strict())
    }
}

impl fmt::Debug for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Dbm[{}]", self.dim)?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                write!(f, "{:>8}", self.get(i, j).to_string())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl PartialOrd for Dbm {
    /// Zone inclusion order; incomparable zones yield `None`.
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.dim != other.dim {
            return None;
        }
        let ge = self.m.iter().zip(other.m.iter()).all(|(a, b)| a >= b);
        let le = self.m.iter().zip(other.m.iter()).all(|(a, b)| a <= b);
        match (ge, le) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Greater),
            (false, true) => Some(Ordering::Less),
            (false, false) => None,
        }
    }
}
