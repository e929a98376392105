use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Union of closed integer-bounded intervals over dense time, kept sorted
/// and maximally merged. Two intervals merge when their closures meet, so
/// `[2,4] ∪ [4,7] = [2,7]`, while `[2,4]` and `[5,7]` stay apart because the
/// open gap `]4,5[` is not covered.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalSet(Vec<(i64, i64)>);

impl IntervalSet {
    pub fn new() -> Self {
        IntervalSet(Vec::new())
    }

    pub fn from_intervals(items: impl IntoIterator<Item = (i64, i64)>) -> Self {
        let mut s = IntervalSet::new();
        for (lo, hi) in items {
            s.insert(lo, hi);
        }
        s
    }

    /// Maximal runs of consecutive integers, each reported as one interval.
    pub fn from_points(points: impl IntoIterator<Item = i64>) -> Self {
        let pts: BTreeSet<i64> = points.into_iter().collect();
        let mut out: Vec<(i64, i64)> = Vec::new();
        for p in pts {
            match out.last_mut() {
                Some(last) if last.1 + 1 == p => last.1 = p,
                _ => out.push((p, p)),
            }
        }
        IntervalSet(out)
    }

    pub fn insert(&mut self, lo: i64, hi: i64) {
        assert!(lo <= hi, "empty interval [{lo},{hi}]");
        let v = &mut self.0;
        // first interval whose right end reaches lo
        let start = v.partition_point(|&(_, h)| h < lo);
        let mut end = start;
        let (mut nlo, mut nhi) = (lo, hi);
        while end < v.len() && v[end].0 <= hi {
            nlo = nlo.min(v[end].0);
            nhi = nhi.max(v[end].1);
            end += 1;
        }
        v.splice(start..end, std::iter::once((nlo, nhi)));
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut s = self.clone();
        for &(lo, hi) in &other.0 {
            s.insert(lo, hi);
        }
        s
    }

    pub fn intervals(&self) -> &[(i64, i64)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> Option<i64> {
        self.0.first().map(|i| i.0)
    }

    pub fn max(&self) -> Option<i64> {
        self.0.last().map(|i| i.1)
    }

    /// Smallest single interval covering the set.
    pub fn hull(&self) -> IntervalSet {
        match (self.min(), self.max()) {
            (Some(lo), Some(hi)) => IntervalSet(vec![(lo, hi)]),
            _ => IntervalSet::new(),
        }
    }

    pub fn contains(&self, t: i64) -> bool {
        self.0.iter().any(|&(lo, hi)| lo <= t && t <= hi)
    }

    /// Intersection with the closed range `[lo, hi]`.
    pub fn clamp(&self, lo: i64, hi: i64) -> IntervalSet {
        IntervalSet(
            self.0
                .iter()
                .filter(|&&(a, b)| b >= lo && a <= hi)
                .map(|&(a, b)| (a.max(lo), b.min(hi)))
                .collect(),
        )
    }

    pub fn shift(&self, d: i64) -> IntervalSet {
        IntervalSet(self.0.iter().map(|&(a, b)| (a + d, b + d)).collect())
    }

    pub fn integer_points(&self) -> BTreeSet<i64> {
        self.0.iter().flat_map(|&(a, b)| a..=b).collect()
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (a, b)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[{a},{b}]")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn merging_rules() {
        let s = IntervalSet::from_intervals([(4, 7), (2, 4)]);
        assert_eq!(s.intervals(), &[(2, 7)]);
        let s = IntervalSet::from_intervals([(5, 7), (2, 4)]);
        assert_eq!(s.intervals(), &[(2, 4), (5, 7)]);
        let s = IntervalSet::from_intervals([(32, 38), (2, 4), (22, 26), (24, 25)]);
        assert_eq!(s.to_string(), "{[2,4],[22,26],[32,38]}");
        assert_eq!(s.hull().intervals(), &[(2, 38)]);
        assert_eq!(s.clamp(20, 40).intervals(), &[(22, 26), (32, 38)]);
        assert_eq!(
            IntervalSet::from_points([1, 2, 3, 7, 9, 8]).intervals(),
            &[(1, 3), (7, 9)]
        );
    }

    proptest! {
        #[test]
        fn insert_keeps_sorted_disjoint_and_exact(raw in prop::collection::vec((0i64..40, 0i64..6), 0..12)) {
            let items: Vec<(i64, i64)> = raw.iter().map(|&(a, w)| (a, a + w)).collect();
            let s = IntervalSet::from_intervals(items.iter().copied());
            for w in s.intervals().windows(2) {
                prop_assert!(w[0].1 < w[1].0);
            }
            // half-integer points distinguish touching from adjacent
            for twice in 0..100 {
                let t = twice as f64 / 2.0;
                let expected = items.iter().any(|&(a, b)| a as f64 <= t && t <= b as f64);
                let got = s.intervals().iter().any(|&(a, b)| a as f64 <= t && t <= b as f64);
                prop_assert_eq!(expected, got);
            }
        }
    }
}
