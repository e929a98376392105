use crate::dbm::{Bound, Dbm};

const NARROW_INF: i32 = i32::MAX;

/// Compact storage for a zone in the passed list. Most zones have small
/// constants and fit in 32-bit entries, which halves the memory footprint.
#[derive(Debug, Clone)]
pub(crate) enum PackedZone {
    Narrow(Box<[i32]>),
    Wide(Box<[i64]>),
}

impl PackedZone {
    pub fn pack(z: &Dbm) -> PackedZone {
        let fits = z
            .entries()
            .iter()
            .all(|b| b.is_infinite() || (b.bits() > i32::MIN as i64 && b.bits() < NARROW_INF as i64));
        if fits {
            PackedZone::Narrow(
                z.entries()
                    .iter()
                    .map(|b| if b.is_infinite() { NARROW_INF } else { b.bits() as i32 })
                    .collect(),
            )
        } else {
            PackedZone::Wide(z.entries().iter().map(|b| b.bits()).collect())
        }
    }

    #[inline]
    fn bits(&self, k: usize) -> i64 {
        match self {
            PackedZone::Narrow(v) if v[k] == NARROW_INF => i64::MAX,
            PackedZone::Narrow(v) => v[k] as i64,
            PackedZone::Wide(v) => v[k],
        }
    }

    fn len(&self) -> usize {
        match self {
            PackedZone::Narrow(v) => v.len(),
            PackedZone::Wide(v) => v.len(),
        }
    }

    pub fn unpack(&self, dim: usize) -> Dbm {
        Dbm::from_raw(dim, (0..self.len()).map(|k| Bound::from_bits(self.bits(k))).collect())
    }

    /// `self ⊇ z`
    pub fn includes(&self, z: &Dbm) -> bool {
        z.entries().iter().enumerate().all(|(k, b)| self.bits(k) >= b.bits())
    }

    /// `self ⊆ z`
    pub fn included_in(&self, z: &Dbm) -> bool {
        z.entries().iter().enumerate().all(|(k, b)| self.bits(k) <= b.bits())
    }

    pub fn bytes(&self) -> usize {
        match self {
            PackedZone::Narrow(v) => v.len() * 4,
            PackedZone::Wide(v) => v.len() * 8,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbm::Constraint;

    #[test]
    fn round_trip_and_order() {
        let small = Dbm::from_constraints(2, &[Constraint::upper(1, Bound::le(5))])
            .unwrap()
            .unwrap();
        let p = PackedZone::pack(&small);
        assert!(matches!(p, PackedZone::Narrow(_)));
        assert_eq!(p.unpack(3), small);
        let big = Dbm::from_constraints(2, &[Constraint::upper(1, Bound::lt(3_000_000_000))])
            .unwrap()
            .unwrap();
        let q = PackedZone::pack(&big);
        assert!(matches!(q, PackedZone::Wide(_)));
        assert_eq!(q.unpack(3), big);
        assert!(q.includes(&small) && !p.includes(&big));
        assert!(p.included_in(&big) && p.included_in(&small));
    }
}
