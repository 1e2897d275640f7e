//! Relations over fixed-width bit strings and substring helpers.

use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitStr {
    pub width: u32,
    pub value: u64,
}

impl BitStr {
    pub fn new(width: u32, value: u64) -> Result<Self> {
        if width < 64 && value >> width != 0 {
            return Err(Error::WidthMismatch { expected: width as usize, got: 64 - value.leading_zeros() as usize });
        }
        Ok(BitStr { width, value })
    }

    /// The leading `k` bits.
    pub fn prefix(&self, k: u32) -> Result<BitStr> {
        if k > self.width {
            return Err(Error::WidthMismatch { expected: self.width as usize, got: k as usize });
        }
        BitStr::new(k, self.value >> (self.width - k))
    }

    /// The trailing `k` bits.
    pub fn suffix(&self, k: u32) -> Result<BitStr> {
        if k > self.width {
            return Err(Error::WidthMismatch { expected: self.width as usize, got: k as usize });
        }
        BitStr::new(k, self.value & mask(k))
    }

    pub fn concat(&self, low: BitStr) -> BitStr {
        BitStr { width: self.width + low.width, value: (self.value << low.width) | low.value }
    }
}

pub fn mask(w: u32) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

/// x = x^𝔩(n) ‖ x^𝔪(λ) ‖ x^𝔯(n).
pub fn split(x: BitStr, n: u32, lambda: u32) -> Result<(BitStr, BitStr, BitStr)> {
    if x.width != 2 * n + lambda {
        return Err(Error::WidthMismatch { expected: (2 * n + lambda) as usize, got: x.width as usize });
    }
    Ok((
        BitStr { width: n, value: x.value >> (n + lambda) },
        BitStr { width: lambda, value: (x.value >> n) & mask(lambda) },
        BitStr { width: n, value: x.value & mask(n) },
    ))
}

pub fn join(l: BitStr, m: BitStr, r: BitStr) -> BitStr {
    l.concat(m).concat(r)
}

/// A set of pairs kept in sorted order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relation {
    pub in_width: u32,
    pub out_width: u32,
    pairs: Vec<(u64, u64)>,
}

impl Relation {
    pub fn empty(in_width: u32, out_width: u32) -> Self {
        Relation { in_width, out_width, pairs: Vec::new() }
    }

    /// Canonicalizes; duplicated pairs are rejected.
    pub fn from_pairs(in_width: u32, out_width: u32, pairs: &[(u64, u64)]) -> Result<Self> {
        let mut r = Self::empty(in_width, out_width);
        for &(x, y) in pairs {
            r.insert(x, y)?;
        }
        Ok(r)
    }

    pub fn insert(&mut self, x: u64, y: u64) -> Result<()> {
        if x >> self.in_width != 0 || y >> self.out_width != 0 {
            return Err(Error::WidthMismatch { expected: self.in_width.max(self.out_width) as usize, got: 64 });
        }
        match self.pairs.binary_search(&(x, y)) {
            Ok(_) => Err(Error::DuplicatePair { slot: 0, x, y }),
            Err(pos) => {
                self.pairs.insert(pos, (x, y));
                Ok(())
            }
        }
    }

    pub fn remove(&mut self, x: u64, y: u64) -> bool {
        match self.pairs.binary_search(&(x, y)) {
            Ok(pos) => {
                self.pairs.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn pairs(&self) -> &[(u64, u64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dom(&self) -> BTreeSet<u64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn im(&self) -> BTreeSet<u64> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    pub fn inverse(&self) -> Relation {
        let mut pairs: Vec<(u64, u64)> = self.pairs.iter().map(|&(x, y)| (y, x)).collect();
        pairs.sort_unstable();
        Relation { in_width: self.out_width, out_width: self.in_width, pairs }
    }

    pub fn union(&self, other: &Relation) -> Result<Relation> {
        if self.in_width != other.in_width || self.out_width != other.out_width {
            return Err(Error::WidthMismatch { expected: self.in_width as usize, got: other.in_width as usize });
        }
        let mut set: BTreeSet<(u64, u64)> = self.pairs.iter().cloned().collect();
        set.extend(other.pairs.iter().cloned());
        Ok(Relation { in_width: self.in_width, out_width: self.out_width, pairs: set.into_iter().collect() })
    }

    /// All outputs distinct.
    pub fn is_i_distinct(&self) -> bool {
        self.im().len() == self.pairs.len()
    }

    /// All inputs distinct.
    pub fn is_d_distinct(&self) -> bool {
        self.dom().len() == self.pairs.len()
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (x, y)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "({x:x},{y:x})")?;
        }
        write!(f, "}}")
    }
}

/// Inner product of two relation states. Distinct injective relations give
/// orthogonal symmetrized vectors, equal ones give 1.
pub fn relation_state_overlap(a: &Relation, b: &Relation) -> Result<f64> {
    let both_i = a.is_i_distinct() && b.is_i_distinct();
    let both_d = a.is_d_distinct() && b.is_d_distinct();
    if !both_i && !both_d {
        return Err(Error::Unsupported);
    }
    Ok(if a == b { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    #[test]
    fn dom_im_inverse() {
        let e = Relation::empty(2, 2);
        assert!(e.dom().is_empty() && e.im().is_empty() && e.inverse().is_empty());
        let r = Relation::from_pairs(2, 2, &[(0, 1), (2, 1)]).unwrap();
        assert_eq!(r.im().into_iter().collect::<Vec<_>>(), vec![1]);
        assert_eq!(r.dom().into_iter().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(r.inverse().pairs(), &[(1, 0), (1, 2)]);
        assert!(Relation::from_pairs(2, 2, &[(0, 1), (0, 1)]).is_err());
        assert_eq!(r.to_string(), "{(0,1),(2,1)}");
    }

    #[test]
    fn split_examples() {
        let (l, m, r) = split(BitStr::new(3, 0b101).unwrap(), 1, 1).unwrap();
        assert_eq!((l.value, m.value, r.value), (1, 0, 1));
        let (l, m, r) = split(BitStr::new(5, 0b11011).unwrap(), 2, 1).unwrap();
        assert_eq!((l.value, m.value, r.value), (0b11, 0, 0b11));
        assert!(split(BitStr::new(4, 0).unwrap(), 1, 1).is_err());
    }

    #[test]
    fn split_round_trip_exhaustive() {
        for n in 1..=2 {
            for lam in 1..=2 {
                for v in 0..(1u64 << (2 * n + lam)) {
                    let x = BitStr::new(2 * n + lam, v).unwrap();
                    let (l, m, r) = split(x, n, lam).unwrap();
                    assert_eq!(join(l, m, r), x);
                }
            }
        }
    }

    /// Sym_t-symmetrized relation vector over pair-tuples, normalized.
    fn symmetrized(r: &Relation) -> BTreeMap<Vec<(u64, u64)>, f64> {
        fn perms(v: &[(u64, u64)]) -> Vec<Vec<(u64, u64)>> {
            if v.len() <= 1 {
                return vec![v.to_vec()];
            }
            let mut out = Vec::new();
            for i in 0..v.len() {
                let mut rest = v.to_vec();
                let head = rest.remove(i);
                for mut p in perms(&rest) {
                    p.insert(0, head);
                    out.push(p);
                }
            }
            out
        }
        let ps = perms(r.pairs());
        let mut m = BTreeMap::new();
        for p in &ps {
            *m.entry(p.clone()).or_insert(0.0) += 1.0;
        }
        let norm: f64 = m.values().map(|v: &f64| v * v).sum::<f64>().sqrt();
        m.values_mut().for_each(|v| *v /= norm);
        m
    }

    fn small_relation() -> impl Strategy<Value = Relation> {
        proptest::collection::btree_set((0u64..8, 0u64..8), 0..4)
            .prop_map(|s| Relation::from_pairs(3, 3, &s.into_iter().collect::<Vec<_>>()).unwrap())
    }

    proptest! {
        #[test]
        fn dom_of_union(a in small_relation(), b in small_relation()) {
            let u = a.union(&b).unwrap();
            let mut want = a.dom();
            want.extend(b.dom());
            prop_assert_eq!(u.dom(), want);
        }

        #[test]
        fn inverse_involution(a in small_relation()) {
            prop_assert_eq!(a.inverse().inverse(), a);
        }

        #[test]
        fn overlap_matches_symmetrized_vectors(a in small_relation(), b in small_relation()) {
            match relation_state_overlap(&a, &b) {
                Ok(v) => {
                    let (va, vb) = (symmetrized(&a), symmetrized(&b));
                    let dot: f64 = va.iter().map(|(k, x)| x * vb.get(k).copied().unwrap_or(0.0)).sum();
                    prop_assert!((dot - v).abs() < 1e-12);
                }
                Err(e) => prop_assert_eq!(e, Error::Unsupported),
            }
        }
    }
}
