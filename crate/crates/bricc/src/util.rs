//! Small fixed-width bit sets used for event sets, refusals and acceptances.

use std::fmt;

/// A set over a fixed universe of `len` indices, packed into 64-bit words.
///
/// Acceptance and refusal sets range over the declared alphabet plus the
/// termination marker, so the universe size is fixed per specification and
/// sets compare cheaply word by word.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSet {
    len: u32,
    words: Box<[u64]>,
}

impl BitSet {
    pub fn empty(len: usize) -> Self {
        BitSet {
            len: len as u32,
            words: vec![0; len.div_ceil(64)].into_boxed_slice(),
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self::empty(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    pub fn universe_len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.len as usize);
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.len as usize && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_proper_subset(&self, other: &BitSet) -> bool {
        self != other && self.is_subset(other)
    }

    pub fn intersects(&self, other: &BitSet) -> bool {
        self.words.iter().zip(other.words.iter()).any(|(a, b)| a & b != 0)
    }

    pub fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a &= b;
        }
    }

    pub fn difference_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a &= !b;
        }
    }

    pub fn union(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn intersection(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn difference(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.difference_with(other);
        s
    }

    pub fn complement(&self) -> BitSet {
        let mut s = Self::full(self.len as usize);
        s.difference_with(self);
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, w)| {
            let mut w = *w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    pub fn from_iter(len: usize, items: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(len);
        for i in items {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Keeps only the minimal elements of a family of sets (subset order).
///
/// The result is sorted for deterministic downstream output.
pub fn minimal_antichain(mut sets: Vec<BitSet>) -> Vec<BitSet> {
    sets.sort();
    sets.dedup();
    let keep: Vec<bool> = sets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            !sets
                .iter()
                .enumerate()
                .any(|(j, t)| j != i && t.is_subset(s) && t != s)
        })
        .collect();
    sets.into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_iterate_roundtrip() {
        let s = BitSet::from_iter(130, [0, 63, 64, 129]);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(s.count(), 4);
        assert!(s.contains(64));
        assert!(!s.contains(65));
    }

    #[test]
    fn subset_and_complement() {
        let a = BitSet::from_iter(10, [1, 2]);
        let b = BitSet::from_iter(10, [1, 2, 5]);
        assert!(a.is_subset(&b));
        assert!(a.is_proper_subset(&b));
        assert!(!b.is_subset(&a));
        assert_eq!(a.complement().count(), 8);
    }

    #[test]
    fn antichain_keeps_minimal_sets() {
        let sets = vec![
            BitSet::from_iter(8, [1, 2, 3]),
            BitSet::from_iter(8, [1]),
            BitSet::from_iter(8, [2, 3]),
            BitSet::from_iter(8, [1]),
        ];
        let min = minimal_antichain(sets);
        assert_eq!(min.len(), 2);
        assert!(min.contains(&BitSet::from_iter(8, [1])));
        assert!(min.contains(&BitSet::from_iter(8, [2, 3])));
    }
}
