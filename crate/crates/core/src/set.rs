//! Compact bit-set encodings for school subsets and teacher subsets.

use std::fmt;

/// Maximum number of schools a tabular choice function can range over.
pub const MAX_SCHOOLS: usize = 16;

/// Maximum number of teachers present in a single period.
pub const MAX_TEACHERS: usize = 64;

/// A subset of the school set `S`, bit `k` standing for the school with index `k`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, serde::Serialize)]
pub struct SchoolSet(u16);

impl SchoolSet {
    pub const EMPTY: SchoolSet = SchoolSet(0);

    pub const fn from_bits(bits: u16) -> Self {
        SchoolSet(bits)
    }

    pub const fn bits(self) -> u16 {
        self.0
    }

    /// The full set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_SCHOOLS, "at most {MAX_SCHOOLS} schools are supported");
        if n == MAX_SCHOOLS {
            SchoolSet(u16::MAX)
        } else {
            SchoolSet((1u16 << n) - 1)
        }
    }

    pub fn singleton(school: usize) -> Self {
        debug_assert!(school < MAX_SCHOOLS);
        SchoolSet(1 << school)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices
            .into_iter()
            .fold(SchoolSet::EMPTY, |acc, s| acc.with(s))
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn contains(self, school: usize) -> bool {
        (self.0 >> school) & 1 == 1
    }

    pub const fn with(self, school: usize) -> Self {
        SchoolSet(self.0 | (1 << school))
    }

    pub const fn without(self, school: usize) -> Self {
        SchoolSet(self.0 & !(1 << school))
    }

    pub const fn union(self, other: Self) -> Self {
        SchoolSet(self.0 | other.0)
    }

    pub const fn intersection(self, other: Self) -> Self {
        SchoolSet(self.0 & other.0)
    }

    pub const fn difference(self, other: Self) -> Self {
        SchoolSet(self.0 & !other.0)
    }

    pub const fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        BitIter(self.0 as u64)
    }

    /// All subsets of `self`, in increasing bit order (the empty set first).
    pub fn subsets(self) -> impl Iterator<Item = SchoolSet> {
        let mask = self.0;
        let mut next = Some(0u16);
        std::iter::from_fn(move || {
            let current = next?;
            next = if current == mask {
                None
            } else {
                Some(current.wrapping_sub(mask) & mask)
            };
            Some(SchoolSet(current))
        })
    }

    /// Index of the set in a dense table over `2^|S|` entries.
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for SchoolSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A subset of the teachers present in a period, indexed by their position in the roster.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, serde::Serialize)]
pub struct TeacherSet(u64);

impl TeacherSet {
    pub const EMPTY: TeacherSet = TeacherSet(0);

    pub const fn from_bits(bits: u64) -> Self {
        TeacherSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_TEACHERS);
        if n == MAX_TEACHERS {
            TeacherSet(u64::MAX)
        } else {
            TeacherSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(teacher: usize) -> Self {
        TeacherSet(1 << teacher)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices
            .into_iter()
            .fold(TeacherSet::EMPTY, |acc, t| acc.with(t))
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn contains(self, teacher: usize) -> bool {
        (self.0 >> teacher) & 1 == 1
    }

    pub const fn with(self, teacher: usize) -> Self {
        TeacherSet(self.0 | (1 << teacher))
    }

    pub const fn without(self, teacher: usize) -> Self {
        TeacherSet(self.0 & !(1 << teacher))
    }

    pub const fn union(self, other: Self) -> Self {
        TeacherSet(self.0 | other.0)
    }

    pub const fn difference(self, other: Self) -> Self {
        TeacherSet(self.0 & !other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        BitIter(self.0)
    }
}

impl fmt::Debug for TeacherSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let low = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(low)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_enumerates_power_set() {
        let set = SchoolSet::from_indices([0, 2, 3]);
        let subsets: Vec<_> = set.subsets().collect();
        assert_eq!(subsets.len(), 8);
        assert!(subsets.iter().all(|s| s.is_subset_of(set)));
        assert_eq!(subsets[0], SchoolSet::EMPTY);
        assert_eq!(*subsets.last().unwrap(), set);
        assert_eq!(SchoolSet::EMPTY.subsets().count(), 1);
    }

    #[test]
    fn set_algebra() {
        let a = SchoolSet::from_indices([0, 1]);
        let b = SchoolSet::from_indices([1, 2]);
        assert_eq!(a.union(b), SchoolSet::from_indices([0, 1, 2]));
        assert_eq!(a.intersection(b), SchoolSet::singleton(1));
        assert_eq!(a.difference(b), SchoolSet::singleton(0));
        assert_eq!(SchoolSet::full(16).len(), 16);
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![0, 1]);
        let t = TeacherSet::from_indices([3, 63]);
        assert_eq!(t.iter().collect::<Vec<_>>(), vec![3, 63]);
        assert_eq!(TeacherSet::full(64).len(), 64);
    }
}
