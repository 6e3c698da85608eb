//! Ground sets and bitmask subset indexing.
//!
//! A ground set holds `n` elements `x_1, ..., x_n` with `1 <= n <= 20`.
//! Subsets are encoded as unsigned integers with the convention that bit
//! `i - 1` is set exactly when `x_i` is in the subset. Every module in the
//! crate uses this single encoding; in particular it fixes the order of the
//! Kronecker factors in the fast transforms.

use crate::error::{Error, Result};

pub const MAX_GROUND_SET: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundSet {
    n: usize,
    labels: Option<Vec<String>>,
}

impl GroundSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_GROUND_SET {
            return Err(Error::GroundSetSize { n });
        }
        Ok(Self { n, labels: None })
    }

    pub fn with_labels(n: usize, labels: Vec<String>) -> Result<Self> {
        let mut gs = Self::new(n)?;
        if labels.len() != n {
            return Err(Error::LabelCount { n, got: labels.len() });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        gs.labels = Some(labels);
        Ok(gs)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    /// Number of subsets, `2^n`.
    pub fn subset_count(&self) -> usize {
        1 << self.n
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// The full set `N` as a subset index.
    pub fn full_subset(&self) -> SubsetIndex {
        SubsetIndex::new_unchecked(((1u64 << self.n) - 1) as u32)
    }

    pub fn subsets(&self) -> impl Iterator<Item = SubsetIndex> {
        (0..self.subset_count() as u32).map(SubsetIndex::new_unchecked)
    }

    pub fn check_subset(&self, a: SubsetIndex) -> Result<()> {
        if (a.bits() as usize) < self.subset_count() {
            Ok(())
        } else {
            Err(Error::SubsetOutOfRange { bits: a.bits(), n: self.n })
        }
    }

    pub fn check_same(&self, other: &GroundSet) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::GroundSetMismatch { left: self.n, right: other.n })
        }
    }
}

/// A subset of a ground set, encoded as a bitmask (bit `i-1` <=> `x_i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetIndex(u32);

impl SubsetIndex {
    pub const EMPTY: SubsetIndex = SubsetIndex(0);

    pub fn new(bits: u32, ground: &GroundSet) -> Result<Self> {
        let s = SubsetIndex(bits);
        ground.check_subset(s)?;
        Ok(s)
    }

    pub const fn new_unchecked(bits: u32) -> Self {
        SubsetIndex(bits)
    }

    /// Subset containing the single element with 0-based index `i`.
    pub const fn singleton(i: usize) -> Self {
        SubsetIndex(1 << i)
    }

    /// Subset from 0-based element indices.
    pub fn from_elements(elems: &[usize]) -> Self {
        SubsetIndex(elems.iter().fold(0u32, |m, &i| m | (1 << i)))
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub const fn cardinality(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn contains(self, element: usize) -> bool {
        self.0 & (1 << element) != 0
    }

    pub const fn union(self, other: Self) -> Self {
        SubsetIndex(self.0 | other.0)
    }

    pub const fn intersect(self, other: Self) -> Self {
        SubsetIndex(self.0 & other.0)
    }

    pub const fn minus(self, other: Self) -> Self {
        SubsetIndex(self.0 & !other.0)
    }

    pub const fn sym_diff(self, other: Self) -> Self {
        SubsetIndex(self.0 ^ other.0)
    }

    pub const fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// 0-based indices of the elements in this subset, ascending.
    pub fn elements(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |i| bits & (1 << i) != 0)
    }

    /// All subsets of `self` (submasks), ascending by bit pattern.
    pub fn subsets(self) -> SubmaskIter {
        SubmaskIter { mask: self.0, next: Some(0) }
    }
}

/// Iterates the submasks of a mask in increasing order via
/// `s -> (s - mask) & mask`.
pub struct SubmaskIter {
    mask: u32,
    next: Option<u32>,
}

impl Iterator for SubmaskIter {
    type Item = SubsetIndex;

    fn next(&mut self) -> Option<SubsetIndex> {
        let cur = self.next?;
        self.next = if cur == self.mask {
            None
        } else {
            Some(cur.wrapping_sub(self.mask) & self.mask)
        };
        Some(SubsetIndex(cur))
    }
}
