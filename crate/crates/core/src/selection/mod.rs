//! Distributed selection of the `k` globally smallest elements.
//!
//! [`select_unsorted`] works on arbitrary local multisets, [`ms_select`]
//! finds the element of exact global rank `k` in locally sorted sequences and
//! [`ams_select`] trades exactness of `k` for fewer rounds.

mod multiseq;
mod unsorted;

pub use multiseq::{ams_select, ams_select_with_total, ms_select, AmsSelected, MsSelected};
pub use unsorted::{pick_pivots, select_unsorted, PivotPlan, SelectConfig, Selected};

use crate::simnet::{FixedWords, Payload};

/// A key made globally unique by the position it was created at.
///
/// Ordering is by key first, then by `(pe, index)`, so no two elements
/// created at different positions compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    pub key: u64,
    uid: u64,
}

const INDEX_BITS: u32 = 40;

impl Element {
    /// `pe` must be below 2^24 and `index` below 2^40.
    pub fn new(key: u64, pe: usize, index: usize) -> Self {
        debug_assert!((pe as u64) < 1 << (64 - INDEX_BITS) && (index as u64) < 1 << INDEX_BITS);
        Element {
            key,
            uid: (pe as u64) << INDEX_BITS | index as u64,
        }
    }

    pub fn pe(&self) -> usize {
        (self.uid >> INDEX_BITS) as usize
    }

    pub fn index(&self) -> usize {
        (self.uid & ((1 << INDEX_BITS) - 1)) as usize
    }

    /// Tags a local key sequence with this PE's rank.
    pub fn tag_all(keys: &[u64], pe: usize) -> Vec<Element> {
        keys.iter().enumerate().map(|(i, &k)| Element::new(k, pe, i)).collect()
    }
}

impl Payload for Element {
    fn words(&self) -> usize {
        2
    }
}

impl FixedWords for Element {
    const WORDS: usize = 2;
}

/// Read access to a locally sorted sequence.
///
/// Positions are zero-based. `count_less(x)` and `count_le(x)` return the
/// number of items `< x` and `<= x`.
pub trait RankedSeq {
    type Item: Ord + Clone + FixedWords;

    fn len(&self) -> usize;
    fn at(&self, i: usize) -> Self::Item;
    fn count_less(&self, x: &Self::Item) -> usize;
    fn count_le(&self, x: &Self::Item) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<T: Ord + Clone + FixedWords> RankedSeq for [T] {
    type Item = T;

    fn len(&self) -> usize {
        <[T]>::len(self)
    }

    fn at(&self, i: usize) -> T {
        self[i].clone()
    }

    fn count_less(&self, x: &T) -> usize {
        self.partition_point(|e| e < x)
    }

    fn count_le(&self, x: &T) -> usize {
        self.partition_point(|e| e <= x)
    }
}

impl<T: Ord + Clone + FixedWords> RankedSeq for Vec<T> {
    type Item = T;

    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn at(&self, i: usize) -> T {
        self[i].clone()
    }

    fn count_less(&self, x: &T) -> usize {
        self.as_slice().count_less(x)
    }

    fn count_le(&self, x: &T) -> usize {
        self.as_slice().count_le(x)
    }
}

/// A locally sorted sequence with an active window `lo..hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortedRun<T> {
    elements: Vec<T>,
    lo: usize,
    hi: usize,
}

impl<T: Ord> SortedRun<T> {
    /// Sorts `elements` and activates all of them.
    pub fn new(mut elements: Vec<T>) -> Self {
        elements.sort_unstable();
        let hi = elements.len();
        SortedRun { elements, lo: 0, hi }
    }

    /// Wraps an already sorted vector; panics if it is not sorted.
    pub fn from_sorted(elements: Vec<T>) -> Self {
        assert!(elements.windows(2).all(|w| w[0] <= w[1]), "input not sorted");
        let hi = elements.len();
        SortedRun { elements, lo: 0, hi }
    }

    pub fn with_bounds(mut self, lo: usize, hi: usize) -> Self {
        assert!(lo <= hi && hi <= self.elements.len(), "bounds {lo}..{hi} out of range");
        self.lo = lo;
        self.hi = hi;
        self
    }

    pub fn bounds(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    pub fn active(&self) -> &[T] {
        &self.elements[self.lo..self.hi]
    }

    pub fn elements(&self) -> &[T] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<T> {
        self.elements
    }
}

impl<T: Ord + Clone + FixedWords> RankedSeq for SortedRun<T> {
    type Item = T;

    fn len(&self) -> usize {
        self.hi - self.lo
    }

    fn at(&self, i: usize) -> T {
        self.active()[i].clone()
    }

    fn count_less(&self, x: &T) -> usize {
        self.active().count_less(x)
    }

    fn count_le(&self, x: &T) -> usize {
        self.active().count_le(x)
    }
}
