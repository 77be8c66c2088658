//! Bulk parallel priority queue whose elements never leave the PE that
//! inserted them.
//!
//! Each PE keeps a [`RankTree`]. Insertions are purely local; `deleteMin*`
//! runs a multisequence selection over the trees and removes each PE's share
//! with one split.

mod tree;

pub use tree::{Iter, RankTree};

use crate::error::{Error, Result};
use crate::selection::{ams_select_with_total, ms_select};
use crate::simnet::{FixedWords, MinSome, PeContext, Sum, TrafficClass};

/// One PE's part of the distributed queue.
#[derive(Debug)]
pub struct BulkQueue<T: Ord + Clone> {
    tree: RankTree<T>,
    /// Selection rounds spent by the most recent deletion.
    pub last_rounds: u32,
}

impl<T: Ord + Clone + FixedWords> BulkQueue<T> {
    pub fn new(seed: u64) -> Self {
        BulkQueue { tree: RankTree::with_seed(seed), last_rounds: 0 }
    }

    /// Local insertion; never communicates.
    pub fn insert_bulk(&mut self, items: impl IntoIterator<Item = T>) {
        for x in items {
            self.tree.insert(x);
        }
    }

    pub fn local_len(&self) -> usize {
        self.tree.len()
    }

    pub fn tree(&self) -> &RankTree<T> {
        &self.tree
    }

    pub fn global_len(&self, ctx: &mut PeContext<'_>) -> u64 {
        ctx.with_traffic(TrafficClass::Control, |ctx| ctx.all_reduce(self.tree.len() as u64, Sum))
    }

    fn check_size(&self, ctx: &mut PeContext<'_>, requested: u64) -> Result<u64> {
        let size = self.global_len(ctx);
        if requested > size {
            return Err(Error::QueueUnderflow { requested, size });
        }
        Ok(size)
    }

    /// Removes the `k` globally smallest elements and returns the local share
    /// in ascending order.
    pub fn delete_min_fixed(&mut self, ctx: &mut PeContext<'_>, k: u64) -> Result<Vec<T>> {
        self.check_size(ctx, k)?;
        self.last_rounds = 0;
        match k {
            0 => Ok(Vec::new()),
            1 => {
                let mine = self.tree.min().cloned();
                let best = ctx.all_reduce(mine.clone(), MinSome);
                self.last_rounds = 1;
                if mine.is_some() && mine == best {
                    Ok(self.tree.take_smallest(1))
                } else {
                    Ok(Vec::new())
                }
            }
            _ => {
                let sel = ms_select(ctx, &self.tree, k)?;
                self.last_rounds = sel.rounds;
                Ok(self.tree.take_smallest(sel.local_count))
            }
        }
    }

    /// Removes the `k` globally smallest elements for some `k_lo <= k <=
    /// k_hi`, using `d` probes per selection round.
    pub fn delete_min_flexible(&mut self, ctx: &mut PeContext<'_>, k_lo: u64, k_hi: u64, d: usize) -> Result<Vec<T>> {
        let size = self.check_size(ctx, k_hi)?;
        let sel = ams_select_with_total(ctx, &self.tree, k_lo, k_hi, size, d)?;
        self.last_rounds = sel.rounds;
        Ok(self.tree.take_smallest(sel.local_count))
    }
}

#[cfg(test)]
mod tests;
