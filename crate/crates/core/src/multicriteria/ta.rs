use std::collections::{BTreeSet, HashSet};

use super::{Ranked, ScoreLists, ScoringFn};
use crate::error::{param, Result};
use crate::selection::ms_select;
use crate::simnet::{ceil_log2, MaxSome, PeContext, Sum, TrafficClass};

/// Incremental threshold algorithm over one PE's lists.
///
/// Rows are scanned one at a time; every newly seen object is scored with
/// random accesses into the index. Scanning can be resumed with a larger
/// target.
#[derive(Debug, Clone)]
pub struct LocalTa<'a> {
    lists: &'a ScoreLists,
    t: &'a ScoringFn,
    rows: usize,
    seen: HashSet<u64>,
    scored: BTreeSet<Ranked>,
}

impl<'a> LocalTa<'a> {
    pub fn new(lists: &'a ScoreLists, t: &'a ScoringFn) -> Self {
        LocalTa { lists, t, rows: 0, seen: HashSet::new(), scored: BTreeSet::new() }
    }

    /// Rows scanned so far.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn exhausted(&self) -> bool {
        self.rows >= self.lists.len()
    }

    /// `t` of the last scanned row; no unseen object can score higher.
    pub fn threshold(&self) -> Option<u64> {
        if self.rows == 0 || self.exhausted() {
            return None;
        }
        let x: Vec<u64> = (0..self.lists.m()).map(|i| self.lists.list(i)[self.rows - 1].score()).collect();
        Some(self.t.eval(&x))
    }

    fn beating(&self, tau: u64) -> usize {
        self.scored.iter().take_while(|r| r.score() >= tau).count()
    }

    /// Scans until at least `target` seen objects reach the threshold or the
    /// lists run out.
    pub fn extend_to(&mut self, target: usize) {
        loop {
            if self.exhausted() {
                return;
            }
            if let Some(tau) = self.threshold() {
                if self.beating(tau) >= target {
                    return;
                }
            }
            let r = self.rows;
            for i in 0..self.lists.m() {
                let id = self.lists.list(i)[r].id;
                if self.seen.insert(id) {
                    let s = self.lists.relevance(id, self.t).expect("listed objects are indexed");
                    self.scored.insert(Ranked::new(s, id));
                }
            }
            self.rows += 1;
        }
    }

    /// The `c` best objects seen so far.
    pub fn best(&self, c: usize) -> Vec<Ranked> {
        self.scored.iter().take(c).copied().collect()
    }

    /// Upper bound on every local object outside [`best`](Self::best)`(c)`:
    /// the larger of the threshold and the best seen object beyond the
    /// first `c`. `None` if there is no such object.
    pub fn bound(&self, c: usize) -> Option<u64> {
        let seen_rest = self.scored.iter().nth(c).map(Ranked::score);
        seen_rest.max(self.threshold())
    }
}

/// Result of [`ta_reference`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaResult {
    /// Best first.
    pub top: Vec<Ranked>,
    /// Main loop iterations executed.
    pub rows: usize,
}

/// Sequential threshold algorithm on a single PE's lists.
pub fn ta_reference(lists: &ScoreLists, t: &ScoringFn, k: usize) -> Result<TaResult> {
    t.check(lists.m())?;
    if k > lists.len() {
        return param(format!("k = {k} exceeds {} objects", lists.len()));
    }
    let mut ta = LocalTa::new(lists, t);
    if k > 0 {
        ta.extend_to(k);
    }
    Ok(TaResult { top: ta.best(k), rows: ta.rows() })
}

/// Result of [`rdta_top_k`] on one PE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RdtaResult {
    /// This PE's share of the global top-k, best first.
    pub top: Vec<Ranked>,
    /// Verification rounds, at least 1.
    pub rounds: u32,
    /// Candidate count `k̄` this PE ended with.
    pub k_bar: usize,
    /// Rows this PE scanned.
    pub rows: usize,
}

/// Distributed top-k for objects placed uniformly at random.
///
/// Every PE runs TA locally for its `k̄ = ⌈k/p⌉ + ⌈log2 p⌉` best objects.
/// If at least `k` candidates reach the largest local bound the answer is
/// selected from the candidates; otherwise `k̄` doubles on the PEs whose
/// bound still exceeds the current `k`-th best candidate. The result is
/// exact for any placement, only the number of rounds depends on it.
pub fn rdta_top_k(ctx: &mut PeContext<'_>, lists: &ScoreLists, t: &ScoringFn, k: u64) -> Result<RdtaResult> {
    t.check(lists.m())?;
    let n = ctx.with_traffic(TrafficClass::Control, |ctx| ctx.all_reduce(lists.len() as u64, Sum));
    if k > n {
        return param(format!("k = {k} exceeds {n} objects"));
    }
    let p = ctx.p() as u64;
    let mut k_bar = (k.div_ceil(p) + ceil_log2(ctx.p()) as u64) as usize;
    let mut ta = LocalTa::new(lists, t);
    let mut scanning = true;
    let mut rounds = 0;
    loop {
        rounds += 1;
        if scanning {
            ta.extend_to(k_bar);
        }
        let cand = ta.best(k_bar);
        let bound = ta.bound(k_bar);
        let (count, total) = ctx.with_traffic(TrafficClass::Control, |ctx| {
            let c = match ctx.all_reduce(bound, MaxSome) {
                Some(g) => cand.iter().take_while(|r| r.score() >= g).count(),
                None => cand.len(),
            };
            let s = ctx.all_reduce(vec![c as u64, cand.len() as u64], Sum);
            (s[0], s[1])
        });
        if k == 0 {
            return Ok(RdtaResult { top: Vec::new(), rounds, k_bar, rows: ta.rows() });
        }
        if count >= k {
            let sel = ms_select(ctx, &cand, k)?;
            let mut top = cand;
            top.truncate(sel.local_count);
            return Ok(RdtaResult { top, rounds, k_bar, rows: ta.rows() });
        }
        if total >= k {
            let kth = ms_select(ctx, &cand, k)?.element.score();
            scanning = scanning && bound.is_some_and(|b| b > kth);
        }
        if scanning {
            k_bar *= 2;
        }
    }
}
