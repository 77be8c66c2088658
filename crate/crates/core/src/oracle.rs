//! Sequential brute-force references.
//!
//! Everything here is computed by exhaustive counting, summing or sorting on
//! a single thread and shares no code with the distributed algorithms.

use std::collections::BTreeMap;

use crate::error::{param, Result};

/// The `k` smallest items in ascending order.
pub fn exact_select<T: Ord + Clone>(all: &[T], k: usize) -> Result<Vec<T>> {
    if k > all.len() {
        return param(format!("k = {k} exceeds {} items", all.len()));
    }
    let mut v = all.to_vec();
    v.sort();
    v.truncate(k);
    Ok(v)
}

/// Occurrences of every key over all streams.
pub fn exact_counts<S: AsRef<[u64]>>(streams: &[S]) -> BTreeMap<u64, u64> {
    let mut counts = BTreeMap::new();
    for s in streams {
        for &x in s.as_ref() {
            *counts.entry(x).or_insert(0) += 1;
        }
    }
    counts
}

fn top_by_value(table: &BTreeMap<u64, u64>, k: usize) -> Vec<(u64, u64)> {
    let mut v: Vec<(u64, u64)> = table.iter().map(|(&k, &c)| (k, c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

/// The `k` most frequent keys as `(key, count)`, ties broken by smaller key.
pub fn exact_top_k_freq<S: AsRef<[u64]>>(streams: &[S], k: usize) -> Vec<(u64, u64)> {
    top_by_value(&exact_counts(streams), k)
}

/// Absolute error of a reported key set: the count of the most frequent
/// key that was not output minus the count of the least frequent key that
/// was output, or 0 if that difference is not positive.
///
/// Keys missing from `counts` count as 0.
pub fn absolute_error(counts: &BTreeMap<u64, u64>, output: &[u64]) -> u64 {
    let mut least_out: Option<u64> = None;
    for key in output {
        let c = counts.get(key).copied().unwrap_or(0);
        least_out = Some(least_out.map_or(c, |m| m.min(c)));
    }
    let mut best_missed = 0;
    for (key, &c) in counts {
        if c > best_missed && !output.contains(key) {
            best_missed = c;
        }
    }
    match least_out {
        Some(l) => best_missed.saturating_sub(l),
        None => best_missed,
    }
}

/// [`absolute_error`] divided by the total weight of `counts`.
pub fn relative_error(counts: &BTreeMap<u64, u64>, output: &[u64]) -> f64 {
    let n: u64 = counts.values().sum();
    if n == 0 {
        return 0.0;
    }
    absolute_error(counts, output) as f64 / n as f64
}

/// Sum of values per key over all `(key, value)` streams.
pub fn exact_sums<S: AsRef<[(u64, u64)]>>(streams: &[S]) -> BTreeMap<u64, u64> {
    let mut sums = BTreeMap::new();
    for s in streams {
        for &(key, v) in s.as_ref() {
            *sums.entry(key).or_insert(0) += v;
        }
    }
    sums
}

/// The `k` keys with the largest sums as `(key, sum)`, ties broken by
/// smaller key.
pub fn exact_top_k_sums<S: AsRef<[(u64, u64)]>>(streams: &[S], k: usize) -> Vec<(u64, u64)> {
    top_by_value(&exact_sums(streams), k)
}

/// Relevance of every object by full evaluation, best first, ties broken
/// by smaller id. `objects` yields `(id, scores)`.
pub fn exact_top_k_scored<'a>(
    objects: impl IntoIterator<Item = (u64, &'a [u64])>,
    t: impl Fn(&[u64]) -> u64,
    k: usize,
) -> Vec<(u64, u64)> {
    let mut v: Vec<(u64, u64)> = objects.into_iter().map(|(id, s)| (id, t(s))).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

/// Rows a sequential threshold algorithm scans on a single PE: the first
/// depth `d` at which at least `k` objects seen in the first `d` rows
/// reach `t` of the row-`d` scores. Lists are sorted by descending score
/// with ties broken by smaller id.
pub fn ta_scan_depth(objects: &[(u64, Vec<u64>)], t: impl Fn(&[u64]) -> u64, k: usize) -> usize {
    if k == 0 || objects.is_empty() {
        return 0;
    }
    let m = objects[0].1.len();
    let lists: Vec<Vec<(u64, u64)>> = (0..m)
        .map(|i| {
            let mut l: Vec<(u64, u64)> = objects.iter().map(|(id, s)| (s[i], *id)).collect();
            l.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            l
        })
        .collect();
    let score: BTreeMap<u64, u64> = objects.iter().map(|(id, s)| (*id, t(s))).collect();
    for d in 1..=objects.len() {
        let x: Vec<u64> = lists.iter().map(|l| l[d - 1].0).collect();
        let tau = t(&x);
        let mut seen: Vec<u64> = lists.iter().flat_map(|l| l[..d].iter().map(|e| e.1)).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.iter().filter(|id| score[id] >= tau).count() >= k {
            return d;
        }
    }
    objects.len()
}

/// Moves of a sequential greedy matcher for balancing `counts` to at most
/// `ceil(n/p)` per PE: surplus items, taken from senders in PE order, fill
/// the deficits of receivers in PE order. Returns `(from, to, amount)`.
pub fn greedy_moves(counts: &[u64]) -> Vec<(usize, usize, u64)> {
    let p = counts.len() as u64;
    if p == 0 {
        return Vec::new();
    }
    let n: u64 = counts.iter().sum();
    let cap = n.div_ceil(p);
    let mut surplus: Vec<(usize, u64)> =
        counts.iter().enumerate().filter(|(_, &c)| c > cap).map(|(i, &c)| (i, c - cap)).collect();
    let mut deficit: Vec<(usize, u64)> =
        counts.iter().enumerate().filter(|(_, &c)| c < cap).map(|(i, &c)| (i, cap - c)).collect();
    let mut moves = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < surplus.len() && j < deficit.len() {
        let a = surplus[i].1.min(deficit[j].1);
        moves.push((surplus[i].0, deficit[j].0, a));
        surplus[i].1 -= a;
        deficit[j].1 -= a;
        if surplus[i].1 == 0 {
            i += 1;
        }
        if deficit[j].1 == 0 {
            j += 1;
        }
    }
    moves
}

/// Segmented inclusive scan: a `true` flag starts a new segment.
pub fn segmented_scan<T: Clone>(values: &[T], starts: &[bool], op: impl Fn(&T, &T) -> T) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let next = if i == 0 || starts[i] { v.clone() } else { op(&out[i - 1], v) };
        out.push(next);
    }
    out
}
