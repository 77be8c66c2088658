//! Top-k most frequent keys of a distributed multiset.
//!
//! All variants start from a Bernoulli sample that every PE aggregates
//! locally and routes to the hash owners of its keys:
//!
//! * [`pac_top_k`] selects the `k` most frequently sampled keys and scales
//!   their sample counts by `1/rho`.
//! * [`ec_top_k`] takes a smaller sample, selects `k* >= k` candidates and
//!   counts them exactly in a second pass over the input.
//! * [`pec_top_k`] derives `k*` from the sample itself so that the exact
//!   top-k is among the candidates with probability `1 - delta`.
//! * [`naive_top_k`] ships every aggregated sample to PE 0, directly or
//!   along a combining tree.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{param, Result};
use crate::sampling::{
    bernoulli_skip_sample, ec_plan, pac_sample_size, pec_k_star_threshold, threshold_from_expectation,
    zipf_plan_with_universe, ErrorBudget,
};
use crate::selection::{ms_select, select_unsorted, SelectConfig};
use crate::simnet::{hypercube_combine_route, CountedKey, FixedWords, Payload, PeContext, Sum, TrafficClass};

/// Which algorithm produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FreqMode {
    Pac,
    Ec,
    Pec,
    Naive,
    NaiveTree,
}

/// A reported key with its estimated or exact count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FreqEntry {
    pub key: u64,
    pub count: u64,
    pub exact: bool,
}

/// Run parameters and diagnostics, identical on all PEs except
/// `local_sample`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqInfo {
    pub mode: FreqMode,
    pub rho: f64,
    /// Input elements this PE sampled.
    pub local_sample: u64,
    /// Candidates counted exactly (EC) or the measured `k*` (PEC).
    pub k_star: Option<u64>,
    /// PEC only: `k*` stayed within the cap, so the result is exact with
    /// probability `1 - delta`.
    pub probably_exact: bool,
    /// PEC only: `k*` exceeded the cap and only the cap was counted.
    pub approximate: bool,
    /// Fewer than `k` keys were available.
    pub truncated: bool,
}

impl FreqInfo {
    fn new(mode: FreqMode, rho: f64) -> Self {
        FreqInfo {
            mode,
            rho,
            local_sample: 0,
            k_star: None,
            probably_exact: false,
            approximate: false,
            truncated: false,
        }
    }
}

/// One PE's part of the answer.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqShare {
    pub entries: Vec<FreqEntry>,
    pub info: FreqInfo,
}

/// The assembled answer, most frequent first.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqResult {
    pub top: Vec<FreqEntry>,
    pub info: FreqInfo,
}

impl FreqResult {
    /// Concatenates the shares of all PEs; `info` is taken from PE 0 with
    /// the sample sizes summed.
    pub fn from_shares(shares: &[FreqShare]) -> Self {
        let mut top: Vec<FreqEntry> = shares.iter().flat_map(|s| s.entries.iter().copied()).collect();
        top.sort_by(|a, b| b.count.cmp(&a.count).then(a.key.cmp(&b.key)));
        let mut info = shares.first().map(|s| s.info.clone()).unwrap_or_else(|| FreqInfo::new(FreqMode::Pac, 0.0));
        info.local_sample = shares.iter().map(|s| s.info.local_sample).sum();
        FreqResult { top, info }
    }

    pub fn keys(&self) -> Vec<u64> {
        self.top.iter().map(|e| e.key).collect()
    }
}

/// Count-descending, key-ascending order for selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct ByCount {
    inverted: u64,
    key: u64,
}

impl ByCount {
    fn new(c: CountedKey) -> Self {
        ByCount { inverted: u64::MAX - c.count, key: c.key }
    }

    fn get(self) -> CountedKey {
        CountedKey::new(self.key, u64::MAX - self.inverted)
    }
}

impl Payload for ByCount {
    fn words(&self) -> usize {
        2
    }
}

impl FixedWords for ByCount {
    const WORDS: usize = 2;
}

fn by_count_desc(a: &CountedKey, b: &CountedKey) -> std::cmp::Ordering {
    b.count.cmp(&a.count).then(a.key.cmp(&b.key))
}

/// Multiplicative hash assigning keys to owner PEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyHash {
    mul: u64,
    add: u64,
    p: usize,
}

impl KeyHash {
    pub fn new(mul: u64, add: u64, p: usize) -> Self {
        KeyHash { mul: mul | 1, add, p }
    }

    /// Draws the hash parameters from the shared stream, so every PE gets
    /// the same function.
    pub fn shared(ctx: &mut PeContext<'_>) -> Self {
        let p = ctx.p();
        let rng = ctx.shared_rng();
        KeyHash::new(rng.random(), rng.random(), p)
    }

    pub fn owner(&self, key: u64) -> usize {
        let h = key.wrapping_mul(self.mul).wrapping_add(self.add);
        let h = h ^ (h >> 29);
        ((u128::from(h.wrapping_mul(self.mul)) * self.p as u128) >> 64) as usize
    }
}

/// Local sample of `input` at rate `rho`, aggregated and sorted by key.
pub fn local_sample_counts<R: Rng + ?Sized>(input: &[u64], rho: f64, rng: &mut R) -> Vec<CountedKey> {
    let mut table: HashMap<u64, u64> = HashMap::new();
    for i in bernoulli_skip_sample(input.len(), rho, rng) {
        *table.entry(input[i]).or_insert(0) += 1;
    }
    let mut out: Vec<CountedKey> = table.into_iter().map(|(k, c)| CountedKey::new(k, c)).collect();
    out.sort_unstable_by_key(|c| c.key);
    out
}

fn sample_and_route(ctx: &mut PeContext<'_>, input: &[u64], rho: f64, hash: KeyHash) -> (Vec<CountedKey>, u64) {
    let local = local_sample_counts(input, rho, ctx.rng());
    let size = local.iter().map(|c| c.count).sum();
    let owned = hypercube_combine_route(ctx, local, |k| hash.owner(k));
    (owned, size)
}

fn global_len(ctx: &mut PeContext<'_>, len: usize) -> u64 {
    ctx.with_traffic(TrafficClass::Control, |ctx| ctx.all_reduce(len as u64, Sum))
}

/// This PE's share of the `k` largest counts among all PEs' `owned`
/// entries (ties broken by smaller key), most frequent first, plus the
/// number of entries available globally.
pub fn select_top_counts(ctx: &mut PeContext<'_>, owned: &[CountedKey], k: u64) -> Result<(Vec<CountedKey>, u64)> {
    let total = global_len(ctx, owned.len());
    let want = k.min(total);
    let items: Vec<ByCount> = owned.iter().copied().map(ByCount::new).collect();
    let mut sel = select_unsorted(ctx, items, want, &SelectConfig::default())?.items;
    sel.sort_unstable();
    Ok((sel.into_iter().map(ByCount::get).collect(), total))
}

fn scale(count: u64, rho: f64) -> u64 {
    (count as f64 / rho).round() as u64
}

/// The selection stage of PAC on already routed sample counts: selects the
/// `k` most frequently sampled keys and scales their counts by `1/rho`.
pub fn pac_from_counts(ctx: &mut PeContext<'_>, owned: &[CountedKey], k: u64, rho: f64) -> Result<FreqShare> {
    if !(rho > 0.0 && rho <= 1.0) {
        return param(format!("rho must lie in (0, 1], got {rho}"));
    }
    let (top, total) = select_top_counts(ctx, owned, k)?;
    let exact = rho >= 1.0;
    let entries = top.iter().map(|c| FreqEntry { key: c.key, count: scale(c.count, rho), exact }).collect();
    let mut info = FreqInfo::new(FreqMode::Pac, rho);
    info.truncated = total < k;
    Ok(FreqShare { entries, info })
}

fn check_k(k: u64) -> Result<()> {
    if k == 0 {
        return param("k must be at least 1");
    }
    Ok(())
}

fn empty_share(mode: FreqMode) -> FreqShare {
    let mut info = FreqInfo::new(mode, 1.0);
    info.truncated = true;
    FreqShare { entries: Vec::new(), info }
}

/// `(eps, delta)`-approximate top-k by sampling alone.
pub fn pac_top_k(ctx: &mut PeContext<'_>, input: &[u64], k: u64, budget: ErrorBudget) -> Result<FreqShare> {
    check_k(k)?;
    let n = global_len(ctx, input.len());
    if n == 0 {
        return Ok(empty_share(FreqMode::Pac));
    }
    let plan = pac_sample_size(n, k.min(n), budget)?;
    pac_with(ctx, input, k, plan.rho)
}

/// PAC with an explicit sampling rate.
pub fn pac_with(ctx: &mut PeContext<'_>, input: &[u64], k: u64, rho: f64) -> Result<FreqShare> {
    check_k(k)?;
    check_rho(rho)?;
    let hash = KeyHash::shared(ctx);
    let (owned, size) = sample_and_route(ctx, input, rho, hash);
    let mut share = pac_from_counts(ctx, &owned, k, rho)?;
    share.info.local_sample = size;
    Ok(share)
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return param(format!("rho must lie in (0, 1], got {rho}"));
    }
    Ok(())
}

/// Counts the keys in `candidates` (identical on all PEs) exactly and
/// returns the `k` most frequent of them on every PE.
fn count_exactly(ctx: &mut PeContext<'_>, input: &[u64], candidates: &[u64], k: u64) -> Vec<CountedKey> {
    let index: HashMap<u64, usize> = candidates.iter().enumerate().map(|(i, &key)| (key, i)).collect();
    let mut counts = vec![0u64; candidates.len()];
    for x in input {
        if let Some(&i) = index.get(x) {
            counts[i] += 1;
        }
    }
    let counts = ctx.all_reduce(counts, Sum);
    let mut all: Vec<CountedKey> = candidates.iter().zip(&counts).map(|(&key, &c)| CountedKey::new(key, c)).collect();
    all.sort_unstable_by(by_count_desc);
    all.truncate(k as usize);
    all
}

fn exact_entries(top: &[CountedKey], mine: impl Fn(u64) -> bool) -> Vec<FreqEntry> {
    top.iter()
        .filter(|c| mine(c.key))
        .map(|c| FreqEntry { key: c.key, count: c.count, exact: true })
        .collect()
}

/// Selects the `k_star` most frequently sampled keys from routed sample
/// counts, all-gathers them and counts them exactly. Returns the `k` most
/// frequent candidates (replicated) and whether fewer than `k` keys were
/// sampled.
fn candidates_and_count(
    ctx: &mut PeContext<'_>,
    input: &[u64],
    owned: &[CountedKey],
    k_star: u64,
    k: u64,
) -> Result<(Vec<CountedKey>, bool)> {
    let (cands, total) = select_top_counts(ctx, owned, k_star)?;
    let keys: Vec<u64> = cands.iter().map(|c| c.key).collect();
    let keys = ctx.all_gather_concat(keys);
    Ok((count_exactly(ctx, input, &keys, k), total < k))
}

/// The counting stage of EC on already routed sample counts. PE 0 reports
/// the result.
pub fn ec_from_counts(ctx: &mut PeContext<'_>, input: &[u64], owned: &[CountedKey], k: u64, k_star: u64) -> Result<FreqShare> {
    check_k(k)?;
    let (top, truncated) = candidates_and_count(ctx, input, owned, k_star.max(k), k)?;
    let me = ctx.rank();
    let mut info = FreqInfo::new(FreqMode::Ec, 1.0);
    info.k_star = Some(k_star.max(k));
    info.truncated = truncated;
    Ok(FreqShare { entries: exact_entries(&top, |_| me == 0), info })
}

/// Exact counting of the `k*` most frequently sampled keys with the sample
/// size and `k*` of [`ec_plan`].
pub fn ec_top_k(ctx: &mut PeContext<'_>, input: &[u64], k: u64, budget: ErrorBudget) -> Result<FreqShare> {
    check_k(k)?;
    let n = global_len(ctx, input.len());
    if n == 0 {
        return Ok(empty_share(FreqMode::Ec));
    }
    let plan = ec_plan(n, k.min(n), ctx.p(), budget)?;
    ec_with(ctx, input, k, plan.rho, plan.k_star.expect("ec plans carry k*"))
}

/// Exact counting with an explicit sampling rate and candidate count.
pub fn ec_with(ctx: &mut PeContext<'_>, input: &[u64], k: u64, rho: f64, k_star: u64) -> Result<FreqShare> {
    check_k(k)?;
    check_rho(rho)?;
    let hash = KeyHash::shared(ctx);
    let (owned, size) = sample_and_route(ctx, input, rho, hash);
    let (top, truncated) = candidates_and_count(ctx, input, &owned, k_star.max(k), k)?;
    let me = ctx.rank();
    let entries = exact_entries(&top, |key| hash.owner(key) == me);
    let mut info = FreqInfo::new(FreqMode::Ec, rho);
    info.local_sample = size;
    info.k_star = Some(k_star.max(k));
    info.truncated = truncated;
    Ok(FreqShare { entries, info })
}

/// How PEC sizes its sample and candidate threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PecStage1 {
    /// A PAC-sized sample at relative error `eps0`; the threshold comes from
    /// the observed rank-`k` sample count.
    Pac { eps0: f64 },
    /// Known Zipf input with exponent `s` over `universe` keys; the sample
    /// rate and threshold come from the expected rank-`k` frequency.
    Zipf { s: f64, universe: u64 },
}

/// Parameters of [`pec_top_k`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PecConfig {
    pub delta: f64,
    pub stage1: PecStage1,
    /// Largest candidate count that still counts as "k* = O(k)", as a
    /// multiple of `k`.
    pub cap_factor: u64,
}

impl PecConfig {
    /// Stage 1 at `eps0 = 10 eps` and a cap of `8k`.
    pub fn from_budget(budget: ErrorBudget) -> Self {
        PecConfig { delta: budget.delta, stage1: PecStage1::Pac { eps0: 10.0 * budget.eps }, cap_factor: 8 }
    }
}

/// Probably exactly correct top-k: candidates are all sampled keys whose
/// sample count reaches a threshold that the true top-k clears with
/// probability `1 - delta`; they are then counted exactly.
pub fn pec_top_k(ctx: &mut PeContext<'_>, input: &[u64], k: u64, cfg: &PecConfig) -> Result<FreqShare> {
    check_k(k)?;
    if cfg.cap_factor == 0 {
        return param("cap factor must be at least 1");
    }
    let n = global_len(ctx, input.len());
    if n == 0 {
        return Ok(empty_share(FreqMode::Pec));
    }
    let kk = k.min(n);
    let (rho, expected) = match cfg.stage1 {
        PecStage1::Pac { eps0 } => (pac_sample_size(n, kk, ErrorBudget::new(eps0, cfg.delta)?)?.rho, None),
        PecStage1::Zipf { s, universe } => {
            let plan = zipf_plan_with_universe(n, kk, s, cfg.delta, universe)?;
            (plan.rho, Some(plan.rho * plan.x_k))
        }
    };
    let hash = KeyHash::shared(ctx);
    let (owned, size) = sample_and_route(ctx, input, rho, hash);
    let threshold = match expected {
        Some(e) => threshold_from_expectation(e, kk, cfg.delta),
        None => {
            let mut sorted: Vec<ByCount> = owned.iter().copied().map(ByCount::new).collect();
            sorted.sort_unstable();
            let total = global_len(ctx, sorted.len());
            if total >= kk {
                let s_hat = ms_select(ctx, &sorted, kk)?.element.get().count;
                pec_k_star_threshold(s_hat as f64, kk, cfg.delta)
            } else {
                0.0
            }
        }
    };
    let above = owned.iter().filter(|c| c.count as f64 >= threshold).count();
    let k_star = ctx.with_traffic(TrafficClass::Control, |ctx| ctx.all_reduce(above as u64, Sum));
    let cap = cfg.cap_factor.saturating_mul(k);
    let approximate = threshold <= 0.0 || k_star > cap;
    let count = if approximate { cap } else { k_star.max(k) };
    let (top, truncated) = candidates_and_count(ctx, input, &owned, count, k)?;
    let me = ctx.rank();
    let entries = exact_entries(&top, |key| hash.owner(key) == me);
    let mut info = FreqInfo::new(FreqMode::Pec, rho);
    info.local_sample = size;
    info.k_star = Some(k_star);
    info.approximate = approximate;
    info.probably_exact = !approximate;
    info.truncated = truncated;
    Ok(FreqShare { entries, info })
}

fn merge_counts(a: &[CountedKey], b: &[CountedKey]) -> Vec<CountedKey> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].key.cmp(&b[j].key) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(CountedKey::new(a[i].key, a[i].count + b[j].count));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Centralized baseline on the same sample as [`pac_top_k`]: PE 0 collects
/// every aggregated local sample, one message per PE (`tree = false`) or
/// merged along a binomial tree (`tree = true`), and selects sequentially.
/// Only PE 0 reports entries and the `truncated` flag.
pub fn naive_top_k(ctx: &mut PeContext<'_>, input: &[u64], k: u64, budget: ErrorBudget, tree: bool) -> Result<FreqShare> {
    check_k(k)?;
    let mode = if tree { FreqMode::NaiveTree } else { FreqMode::Naive };
    let n = global_len(ctx, input.len());
    if n == 0 {
        return Ok(empty_share(mode));
    }
    let plan = pac_sample_size(n, k.min(n), budget)?;
    naive_with(ctx, input, k, plan.rho, tree)
}

/// [`naive_top_k`] with an explicit sampling rate.
pub fn naive_with(ctx: &mut PeContext<'_>, input: &[u64], k: u64, rho: f64, tree: bool) -> Result<FreqShare> {
    check_k(k)?;
    check_rho(rho)?;
    let mode = if tree { FreqMode::NaiveTree } else { FreqMode::Naive };
    let local = local_sample_counts(input, rho, ctx.rng());
    let size = local.iter().map(|c| c.count).sum();
    let p = ctx.p();
    let me = ctx.rank();
    let mut merged = Some(local);
    if tree {
        let mut step = 1;
        while step < p {
            if me % (2 * step) == step {
                ctx.send(me - step, merged.take().expect("still holding data"));
                break;
            }
            if me.is_multiple_of(2 * step) && me + step < p {
                let other: Vec<CountedKey> = ctx.recv(me + step);
                merged = Some(merge_counts(merged.as_deref().expect("still holding data"), &other));
            }
            step *= 2;
        }
    } else if me == 0 {
        for src in 1..p {
            let other: Vec<CountedKey> = ctx.recv(src);
            merged = Some(merge_counts(merged.as_deref().expect("coordinator data"), &other));
        }
    } else {
        ctx.send(0, merged.take().expect("local sample"));
    }
    let mut info = FreqInfo::new(mode, rho);
    info.local_sample = size;
    let mut entries = Vec::new();
    if me == 0 {
        let mut all = merged.expect("coordinator holds the merged sample");
        let want = (k as usize).min(all.len());
        if want > 0 && want < all.len() {
            all.select_nth_unstable_by(want - 1, by_count_desc);
            all.truncate(want);
        }
        all.sort_unstable_by(by_count_desc);
        let exact = rho >= 1.0;
        entries = all.iter().map(|c| FreqEntry { key: c.key, count: scale(c.count, rho), exact }).collect();
        info.truncated = (want as u64) < k;
    }
    Ok(FreqShare { entries, info })
}
