//! Top-k keys by summed value.
//!
//! Every PE first aggregates its `(key, value)` pairs into a table of local
//! sums. A key with local sum `v` then contributes `floor(v / v_avg)`
//! samples plus one more with probability equal to the fractional part,
//! where `v_avg = total_weight / s` for a global sample size `s`. From there
//! the sample counts are routed and selected exactly as in
//! [`crate::freq`].

use rand::Rng;

use crate::error::{param, Result};
use crate::freq::{select_top_counts, KeyHash};
use crate::sampling::{ec_plan, weighted_sample_count, ErrorBudget};
use crate::simnet::{hypercube_combine_route, CountedKey, FixedWords, Payload, PeContext, Sum, TrafficClass};

/// A PE whose local weight exceeds this multiple of the average is
/// reported as skewed.
pub const SKEW_FACTOR: f64 = 2.0;

/// A key with a non-negative weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightedKey {
    pub key: u64,
    pub value: u64,
}

impl WeightedKey {
    pub fn new(key: u64, value: u64) -> Self {
        WeightedKey { key, value }
    }
}

impl Payload for WeightedKey {
    fn words(&self) -> usize {
        2
    }
}

impl FixedWords for WeightedKey {
    const WORDS: usize = 2;
}

/// Exact per-key sums of one PE's input, sorted by key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LocalSums {
    entries: Vec<WeightedKey>,
}

impl LocalSums {
    pub fn get(&self, key: u64) -> u64 {
        self.entries.binary_search_by_key(&key, |e| e.key).map_or(0, |i| self.entries[i].value)
    }

    pub fn entries(&self) -> &[WeightedKey] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.value).sum()
    }
}

pub fn local_aggregate(input: &[WeightedKey]) -> LocalSums {
    let mut table = std::collections::HashMap::new();
    for w in input {
        *table.entry(w.key).or_insert(0u64) += w.value;
    }
    let mut entries: Vec<WeightedKey> = table.into_iter().map(|(k, v)| WeightedKey::new(k, v)).collect();
    entries.sort_unstable();
    LocalSums { entries }
}

/// Global sample size for an `(eps, delta)`-approximation over `n` input
/// pairs on `p` PEs: `s = 1/eps * sqrt(2 p ln(2n/delta))`.
pub fn sum_sample_size(n: u64, p: usize, budget: ErrorBudget) -> f64 {
    let ErrorBudget { eps, delta } = budget;
    (2.0 * p as f64 * (2.0 * n.max(1) as f64 / delta).ln()).sqrt() / eps
}

/// Samples every local sum with [`weighted_sample_count`]. Returns the
/// non-zero sample counts by key and the largest deviation
/// `|samples - v / v_avg|` seen.
pub fn sample_local<R: Rng + ?Sized>(sums: &LocalSums, v_avg: f64, rng: &mut R) -> Result<(Vec<CountedKey>, f64)> {
    let mut out = Vec::new();
    let mut dev: f64 = 0.0;
    for e in &sums.entries {
        let c = weighted_sample_count(e.value as f64, v_avg, rng)?;
        dev = dev.max((c as f64 - e.value as f64 / v_avg).abs());
        if c > 0 {
            out.push(CountedKey::new(e.key, c));
        }
    }
    Ok((out, dev))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SumMode {
    Pac,
    Ec,
}

/// A reported key with its estimated or exact sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SumEntry {
    pub key: u64,
    pub sum: u64,
    pub exact: bool,
}

/// Run parameters and diagnostics. `local_samples` and
/// `max_local_deviation` are per PE, everything else is global.
#[derive(Debug, Clone, PartialEq)]
pub struct SumInfo {
    pub mode: SumMode,
    pub total_weight: u64,
    /// Sample size demanded by the formula.
    pub sample_size: f64,
    pub v_avg: f64,
    pub local_samples: u64,
    pub max_local_deviation: f64,
    pub k_star: Option<u64>,
    /// Some PE holds more than [`SKEW_FACTOR`] times the average weight,
    /// so the per-PE sample volume bound does not apply.
    pub skewed: bool,
    pub truncated: bool,
}

impl SumInfo {
    fn new(mode: SumMode) -> Self {
        SumInfo {
            mode,
            total_weight: 0,
            sample_size: 0.0,
            v_avg: 0.0,
            local_samples: 0,
            max_local_deviation: 0.0,
            k_star: None,
            skewed: false,
            truncated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumShare {
    pub entries: Vec<SumEntry>,
    pub info: SumInfo,
}

/// The assembled answer, largest sum first.
#[derive(Debug, Clone, PartialEq)]
pub struct SumResult {
    pub top: Vec<SumEntry>,
    pub info: SumInfo,
}

impl SumResult {
    /// Concatenates the shares of all PEs. `info` comes from PE 0 with the
    /// sample counts summed and the deviation maximised.
    pub fn from_shares(shares: &[SumShare]) -> Self {
        let mut top: Vec<SumEntry> = shares.iter().flat_map(|s| s.entries.iter().copied()).collect();
        top.sort_by(|a, b| b.sum.cmp(&a.sum).then(a.key.cmp(&b.key)));
        let mut info = shares.first().map_or_else(|| SumInfo::new(SumMode::Pac), |s| s.info.clone());
        info.local_samples = shares.iter().map(|s| s.info.local_samples).sum();
        info.max_local_deviation = shares.iter().map(|s| s.info.max_local_deviation).fold(0.0, f64::max);
        SumResult { top, info }
    }

    pub fn keys(&self) -> Vec<u64> {
        self.top.iter().map(|e| e.key).collect()
    }
}

struct Globals {
    pairs: u64,
    weight: u64,
    max_weight: u64,
    distinct: u64,
}

fn globals(ctx: &mut PeContext<'_>, pairs: usize, sums: &LocalSums) -> Globals {
    let local = vec![pairs as u64, sums.total(), sums.total(), sums.len() as u64];
    let g = ctx.with_traffic(TrafficClass::Control, |ctx| {
        ctx.all_reduce(local, |a: &Vec<u64>, b: &Vec<u64>| vec![a[0] + b[0], a[1] + b[1], a[2].max(b[2]), a[3] + b[3]])
    });
    Globals { pairs: g[0], weight: g[1], max_weight: g[2], distinct: g[3] }
}

fn check_k(k: u64) -> Result<()> {
    if k == 0 {
        return param("k must be at least 1");
    }
    Ok(())
}

fn prepare(ctx: &mut PeContext<'_>, input: &[WeightedKey], mode: SumMode) -> (LocalSums, Globals, SumInfo) {
    let sums = local_aggregate(input);
    let g = globals(ctx, input.len(), &sums);
    let mut info = SumInfo::new(mode);
    info.total_weight = g.weight;
    info.skewed = g.max_weight as f64 > SKEW_FACTOR * g.weight as f64 / ctx.p() as f64;
    info.truncated = g.weight == 0;
    (sums, g, info)
}

/// Samples with sample size `s` and routes the counts to their hash
/// owners. `v_avg` is never below 1, so integer weights are sampled
/// exactly once the sample would exceed the total weight.
fn sample_and_route(
    ctx: &mut PeContext<'_>,
    sums: &LocalSums,
    s: f64,
    info: &mut SumInfo,
) -> Result<(Vec<CountedKey>, KeyHash)> {
    let v_avg = (info.total_weight as f64 / s).max(1.0);
    let (local, dev) = sample_local(sums, v_avg, ctx.rng())?;
    info.sample_size = s;
    info.v_avg = v_avg;
    info.local_samples = local.iter().map(|c| c.count).sum();
    info.max_local_deviation = dev;
    let hash = KeyHash::shared(ctx);
    let owned = hypercube_combine_route(ctx, local, |k| hash.owner(k));
    Ok((owned, hash))
}

/// `(eps, delta)`-approximate top-k keys by summed value. Estimates are
/// sample counts times `v_avg`.
pub fn sum_pac_top_k(ctx: &mut PeContext<'_>, input: &[WeightedKey], k: u64, budget: ErrorBudget) -> Result<SumShare> {
    check_k(k)?;
    let (sums, g, info) = prepare(ctx, input, SumMode::Pac);
    if g.weight == 0 {
        return Ok(SumShare { entries: Vec::new(), info });
    }
    let s = sum_sample_size(g.pairs, ctx.p(), budget);
    sum_pac_with(ctx, &sums, k, s, info)
}

fn sum_pac_with(ctx: &mut PeContext<'_>, sums: &LocalSums, k: u64, s: f64, mut info: SumInfo) -> Result<SumShare> {
    let (owned, _) = sample_and_route(ctx, sums, s, &mut info)?;
    let (top, total) = select_top_counts(ctx, &owned, k)?;
    let exact = info.v_avg == 1.0;
    let entries = top
        .iter()
        .map(|c| SumEntry { key: c.key, sum: (c.count as f64 * info.v_avg).round() as u64, exact })
        .collect();
    info.truncated = total < k;
    Ok(SumShare { entries, info })
}

/// As [`sum_pac_top_k`] with an explicit sample size `s`.
pub fn sum_pac_with_sample(ctx: &mut PeContext<'_>, input: &[WeightedKey], k: u64, s: f64) -> Result<SumShare> {
    check_k(k)?;
    if !(s > 0.0) {
        return param(format!("sample size must be positive, got {s}"));
    }
    let (sums, g, info) = prepare(ctx, input, SumMode::Pac);
    if g.weight == 0 {
        return Ok(SumShare { entries: Vec::new(), info });
    }
    sum_pac_with(ctx, &sums, k, s, info)
}

/// Top-k keys by summed value with exact sums: the `k*` most sampled keys
/// are looked up in every PE's local table and summed with one all-reduce.
///
/// `k*` and the sample size follow the exact-counting formulas of
/// [`ec_plan`] with the number of input objects replaced by the number of
/// distinct keys (bounded above by the sum of the local table sizes).
pub fn sum_ec_top_k(ctx: &mut PeContext<'_>, input: &[WeightedKey], k: u64, budget: ErrorBudget) -> Result<SumShare> {
    check_k(k)?;
    let (sums, g, info) = prepare(ctx, input, SumMode::Ec);
    if g.weight == 0 {
        return Ok(SumShare { entries: Vec::new(), info });
    }
    let plan = ec_plan(g.distinct, k.min(g.distinct), ctx.p(), budget)?;
    let k_star = plan.k_star.expect("ec plans carry k*");
    sum_ec_with(ctx, &sums, k, plan.required, k_star, info)
}

/// Exact summation with an explicit sample size and candidate count.
pub fn sum_ec_with_sample(ctx: &mut PeContext<'_>, input: &[WeightedKey], k: u64, s: f64, k_star: u64) -> Result<SumShare> {
    check_k(k)?;
    if !(s > 0.0) {
        return param(format!("sample size must be positive, got {s}"));
    }
    let (sums, g, info) = prepare(ctx, input, SumMode::Ec);
    if g.weight == 0 {
        return Ok(SumShare { entries: Vec::new(), info });
    }
    sum_ec_with(ctx, &sums, k, s, k_star, info)
}

fn sum_ec_with(
    ctx: &mut PeContext<'_>,
    sums: &LocalSums,
    k: u64,
    s: f64,
    k_star: u64,
    mut info: SumInfo,
) -> Result<SumShare> {
    let k_star = k_star.max(k);
    let (owned, hash) = sample_and_route(ctx, sums, s, &mut info)?;
    let (cands, total) = select_top_counts(ctx, &owned, k_star)?;
    let keys = ctx.all_gather_concat(cands.iter().map(|c| c.key).collect::<Vec<u64>>());
    let local: Vec<u64> = keys.iter().map(|&key| sums.get(key)).collect();
    let exact = ctx.all_reduce(local, Sum);
    let mut all: Vec<WeightedKey> = keys.iter().zip(&exact).map(|(&key, &v)| WeightedKey::new(key, v)).collect();
    all.sort_unstable_by(|a, b| b.value.cmp(&a.value).then(a.key.cmp(&b.key)));
    all.truncate(k as usize);
    let me = ctx.rank();
    let entries = all
        .iter()
        .filter(|e| hash.owner(e.key) == me)
        .map(|e| SumEntry { key: e.key, sum: e.value, exact: true })
        .collect();
    info.k_star = Some(k_star);
    info.truncated = total < k;
    Ok(SumShare { entries, info })
}

#[cfg(test)]
mod tests;
