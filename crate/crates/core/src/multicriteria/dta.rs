use std::collections::HashSet;

use rand::Rng;

use super::{Ranked, ScoreLists, ScoringFn};
use crate::error::{param, Result};
use crate::selection::{ams_select_with_total, select_unsorted, SelectConfig};
use crate::simnet::{MaxSome, PeContext, Sum, TrafficClass};

/// How the per-list hit estimate is formed from a sample of `y` prefix
/// entries with `R` rejections and `H` counted hits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimatorForm {
    /// `|L'| * H / y`. Rejected samples already count as non-hits, so this
    /// is unbiased for the number of objects whose first prefix is `L'`
    /// and that reach the threshold.
    #[default]
    Unbiased,
    /// `|L'| * (1 - R/y) * H / y`. Scales the rejections out a second time
    /// and underestimates whenever prefixes overlap.
    DoubleRejection,
}

/// Tuning knobs of [`dta_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DtaConfig {
    /// Probe `K`, `2K` and `4K` in every round instead of only `K`.
    pub multi_probe: bool,
    pub estimator: EstimatorForm,
    /// Probes per round of the approximate selection.
    pub ams_batch: usize,
}

impl Default for DtaConfig {
    fn default() -> Self {
        DtaConfig { multi_probe: false, estimator: EstimatorForm::Unbiased, ams_batch: 1 }
    }
}

/// Outcome of [`dta_scan`] on one PE.
#[derive(Debug, Clone, PartialEq)]
pub struct DtaScan {
    pub t_min: u64,
    /// Local prefix length of every list.
    pub cuts: Vec<usize>,
    /// Value of `K` in the terminating round.
    pub k_rows: u64,
    /// Global hit estimate of the terminating round.
    pub estimate: f64,
    pub rounds: u32,
    /// The prefixes are the full lists and the estimate stayed below `2k`.
    pub exhausted: bool,
}

impl DtaScan {
    pub fn prefix<'a>(&self, lists: &'a ScoreLists, i: usize) -> &'a [Ranked] {
        &lists.list(i)[..self.cuts[i]]
    }
}

/// Sample size per list for a given `K`.
pub fn samples_per_list(k_rows: u64) -> usize {
    let y = (2.0 * ((k_rows + 2) as f64).log2()).ceil() as usize;
    y.max(8)
}

fn prefix_sets(lists: &ScoreLists, cuts: &[usize]) -> Vec<HashSet<u64>> {
    cuts.iter()
        .enumerate()
        .map(|(i, &c)| lists.list(i)[..c].iter().map(|r| r.id).collect())
        .collect()
}

/// Local hit estimate `sum_i l_i` over the prefixes `cuts` of this PE's
/// lists, sampling `y` entries per prefix with replacement. A sample whose
/// object also lies in an earlier prefix is rejected.
pub fn hit_estimate<R: Rng + ?Sized>(
    lists: &ScoreLists,
    cuts: &[usize],
    t: &ScoringFn,
    t_min: u64,
    y: usize,
    form: EstimatorForm,
    rng: &mut R,
) -> f64 {
    let sets = prefix_sets(lists, cuts);
    let mut total = 0.0;
    for (i, &len) in cuts.iter().enumerate() {
        if len == 0 || y == 0 {
            continue;
        }
        let (mut rejected, mut hits) = (0usize, 0usize);
        for _ in 0..y {
            let id = lists.list(i)[rng.random_range(0..len)].id;
            if sets[..i].iter().any(|s| s.contains(&id)) {
                rejected += 1;
            } else if lists.relevance(id, t).expect("listed objects are indexed") >= t_min {
                hits += 1;
            }
        }
        let y = y as f64;
        let hit_rate = hits as f64 / y;
        total += match form {
            EstimatorForm::Unbiased => len as f64 * hit_rate,
            EstimatorForm::DoubleRejection => len as f64 * (1.0 - rejected as f64 / y) * hit_rate,
        };
    }
    total
}

/// Number of distinct local objects in the prefixes with relevance at least
/// `t_min`.
pub fn exact_hit_count(lists: &ScoreLists, cuts: &[usize], t: &ScoringFn, t_min: u64) -> u64 {
    let mut union = HashSet::new();
    for set in prefix_sets(lists, cuts) {
        union.extend(set);
    }
    union
        .into_iter()
        .filter(|&id| lists.relevance(id, t).expect("listed objects are indexed") >= t_min)
        .count() as u64
}

struct Probe {
    cuts: Vec<usize>,
    t_min: u64,
    full: bool,
}

fn probe(
    ctx: &mut PeContext<'_>,
    lists: &ScoreLists,
    t: &ScoringFn,
    k_rows: u64,
    n: u64,
    d: usize,
) -> Result<Probe> {
    let m = lists.m();
    let mut cuts = Vec::with_capacity(m);
    let mut x = Vec::with_capacity(m);
    if k_rows >= n {
        let worst: Vec<Option<Ranked>> = (0..m).map(|i| lists.list(i).last().copied()).collect();
        let worst = ctx.all_reduce(worst, MaxSome);
        for (i, w) in worst.into_iter().enumerate() {
            cuts.push(lists.list(i).len());
            x.push(w.expect("n > 0").score());
        }
        return Ok(Probe { cuts, t_min: t.eval(&x), full: true });
    }
    for i in 0..m {
        let sel = ams_select_with_total(ctx, lists.list(i), k_rows, (2 * k_rows).min(n), n, d)?;
        cuts.push(sel.local_count);
        x.push(sel.threshold.expect("selection is nonempty").score());
    }
    Ok(Probe { cuts, t_min: t.eval(&x), full: false })
}

/// Finds per-list prefixes whose union contains the `k` most relevant
/// objects with high probability.
///
/// Starting from `K = ⌈k/(mp)⌉`, every round cuts each list after between
/// `K` and `2K` global entries, sets `t_min` to `t` of the cut scores and
/// estimates the number of hits by sampling. `K` doubles until the
/// estimate reaches `2k`.
pub fn dta_scan(ctx: &mut PeContext<'_>, lists: &ScoreLists, t: &ScoringFn, k: u64, cfg: &DtaConfig) -> Result<DtaScan> {
    t.check(lists.m())?;
    let n = ctx.with_traffic(TrafficClass::Control, |ctx| ctx.all_reduce(lists.len() as u64, Sum));
    if k == 0 || k > n {
        return param(format!("need 1 <= k <= {n}, got {k}"));
    }
    let m = lists.m() as u64;
    let mut k_rows = k.div_ceil(m * ctx.p() as u64);
    let widths: &[u64] = if cfg.multi_probe { &[1, 2, 4] } else { &[1] };
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut probes = Vec::with_capacity(widths.len());
        for &w in widths {
            let kr = k_rows * w;
            let pr = probe(ctx, lists, t, kr, n, cfg.ams_batch)?;
            let y = samples_per_list(kr);
            let local = hit_estimate(lists, &pr.cuts, t, pr.t_min, y, cfg.estimator, ctx.rng());
            let full = pr.full;
            probes.push((kr, pr, local));
            if full {
                break;
            }
        }
        let local: Vec<f64> = probes.iter().map(|p| p.2).collect();
        let global = ctx.with_traffic(TrafficClass::Control, |ctx| ctx.all_reduce(local, Sum));
        let pick = global.iter().position(|&h| h >= 2.0 * k as f64);
        let last = probes.len() - 1;
        let done = pick.or(probes[last].1.full.then_some(last));
        if let Some(j) = done {
            let (kr, pr, _) = probes.swap_remove(j);
            return Ok(DtaScan {
                t_min: pr.t_min,
                exhausted: pick.is_none(),
                cuts: pr.cuts,
                k_rows: kr,
                estimate: global[j],
                rounds,
            });
        }
        k_rows *= 2 * widths[last];
    }
}

/// Result of [`dta_finish`] on one PE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DtaFinish {
    /// This PE's share of the selected objects, best first.
    pub top: Vec<Ranked>,
    /// Distinct hits over all PEs.
    pub hits: u64,
    /// Fewer than `k` hits; `top` holds all of them.
    pub shortfall: bool,
}

/// Scores the distinct objects of the local prefixes, keeps those reaching
/// `t_min` and selects the `k` most relevant of them globally.
pub fn dta_finish(ctx: &mut PeContext<'_>, lists: &ScoreLists, t: &ScoringFn, scan: &DtaScan, k: u64) -> Result<DtaFinish> {
    let mut seen = HashSet::new();
    let mut hits = Vec::new();
    for i in 0..lists.m() {
        for r in scan.prefix(lists, i) {
            if seen.insert(r.id) {
                let s = lists.relevance(r.id, t).expect("listed objects are indexed");
                if s >= scan.t_min {
                    hits.push(Ranked::new(s, r.id));
                }
            }
        }
    }
    let total = ctx.with_traffic(TrafficClass::Control, |ctx| ctx.all_reduce(hits.len() as u64, Sum));
    let want = k.min(total);
    let mut top = select_unsorted(ctx, hits, want, &SelectConfig::default())?.items;
    top.sort_unstable();
    Ok(DtaFinish { top, hits: total, shortfall: total < k })
}
