use rand::Rng;

use super::RankedSeq;
use crate::error::{param, Result};
use crate::sampling::geometric_unchecked;
use crate::simnet::{MaxSome, MinSome, PeContext, Sum, TrafficClass};

/// Result of [`ms_select`].
#[derive(Debug, Clone, PartialEq)]
pub struct MsSelected<T> {
    /// The element of global rank `k`.
    pub element: T,
    /// Number of local items `<= element`; these sum to `k` over all PEs.
    pub local_count: usize,
    pub rounds: u32,
}

/// Finds the element of global rank `k` (1-based) in locally sorted
/// sequences by quickselect with a shared random pivot.
pub fn ms_select<S>(ctx: &mut PeContext<'_>, seq: &S, k: u64) -> Result<MsSelected<S::Item>>
where
    S: RankedSeq + ?Sized,
{
    let len = seq.len();
    let sizes = ctx.with_traffic(TrafficClass::Control, |ctx| {
        ctx.all_reduce(vec![len as u64, len.min(k as usize) as u64], Sum)
    });
    if k == 0 || k > sizes[0] {
        return param(format!("rank {k} out of range 1..={}", sizes[0]));
    }
    // Only the first k items of each sequence can have rank <= k.
    let mut lo = 0;
    let mut hi = len.min(k as usize);
    let mut total = sizes[1];
    let mut k_rem = k;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let size = (hi - lo) as u64;
        let offset = ctx
            .with_traffic(TrafficClass::Control, |ctx| ctx.exscan(size, Sum))
            .unwrap_or(0);
        let j = ctx.shared_rng().random_range(0..total);
        let mine = (offset <= j && j < offset + size).then(|| seq.at(lo + (j - offset) as usize));
        let v = ctx
            .all_reduce(mine, MinSome)
            .expect("pivot index lies inside some PE's window");
        let less = seq.count_less(&v).clamp(lo, hi) - lo;
        let cnt = ctx.with_traffic(TrafficClass::Control, |ctx| ctx.all_reduce(less as u64, Sum));
        if cnt + 1 == k_rem {
            let local_count = seq.count_le(&v).clamp(lo, hi);
            return Ok(MsSelected { element: v, local_count, rounds });
        }
        if cnt >= k_rem {
            hi = lo + less;
            total = cnt;
        } else {
            // v itself has rank cnt + 1 < k_rem and is dropped as well.
            lo = seq.count_le(&v).clamp(lo, hi);
            k_rem -= cnt + 1;
            total -= cnt + 1;
        }
    }
}

/// Result of [`ams_select`].
#[derive(Debug, Clone, PartialEq)]
pub struct AmsSelected<T> {
    /// Length of the local prefix that belongs to the selection.
    pub local_count: usize,
    /// Total selection size `k`, between `k_lo` and `k_hi`.
    pub global_count: u64,
    /// Largest selected element.
    pub threshold: Option<T>,
    pub rounds: u32,
}

/// Selects the `k` globally smallest items for some `k_lo <= k <= k_hi`,
/// computing the global size first.
pub fn ams_select<S>(ctx: &mut PeContext<'_>, seq: &S, k_lo: u64, k_hi: u64, d: usize) -> Result<AmsSelected<S::Item>>
where
    S: RankedSeq + ?Sized,
{
    let n = ctx.with_traffic(TrafficClass::Control, |ctx| ctx.all_reduce(seq.len() as u64, Sum));
    ams_select_with_total(ctx, seq, k_lo, k_hi, n, d)
}

/// As [`ams_select`] with the global size `n` supplied by the caller.
///
/// Every round draws `d` independent geometric probes per PE. Depending on
/// whether the target range is closer to the start or the end of the
/// remaining input, each probe is the local item at that rank from the front
/// (combined with a minimum) or from the back (combined with a maximum).
/// The round succeeds if some probe's exact global rank falls into the
/// range; otherwise the search continues between the largest probe below
/// and the smallest probe above it.
pub fn ams_select_with_total<S>(
    ctx: &mut PeContext<'_>,
    seq: &S,
    k_lo: u64,
    k_hi: u64,
    n: u64,
    d: usize,
) -> Result<AmsSelected<S::Item>>
where
    S: RankedSeq + ?Sized,
{
    if k_lo == 0 || k_lo > k_hi || k_hi > n {
        return param(format!("need 1 <= k_lo <= k_hi <= n, got {k_lo}, {k_hi}, {n}"));
    }
    if d == 0 {
        return param("batch width d must be at least 1");
    }
    let (mut lo, mut hi) = (0usize, seq.len());
    let (mut a, mut b, mut m) = (k_lo, k_hi, n);
    let mut base = 0u64;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let size = hi - lo;
        let width = (b - a + 1) as f64;
        let from_front = a < m - b;
        let q = if from_front {
            -((((a - 1) as f64) / b as f64).ln() / width).exp_m1()
        } else {
            -((((m - b) as f64) / (m - a + 1) as f64).ln() / width).exp_m1()
        };
        let probes: Vec<Option<S::Item>> = (0..d)
            .map(|_| {
                let x = geometric_unchecked(q, ctx.rng());
                if x > size as u64 {
                    None
                } else if from_front {
                    Some(seq.at(lo + x as usize - 1))
                } else {
                    Some(seq.at(hi - x as usize))
                }
            })
            .collect();
        let pivots = if from_front {
            ctx.all_reduce(probes, MinSome)
        } else {
            ctx.all_reduce(probes, MaxSome)
        };
        if pivots.iter().all(Option::is_none) {
            continue;
        }
        let local: Vec<u64> = pivots
            .iter()
            .map(|v| match v {
                Some(v) => (seq.count_le(v).clamp(lo, hi) - lo) as u64,
                None if from_front => size as u64,
                None => 0,
            })
            .collect();
        let global = ctx.with_traffic(TrafficClass::Control, |ctx| ctx.all_reduce(local.clone(), Sum));

        if let Some(i) = (0..d).find(|&i| pivots[i].is_some() && a <= global[i] && global[i] <= b) {
            return Ok(AmsSelected {
                local_count: lo + local[i] as usize,
                global_count: base + global[i],
                threshold: pivots[i].clone(),
                rounds,
            });
        }
        let under = (0..d).filter(|&i| global[i] < a).max_by_key(|&i| global[i]);
        let over = (0..d).filter(|&i| global[i] > b).min_by_key(|&i| global[i]);
        let old_lo = lo;
        if let Some(i) = over {
            hi = old_lo + local[i] as usize;
            m = global[i];
        }
        if let Some(i) = under {
            let g = global[i];
            lo = old_lo + local[i] as usize;
            a -= g;
            b -= g;
            m -= g;
            base += g;
        }
    }
}
