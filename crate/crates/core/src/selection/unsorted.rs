use crate::error::{param, Result};
use crate::sampling::bernoulli_skip_sample;
use crate::simnet::{FixedWords, MinSome, PeContext, Sum, TrafficClass};

/// Tuning knobs of [`select_unsorted`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectConfig {
    /// Expected sample size per level is `oversampling * sqrt(p)`.
    pub oversampling: f64,
    /// Exponent `d` in the pivot rank offset `sqrt(oversampling) * p^(1/4 + d)`.
    pub delta_exponent: f64,
    /// Remaining inputs of at most `max(4 sqrt(p), fallback_min)` elements
    /// are solved by gathering them on PE 0.
    pub fallback_min: u64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            oversampling: 16.0,
            delta_exponent: 1.0 / 6.0,
            fallback_min: 64,
        }
    }
}

/// This PE's share of the `k` smallest elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Selected<T> {
    pub items: Vec<T>,
    /// Partitioning levels executed, excluding the final base case.
    pub levels: u32,
}

/// Pivots chosen from a replicated sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotPlan<T> {
    pub sample_probability: f64,
    pub rank_offset: f64,
    pub sample_size: usize,
    /// `None` when the sample came out empty.
    pub pivots: Option<(T, T)>,
}

/// Draws a Bernoulli sample of expected size `oversampling * sqrt(p)`,
/// replicates it on all PEs and picks the pivots `l <= r` around the
/// expected position of rank `k` among `n` elements.
pub fn pick_pivots<T>(ctx: &mut PeContext<'_>, local: &[T], k: u64, n: u64, cfg: &SelectConfig) -> PivotPlan<T>
where
    T: Ord + Clone + FixedWords,
{
    let p = ctx.p() as f64;
    let prob = if n == 0 { 1.0 } else { (cfg.oversampling * p.sqrt() / n as f64).min(1.0) };
    let rank_offset = cfg.oversampling.sqrt() * p.powf(0.25 + cfg.delta_exponent);
    let picks = bernoulli_skip_sample(local.len(), prob, ctx.rng());
    let mine: Vec<T> = picks.into_iter().map(|i| local[i].clone()).collect();
    let mut sample = ctx.all_gather_concat(mine);
    sample.sort_unstable();
    let size = sample.len();
    let pivots = (size > 0).then(|| {
        let center = (k as f64 * size as f64 / n.max(1) as f64).floor();
        let off = rank_offset.ceil();
        let clamp = |r: f64| (r.max(1.0).min(size as f64)) as usize - 1;
        let (a, b) = (clamp(center - off), clamp(center + off));
        let (a, b) = (a.min(b), a.max(b));
        (sample[a].clone(), sample[b].clone())
    });
    PivotPlan {
        sample_probability: prob,
        rank_offset,
        sample_size: size,
        pivots,
    }
}

/// Finds the `k` globally smallest elements of an unsorted distributed input.
///
/// Elements must be unique across all PEs. Each PE returns the part of the
/// answer it already holds; no input element changes PE.
pub fn select_unsorted<T>(ctx: &mut PeContext<'_>, local: Vec<T>, k: u64, cfg: &SelectConfig) -> Result<Selected<T>>
where
    T: Ord + Clone + FixedWords,
{
    let n = ctx.with_traffic(TrafficClass::Control, |ctx| ctx.all_reduce(local.len() as u64, Sum));
    if k > n {
        return param(format!("k = {k} exceeds the global input size {n}"));
    }
    let p = ctx.p() as f64;
    let fallback = ((4.0 * p.sqrt()).ceil() as u64).max(cfg.fallback_min);
    let mut taken = Vec::new();
    let mut cur = local;
    let mut k_rem = k;
    let mut n_rem = n;
    let mut levels = 0;
    let mut stalled = false;
    loop {
        if k_rem == 0 {
            break;
        }
        if k_rem == n_rem {
            taken.append(&mut cur);
            break;
        }
        if k_rem == 1 {
            let mine = cur.iter().min().cloned().map(|m| (m, ctx.rank() as u64));
            let best = ctx.all_reduce(mine, MinSome);
            if let Some((m, owner)) = best {
                if owner == ctx.rank() as u64 {
                    taken.push(m);
                }
            }
            break;
        }
        if n_rem <= fallback || stalled {
            let threshold = gather_threshold(ctx, &cur, k_rem);
            taken.extend(cur.into_iter().filter(|e| *e <= threshold));
            break;
        }
        levels += 1;
        let plan = pick_pivots(ctx, &cur, k_rem, n_rem, cfg);
        let Some((l, r)) = plan.pivots else {
            continue;
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut c = Vec::new();
        for e in cur {
            if e < l {
                a.push(e);
            } else if e > r {
                c.push(e);
            } else {
                b.push(e);
            }
        }
        let counts = ctx.with_traffic(TrafficClass::Control, |ctx| {
            ctx.all_reduce(vec![a.len() as u64, b.len() as u64], Sum)
        });
        let (na, nb) = (counts[0], counts[1]);
        if na >= k_rem {
            cur = a;
            n_rem = na;
        } else if na + nb < k_rem {
            taken.append(&mut a);
            taken.append(&mut b);
            cur = c;
            k_rem -= na + nb;
            n_rem -= na + nb;
        } else {
            stalled = nb == n_rem;
            taken.append(&mut a);
            cur = b;
            k_rem -= na;
            n_rem = nb;
        }
    }
    Ok(Selected { items: taken, levels })
}

/// Gathers the remaining elements on PE 0, which broadcasts the element of
/// rank `k` among them.
fn gather_threshold<T>(ctx: &mut PeContext<'_>, cur: &[T], k: u64) -> T
where
    T: Ord + Clone + FixedWords,
{
    let all = ctx.gather(0, cur.to_vec());
    let threshold = all.map(|parts| {
        let mut v: Vec<T> = parts.into_iter().flatten().collect();
        let (_, kth, _) = v.select_nth_unstable((k - 1) as usize);
        kth.clone()
    });
    ctx.broadcast(0, threshold)
}
