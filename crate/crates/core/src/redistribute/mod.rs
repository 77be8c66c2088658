//! Load balancing to at most `ceil(n/p)` elements per PE.
//!
//! PEs above the balanced share only send, PEs at or below it only receive.
//! Surplus and deficit prefix sums are merged with Batcher's odd-even merging
//! network; in the merged order, consecutive endpoints delimit pieces that
//! travel from the next sender to the next receiver. Planning traffic is
//! charged as [`TrafficClass::Control`], element transfers as payload.

use crate::simnet::{Payload, PeContext, TrafficClass};

/// One of the two sorted sequences being merged. On equal keys, `First`
/// precedes `Second`; within a group, lower PE ranks come first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MergeGroup {
    First,
    Second,
}

/// An entry of the merging network. Padding sorts after every real entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Slot {
    pad: bool,
    key: u64,
    group: MergeGroup,
    origin: usize,
}

impl Slot {
    const PAD: Slot = Slot { pad: true, key: u64::MAX, group: MergeGroup::Second, origin: usize::MAX };
}

impl Payload for Slot {
    fn words(&self) -> usize {
        3
    }
}

fn floor_pow2(p: usize) -> usize {
    1 << (usize::BITS - 1 - p.leading_zeros())
}

/// Delivers every item to the PE named by its target along hypercube
/// dimensions. PEs beyond the largest power of two relay through `r - P'`.
/// One message per partner per round, possibly empty.
fn permute<T: Payload + Clone>(ctx: &PeContext<'_>, items: Vec<(usize, T)>) -> Vec<(usize, T)> {
    let p = ctx.p();
    let me = ctx.rank();
    let q = floor_pow2(p);
    let relay = |t: usize| if t >= q { t - q } else { t };
    let mut held = items;
    if me >= q {
        ctx.send(me - q, held);
        held = Vec::new();
    } else if me + q < p {
        held.extend(ctx.recv::<Vec<(usize, T)>>(me + q));
    }
    if me < q {
        let mut bit = 1;
        while bit < q {
            let partner = me ^ bit;
            let (go, stay): (Vec<_>, Vec<_>) = held.into_iter().partition(|(t, _)| (relay(*t) ^ me) & bit != 0);
            ctx.send(partner, go);
            held = stay;
            held.extend(ctx.recv::<Vec<(usize, T)>>(partner));
            bit <<= 1;
        }
        if me + q < p {
            let (out, stay): (Vec<_>, Vec<_>) = held.into_iter().partition(|(t, _)| *t >= q);
            ctx.send(me + q, out);
            held = stay;
        }
    } else {
        held = ctx.recv(me - q);
    }
    held
}

/// Comparator rounds of Batcher's odd-even network merging two sorted
/// halves of length `half` (a power of two).
pub fn odd_even_merge_rounds(half: usize) -> Vec<Vec<(usize, usize)>> {
    let n = 2 * half;
    let mut rounds = Vec::new();
    let mut k = half;
    while k >= 1 {
        let mut cmp = Vec::new();
        let mut j = k % half;
        while j + k < n {
            for i in 0..k.min(n - j - k) {
                if (i + j) / n == (i + j + k) / n {
                    cmp.push((i + j, i + j + k));
                }
            }
            j += 2 * k;
        }
        rounds.push(cmp);
        k /= 2;
    }
    rounds
}

/// Compare-exchange on the hosted ends of each comparator. Returns, per
/// comparator touching this PE, whether it swapped.
fn run_network(
    ctx: &PeContext<'_>,
    rounds: &[Vec<(usize, usize)>],
    vals: &mut std::collections::HashMap<usize, Slot>,
) -> Vec<Vec<bool>> {
    let (p, me) = (ctx.p(), ctx.rank());
    let host = |v: usize| v % p;
    let mut swaps = Vec::with_capacity(rounds.len());
    for round in rounds {
        let mine: Vec<(usize, usize)> =
            round.iter().copied().filter(|&(a, b)| host(a) == me || host(b) == me).collect();
        for &(a, b) in &mine {
            if host(a) == me && host(b) != me {
                ctx.send(host(b), vals[&a]);
            } else if host(b) == me && host(a) != me {
                ctx.send(host(a), vals[&b]);
            }
        }
        let mut sw = Vec::with_capacity(mine.len());
        for &(a, b) in &mine {
            let (x, y) = match (host(a) == me, host(b) == me) {
                (true, true) => (vals[&a], vals[&b]),
                (true, false) => (vals[&a], ctx.recv::<Slot>(host(b))),
                _ => (ctx.recv::<Slot>(host(a)), vals[&b]),
            };
            let swap = x > y;
            if host(a) == me {
                vals.insert(a, x.min(y));
            }
            if host(b) == me {
                vals.insert(b, x.max(y));
            }
            sw.push(swap);
        }
        swaps.push(sw);
    }
    swaps
}

/// Undoes the recorded swaps on position tags, so that each initial
/// position ends up holding the final position of its entry.
fn unwind(ctx: &PeContext<'_>, rounds: &[Vec<(usize, usize)>], swaps: &[Vec<bool>], tags: &mut std::collections::HashMap<usize, u64>) {
    let (p, me) = (ctx.p(), ctx.rank());
    let host = |v: usize| v % p;
    for (round, sw) in rounds.iter().zip(swaps).rev() {
        let mine: Vec<(usize, usize)> = round
            .iter()
            .copied()
            .filter(|&(a, b)| host(a) == me || host(b) == me)
            .zip(sw)
            .filter(|(_, &s)| s)
            .map(|(c, _)| c)
            .collect();
        for &(a, b) in &mine {
            if host(a) == me && host(b) != me {
                ctx.send(host(b), tags[&a]);
            } else if host(b) == me && host(a) != me {
                ctx.send(host(a), tags[&b]);
            }
        }
        for &(a, b) in &mine {
            match (host(a) == me, host(b) == me) {
                (true, true) => {
                    let (x, y) = (tags[&a], tags[&b]);
                    tags.insert(a, y);
                    tags.insert(b, x);
                }
                (true, false) => {
                    tags.insert(a, ctx.recv(host(b)));
                }
                _ => {
                    tags.insert(b, ctx.recv(host(a)));
                }
            }
        }
    }
}

/// Merges and returns this PE's merged rank together with the entry that
/// ends up at position `rank()` of the merged order.
fn merge_layout(ctx: &PeContext<'_>, key: u64, group: MergeGroup) -> (usize, Slot) {
    let (p, me) = (ctx.p(), ctx.rank());
    let is_first = u64::from(group == MergeGroup::First);
    let upto = ctx.scan(vec![is_first, 1 - is_first], crate::simnet::Sum);
    let totals = ctx.all_reduce(vec![is_first, 1 - is_first], crate::simnet::Sum);
    let half = (totals[0].max(totals[1]).max(1) as usize).next_power_of_two();
    let n = 2 * half;
    let start = match group {
        MergeGroup::First => upto[0] as usize - 1,
        MergeGroup::Second => half + upto[1] as usize - 1,
    };
    let slot = Slot { pad: false, key, group, origin: me };
    let placed = permute(ctx, vec![(start % p, (start, slot))]);
    let mut vals: std::collections::HashMap<usize, Slot> = (me..n).step_by(p).map(|v| (v, Slot::PAD)).collect();
    let mut initial = Vec::new();
    for (_, (v, s)) in placed {
        vals.insert(v, s);
        initial.push((v, s.origin));
    }
    let rounds = odd_even_merge_rounds(half);
    let swaps = run_network(ctx, &rounds, &mut vals);
    let at_me = vals[&me];
    let mut tags = vals.keys().map(|&v| (v, v as u64)).collect();
    unwind(ctx, &rounds, &swaps, &mut tags);
    let back: Vec<(usize, u64)> = initial.iter().map(|&(v, origin)| (origin, tags[&v])).collect();
    let ranks = permute(ctx, back);
    debug_assert_eq!(ranks.len(), 1);
    (ranks[0].1 as usize, at_me)
}

/// Position of this PE's `key` in the merged order of both groups, 0-based.
///
/// Each group must be sorted by PE rank. Uses `O(log p)` compare-exchange
/// rounds with one word-sized entry per message; all traffic is control.
pub fn odd_even_merge_ranks(ctx: &mut PeContext<'_>, key: u64, group: MergeGroup) -> usize {
    ctx.with_traffic(TrafficClass::Control, |ctx| merge_layout(ctx, key, group).0)
}

/// Inclusive scan restarted at every PE whose `start` flag is set.
pub fn segmented_prefix<T, F>(ctx: &mut PeContext<'_>, value: T, start: bool, op: F) -> T
where
    T: Payload + Clone,
    F: Fn(&T, &T) -> T + Send + 'static,
{
    let out = ctx.scan((start, value), move |a: &(bool, T), b: &(bool, T)| {
        if b.0 {
            b.clone()
        } else {
            (a.0, op(&a.1, &b.1))
        }
    });
    out.1
}

/// Whether a PE gives or takes elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BalanceRole {
    Sender { surplus: u64 },
    Receiver { deficit: u64 },
}

/// Elements exchanged with one peer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub peer: usize,
    pub amount: u64,
}

/// What one PE did during [`balance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MovePlan {
    pub n_bar: u64,
    pub role: BalanceRole,
    pub sends: Vec<Move>,
    pub receives: Vec<Move>,
    /// Deficit of this PE left open because the total surplus ran out.
    pub unfilled: u64,
    /// `p * n_bar - n`: free slots that no surplus can fill.
    pub slack: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Balanced<T> {
    pub elements: Vec<T>,
    pub plan: MovePlan,
}

fn last_some(a: &(Option<u64>, Option<u64>), b: &(Option<u64>, Option<u64>)) -> (Option<u64>, Option<u64>) {
    (b.0.or(a.0), b.1.or(a.1))
}

type Next = (Option<(u64, u64)>, Option<(u64, u64)>);

/// Redistributes so that every PE holds at most `ceil(n/p)` elements.
///
/// Senders keep their smallest `ceil(n/p)` elements and ship the rest in
/// ascending order. Receivers append what they get in sender order.
pub fn balance<T: Payload + Ord + Clone>(ctx: &mut PeContext<'_>, mut local: Vec<T>) -> Balanced<T> {
    let prev_class = ctx.set_traffic(TrafficClass::Control);
    let p = ctx.p() as u64;
    let n_i = local.len() as u64;
    let n = ctx.all_reduce(n_i, crate::simnet::Sum);
    let n_bar = n.div_ceil(p);
    let (role, group, amount) = if n_i > n_bar {
        (BalanceRole::Sender { surplus: n_i - n_bar }, MergeGroup::Second, n_i - n_bar)
    } else {
        (BalanceRole::Receiver { deficit: n_bar - n_i }, MergeGroup::First, n_bar - n_i)
    };
    let own = match group {
        MergeGroup::First => vec![amount, 0],
        MergeGroup::Second => vec![0, amount],
    };
    let ends = ctx.scan(own, crate::simnet::Sum);
    let end = ends[usize::from(group == MergeGroup::Second)];
    let (rank, slot) = merge_layout(ctx, end, group);

    // This PE's segment of merged positions: after the previous member of
    // its group, up to and including its own position.
    let tagged = match group {
        MergeGroup::First => (Some(rank as u64), None),
        MergeGroup::Second => (None, Some(rank as u64)),
    };
    let before = ctx.exscan(tagged, last_some).unwrap_or((None, None));
    let prev = match group {
        MergeGroup::First => before.0,
        MergeGroup::Second => before.1,
    };
    let segment = prev.map_or(0, |r| r as usize + 1)..=rank;

    // At merged position `me`: the previous endpoint, the start of this
    // entry's interval, and the next sender and receiver.
    let (first_end, second_end) = match slot.group {
        MergeGroup::First => (Some(slot.key), None),
        MergeGroup::Second => (None, Some(slot.key)),
    };
    let last = ctx.exscan((slot.key, first_end, second_end), |a: &(u64, Option<u64>, Option<u64>), b: &(u64, Option<u64>, Option<u64>)| {
        (b.0, b.1.or(a.1), b.2.or(a.2))
    });
    let (e_prev, start) = match last {
        None => (0, 0),
        Some((e, f, s)) => (e, match slot.group {
            MergeGroup::First => f.unwrap_or(0),
            MergeGroup::Second => s.unwrap_or(0),
        }),
    };
    let mine = Some((slot.origin as u64, start));
    let here: Next = match slot.group {
        MergeGroup::First => (None, mine),
        MergeGroup::Second => (mine, None),
    };
    let (next_s, next_d) = ctx.scan_rev(here, |a: &Next, b: &Next| (a.0.or(b.0), a.1.or(b.1)));
    let piece = slot.key - e_prev;
    match (next_s, next_d) {
        (Some((s_pe, s_start)), Some((d_pe, _))) => {
            ctx.send(s_pe as usize, (d_pe, e_prev - s_start, piece));
            ctx.send(d_pe as usize, (s_pe, 0u64, piece));
        }
        (Some((s_pe, _)), None) => ctx.send(s_pe as usize, (u64::MAX, 0u64, 0u64)),
        (None, Some((d_pe, _))) => ctx.send(d_pe as usize, (u64::MAX, 0u64, 0u64)),
        (None, None) => {}
    }
    let pieces: Vec<(u64, u64, u64)> = segment.map(|pos| ctx.recv::<(u64, u64, u64)>(pos)).filter(|m| m.2 > 0).collect();

    ctx.set_traffic(TrafficClass::Payload);
    let mut plan = MovePlan { n_bar, role, sends: Vec::new(), receives: Vec::new(), unfilled: 0, slack: p * n_bar - n };
    match role {
        BalanceRole::Sender { .. } => {
            local.sort();
            let moved = local.split_off(n_bar as usize);
            for &(peer, off, amt) in &pieces {
                ctx.send(peer as usize, moved[off as usize..(off + amt) as usize].to_vec());
                plan.sends.push(Move { peer: peer as usize, amount: amt });
            }
        }
        BalanceRole::Receiver { deficit } => {
            for &(peer, _, amt) in &pieces {
                local.extend(ctx.recv::<Vec<T>>(peer as usize));
                plan.receives.push(Move { peer: peer as usize, amount: amt });
            }
            plan.unfilled = deficit - plan.receives.iter().map(|m| m.amount).sum::<u64>();
        }
    }
    ctx.set_traffic(prev_class);
    Balanced { elements: local, plan }
}

#[cfg(test)]
mod tests;
