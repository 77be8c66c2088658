use std::collections::BTreeMap;

use super::payload::{FixedWords, Payload};
use super::PeContext;

/// A key together with a (sample or exact) count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CountedKey {
    pub key: u64,
    pub count: u64,
}

impl CountedKey {
    pub fn new(key: u64, count: u64) -> Self {
        CountedKey { key, count }
    }
}

impl Payload for CountedKey {
    fn words(&self) -> usize {
        2
    }
}

impl FixedWords for CountedKey {
    const WORDS: usize = 2;
}

fn floor_pow2(p: usize) -> usize {
    1 << (usize::BITS - 1 - p.leading_zeros())
}

/// Delivers every `(key, count)` pair to `owner(key)` along hypercube
/// dimensions, summing the counts of equal keys at every hop.
///
/// PEs beyond the largest power of two `P'` hand their pairs to `r - P'`
/// before routing and receive the keys they own afterwards. Returns this
/// PE's owned keys with their global counts, sorted by key.
pub fn hypercube_combine_route(
    ctx: &PeContext<'_>,
    pairs: impl IntoIterator<Item = CountedKey>,
    owner: impl Fn(u64) -> usize,
) -> Vec<CountedKey> {
    route(ctx, pairs, owner, true)
}

/// Same routes as [`hypercube_combine_route`] but without merging in
/// transit; counts are only summed at the owner.
pub fn route_uncombined(
    ctx: &PeContext<'_>,
    pairs: impl IntoIterator<Item = CountedKey>,
    owner: impl Fn(u64) -> usize,
) -> Vec<CountedKey> {
    route(ctx, pairs, owner, false)
}

fn route(
    ctx: &PeContext<'_>,
    pairs: impl IntoIterator<Item = CountedKey>,
    owner: impl Fn(u64) -> usize,
    combine: bool,
) -> Vec<CountedKey> {
    let p = ctx.p();
    let r = ctx.rank();
    let cube = floor_pow2(p);
    let mut held: Vec<CountedKey> = pairs.into_iter().collect();
    if combine {
        held = aggregate(held);
    }

    if r >= cube {
        ctx.send(r - cube, held);
        let mine: Vec<CountedKey> = ctx.recv(r - cube);
        return aggregate(mine);
    }
    if r + cube < p {
        let extra: Vec<CountedKey> = ctx.recv(r + cube);
        held.extend(extra);
        if combine {
            held = aggregate(held);
        }
    }

    let target = |key: u64| {
        let o = owner(key);
        assert!(o < p, "owner {o} out of range for p = {p}");
        if o >= cube {
            o - cube
        } else {
            o
        }
    };
    let mut bit = 1;
    while bit < cube {
        let partner = r ^ bit;
        let (out, keep): (Vec<CountedKey>, Vec<CountedKey>) =
            held.into_iter().partition(|c| (target(c.key) ^ r) & bit != 0);
        ctx.send(partner, out);
        let incoming: Vec<CountedKey> = ctx.recv(partner);
        held = keep;
        held.extend(incoming);
        if combine {
            held = aggregate(held);
        }
        bit <<= 1;
    }

    if r + cube < p {
        let (away, mine): (Vec<CountedKey>, Vec<CountedKey>) =
            held.into_iter().partition(|c| owner(c.key) != r);
        ctx.send(r + cube, away);
        held = mine;
    }
    aggregate(held)
}

fn aggregate(pairs: Vec<CountedKey>) -> Vec<CountedKey> {
    let mut map: BTreeMap<u64, u64> = BTreeMap::new();
    for c in pairs {
        *map.entry(c.key).or_insert(0) += c.count;
    }
    map.into_iter().map(|(key, count)| CountedKey { key, count }).collect()
}
