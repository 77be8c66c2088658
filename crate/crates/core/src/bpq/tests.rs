use super::*;
use crate::selection::Element;
use crate::simnet::Simulator;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn select_and_rank() {
    let t: RankTree<u64> = (1..=7).collect();
    assert_eq!(*t.select(4).unwrap(), 4);
    assert!(t.select(0).is_err() && t.select(8).is_err());
    let t: RankTree<u64> = [2, 4, 6].into_iter().collect();
    assert_eq!(t.rank(&5), 2);
    assert_eq!(t.rank_less(&4), 1);
    assert_eq!(t.min(), Some(&2));
    assert_eq!(t.max(), Some(&6));
}

#[test]
fn cached_paths_follow_updates() {
    let mut t: RankTree<u64> = (10..20).collect();
    assert_eq!(t.min(), Some(&10));
    t.insert(3);
    assert_eq!(t.min(), Some(&3));
    assert_eq!(*t.min_path().first().unwrap(), *t.max_path().first().unwrap());
    assert!(t.delete(&19));
    assert!(!t.delete(&19));
    assert_eq!(t.max(), Some(&18));
    let low = t.take_smallest(2);
    assert_eq!(low, vec![3, 10]);
    assert_eq!(t.min(), Some(&11));
    assert_eq!(t.rank(&11), 1);
}

#[test]
fn concat_rejects_overlap() {
    let a: RankTree<u64> = [1, 5].into_iter().collect();
    let b: RankTree<u64> = [3, 9].into_iter().collect();
    assert!(RankTree::concat(a, b).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn split_concat_round_trip(keys in prop::collection::vec(0u32..500, 0..60), at in 0u32..500) {
        let t: RankTree<u32> = keys.iter().copied().collect();
        prop_assert!(t.check());
        let before: Vec<u32> = t.iter().copied().collect();
        let (l, r) = t.split(&at);
        prop_assert!(l.check() && r.check());
        prop_assert!(l.iter().all(|&x| x <= at) && r.iter().all(|&x| x > at));
        let back = RankTree::concat(l, r).unwrap();
        prop_assert!(back.check());
        prop_assert_eq!(back.iter().copied().collect::<Vec<_>>(), before);
    }
}

proptest! {
    #[test]
    fn matches_sorted_vector(ops in prop::collection::vec((0u8..3, 0u32..100), 0..300)) {
        let mut t = RankTree::new();
        let mut v: Vec<u32> = Vec::new();
        for (op, x) in ops {
            match op {
                0 => { t.insert(x); let i = v.partition_point(|&y| y <= x); v.insert(i, x); }
                1 => {
                    let had = v.iter().position(|&y| y == x);
                    prop_assert_eq!(t.delete(&x), had.is_some());
                    if let Some(i) = had { v.remove(i); }
                }
                _ => {
                    prop_assert_eq!(t.rank(&x), v.partition_point(|&y| y <= x));
                    if !v.is_empty() {
                        let i = x as usize % v.len();
                        prop_assert_eq!(*t.select(i + 1).unwrap(), v[i]);
                    }
                }
            }
            prop_assert_eq!(t.min(), v.first());
            prop_assert_eq!(t.max(), v.last());
        }
        prop_assert!(t.check());
    }
}

#[test]
fn insert_is_free_and_local() {
    let run = Simulator::new(4, 1)
        .unwrap()
        .run(|ctx| {
            let mut q = BulkQueue::new(ctx.rank() as u64);
            if ctx.rank() == 2 {
                q.insert_bulk((0..100).map(|i| Element::new(i, 2, i as usize)));
            }
            q.local_len()
        })
        .unwrap();
    assert_eq!(run.results, vec![0, 0, 100, 0]);
    assert_eq!(run.ledger.total_words(), 0);
    assert_eq!(run.ledger.max_startups(), 0);
}

#[test]
fn drain_in_batches_matches_sorting() {
    let p = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let input: Vec<Vec<Element>> = (0..p)
        .map(|pe| (0..500).map(|i| Element::new(rng.random_range(0..10_000), pe, i)).collect())
        .collect();
    let mut all: Vec<Element> = input.iter().flatten().copied().collect();
    all.sort();
    let run = Simulator::new(p, 5)
        .unwrap()
        .run_with_inputs(input, |ctx, local| {
            let mut q = BulkQueue::new(ctx.rank() as u64);
            q.insert_bulk(local);
            let mut batches = Vec::new();
            for k in [1u64, 7, 300, 1, 992] {
                batches.push(q.delete_min_fixed(ctx, k).unwrap());
            }
            let rest = q.delete_min_flexible(ctx, 600, 699, 2).unwrap();
            batches.push(rest);
            let over = q.delete_min_fixed(ctx, 10_000);
            (batches, over)
        })
        .unwrap();
    let mut offset = 0;
    for b in 0..6 {
        let mut got: Vec<Element> = run.results.iter().flat_map(|r| r.0[b].clone()).collect();
        got.sort();
        assert_eq!(got, all[offset..offset + got.len()].to_vec(), "batch {b}");
        offset += got.len();
    }
    assert!(matches!(run.results[0].1, Err(Error::QueueUnderflow { requested: 10_000, .. })));
}

#[test]
fn flexible_full_drain() {
    let run = Simulator::new(3, 1)
        .unwrap()
        .run(|ctx| {
            let mut q = BulkQueue::new(0);
            q.insert_bulk((0..10).map(|i| Element::new(i * 3 + ctx.rank() as u64, ctx.rank(), i as usize)));
            q.delete_min_flexible(ctx, 30, 30, 1).unwrap().len()
        })
        .unwrap();
    assert_eq!(run.results, vec![10; 3]);
}
