use super::*;
use crate::oracle;
use crate::simnet::Simulator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn network_merges_every_zero_one_input() {
    for half in [1usize, 2, 4, 8] {
        let rounds = odd_even_merge_rounds(half);
        assert_eq!(rounds.len(), half.trailing_zeros() as usize + 1);
        for a in 0..=half {
            for b in 0..=half {
                let mut v: Vec<u8> = (0..half).map(|i| u8::from(i >= a)).collect();
                v.extend((0..half).map(|i| u8::from(i >= b)));
                for round in &rounds {
                    for &(x, y) in round {
                        if v[x] > v[y] {
                            v.swap(x, y);
                        }
                    }
                }
                assert!(v.windows(2).all(|w| w[0] <= w[1]), "half {half} a {a} b {b}");
            }
        }
    }
}

fn merge_ranks(keys: &[(u64, MergeGroup)], seed: u64) -> Vec<usize> {
    let run = Simulator::new(keys.len(), seed)
        .unwrap()
        .run_with_inputs(keys.to_vec(), |ctx, (k, g)| odd_even_merge_ranks(ctx, k, g))
        .unwrap();
    assert_eq!(run.ledger.total_payload_words(), 0);
    run.results
}

#[test]
fn interleaved_groups() {
    use MergeGroup::*;
    let ranks = merge_ranks(&[(1, First), (3, First), (5, First), (2, Second), (4, Second), (6, Second)], 0);
    assert_eq!(ranks, vec![0, 2, 4, 1, 3, 5]);
}

#[test]
fn one_group_empty() {
    let keys: Vec<(u64, MergeGroup)> = (0..5).map(|i| (i * 10, MergeGroup::Second)).collect();
    assert_eq!(merge_ranks(&keys, 0), vec![0, 1, 2, 3, 4]);
}

#[test]
fn ties_put_first_group_first() {
    use MergeGroup::*;
    let ranks = merge_ranks(&[(7, Second), (7, First), (7, Second), (7, First)], 0);
    assert_eq!(ranks, vec![2, 0, 3, 1]);
}

#[test]
fn random_merges_match_sequential_merge() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let p = rng.random_range(1..=24);
        let groups: Vec<MergeGroup> =
            (0..p).map(|_| if rng.random_bool(0.5) { MergeGroup::First } else { MergeGroup::Second }).collect();
        let mut acc = [0u64; 2];
        let keys: Vec<(u64, MergeGroup)> = groups
            .iter()
            .map(|&g| {
                let i = usize::from(g == MergeGroup::Second);
                acc[i] += rng.random_range(0..4);
                (acc[i], g)
            })
            .collect();
        let mut order: Vec<(u64, MergeGroup, usize)> = keys.iter().enumerate().map(|(pe, &(k, g))| (k, g, pe)).collect();
        order.sort();
        let mut expect = vec![0; p];
        for (r, &(_, _, pe)) in order.iter().enumerate() {
            expect[pe] = r;
        }
        let run = Simulator::new(p, 0)
            .unwrap()
            .run_with_inputs(keys, |ctx, (k, g)| odd_even_merge_ranks(ctx, k, g))
            .unwrap();
        assert_eq!(run.results, expect);
        let bound = 8 * (crate::simnet::ceil_log2(p) as u64 + 2) + 2;
        assert!(run.ledger.max_startups() <= 4 * bound, "p = {p}");
    }
}

fn seg_scan(values: &[u64], starts: &[bool]) -> Vec<u64> {
    let inputs: Vec<(u64, bool)> = values.iter().copied().zip(starts.iter().copied()).collect();
    Simulator::new(values.len(), 0)
        .unwrap()
        .run_with_inputs(inputs, |ctx, (v, s)| segmented_prefix(ctx, v, s, |a: &u64, b: &u64| a + b))
        .unwrap()
        .results
}

#[test]
fn segmented_prefix_edges() {
    let v = [1, 2, 3, 4, 5];
    assert_eq!(seg_scan(&v, &[true, false, false, false, false]), vec![1, 3, 6, 10, 15]);
    assert_eq!(seg_scan(&v, &[true; 5]), v.to_vec());
}

#[test]
fn segmented_prefix_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let p = rng.random_range(1..=20);
        let v: Vec<u64> = (0..p).map(|_| rng.random_range(0..100)).collect();
        let s: Vec<bool> = (0..p).map(|_| rng.random_bool(0.3)).collect();
        assert_eq!(seg_scan(&v, &s), oracle::segmented_scan(&v, &s, |a, b| a + b));
    }
}

fn run_balance(inputs: Vec<Vec<u64>>) -> (Vec<Balanced<u64>>, crate::CostLedger) {
    let run = Simulator::new(inputs.len(), 1).unwrap().run_with_inputs(inputs, balance).unwrap();
    (run.results, run.ledger)
}

#[test]
fn all_on_one_pe() {
    let (out, ledger) = run_balance(vec![(0..40).collect(), vec![], vec![], vec![]]);
    assert_eq!(out[0].elements, (0..10).collect::<Vec<u64>>());
    let sends: Vec<(usize, u64)> = out[0].plan.sends.iter().map(|m| (m.peer, m.amount)).collect();
    assert_eq!(sends, vec![(1, 10), (2, 10), (3, 10)]);
    assert_eq!(out[1].elements, (10..20).collect::<Vec<u64>>());
    assert_eq!(out[3].elements, (30..40).collect::<Vec<u64>>());
    assert_eq!(ledger.total_payload_words(), 30);
}

#[test]
fn balanced_input_moves_nothing() {
    let (out, ledger) = run_balance(vec![vec![1, 2, 3], vec![4, 5], vec![6, 7, 8]]);
    assert_eq!(ledger.total_payload_words(), 0);
    assert_eq!(out[1].plan.unfilled, 1);
    assert_eq!(out[1].plan.slack, 1);
}

#[test]
fn empty_input() {
    let (out, ledger) = run_balance(vec![vec![]; 5]);
    assert!(out.iter().all(|b| b.elements.is_empty()));
    assert_eq!(ledger.total_payload_words(), 0);
}

#[test]
fn random_counts_match_greedy_matcher() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..40 {
        let p = rng.random_range(1..=16);
        let counts: Vec<u64> = (0..p).map(|_| if rng.random_bool(0.3) { rng.random_range(0..200) } else { rng.random_range(0..20) }).collect();
        let mut next = 0u64;
        let inputs: Vec<Vec<u64>> = counts
            .iter()
            .map(|&c| {
                let v: Vec<u64> = (next..next + c).collect();
                next += c;
                v
            })
            .collect();
        let (out, ledger) = run_balance(inputs);
        let mut moves: Vec<(usize, usize, u64)> = Vec::new();
        for (pe, b) in out.iter().enumerate() {
            moves.extend(b.plan.sends.iter().map(|m| (pe, m.peer, m.amount)));
        }
        moves.sort();
        let mut expect = oracle::greedy_moves(&counts);
        expect.sort();
        assert_eq!(moves, expect, "trial {trial} counts {counts:?}");
        let surplus: u64 = out.iter().map(|b| match b.plan.role {
            BalanceRole::Sender { surplus } => surplus,
            BalanceRole::Receiver { .. } => 0,
        }).sum();
        assert_eq!(ledger.total_payload_words(), surplus);
    }
}
