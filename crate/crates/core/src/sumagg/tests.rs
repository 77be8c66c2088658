use std::collections::BTreeMap;

use super::*;
use crate::oracle;
use crate::simnet::Simulator;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn wk(pairs: &[(u64, u64)]) -> Vec<WeightedKey> {
    pairs.iter().map(|&(k, v)| WeightedKey::new(k, v)).collect()
}

fn zipf_pairs(p: usize, per_pe: usize, universe: u64, seed: u64) -> Vec<Vec<WeightedKey>> {
    use rand_distr::{weighted::WeightedAliasIndex, Distribution};
    let w: Vec<f64> = (1..=universe).map(|i| 1.0 / i as f64).collect();
    let dist = WeightedAliasIndex::new(w).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..p)
        .map(|_| {
            (0..per_pe)
                .map(|_| WeightedKey::new(dist.sample(&mut rng) as u64, rng.random_range(1..=100)))
                .collect()
        })
        .collect()
}

fn as_tuples(streams: &[Vec<WeightedKey>]) -> Vec<Vec<(u64, u64)>> {
    streams.iter().map(|s| s.iter().map(|w| (w.key, w.value)).collect()).collect()
}

fn run_sum<F>(streams: Vec<Vec<WeightedKey>>, seed: u64, f: F) -> (SumResult, crate::CostLedger)
where
    F: Fn(&mut PeContext<'_>, &[WeightedKey]) -> SumShare + Sync,
{
    let run = Simulator::new(streams.len(), seed)
        .unwrap()
        .run_with_inputs(streams, |ctx, s| f(ctx, &s))
        .unwrap();
    (SumResult::from_shares(&run.results), run.ledger)
}

#[test]
fn aggregate_merges_duplicates() {
    let t = local_aggregate(&wk(&[(7, 1), (7, 2), (3, 5)]));
    assert_eq!(t.entries(), &wk(&[(3, 5), (7, 3)])[..]);
    assert_eq!(t.get(7), 3);
    assert_eq!(t.get(4), 0);
    assert!(local_aggregate(&[]).is_empty());
}

#[test]
fn aggregate_matches_fold() {
    for seed in 0..20 {
        let s = zipf_pairs(1, 2000, 300, seed).pop().unwrap();
        let folded: BTreeMap<u64, u64> = oracle::exact_sums(&as_tuples(std::slice::from_ref(&s)));
        let t = local_aggregate(&s);
        let got: BTreeMap<u64, u64> = t.entries().iter().map(|e| (e.key, e.value)).collect();
        assert_eq!(got, folded);
    }
}

#[test]
fn sample_size_formula() {
    let b = ErrorBudget::new(0.02, 0.05).unwrap();
    let s = sum_sample_size(1 << 20, 8, b);
    let expect = 50.0 * (16.0 * (2.0 * (1u64 << 20) as f64 / 0.05).ln()).sqrt();
    assert!((s - expect).abs() < 1e-9);
}

#[test]
fn local_deviation_is_below_one_and_global_below_p() {
    let p = 8;
    for seed in 0..30 {
        let streams = zipf_pairs(p, 3000, 2000, seed);
        let tables: Vec<LocalSums> = streams.iter().map(|s| local_aggregate(s)).collect();
        let total: u64 = tables.iter().map(LocalSums::total).sum();
        let v_avg = total as f64 / 5000.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples: BTreeMap<u64, u64> = BTreeMap::new();
        for t in &tables {
            let (local, dev) = sample_local(t, v_avg, &mut rng).unwrap();
            assert!(dev < 1.0);
            for c in local {
                *samples.entry(c.key).or_insert(0) += c.count;
            }
        }
        for (key, sum) in oracle::exact_sums(&as_tuples(&streams)) {
            let s = samples.get(&key).copied().unwrap_or(0) as f64;
            assert!((s - sum as f64 / v_avg).abs() <= p as f64);
        }
    }
}

#[test]
fn bernoulli_part_obeys_hoeffding() {
    // Sum of p Bernoulli trials with assorted probabilities; compare the
    // empirical tail with 2 exp(-2 t^2 / p).
    let p = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let probs: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
    let mu: f64 = probs.iter().sum();
    let trials = 20_000;
    for t in [2.0, 3.0, 4.0] {
        let mut hits = 0;
        for _ in 0..trials {
            let x: f64 = probs.iter().map(|&q| f64::from(u8::from(rng.random::<f64>() < q))).sum();
            if (x - mu).abs() >= t {
                hits += 1;
            }
        }
        let bound = 2.0 * (-2.0 * t * t / p as f64).exp();
        let sigma = (bound * (1.0 - bound).max(0.0) / trials as f64).sqrt();
        assert!(hits as f64 / trials as f64 <= bound + 3.0 * sigma, "t = {t}");
    }
}

#[test]
fn single_heavy_key_comes_first() {
    let p = 4;
    for seed in 0..10 {
        let mut streams = zipf_pairs(p, 500, 100, seed);
        for s in &mut streams {
            for w in s.iter_mut() {
                w.value = if w.key == 42 { 1000 } else { 0 };
            }
            s.push(WeightedKey::new(42, 777));
        }
        let budget = ErrorBudget::new(0.1, 0.05).unwrap();
        let (res, _) = run_sum(streams.clone(), seed, |ctx, s| sum_pac_top_k(ctx, s, 1, budget).unwrap());
        let total = oracle::exact_sums(&as_tuples(&streams))[&42];
        assert_eq!(res.info.total_weight, total);
        assert_eq!(res.keys(), vec![42]);
        let err = (res.top[0].sum as f64 - total as f64).abs();
        assert!(err < p as f64 * res.info.v_avg + 1.0);
    }
}

#[test]
fn multiples_of_v_avg_are_estimated_exactly() {
    let streams = vec![wk(&[(1, 30), (2, 20)]), wk(&[(1, 10), (3, 40)]), wk(&[(2, 50), (4, 10)])];
    // Total weight 160 with s = 16 gives v_avg = 10.
    let (res, _) = run_sum(streams.clone(), 5, |ctx, s| sum_pac_with_sample(ctx, s, 3, 16.0).unwrap());
    assert_eq!(res.info.v_avg, 10.0);
    let got: Vec<(u64, u64)> = res.top.iter().map(|e| (e.key, e.sum)).collect();
    assert_eq!(got, oracle::exact_top_k_sums(&as_tuples(&streams), 3));
}

#[test]
fn doubling_values_doubles_estimates() {
    let streams = zipf_pairs(4, 400, 80, 2);
    let doubled: Vec<Vec<WeightedKey>> = streams
        .iter()
        .map(|s| s.iter().map(|w| WeightedKey::new(w.key, 2 * w.value)).collect())
        .collect();
    let total: u64 = streams.iter().flatten().map(|w| w.value).sum();
    // v_avg = 4 and 8: both runs see the same fractional parts.
    let s = total as f64 / 4.0;
    let (a, _) = run_sum(streams, 9, |ctx, x| sum_pac_with_sample(ctx, x, 10, s).unwrap());
    let (b, _) = run_sum(doubled, 9, |ctx, x| sum_pac_with_sample(ctx, x, 10, s).unwrap());
    assert_eq!(a.keys(), b.keys());
    for (x, y) in a.top.iter().zip(&b.top) {
        assert_eq!(2 * x.sum, y.sum);
    }
}

#[test]
fn ec_sums_are_exact() {
    for seed in 0..10 {
        let streams = zipf_pairs(8, 2000, 5000, seed);
        let budget = ErrorBudget::new(0.01, 0.05).unwrap();
        let (res, _) = run_sum(streams.clone(), seed, |ctx, s| sum_ec_top_k(ctx, s, 8, budget).unwrap());
        let sums = oracle::exact_sums(&as_tuples(&streams));
        assert_eq!(res.top.len(), 8);
        for e in &res.top {
            assert!(e.exact);
            assert_eq!(e.sum, sums[&e.key]);
        }
    }
}

#[test]
fn ec_with_every_key_as_candidate_is_exact() {
    let streams = zipf_pairs(4, 1000, 60, 4);
    let (res, _) = run_sum(streams.clone(), 4, |ctx, s| sum_ec_with_sample(ctx, s, 5, 1e9, 1000).unwrap());
    let got: Vec<(u64, u64)> = res.top.iter().map(|e| (e.key, e.sum)).collect();
    assert_eq!(got, oracle::exact_top_k_sums(&as_tuples(&streams), 5));
}

#[test]
fn skew_is_flagged() {
    let mut streams = zipf_pairs(4, 300, 50, 1);
    let (res, _) = run_sum(streams.clone(), 1, |ctx, s| sum_pac_with_sample(ctx, s, 3, 100.0).unwrap());
    assert!(!res.info.skewed);
    for w in &mut streams[0] {
        w.value *= 50;
    }
    let (res, _) = run_sum(streams, 1, |ctx, s| sum_pac_with_sample(ctx, s, 3, 100.0).unwrap());
    assert!(res.info.skewed);
}

#[test]
fn zero_weight_and_zero_k() {
    let streams = vec![wk(&[(1, 0)]), wk(&[])];
    let budget = ErrorBudget::new(0.1, 0.1).unwrap();
    let (res, _) = run_sum(streams.clone(), 0, |ctx, s| sum_pac_top_k(ctx, s, 2, budget).unwrap());
    assert!(res.top.is_empty() && res.info.truncated);
    let run = Simulator::new(2, 0).unwrap().run_with_inputs(streams, |ctx, s| sum_ec_top_k(ctx, &s, 0, budget)).unwrap();
    assert!(run.results.iter().all(|r| r.is_err()));
}

#[test]
#[ignore = "does not hold: exact summation all-gathers k* keys, which already exceeds the sampled volume"]
fn ec_bottleneck_below_pac_at_small_eps() {
    let streams = zipf_pairs(8, 1 << 14, 1 << 20, 1);
    let budget = ErrorBudget::new(1e-3, 0.05).unwrap();
    let (_, pac) = run_sum(streams.clone(), 1, |ctx, s| sum_pac_top_k(ctx, s, 8, budget).unwrap());
    let (_, ec) = run_sum(streams, 1, |ctx, s| sum_ec_top_k(ctx, s, 8, budget).unwrap());
    assert!(ec.bottleneck_words() < pac.bottleneck_words(), "ec {} vs pac {}", ec.bottleneck_words(), pac.bottleneck_words());
}
