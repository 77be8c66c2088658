//! Random deviates, skip-based Bernoulli sampling and the sample-size
//! calculators used by the frequent-objects and sum-aggregation algorithms.

use rand::Rng;

use crate::error::{param, Result};

/// Relative error bound `eps` and failure probability `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub eps: f64,
    pub delta: f64,
}

impl ErrorBudget {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return param(format!("eps must be positive, got {eps}"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return param(format!("delta must lie in (0, 1), got {delta}"));
        }
        Ok(ErrorBudget { eps, delta })
    }
}

/// Sampling probability and the quantities derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePlan {
    /// Sampling probability, clamped to `(0, 1]`.
    pub rho: f64,
    /// Expected sample size demanded by the formula, before clamping.
    pub required: f64,
    /// `rho * n` after clamping.
    pub expected_sample_size: f64,
    /// Number of candidates to count exactly, for the exact-counting variants.
    pub k_star: Option<u64>,
    /// Set when the formula asked for `rho >= 1`.
    pub full_scan: bool,
}

impl SamplePlan {
    fn from_required(n: u64, required: f64, k_star: Option<u64>) -> Self {
        let n = n as f64;
        let rho = (required / n).min(1.0);
        SamplePlan {
            rho,
            required,
            expected_sample_size: rho * n,
            k_star,
            full_scan: required >= n,
        }
    }
}

/// Number of trials up to and including the first success, `P(X = i) =
/// (1-q)^(i-1) q`, by inversion.
pub fn geometric_deviate<R: Rng + ?Sized>(q: f64, rng: &mut R) -> Result<u64> {
    if !(q > 0.0 && q <= 1.0) {
        return param(format!("geometric success probability must lie in (0, 1], got {q}"));
    }
    Ok(geometric_unchecked(q, rng))
}

pub(crate) fn geometric_unchecked<R: Rng + ?Sized>(q: f64, rng: &mut R) -> u64 {
    if q >= 1.0 {
        return 1;
    }
    // u in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    let x = (u.ln() / (-q).ln_1p()).floor();
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        1 + x as u64
    }
}

/// Indices `0..len` each kept independently with probability `rho`, in
/// ascending order. Work is proportional to the number of indices returned.
pub fn bernoulli_skip_sample<R: Rng + ?Sized>(len: usize, rho: f64, rng: &mut R) -> Vec<usize> {
    if len == 0 || rho <= 0.0 {
        return Vec::new();
    }
    if rho >= 1.0 {
        return (0..len).collect();
    }
    let mut out = Vec::with_capacity(((len as f64) * rho * 1.1) as usize + 4);
    let mut pos: u64 = 0;
    loop {
        let skip = geometric_unchecked(rho, rng);
        pos = pos.saturating_add(skip);
        if pos > len as u64 {
            break;
        }
        out.push((pos - 1) as usize);
    }
    out
}

fn check_nk(n: u64, k: u64) -> Result<()> {
    if k == 0 || n < k {
        return param(format!("need n >= k >= 1, got n = {n}, k = {k}"));
    }
    Ok(())
}

/// Sample size for an `(eps, delta)`-approximation of the `k` most frequent
/// objects among `n`:
/// `rho n = 4/eps^2 * max(3/k ln(4n/delta), 2 ln(2k/delta))`.
pub fn pac_sample_size(n: u64, k: u64, budget: ErrorBudget) -> Result<SamplePlan> {
    check_nk(n, k)?;
    let ErrorBudget { eps, delta } = budget;
    let a = 3.0 / k as f64 * (4.0 * n as f64 / delta).ln();
    let b = 2.0 * (2.0 * k as f64 / delta).ln();
    let required = 4.0 / (eps * eps) * a.max(b);
    Ok(SamplePlan::from_required(n, required, None))
}

/// Candidate count and sample size when the `k*` most frequently sampled
/// objects are counted exactly afterwards.
///
/// `k* = max(k, ceil(1/eps * sqrt(2 log2(p) / p * ln(n/delta))))` and
/// `rho n = 2 / (eps^2 k*) * ln(n/delta)`.
pub fn ec_plan(n: u64, k: u64, p: usize, budget: ErrorBudget) -> Result<SamplePlan> {
    check_nk(n, k)?;
    if p == 0 {
        return param("p must be at least 1");
    }
    let ErrorBudget { eps, delta } = budget;
    let ln = (n as f64 / delta).ln();
    let log_p = (p as f64).log2();
    let root = (1.0 / eps) * (2.0 * log_p / p as f64 * ln).sqrt();
    let k_star = (k as f64).max(root.ceil()) as u64;
    let required = 2.0 / (eps * eps * k_star as f64) * ln;
    Ok(SamplePlan::from_required(n, required, Some(k_star)))
}

/// Sample-count threshold for the adaptive exact-counting variant.
///
/// The observed rank-`k` sample count `s_hat` is first turned into a lower
/// bound on its expectation, `E >= s_hat - sqrt(2 s_hat ln(1/delta))`; keys
/// whose sample count reaches `E - sqrt(2 E ln(k/delta))` become candidates.
/// Returns 0 (count everything sampled) when the bound is not positive.
pub fn pec_k_star_threshold(s_hat_k: f64, k: u64, delta: f64) -> f64 {
    if !(s_hat_k > 0.0) {
        return 0.0;
    }
    let lower = s_hat_k - (2.0 * s_hat_k * (1.0 / delta).ln()).sqrt();
    if lower <= 0.0 {
        return 0.0;
    }
    threshold_from_expectation(lower, k, delta)
}

/// `E - sqrt(2 E ln(k/delta))`, clamped at 0.
pub fn threshold_from_expectation(expected: f64, k: u64, delta: f64) -> f64 {
    if !(expected > 0.0) {
        return 0.0;
    }
    let t = expected - (2.0 * expected * (k as f64 / delta).ln()).sqrt();
    t.max(0.0)
}

/// Generalised harmonic number `H_{n,s} = sum_{i=1..n} i^{-s}`.
pub fn harmonic(n: u64, s: f64) -> f64 {
    // Summing small terms first keeps the rounding error low.
    (1..=n).rev().map(|i| (i as f64).powf(-s)).sum()
}

/// Sampling plan for Zipf-distributed inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfPlan {
    pub rho: f64,
    /// Expected frequency `x_k` of the rank-`k` object.
    pub x_k: f64,
    pub expected_k_star: f64,
    pub full_scan: bool,
}

/// Probably-exact plan for `n` objects drawn from a Zipf distribution with
/// exponent `s` over a universe of `n` values.
pub fn zipf_plan(n: u64, k: u64, s: f64, delta: f64) -> Result<ZipfPlan> {
    zipf_plan_with_universe(n, k, s, delta, n)
}

/// As [`zipf_plan`] with an explicit universe size `u`:
/// `x_k = n k^{-s} / H_{u,s}`, `rho = 4 / x_k * ln(k/delta)` and
/// `E[k*] = k (2 + sqrt 2)^{1/s}`.
pub fn zipf_plan_with_universe(n: u64, k: u64, s: f64, delta: f64, universe: u64) -> Result<ZipfPlan> {
    check_nk(n, k)?;
    if !(s > 0.0) {
        return param(format!("zipf exponent must be positive, got {s}"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return param(format!("delta must lie in (0, 1), got {delta}"));
    }
    if universe < k {
        return param(format!("universe {universe} smaller than k = {k}"));
    }
    let x_k = n as f64 * (k as f64).powf(-s) / harmonic(universe, s);
    let raw = 4.0 / x_k * (k as f64 / delta).ln();
    Ok(ZipfPlan {
        rho: raw.min(1.0),
        x_k,
        expected_k_star: k as f64 * (2.0 + 2f64.sqrt()).powf(1.0 / s),
        full_scan: raw >= 1.0,
    })
}

/// `floor(v / v_avg)` samples plus one more with probability equal to the
/// fractional part.
pub fn weighted_sample_count<R: Rng + ?Sized>(v: f64, v_avg: f64, rng: &mut R) -> Result<u64> {
    if !(v_avg > 0.0) {
        return param(format!("v_avg must be positive, got {v_avg}"));
    }
    if !(v >= 0.0) {
        return param(format!("value must be non-negative, got {v}"));
    }
    let ratio = v / v_avg;
    let whole = ratio.floor();
    let frac = ratio - whole;
    let extra = frac > 0.0 && rng.random::<f64>() < frac;
    Ok(whole as u64 + u64::from(extra))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn geometric_certain_success() {
        let mut r = rng();
        assert!((0..100).all(|_| geometric_deviate(1.0, &mut r).unwrap() == 1));
        assert!(geometric_deviate(0.0, &mut r).is_err());
        assert!(geometric_deviate(1.5, &mut r).is_err());
    }

    #[test]
    fn geometric_mean_and_tail() {
        let mut r = rng();
        let n = 1_000_000;
        let mean = (0..n).map(|_| geometric_deviate(0.5, &mut r).unwrap()).sum::<u64>() as f64 / n as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");

        let n = 200_000;
        let hits = (0..n).filter(|_| geometric_deviate(0.1, &mut r).unwrap() > 10).count() as f64;
        let want = 0.9f64.powi(10);
        let sigma = (want * (1.0 - want) / n as f64).sqrt();
        assert!((hits / n as f64 - want).abs() < 3.0 * sigma);
    }

    #[test]
    fn skip_sample_edges() {
        let mut r = rng();
        assert_eq!(bernoulli_skip_sample(5, 1.0, &mut r), vec![0, 1, 2, 3, 4]);
        assert!(bernoulli_skip_sample(0, 0.5, &mut r).is_empty());
        let s = bernoulli_skip_sample(1_000_000, 0.3, &mut r);
        let sigma = (1e6 * 0.3 * 0.7f64).sqrt();
        assert!((s.len() as f64 - 3e5).abs() < 5.0 * sigma);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(*s.last().unwrap() < 1_000_000);
    }

    #[test]
    fn pac_formula_takes_the_max() {
        let b = ErrorBudget::new(10.0, 0.1).unwrap();
        let plan = pac_sample_size(1_000_000, 32, b).unwrap();
        let a = 3.0 / 32.0 * (4e6f64 / 0.1).ln();
        let c = 2.0 * (64.0f64 / 0.1).ln();
        assert!((plan.required - 0.04 * a.max(c)).abs() < 1e-9);
        assert!(!plan.full_scan);
    }

    #[test]
    fn pac_clamps_to_full_scan() {
        let plan = pac_sample_size(100, 2, ErrorBudget::new(0.01, 0.1).unwrap()).unwrap();
        assert_eq!(plan.rho, 1.0);
        assert!(plan.full_scan);
    }

    #[test]
    fn pac_is_monotone() {
        let n = 1 << 20;
        let mut last = f64::INFINITY;
        for d in [1e-6, 1e-4, 1e-2, 0.3, 0.9, 0.999] {
            let r = pac_sample_size(n, 32, ErrorBudget::new(0.01, d).unwrap()).unwrap().required;
            assert!(r <= last);
            last = r;
        }
        let mut last = f64::INFINITY;
        for e in [1e-4, 1e-3, 1e-2, 0.1, 1.0] {
            let r = pac_sample_size(n, 32, ErrorBudget::new(e, 0.01).unwrap()).unwrap().required;
            assert!(r <= last);
            last = r;
        }
    }

    #[test]
    fn ec_single_pe_uses_k() {
        let plan = ec_plan(1000, 5, 1, ErrorBudget::new(0.1, 0.1).unwrap()).unwrap();
        assert_eq!(plan.k_star, Some(5));
    }

    #[test]
    fn pec_threshold_examples() {
        assert_eq!(pec_k_star_threshold(0.0, 8, 1e-3), 0.0);
        let t = pec_k_star_threshold(400.0, 8, 1e-3);
        assert!(t > 0.0 && t < 400.0);
        let mut last = 0.0;
        for d in [1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.5] {
            let t = pec_k_star_threshold(400.0, 8, d);
            assert!(t >= last);
            last = t;
        }
    }

    #[test]
    fn harmonic_small() {
        assert!((harmonic(4, 1.0) - 25.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn zipf_expected_k_star() {
        let plan = zipf_plan(1000, 1, 1.0, 0.1).unwrap();
        assert!((plan.expected_k_star - 3.414_213_562).abs() < 1e-6);
    }

    #[test]
    fn weighted_counts() {
        let mut r = rng();
        assert_eq!(weighted_sample_count(3.0, 1.0, &mut r).unwrap(), 3);
        assert_eq!(weighted_sample_count(0.0, 1.0, &mut r).unwrap(), 0);
        assert!(weighted_sample_count(1.0, 0.0, &mut r).is_err());
        let n = 100_000;
        let mean = (0..n).map(|_| weighted_sample_count(2.5, 1.0, &mut r).unwrap()).sum::<u64>() as f64 / n as f64;
        assert!((mean - 2.5).abs() < 3.0 * (0.25f64 / n as f64).sqrt());
    }

    #[test]
    fn chernoff_lower_tail() {
        let mut r = rng();
        let trials = 2000;
        let n = 10_000;
        let mean = 0.3 * n as f64;
        let sums: Vec<usize> = (0..trials).map(|_| bernoulli_skip_sample(n, 0.3, &mut r).len()).collect();
        for phi in [0.1f64, 0.2] {
            let bound = (-phi * phi * mean / 2.0).exp();
            let below = sums.iter().filter(|&&x| (x as f64) < (1.0 - phi) * mean).count() as f64 / trials as f64;
            let slack = 3.0 * (bound.max(1.0 / trials as f64) / trials as f64).sqrt();
            assert!(below <= bound + slack, "phi {phi}: {below} > {bound}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn weighted_deviation_below_one(v in 0.0f64..1e6, avg in 0.01f64..1e3, seed: u64) {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                let c = weighted_sample_count(v, avg, &mut r).unwrap() as f64;
                prop_assert!((c - v / avg).abs() < 1.0);
            }

            #[test]
            fn ec_k_star_at_least_k(n in 100u64..1_000_000, k in 1u64..50, p in 1usize..300, e in 1e-4f64..0.5) {
                let plan = ec_plan(n, k, p, ErrorBudget::new(e, 0.01).unwrap()).unwrap();
                prop_assert!(plan.k_star.unwrap() >= k);
                prop_assert!(plan.rho > 0.0 && plan.rho <= 1.0);
            }
        }
    }
}
