use super::*;
use crate::sampling::harmonic;

#[test]
fn distribution_round_trips_through_text() {
    for text in ["zipf:s=1.2,u=4096", "negbin:r=1000,q=0.05", "uniform:u=77", "file:/tmp/x.txt"] {
        let d: Distribution = text.parse().unwrap();
        assert_eq!(d.to_string(), text);
    }
    assert_eq!("zipf".parse::<Distribution>().unwrap(), Distribution::Zipf { s: 1.0, universe: 1 << 20 });
    assert!("zipf:u=0".parse::<Distribution>().is_err());
    assert!("zipf:q=1".parse::<Distribution>().is_err());
    assert!("gauss:s=1".parse::<Distribution>().is_err());
}

#[test]
fn placements_cover_all_elements() {
    for p in [1, 3, 8, 13] {
        for pl in [Placement::Uniform, Placement::Skewed, Placement::OnePe, Placement::PerPeRandomParams] {
            assert_eq!(pe_sizes(pl, p, 100).iter().sum::<usize>(), 100 * p, "{pl} p = {p}");
        }
    }
    let s = pe_sizes(Placement::Skewed, 4, 100);
    assert!(s.windows(2).all(|w| w[0] < w[1]), "{s:?}");
}

#[test]
fn universe_of_one_gives_identical_keys() {
    let d = Distribution::Zipf { s: 1.0, universe: 1 };
    let streams = generate(&d, 3, 50, Placement::Uniform, 4).unwrap();
    assert!(streams.iter().flatten().all(|&k| k == 1));
}

#[test]
fn zipf_exponent_zero_is_uniform() {
    let u = 20;
    let d = Distribution::Zipf { s: 0.0, universe: u };
    let streams = generate(&d, 4, 50_000, Placement::Uniform, 2).unwrap();
    let counts = oracle::exact_counts(&streams);
    assert_eq!(counts.len() as u64, u);
    let expect = 200_000.0 / u as f64;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    // 19 degrees of freedom, 99.9th percentile about 43.8.
    assert!(chi2 < 43.8, "chi2 = {chi2}");
}

#[test]
fn zipf_rank_frequencies_fit_the_formula() {
    let (u, n) = (1000u64, 1_000_000usize);
    let d = Distribution::Zipf { s: 1.0, universe: u };
    let streams = generate(&d, 8, n / 8, Placement::Uniform, 7).unwrap();
    let counts = oracle::exact_counts(&streams);
    let h = harmonic(u, 1.0);
    // Bins of ranks with at least 1000 expected hits each.
    let mut chi2 = 0.0;
    let mut bins = 0;
    let (mut obs, mut exp) = (0.0, 0.0);
    for i in 1..=u {
        obs += counts.get(&i).copied().unwrap_or(0) as f64;
        exp += n as f64 / (i as f64 * h);
        if exp >= 1000.0 || i == u {
            chi2 += (obs - exp) * (obs - exp) / exp;
            bins += 1;
            obs = 0.0;
            exp = 0.0;
        }
    }
    // chi2 with bins - 1 degrees of freedom; mean bins-1, sd sqrt(2(bins-1)).
    let df = (bins - 1) as f64;
    assert!(chi2 < df + 5.0 * (2.0 * df).sqrt(), "chi2 = {chi2}, bins = {bins}");
}

#[test]
fn negative_binomial_moments() {
    let d = Distribution::NegativeBinomial { r: 1000.0, q: 0.05 };
    let streams = generate(&d, 2, 20_000, Placement::Uniform, 3).unwrap();
    let xs: Vec<f64> = streams.iter().flatten().map(|&x| x as f64).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    // r(1-q)/q = 19000 and r(1-q)/q^2 = 380000.
    assert!((mean - 19_000.0).abs() < 30.0, "mean {mean}");
    assert!((var / 380_000.0 - 1.0).abs() < 0.05, "var {var}");
}

#[test]
fn generation_is_deterministic_and_streams_differ() {
    let d = Distribution::Uniform { universe: 1 << 30 };
    let a = generate(&d, 4, 100, Placement::PerPeRandomParams, 9).unwrap();
    assert_eq!(a, generate(&d, 4, 100, Placement::PerPeRandomParams, 9).unwrap());
    assert_ne!(a[0], a[1]);
    assert_ne!(a, generate(&d, 4, 100, Placement::PerPeRandomParams, 10).unwrap());
}

#[test]
fn file_keys_are_dealt_in_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("keys.txt");
    std::fs::write(&path, "1 2 3\n4 5 6 7\n").unwrap();
    let d = Distribution::FromFile(path.clone());
    assert_eq!(generate(&d, 2, 3, Placement::Uniform, 0).unwrap(), vec![vec![1, 2, 3], vec![4, 5, 6]]);
    assert!(generate(&d, 3, 3, Placement::Uniform, 0).is_err());
    std::fs::write(&path, "1 x").unwrap();
    assert!(generate(&d, 1, 1, Placement::Uniform, 0).is_err());
}

#[test]
fn config_text_parsing() {
    let text = "# comment\nalgo = ec\npes=4\n\nk=3\nk=5\n";
    let map = parse_config(text).unwrap();
    let mut cfg = ExperimentConfig::default();
    for (k, v) in &map {
        cfg.set(k, v).unwrap();
    }
    assert_eq!((cfg.algo, cfg.p, cfg.k), (Algo::Ec, 4, 5));
    assert!(matches!(parse_config("pes 4"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(parse_config("\ncolour=red"), Err(Error::Parse { line: 2, .. })));
    assert!(cfg.set("k", "many").is_err());
    assert!(cfg.set("algo", "quicksort").is_err());
}

#[test]
fn config_hash_tracks_every_field() {
    let a = ExperimentConfig::default();
    assert_eq!(a.hash().len(), 16);
    assert_eq!(a.hash(), ExperimentConfig::default().hash());
    let b = ExperimentConfig { k: 9, ..a.clone() };
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn zero_trials_give_a_header_only_csv() {
    let cfg = ExperimentConfig { trials: 0, ..ExperimentConfig::default() };
    let report = run_experiment(&cfg).unwrap();
    let mut out = Vec::new();
    write_csv(&mut out, &report.rows).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), format!("{CSV_HEADER}\n"));
}

fn small(algo: Algo) -> ExperimentConfig {
    ExperimentConfig {
        algo,
        p: 4,
        n_per_pe: 600,
        k: 5,
        eps: 0.05,
        delta: 0.1,
        dist: Distribution::Zipf { s: 1.0, universe: 300 },
        trials: 2,
        ..ExperimentConfig::default()
    }
}

#[test]
fn every_algorithm_runs_cleanly() {
    for algo in Algo::ALL {
        let mut cfg = small(algo);
        if algo == Algo::Balance {
            cfg.placement = Placement::Skewed;
        }
        if matches!(algo, Algo::Dta | Algo::Rdta) {
            cfg.dist = Distribution::Uniform { universe: 1 << 20 };
        }
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.violations.is_empty(), "{algo}: {:?}", report.violations);
        for row in &report.rows {
            assert!(row.flags.ends_with(&format!("cfg={}", cfg.hash())));
            if !matches!(algo, Algo::Pac | Algo::Naive | Algo::NaiveTree | Algo::SumPac | Algo::Dta) {
                assert!(row.correct, "{algo}: {}", row.to_csv());
            }
        }
    }
}

#[test]
fn reruns_give_identical_rows() {
    for algo in [Algo::Select, Algo::Pec, Algo::SumPac, Algo::Dta] {
        let cfg = small(algo);
        assert_eq!(run_experiment(&cfg).unwrap(), run_experiment(&cfg).unwrap());
    }
}

#[test]
fn trial_seeds_are_distinct() {
    let seeds: std::collections::BTreeSet<u64> = (0..100).map(|t| trial_seed(5, t)).collect();
    assert_eq!(seeds.len(), 100);
    assert_eq!(trial_seed(5, 0), 5);
}

#[test]
fn balance_from_one_pe() {
    let cfg = ExperimentConfig { placement: Placement::OnePe, ..small(Algo::Balance) };
    let report = run_experiment(&cfg).unwrap();
    assert!(report.violations.is_empty());
    assert!(report.rows[0].total_words >= 3 * 600);
}
