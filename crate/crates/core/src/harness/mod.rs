//! Input generators and the experiment runner.
//!
//! An [`ExperimentConfig`] names an algorithm and its parameters.
//! [`run_experiment`] executes independent trials on fresh simulators and
//! returns one [`ExperimentRow`] per trial with the ledger counters, the
//! error against a sequential oracle and any hard invariant violations.

mod generate;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use generate::{generate, generate_objects, generate_weighted, pe_sizes, read_keys, Distribution, Placement};

use crate::bpq::BulkQueue;
use crate::error::{Error, Result};
use crate::freq::{self, FreqResult, FreqShare, PecConfig, PecStage1};
use crate::multicriteria::{dta_finish, dta_scan, rdta_top_k, DtaConfig, ScoreLists, ScoringFn};
use crate::oracle;
use crate::redistribute::{balance, Balanced, BalanceRole};
use crate::sampling::ErrorBudget;
use crate::selection::{ams_select, ms_select, select_unsorted, Element, SelectConfig, SortedRun};
use crate::simnet::{ceil_log2, CostLedger, Simulator};
use crate::sumagg::{self, SumResult, SumShare};

/// Algorithms the runner can execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    Select,
    MsSelect,
    AmsSelect,
    Bpq,
    Dta,
    Rdta,
    Pac,
    Ec,
    Pec,
    Naive,
    NaiveTree,
    SumPac,
    SumEc,
    Balance,
}

impl Algo {
    pub const ALL: [Algo; 14] = [
        Algo::Select,
        Algo::MsSelect,
        Algo::AmsSelect,
        Algo::Bpq,
        Algo::Dta,
        Algo::Rdta,
        Algo::Pac,
        Algo::Ec,
        Algo::Pec,
        Algo::Naive,
        Algo::NaiveTree,
        Algo::SumPac,
        Algo::SumEc,
        Algo::Balance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Select => "select",
            Algo::MsSelect => "msselect",
            Algo::AmsSelect => "amsselect",
            Algo::Bpq => "bpq",
            Algo::Dta => "dta",
            Algo::Rdta => "rdta",
            Algo::Pac => "pac",
            Algo::Ec => "ec",
            Algo::Pec => "pec",
            Algo::Naive => "naive",
            Algo::NaiveTree => "naivetree",
            Algo::SumPac => "sumpac",
            Algo::SumEc => "sumec",
            Algo::Balance => "balance",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Param(format!("unknown algorithm {s:?}")))
    }
}

/// Everything that determines the rows of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algo: Algo,
    pub p: usize,
    pub n_per_pe: usize,
    pub k: u64,
    pub eps: f64,
    pub delta: f64,
    pub dist: Distribution,
    pub placement: Placement,
    pub seed: u64,
    pub trials: usize,
    /// Criteria per object for `dta` and `rdta`.
    pub criteria: usize,
    /// Probes per round for `amsselect`.
    pub batch: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algo: Algo::Pac,
            p: 8,
            n_per_pe: 1 << 14,
            k: 8,
            eps: 0.01,
            delta: 0.05,
            dist: Distribution::Zipf { s: 1.0, universe: 1 << 20 },
            placement: Placement::Uniform,
            seed: 1,
            trials: 1,
            criteria: 2,
            batch: 1,
        }
    }
}

/// Keys accepted by [`ExperimentConfig::set`], matching the CLI flags.
pub const CONFIG_KEYS: [&str; 12] =
    ["algo", "pes", "n-per-pe", "k", "eps", "delta", "dist", "placement", "seed", "trials", "criteria", "batch"];

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Param(format!("bad value {v:?} for {key}")))
}

impl ExperimentConfig {
    /// Sets one parameter by its key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "algo" => self.algo = v.parse()?,
            "pes" => self.p = num(key, v)?,
            "n-per-pe" => self.n_per_pe = num(key, v)?,
            "k" => self.k = num(key, v)?,
            "eps" => self.eps = num(key, v)?,
            "delta" => self.delta = num(key, v)?,
            "dist" => self.dist = v.parse()?,
            "placement" => self.placement = v.parse()?,
            "seed" => self.seed = num(key, v)?,
            "trials" => self.trials = num(key, v)?,
            "criteria" => self.criteria = num(key, v)?,
            "batch" => self.batch = num(key, v)?,
            other => return Err(Error::Param(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Param("pes must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Param("k must be at least 1".into()));
        }
        if self.criteria == 0 || self.batch == 0 {
            return Err(Error::Param("criteria and batch must be at least 1".into()));
        }
        ErrorBudget::new(self.eps, self.delta)?;
        self.dist.validate()
    }

    /// `key=value` pairs in a fixed order.
    pub fn canonical(&self) -> String {
        format!(
            "algo={} pes={} n-per-pe={} k={} eps={} delta={} dist={} placement={} seed={} trials={} criteria={} batch={}",
            self.algo,
            self.p,
            self.n_per_pe,
            self.k,
            self.eps,
            self.delta,
            self.dist,
            self.placement,
            self.seed,
            self.trials,
            self.criteria,
            self.batch
        )
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn budget(&self) -> ErrorBudget {
        ErrorBudget { eps: self.eps, delta: self.delta }
    }
}

/// Parses line-based `key=value` text. Blank lines and `#` comments are
/// skipped; later lines override earlier ones.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, message: format!("expected key=value, got {line:?}") })?;
        let k = k.trim();
        if !CONFIG_KEYS.contains(&k) {
            return Err(Error::Parse { line: i + 1, message: format!("unknown key {k:?}") });
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// One trial of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub algo: Algo,
    pub p: usize,
    pub n_per_pe: usize,
    pub k: u64,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub trial: usize,
    pub startups: u64,
    pub bottleneck_words: u64,
    pub total_words: u64,
    pub abs_error: u64,
    pub rel_error: f64,
    pub correct: bool,
    pub rounds: u64,
    /// `;`-separated, always ending in `cfg=<hash>`.
    pub flags: String,
}

pub const CSV_HEADER: &str =
    "algo,p,nPerPe,k,eps,delta,seed,trial,startups,bottleneckWords,totalWords,absError,relError,correct,rounds,flags";

impl ExperimentRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.algo,
            self.p,
            self.n_per_pe,
            self.k,
            self.eps,
            self.delta,
            self.seed,
            self.trial,
            self.startups,
            self.bottleneck_words,
            self.total_words,
            self.abs_error,
            self.rel_error,
            self.correct,
            self.rounds,
            self.flags
        )
    }
}

pub fn write_csv(mut w: impl Write, rows: &[ExperimentRow]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    Ok(())
}

/// Rows of a run plus the hard invariant violations found.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub rows: Vec<ExperimentRow>,
    /// `(trial, description)`.
    pub violations: Vec<(usize, String)>,
}

/// What a single trial measured, before it becomes a row.
struct Outcome {
    abs_error: u64,
    rel_error: f64,
    correct: bool,
    rounds: u64,
    flags: Vec<&'static str>,
    violation: Option<String>,
}

impl Outcome {
    fn exact(correct: bool, rounds: u64, what: &str) -> Self {
        Outcome {
            abs_error: u64::from(!correct),
            rel_error: if correct { 0.0 } else { 1.0 },
            correct,
            rounds,
            flags: Vec::new(),
            violation: (!correct).then(|| format!("{what} differs from the oracle")),
        }
    }
}

/// Seed of trial `t`: the configured seed for trial 0, then a SplitMix64
/// step per trial.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut z = seed.wrapping_add((trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    if trial == 0 {
        return seed;
    }
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `cfg.trials` trials, in parallel, and returns the rows in trial
/// order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let hash = cfg.hash();
    let results: Vec<Result<(ExperimentRow, Option<String>)>> =
        (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t, &hash)).collect();
    let mut report = Report::default();
    for (t, r) in results.into_iter().enumerate() {
        let (row, violation) = r?;
        report.rows.push(row);
        if let Some(v) = violation {
            report.violations.push((t, v));
        }
    }
    Ok(report)
}

/// Runs the same configuration for every PE count in `pes`.
pub fn run_sweep(cfg: &ExperimentConfig, pes: &[usize]) -> Result<Report> {
    let mut report = Report::default();
    for &p in pes {
        let r = run_experiment(&ExperimentConfig { p, ..cfg.clone() })?;
        let offset = report.rows.len();
        report.rows.extend(r.rows);
        report.violations.extend(r.violations.into_iter().map(|(t, v)| (t + offset, v)));
    }
    Ok(report)
}

fn run_trial(cfg: &ExperimentConfig, trial: usize, hash: &str) -> Result<(ExperimentRow, Option<String>)> {
    let seed = trial_seed(cfg.seed, trial);
    let (out, ledger) = dispatch(cfg, seed)?;
    let mut flags: Vec<String> = out.flags.iter().map(|f| f.to_string()).collect();
    flags.push(format!("cfg={hash}"));
    let row = ExperimentRow {
        algo: cfg.algo,
        p: cfg.p,
        n_per_pe: cfg.n_per_pe,
        k: cfg.k,
        eps: cfg.eps,
        delta: cfg.delta,
        seed,
        trial,
        startups: ledger.max_startups(),
        bottleneck_words: ledger.bottleneck_words(),
        total_words: ledger.total_words(),
        abs_error: out.abs_error,
        rel_error: out.rel_error,
        correct: out.correct,
        rounds: out.rounds,
        flags: flags.join(";"),
    };
    Ok((row, out.violation))
}

fn dispatch(cfg: &ExperimentConfig, seed: u64) -> Result<(Outcome, CostLedger)> {
    let sim = Simulator::new(cfg.p, seed)?;
    match cfg.algo {
        Algo::Select | Algo::MsSelect | Algo::AmsSelect | Algo::Bpq => run_selection(cfg, &sim, seed),
        Algo::Dta | Algo::Rdta => run_multicriteria(cfg, &sim, seed),
        Algo::Pac | Algo::Ec | Algo::Pec | Algo::Naive | Algo::NaiveTree => run_freq(cfg, &sim, seed),
        Algo::SumPac | Algo::SumEc => run_sum(cfg, &sim, seed),
        Algo::Balance => run_balance(cfg, &sim, seed),
    }
}

fn tagged(streams: Vec<Vec<u64>>) -> Vec<Vec<Element>> {
    streams.iter().enumerate().map(|(pe, s)| Element::tag_all(s, pe)).collect()
}

fn run_selection(cfg: &ExperimentConfig, sim: &Simulator, seed: u64) -> Result<(Outcome, CostLedger)> {
    let input = tagged(generate(&cfg.dist, cfg.p, cfg.n_per_pe, cfg.placement, seed)?);
    let all: Vec<Element> = input.iter().flatten().copied().collect();
    let n = all.len() as u64;
    let k = cfg.k.min(n);
    let mut sorted = all.clone();
    sorted.sort_unstable();
    let batch = cfg.batch;
    match cfg.algo {
        Algo::Select => {
            let run = sim.run_with_inputs(input, move |ctx, local| select_unsorted(ctx, local, k, &SelectConfig::default()))?;
            let mut got = Vec::new();
            let mut levels = 0;
            for r in run.results {
                let r = r?;
                levels = levels.max(r.levels);
                got.extend(r.items);
            }
            got.sort_unstable();
            Ok((Outcome::exact(got[..] == sorted[..k as usize], u64::from(levels), "selection"), run.ledger))
        }
        Algo::MsSelect => {
            if k == 0 {
                return Ok((Outcome::exact(true, 0, "selection"), CostLedger::new(cfg.p)));
            }
            let run = sim.run_with_inputs(input, move |ctx, local| ms_select(ctx, &SortedRun::new(local), k))?;
            let mut rounds = 0;
            let mut ok = true;
            let mut count = 0;
            for r in run.results {
                let r = r?;
                rounds = r.rounds;
                ok &= r.element == sorted[k as usize - 1];
                count += r.local_count as u64;
            }
            Ok((Outcome::exact(ok && count == k, u64::from(rounds), "rank-k element"), run.ledger))
        }
        Algo::AmsSelect => {
            if k == 0 {
                return Ok((Outcome::exact(true, 0, "selection"), CostLedger::new(cfg.p)));
            }
            let hi = (2 * k).min(n);
            let run = sim.run_with_inputs(input, move |ctx, local| {
                let run = SortedRun::new(local);
                ams_select(ctx, &run, k, hi, batch).map(|s| (s, run.into_elements()))
            })?;
            let mut rounds = 0;
            let mut got = Vec::new();
            let mut global = 0;
            for r in run.results {
                let (s, elems) = r?;
                rounds = s.rounds;
                global = s.global_count;
                got.extend_from_slice(&elems[..s.local_count]);
            }
            got.sort_unstable();
            let ok = (k..=hi).contains(&global) && got[..] == sorted[..global as usize];
            Ok((Outcome::exact(ok, u64::from(rounds), "flexible selection"), run.ledger))
        }
        _ => {
            let run = sim.run_with_inputs(input, move |ctx, local| {
                let mut q = BulkQueue::new(seed ^ ctx.rank() as u64);
                q.insert_bulk(local);
                q.delete_min_fixed(ctx, k).map(|v| (v, q.last_rounds))
            })?;
            let mut got = Vec::new();
            let mut rounds = 0;
            for r in run.results {
                let (v, rd) = r?;
                rounds = rd;
                got.extend(v);
            }
            got.sort_unstable();
            Ok((Outcome::exact(got[..] == sorted[..k as usize], u64::from(rounds), "deleteMin"), run.ledger))
        }
    }
}

fn run_multicriteria(cfg: &ExperimentConfig, sim: &Simulator, seed: u64) -> Result<(Outcome, CostLedger)> {
    let m = cfg.criteria;
    let objects = generate_objects(&cfg.dist, cfg.p, cfg.n_per_pe, cfg.placement, m, seed)?;
    let total = objects.iter().map(Vec::len).sum::<usize>() as u64;
    let k = cfg.k.min(total);
    let t = ScoringFn::sum(m);
    let mut expect: Vec<u64> = oracle::exact_top_k_scored(
        objects.iter().flatten().map(|o| (o.id, &o.scores[..])),
        |x| t.eval(x),
        k as usize,
    )
    .into_iter()
    .map(|(_, s)| s)
    .collect();
    expect.sort_unstable();
    let lists: Vec<ScoreLists> = objects.into_iter().map(|o| ScoreLists::new(m, o)).collect::<Result<_>>()?;
    let algo = cfg.algo;
    let tt = t.clone();
    let run = sim.run_with_inputs(lists, move |ctx, lists| -> Result<(Vec<u64>, u32, Vec<&'static str>)> {
        if algo == Algo::Rdta {
            let r = rdta_top_k(ctx, &lists, &tt, k)?;
            return Ok((r.top.iter().map(|x| x.score()).collect(), r.rounds, Vec::new()));
        }
        let scan = dta_scan(ctx, &lists, &tt, k, &DtaConfig::default())?;
        let fin = dta_finish(ctx, &lists, &tt, &scan, k)?;
        let mut flags = Vec::new();
        if scan.exhausted {
            flags.push("exhausted");
        }
        if fin.shortfall {
            flags.push("shortfall");
        }
        Ok((fin.top.iter().map(|x| x.score()).collect(), scan.rounds, flags))
    })?;
    let mut got = Vec::new();
    let mut rounds = 0;
    let mut flags = Vec::new();
    for r in run.results {
        let (s, rd, f) = r?;
        got.extend(s);
        rounds = rd;
        flags = f;
    }
    got.sort_unstable();
    // Elements of the exact top-k score multiset that the output misses.
    let mut missed = 0u64;
    let mut j = 0;
    for &s in &expect {
        while j < got.len() && got[j] < s {
            j += 1;
        }
        if j < got.len() && got[j] == s {
            j += 1;
        } else {
            missed += 1;
        }
    }
    let correct = missed == 0 && got.len() == expect.len();
    let violation = (algo == Algo::Rdta && !correct).then(|| "rdta result differs from the oracle".to_string());
    let out = Outcome {
        abs_error: missed,
        rel_error: if k == 0 { 0.0 } else { missed as f64 / k as f64 },
        correct,
        rounds: u64::from(rounds),
        flags,
        violation,
    };
    Ok((out, run.ledger))
}

fn freq_flags(res: &FreqResult) -> Vec<&'static str> {
    let mut f = Vec::new();
    if res.info.truncated {
        f.push("truncated");
    }
    if res.info.probably_exact {
        f.push("probably_exact");
    }
    if res.info.approximate {
        f.push("approximate");
    }
    if res.info.rho >= 1.0 {
        f.push("full_sample");
    }
    f
}

/// Runs one of the most-frequent-keys algorithms on the given streams.
pub fn freq_share(algo: Algo, ctx: &mut crate::PeContext<'_>, input: &[u64], k: u64, budget: ErrorBudget, dist: &Distribution) -> Result<FreqShare> {
    match algo {
        Algo::Pac => freq::pac_top_k(ctx, input, k, budget),
        Algo::Ec => freq::ec_top_k(ctx, input, k, budget),
        Algo::Pec => {
            let mut pec = PecConfig::from_budget(budget);
            if let Distribution::Zipf { s, universe } = *dist {
                if s > 0.0 {
                    pec.stage1 = PecStage1::Zipf { s, universe };
                }
            }
            freq::pec_top_k(ctx, input, k, &pec)
        }
        Algo::Naive => freq::naive_top_k(ctx, input, k, budget, false),
        Algo::NaiveTree => freq::naive_top_k(ctx, input, k, budget, true),
        other => Err(Error::Param(format!("{other} is not a frequency algorithm"))),
    }
}

fn run_freq(cfg: &ExperimentConfig, sim: &Simulator, seed: u64) -> Result<(Outcome, CostLedger)> {
    let streams = generate(&cfg.dist, cfg.p, cfg.n_per_pe, cfg.placement, seed)?;
    let counts = oracle::exact_counts(&streams);
    let n: u64 = counts.values().sum();
    let (algo, k, budget, dist) = (cfg.algo, cfg.k, cfg.budget(), cfg.dist.clone());
    let run = sim.run_with_inputs(streams, move |ctx, s| freq_share(algo, ctx, &s, k, budget, &dist))?;
    let shares = run.results.into_iter().collect::<Result<Vec<_>>>()?;
    let res = FreqResult::from_shares(&shares);
    let abs = oracle::absolute_error(&counts, &res.keys());
    let rel = if n == 0 { 0.0 } else { abs as f64 / n as f64 };
    let bad = res.top.iter().find(|e| e.exact && counts.get(&e.key).copied().unwrap_or(0) != e.count);
    let out = Outcome {
        abs_error: abs,
        rel_error: rel,
        correct: rel <= cfg.eps,
        rounds: 0,
        flags: freq_flags(&res),
        violation: bad.map(|e| format!("key {} flagged exact with count {}, oracle {}", e.key, e.count, counts.get(&e.key).copied().unwrap_or(0))),
    };
    Ok((out, run.ledger))
}

fn run_sum(cfg: &ExperimentConfig, sim: &Simulator, seed: u64) -> Result<(Outcome, CostLedger)> {
    let streams = generate_weighted(&cfg.dist, cfg.p, cfg.n_per_pe, cfg.placement, seed)?;
    let tuples: Vec<Vec<(u64, u64)>> = streams.iter().map(|s| s.iter().map(|w| (w.key, w.value)).collect()).collect();
    let sums = oracle::exact_sums(&tuples);
    let weight: u64 = sums.values().sum();
    let (algo, k, budget) = (cfg.algo, cfg.k, cfg.budget());
    let run = sim.run_with_inputs(streams, move |ctx, s| -> Result<SumShare> {
        if algo == Algo::SumEc {
            sumagg::sum_ec_top_k(ctx, &s, k, budget)
        } else {
            sumagg::sum_pac_top_k(ctx, &s, k, budget)
        }
    })?;
    let shares = run.results.into_iter().collect::<Result<Vec<_>>>()?;
    let res = SumResult::from_shares(&shares);
    let abs = oracle::absolute_error(&sums, &res.keys());
    let rel = if weight == 0 { 0.0 } else { abs as f64 / weight as f64 };
    let mut flags = Vec::new();
    if res.info.skewed {
        flags.push("skewed");
    }
    if res.info.truncated {
        flags.push("truncated");
    }
    let violation = if res.info.max_local_deviation >= 1.0 {
        Some(format!("sample deviation {} >= 1", res.info.max_local_deviation))
    } else {
        res.top
            .iter()
            .find(|e| e.exact && sums.get(&e.key).copied().unwrap_or(0) != e.sum)
            .map(|e| format!("key {} flagged exact with sum {}, oracle {}", e.key, e.sum, sums.get(&e.key).copied().unwrap_or(0)))
    };
    let out = Outcome { abs_error: abs, rel_error: rel, correct: rel <= cfg.eps, rounds: 0, flags, violation };
    Ok((out, run.ledger))
}

/// Checks the postconditions of [`balance`] against the input. Returns a
/// description of the first one that fails.
pub fn check_balance(inputs: &[Vec<u64>], out: &[Balanced<u64>], ledger: &CostLedger) -> Option<String> {
    let p = inputs.len() as u64;
    let n: u64 = inputs.iter().map(|v| v.len() as u64).sum();
    let n_bar = n.div_ceil(p.max(1));
    let mut before: Vec<u64> = inputs.iter().flatten().copied().collect();
    let mut after: Vec<u64> = out.iter().flat_map(|b| b.elements.iter().copied()).collect();
    before.sort_unstable();
    after.sort_unstable();
    if before != after {
        return Some("element multiset changed".into());
    }
    let mut surplus = 0;
    for (pe, b) in out.iter().enumerate() {
        if b.elements.len() as u64 > n_bar {
            return Some(format!("PE {pe} holds {} > {n_bar}", b.elements.len()));
        }
        match b.plan.role {
            BalanceRole::Sender { surplus: s } => {
                surplus += s;
                if ledger.payload_received(pe) != 0 || ledger.payload_sent(pe) != s {
                    return Some(format!("sender {pe} moved the wrong payload"));
                }
            }
            BalanceRole::Receiver { deficit } => {
                if ledger.payload_sent(pe) != 0 || ledger.payload_received(pe) > deficit {
                    return Some(format!("receiver {pe} moved the wrong payload"));
                }
            }
        }
    }
    if ledger.total_payload_words() != surplus {
        return Some(format!("payload {} != surplus {surplus}", ledger.total_payload_words()));
    }
    None
}

fn run_balance(cfg: &ExperimentConfig, sim: &Simulator, seed: u64) -> Result<(Outcome, CostLedger)> {
    let inputs = generate(&cfg.dist, cfg.p, cfg.n_per_pe, cfg.placement, seed)?;
    let run = sim.run_with_inputs(inputs.clone(), balance)?;
    let violation = check_balance(&inputs, &run.results, &run.ledger);
    let mut flags = Vec::new();
    if run.results.first().is_some_and(|b| b.plan.slack > 0) {
        flags.push("slack");
    }
    let out = Outcome {
        abs_error: u64::from(violation.is_some()),
        rel_error: 0.0,
        correct: violation.is_none(),
        rounds: u64::from(ceil_log2(cfg.p)),
        flags,
        violation,
    };
    Ok((out, run.ledger))
}

#[cfg(test)]
mod tests;
