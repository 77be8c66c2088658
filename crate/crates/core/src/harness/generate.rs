use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution as _, Gamma, Poisson};

use crate::error::{param, Error, Result};
use crate::multicriteria::ScoredObject;
use crate::sumagg::WeightedKey;

/// Key distribution of generated inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// Key `i` in `1..=universe` with probability `i^-s / H_{universe,s}`.
    Zipf { s: f64, universe: u64 },
    /// Poisson with a Gamma-distributed rate: `r` successes, success
    /// probability `q`.
    NegativeBinomial { r: f64, q: f64 },
    /// Keys uniform in `1..=universe`.
    Uniform { universe: u64 },
    /// Whitespace-separated keys, dealt to PEs in blocks of `n_per_pe`.
    FromFile(PathBuf),
}

impl Distribution {
    pub const DEFAULT_NEGBIN_R: f64 = 1000.0;
    pub const DEFAULT_NEGBIN_Q: f64 = 0.05;

    pub fn validate(&self) -> Result<()> {
        match *self {
            Distribution::Zipf { s, universe } => {
                if !(s >= 0.0 && s.is_finite()) || universe == 0 {
                    return param(format!("zipf needs s >= 0 and u >= 1, got s = {s}, u = {universe}"));
                }
            }
            Distribution::NegativeBinomial { r, q } => {
                if !(r > 0.0 && q > 0.0 && q < 1.0) {
                    return param(format!("negbin needs r > 0 and 0 < q < 1, got r = {r}, q = {q}"));
                }
            }
            Distribution::Uniform { universe } => {
                if universe == 0 {
                    return param("uniform needs u >= 1");
                }
            }
            Distribution::FromFile(_) => {}
        }
        Ok(())
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Zipf { s, universe } => write!(f, "zipf:s={s},u={universe}"),
            Distribution::NegativeBinomial { r, q } => write!(f, "negbin:r={r},q={q}"),
            Distribution::Uniform { universe } => write!(f, "uniform:u={universe}"),
            Distribution::FromFile(path) => write!(f, "file:{}", path.display()),
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Param(msg.into())
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(format!("bad value {v:?} for {key}")))
}

impl FromStr for Distribution {
    type Err = Error;

    /// `zipf:s=1.0,u=1048576`, `negbin:r=1000,q=0.05`, `uniform:u=1000` or
    /// `file:PATH`. Omitted parameters take their defaults (s = 1,
    /// u = 2^20, r = 1000, q = 0.05).
    fn from_str(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        if kind == "file" {
            if rest.is_empty() {
                return Err(bad("file distribution needs a path"));
            }
            return Ok(Distribution::FromFile(PathBuf::from(rest)));
        }
        let mut s = 1.0;
        let mut u = 1u64 << 20;
        let mut r = Self::DEFAULT_NEGBIN_R;
        let mut q = Self::DEFAULT_NEGBIN_Q;
        for part in rest.split(',').filter(|x| !x.is_empty()) {
            let (key, v) = part.split_once('=').ok_or_else(|| bad(format!("expected key=value, got {part:?}")))?;
            match (kind, key) {
                ("zipf", "s") => s = parse_num(key, v)?,
                ("zipf" | "uniform", "u") => u = parse_num(key, v)?,
                ("negbin", "r") => r = parse_num(key, v)?,
                ("negbin", "q") => q = parse_num(key, v)?,
                _ => return Err(bad(format!("unknown parameter {key:?} for {kind}"))),
            }
        }
        let dist = match kind {
            "zipf" => Distribution::Zipf { s, universe: u },
            "negbin" => Distribution::NegativeBinomial { r, q },
            "uniform" => Distribution::Uniform { universe: u },
            _ => return Err(bad(format!("unknown distribution {kind:?}"))),
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// How elements are spread over the PEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    /// `n_per_pe` elements per PE, all from the same distribution.
    Uniform,
    /// PE `i` (0-based) gets about `2 n_per_pe (i+1) / (p+1)` elements.
    Skewed,
    /// Every element on PE 0.
    OnePe,
    /// `n_per_pe` elements per PE with per-PE parameters: Zipf universe in
    /// `[u - u/16, u]` and exponent in `[s, s + 0.2]`, uniform universe in
    /// `[u - u/16, u]`, negative binomial `r` in `[r - r/16, r]`.
    PerPeRandomParams,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::Uniform => "uniform",
            Placement::Skewed => "skewed",
            Placement::OnePe => "onepe",
            Placement::PerPeRandomParams => "perpe",
        })
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Placement::Uniform),
            "skewed" => Ok(Placement::Skewed),
            "onepe" => Ok(Placement::OnePe),
            "perpe" | "perPeRandomParams" => Ok(Placement::PerPeRandomParams),
            _ => Err(bad(format!("unknown placement {s:?}"))),
        }
    }
}

/// Per-PE element counts for a placement.
pub fn pe_sizes(placement: Placement, p: usize, n_per_pe: usize) -> Vec<usize> {
    match placement {
        Placement::Uniform | Placement::PerPeRandomParams => vec![n_per_pe; p],
        Placement::OnePe => (0..p).map(|i| if i == 0 { p * n_per_pe } else { 0 }).collect(),
        Placement::Skewed => {
            let total = p * n_per_pe;
            let denom = (p * (p + 1) / 2) as u128;
            let mut done = 0usize;
            (0..p)
                .map(|i| {
                    let upto = ((i * (i + 1) / 2 + i + 1) as u128 * total as u128 / denom) as usize;
                    let c = upto - done;
                    done = upto;
                    c
                })
                .collect()
        }
    }
}

/// A sampler for one PE's keys.
enum Sampler {
    Alias(WeightedAliasIndex<f64>),
    NegBin(Gamma<f64>),
    Uniform(u64),
}

impl Sampler {
    fn new(dist: &Distribution) -> Result<Self> {
        match *dist {
            Distribution::Zipf { s, universe } => {
                let w: Vec<f64> = (1..=universe).map(|i| (i as f64).powf(-s)).collect();
                WeightedAliasIndex::new(w).map(Sampler::Alias).map_err(|e| bad(format!("zipf table: {e}")))
            }
            Distribution::NegativeBinomial { r, q } => Gamma::new(r, (1.0 - q) / q)
                .map(Sampler::NegBin)
                .map_err(|e| bad(format!("negative binomial: {e}"))),
            Distribution::Uniform { universe } => Ok(Sampler::Uniform(universe)),
            Distribution::FromFile(_) => param("file inputs are read, not sampled"),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            Sampler::Alias(a) => a.sample(rng) as u64 + 1,
            Sampler::NegBin(g) => {
                let lambda = g.sample(rng);
                if lambda <= 0.0 {
                    0
                } else {
                    Poisson::new(lambda).map_or(0, |d| d.sample(rng) as u64)
                }
            }
            Sampler::Uniform(u) => rng.random_range(1..=*u),
        }
    }
}

fn pe_rng(seed: u64, pe: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pe as u64 + 1);
    rng
}

fn randomized(dist: &Distribution, rng: &mut ChaCha8Rng) -> Distribution {
    match *dist {
        Distribution::Zipf { s, universe } => Distribution::Zipf {
            s: s + rng.random_range(0.0..=0.2),
            universe: rng.random_range(universe - universe / 16..=universe).max(1),
        },
        Distribution::Uniform { universe } => Distribution::Uniform {
            universe: rng.random_range(universe - universe / 16..=universe).max(1),
        },
        Distribution::NegativeBinomial { r, q } => Distribution::NegativeBinomial { r: rng.random_range(r - r / 16.0..=r), q },
        Distribution::FromFile(_) => dist.clone(),
    }
}

/// Reads whitespace-separated keys.
pub fn read_keys(path: &std::path::Path) -> Result<Vec<u64>> {
    let text = std::fs::read_to_string(path)?;
    text.split_whitespace()
        .enumerate()
        .map(|(i, tok)| tok.parse().map_err(|_| bad(format!("{}: token {} is not a key: {tok:?}", path.display(), i + 1))))
        .collect()
}

/// Per-PE key streams, deterministic in `seed`.
pub fn generate(dist: &Distribution, p: usize, n_per_pe: usize, placement: Placement, seed: u64) -> Result<Vec<Vec<u64>>> {
    if p == 0 {
        return param("p must be at least 1");
    }
    dist.validate()?;
    let sizes = pe_sizes(placement, p, n_per_pe);
    if let Distribution::FromFile(path) = dist {
        let keys = read_keys(path)?;
        let need: usize = sizes.iter().sum();
        if keys.len() < need {
            return param(format!("{} holds {} keys, {need} needed", path.display(), keys.len()));
        }
        let mut at = 0;
        return Ok(sizes
            .iter()
            .map(|&c| {
                at += c;
                keys[at - c..at].to_vec()
            })
            .collect());
    }
    let shared = if placement == Placement::PerPeRandomParams { None } else { Some(Sampler::new(dist)?) };
    (0..p)
        .map(|pe| {
            let mut rng = pe_rng(seed, pe);
            let own;
            let sampler = match &shared {
                Some(s) => s,
                None => {
                    own = Sampler::new(&randomized(dist, &mut rng))?;
                    &own
                }
            };
            Ok((0..sizes[pe]).map(|_| sampler.draw(&mut rng)).collect())
        })
        .collect()
}

/// Keys as in [`generate`], each paired with a value uniform in `1..=100`.
pub fn generate_weighted(
    dist: &Distribution,
    p: usize,
    n_per_pe: usize,
    placement: Placement,
    seed: u64,
) -> Result<Vec<Vec<WeightedKey>>> {
    let keys = generate(dist, p, n_per_pe, placement, seed)?;
    Ok(keys
        .into_iter()
        .enumerate()
        .map(|(pe, ks)| {
            let mut rng = pe_rng(seed ^ 0x5bd1_e995, pe);
            ks.into_iter().map(|k| WeightedKey::new(k, rng.random_range(1..=100))).collect()
        })
        .collect())
}

/// Objects with `m` scores drawn from `dist`. Ids are unique across PEs.
pub fn generate_objects(
    dist: &Distribution,
    p: usize,
    n_per_pe: usize,
    placement: Placement,
    m: usize,
    seed: u64,
) -> Result<Vec<Vec<ScoredObject>>> {
    if m == 0 {
        return param("need at least one criterion");
    }
    let sizes = pe_sizes(placement, p, n_per_pe);
    let per_criterion: Vec<Vec<Vec<u64>>> = (0..m)
        .map(|c| generate(dist, p, n_per_pe, placement, seed.wrapping_add(c as u64 * 0x9e37_79b9)))
        .collect::<Result<_>>()?;
    let mut next = 0u64;
    Ok((0..p)
        .map(|pe| {
            (0..sizes[pe])
                .map(|i| {
                    next += 1;
                    ScoredObject::new(next, per_criterion.iter().map(|c| c[pe][i]).collect())
                })
                .collect()
        })
        .collect())
}
