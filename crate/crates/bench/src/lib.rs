//! Input fixtures shared by the benchmarks in `benches/`.

use topk_core::harness::{generate, generate_weighted, Distribution, Placement};
use topk_core::{Element, WeightedKey};

pub const ZIPF: Distribution = Distribution::Zipf { s: 1.0, universe: 1 << 16 };

pub fn zipf_keys(p: usize, n_per_pe: usize) -> Vec<Vec<u64>> {
    generate(&ZIPF, p, n_per_pe, Placement::Uniform, 42).expect("valid fixture")
}

pub fn weighted_keys(p: usize, n_per_pe: usize) -> Vec<Vec<WeightedKey>> {
    generate_weighted(&ZIPF, p, n_per_pe, Placement::Uniform, 42).expect("valid fixture")
}

pub fn elements(p: usize, n_per_pe: usize) -> Vec<Vec<Element>> {
    let keys = generate(&Distribution::Uniform { universe: 1 << 40 }, p, n_per_pe, Placement::Uniform, 7).expect("valid fixture");
    keys.iter().enumerate().map(|(pe, k)| Element::tag_all(k, pe)).collect()
}

pub fn skewed_keys(p: usize, n_per_pe: usize) -> Vec<Vec<u64>> {
    generate(&Distribution::Uniform { universe: 1 << 40 }, p, n_per_pe, Placement::Skewed, 3).expect("valid fixture")
}
