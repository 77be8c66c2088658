//! Multicriteria top-k over `m` score lists.
//!
//! Each PE owns a set of objects together with all `m` of their scores and
//! keeps one list per criterion sorted by decreasing score. An object's
//! relevance is `t(x_1, ..., x_m)` for a monotone [`ScoringFn`].
//!
//! [`ta_reference`] is the sequential threshold algorithm, [`rdta_top_k`]
//! assumes randomly placed objects and [`dta_scan`] with [`dta_finish`]
//! handles arbitrary placement.

mod dta;
mod io;
mod ta;

pub use dta::{dta_finish, dta_scan, exact_hit_count, hit_estimate, samples_per_list, DtaConfig, DtaFinish, DtaScan, EstimatorForm};
pub use io::{read_instance, write_instance, Instance};
pub use ta::{rdta_top_k, ta_reference, LocalTa, RdtaResult, TaResult};

use std::collections::HashMap;

use crate::error::{param, Result};
use crate::simnet::{FixedWords, Payload};

/// An object with one score per criterion.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScoredObject {
    pub id: u64,
    pub scores: Vec<u64>,
}

impl ScoredObject {
    pub fn new(id: u64, scores: Vec<u64>) -> Self {
        ScoredObject { id, scores }
    }
}

/// A list entry ordered best first: higher score, then smaller id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ranked {
    inverted: u64,
    pub id: u64,
}

impl Ranked {
    pub fn new(score: u64, id: u64) -> Self {
        Ranked { inverted: u64::MAX - score, id }
    }

    pub fn score(&self) -> u64 {
        u64::MAX - self.inverted
    }
}

impl Payload for Ranked {
    fn words(&self) -> usize {
        2
    }
}

impl FixedWords for Ranked {
    const WORDS: usize = 2;
}

/// Monotone aggregation of the per-criterion scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoringFn {
    /// `sum w_i x_i`, saturating at `u64::MAX`.
    WeightedSum(Vec<u64>),
    Min,
}

impl ScoringFn {
    /// Unit weights.
    pub fn sum(m: usize) -> Self {
        ScoringFn::WeightedSum(vec![1; m])
    }

    pub fn eval(&self, x: &[u64]) -> u64 {
        match self {
            ScoringFn::WeightedSum(w) => w
                .iter()
                .zip(x)
                .fold(0u64, |acc, (&w, &x)| acc.saturating_add(w.saturating_mul(x))),
            ScoringFn::Min => x.iter().copied().min().unwrap_or(0),
        }
    }

    fn check(&self, m: usize) -> Result<()> {
        match self {
            ScoringFn::WeightedSum(w) if w.len() != m => {
                param(format!("{} weights for {m} criteria", w.len()))
            }
            _ => Ok(()),
        }
    }
}

/// One PE's objects: `m` lists sorted best first plus an id index used for
/// random accesses.
#[derive(Debug, Clone, Default)]
pub struct ScoreLists {
    m: usize,
    lists: Vec<Vec<Ranked>>,
    index: HashMap<u64, Vec<u64>>,
}

impl ScoreLists {
    /// Builds the lists; every object must carry exactly `m` scores and ids
    /// must be distinct.
    pub fn new(m: usize, objects: Vec<ScoredObject>) -> Result<Self> {
        if m == 0 {
            return param("at least one criterion is required");
        }
        let mut lists = vec![Vec::with_capacity(objects.len()); m];
        let mut index = HashMap::with_capacity(objects.len());
        for o in objects {
            if o.scores.len() != m {
                return param(format!("object {} has {} scores, expected {m}", o.id, o.scores.len()));
            }
            for (list, &s) in lists.iter_mut().zip(&o.scores) {
                list.push(Ranked::new(s, o.id));
            }
            if index.insert(o.id, o.scores).is_some() {
                return param(format!("duplicate object id {}", o.id));
            }
        }
        for list in &mut lists {
            list.sort_unstable();
        }
        Ok(ScoreLists { m, lists, index })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// List of criterion `i`, best first.
    pub fn list(&self, i: usize) -> &[Ranked] {
        &self.lists[i]
    }

    /// All scores of a local object.
    pub fn scores(&self, id: u64) -> Option<&[u64]> {
        self.index.get(&id).map(Vec::as_slice)
    }

    pub fn relevance(&self, id: u64, t: &ScoringFn) -> Option<u64> {
        self.scores(id).map(|s| t.eval(s))
    }

    pub fn objects(&self) -> impl Iterator<Item = ScoredObject> + '_ {
        self.index.iter().map(|(&id, s)| ScoredObject::new(id, s.clone()))
    }
}
