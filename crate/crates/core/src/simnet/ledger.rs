use crate::error::{param, Result};

/// Latency and per-word costs of the α/β model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub alpha: f64,
    pub beta: f64,
}

impl CostModel {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0) {
            return param(format!("cost model needs alpha >= 0 and beta >= 0, got ({alpha}, {beta})"));
        }
        Ok(Self { alpha, beta })
    }
}

impl Default for CostModel {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }
}

/// Which accounting bucket a message belongs to.
///
/// Every word is counted in the totals; control words are additionally
/// tracked on their own so that algorithms can separate bookkeeping traffic
/// (counts, prefix sums, merge keys) from the data they move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrafficClass {
    #[default]
    Payload,
    Control,
}

/// Per-PE communication counters of one simulation run.
///
/// All counters only ever grow while the run is in progress.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CostLedger {
    pub sent_words: Vec<u64>,
    pub received_words: Vec<u64>,
    pub control_sent: Vec<u64>,
    pub control_received: Vec<u64>,
    pub startups: Vec<u64>,
    pub messages: u64,
    pub collectives: u64,
}

impl CostLedger {
    pub fn new(p: usize) -> Self {
        Self {
            sent_words: vec![0; p],
            received_words: vec![0; p],
            control_sent: vec![0; p],
            control_received: vec![0; p],
            startups: vec![0; p],
            messages: 0,
            collectives: 0,
        }
    }

    pub fn p(&self) -> usize {
        self.startups.len()
    }

    pub(crate) fn charge(&mut self, from: usize, to: usize, words: u64, class: TrafficClass) {
        self.sent_words[from] += words;
        self.received_words[to] += words;
        if class == TrafficClass::Control {
            self.control_sent[from] += words;
            self.control_received[to] += words;
        }
    }

    /// Maximum over PEs of the larger of words sent and words received.
    pub fn bottleneck_words(&self) -> u64 {
        self.sent_words
            .iter()
            .zip(&self.received_words)
            .map(|(s, r)| *s.max(r))
            .max()
            .unwrap_or(0)
    }

    pub fn total_words(&self) -> u64 {
        self.sent_words.iter().sum()
    }

    pub fn max_startups(&self) -> u64 {
        self.startups.iter().copied().max().unwrap_or(0)
    }

    pub fn payload_sent(&self, pe: usize) -> u64 {
        self.sent_words[pe] - self.control_sent[pe]
    }

    pub fn payload_received(&self, pe: usize) -> u64 {
        self.received_words[pe] - self.control_received[pe]
    }

    pub fn total_payload_words(&self) -> u64 {
        (0..self.p()).map(|pe| self.payload_sent(pe)).sum()
    }

    /// α times the largest number of startups any PE paid.
    pub fn latency_charge(&self, cost: &CostModel) -> f64 {
        cost.alpha * self.max_startups() as f64
    }

    /// Modelled time of the slowest PE: `α·startups + β·max(sent, received)`.
    pub fn modeled_time(&self, cost: &CostModel) -> f64 {
        (0..self.p())
            .map(|pe| {
                let words = self.sent_words[pe].max(self.received_words[pe]);
                cost.alpha * self.startups[pe] as f64 + cost.beta * words as f64
            })
            .fold(0.0, f64::max)
    }

    /// Counter-wise difference `self - earlier`, for measuring one phase of a run.
    pub fn since(&self, earlier: &CostLedger) -> CostLedger {
        let sub = |a: &[u64], b: &[u64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        CostLedger {
            sent_words: sub(&self.sent_words, &earlier.sent_words),
            received_words: sub(&self.received_words, &earlier.received_words),
            control_sent: sub(&self.control_sent, &earlier.control_sent),
            control_received: sub(&self.control_received, &earlier.control_received),
            startups: sub(&self.startups, &earlier.startups),
            messages: self.messages - earlier.messages,
            collectives: self.collectives - earlier.collectives,
        }
    }
}
