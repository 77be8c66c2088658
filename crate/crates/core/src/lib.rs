//! Communication-efficient top-k algorithms on a simulated distributed-memory
//! machine.
//!
//! All algorithms are SPMD programs over [`simnet`]: each of `p` processing
//! elements runs the same code and communicates only through collectives and
//! point-to-point messages, whose cost is recorded in a [`CostLedger`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bpq;
pub mod error;
pub mod freq;
pub mod harness;
pub mod multicriteria;
pub mod oracle;
pub mod redistribute;
pub mod sampling;
pub mod selection;
pub mod simnet;
pub mod sumagg;

pub use error::{Error, Result};
pub use multicriteria::{Ranked, ScoredObject};
pub use sampling::ErrorBudget;
pub use selection::Element;
pub use simnet::{CostLedger, CostModel, CountedKey, PeContext, Simulator, TrafficClass};
pub use sumagg::WeightedKey;
