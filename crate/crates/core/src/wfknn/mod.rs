//! Website fingerprinting with a weighted-distance k-nearest-neighbour
//! classifier.
//!
//! The pipeline is: ingress cell traces ([`CellTrace`]) are reduced to
//! fixed-length feature vectors ([`features`]), a per-feature weight
//! vector is learned so that same-site instances sit close together
//! ([`knn::learn_weights`]), and a test trace is assigned a site only
//! when all `k` nearest training points agree on it — any disagreement,
//! including a single unmonitored neighbour, abstains to `Unmonitored`
//! ([`knn::classify`]).
//!
//! Training labels and verdicts reuse the shared vocabulary from
//! [`crate::evaluation::metrics`]: a training point is either an
//! instance of a monitored site or an unmonitored background page, and
//! a verdict either names a monitored site or declines to.
//!
//! [`synth::generate_traces`] produces labelled synthetic traces with a
//! tunable separability knob so closed- and open-world experiments run
//! at desk scale without a crawl. [`dataset`] holds the on-disk trace
//! and manifest formats.

pub mod dataset;
pub mod features;
pub mod knn;
pub mod synth;

pub use dataset::{read_dataset, read_trace, write_dataset, write_trace};
pub use features::{extract_features, FeatureVector, F, SENTINEL};
pub use knn::{
    classify, classify_batch, learn_weights, uniform_weights, KnnConfig, Penalty, TrainingSet,
    Weights,
};
pub use synth::{generate_traces, SynthTraceConfig};

use thiserror::Error;

use crate::corpus::SiteId;
use crate::evaluation::metrics::TrueLabel;

#[derive(Debug, Error)]
pub enum WfError {
    #[error("trace has no cells")]
    EmptyTrace,
    #[error("cell {index} moves backwards in time ({prev} -> {cur})")]
    TimeRegression { index: usize, prev: u64, cur: u64 },
    #[error("feature vectors have different lengths ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("weights must be non-negative with a positive sum")]
    BadWeights,
    #[error("k must be at least 1")]
    BadK,
    #[error("training set is empty or has mismatched labels")]
    BadTrainingSet,
    #[error("weight learning needs at least two classes and a class with two instances")]
    DegenerateTraining,
    #[error("only {eligible} eligible training points for k={k}")]
    NotEnoughEligible { eligible: usize, k: usize },
    #[error("separability must lie in [0,1], got {0}")]
    BadSeparability(f64),
    #[error("need at least one site")]
    NoSites,
    #[error("line {line}: malformed trace row: {reason}")]
    Parse { line: usize, reason: String },
    #[error("dataset manifest: {0}")]
    Manifest(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Direction of a cell as seen between the client and its guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// Client to destination (`+1` on disk).
    Outgoing,
    /// Destination to client (`-1` on disk).
    Incoming,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Outgoing => Direction::Incoming,
            Direction::Incoming => Direction::Outgoing,
        }
    }
}

/// One fixed-size cell: a millisecond timestamp and a direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cell {
    pub time_ms: u64,
    pub direction: Direction,
}

/// A labelled, time-ordered cell sequence for one page load.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTrace {
    pub label: TrueLabel,
    pub cells: Vec<Cell>,
}

impl CellTrace {
    /// Builds a trace, rejecting empty sequences and time regressions.
    pub fn new(label: TrueLabel, cells: Vec<Cell>) -> Result<Self, WfError> {
        if cells.is_empty() {
            return Err(WfError::EmptyTrace);
        }
        for (i, pair) in cells.windows(2).enumerate() {
            if pair[1].time_ms < pair[0].time_ms {
                return Err(WfError::TimeRegression {
                    index: i + 1,
                    prev: pair[0].time_ms,
                    cur: pair[1].time_ms,
                });
            }
        }
        Ok(Self { label, cells })
    }

    pub fn site(&self) -> Option<SiteId> {
        match self.label {
            TrueLabel::Monitored(s) => Some(s),
            TrueLabel::Unmonitored => None,
        }
    }
}
