//! Verdict accounting shared by every classifier in the toolkit.
//!
//! A test trace is either a visit to a monitored site or unmonitored
//! background; a verdict names a monitored site or abstains. The four
//! counts partition the test set:
//!
//! * tp — verdict names the true monitored site,
//! * fp — verdict names a monitored site that is not the true label
//!   (a wrong monitored site, or any site for unmonitored traffic),
//! * tn — unmonitored traffic left unnamed,
//! * fn — monitored traffic left unnamed.
//!
//! Naming the wrong monitored site is a false positive and, for its
//! true class, a miss; the per-class recall bookkeeping reflects the
//! miss while the four-way partition counts the trace exactly once.

use serde::{Deserialize, Serialize};

use crate::corpus::SiteId;

/// Ground truth of a test trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrueLabel {
    Monitored(SiteId),
    Unmonitored,
}

/// A classifier's verdict for a test trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Monitored(SiteId),
    Unmonitored,
}

impl Verdict {
    pub fn is_positive(&self) -> bool {
        matches!(self, Verdict::Monitored(_))
    }
}

/// Confusion counts over one test set (or one fold of it).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    /// Files one (truth, verdict) pair into the partition.
    pub fn record(&mut self, truth: TrueLabel, verdict: Verdict) {
        match (truth, verdict) {
            (TrueLabel::Monitored(s), Verdict::Monitored(v)) if s == v => self.tp += 1,
            (_, Verdict::Monitored(_)) => self.fp += 1,
            (TrueLabel::Monitored(_), Verdict::Unmonitored) => self.fn_ += 1,
            (TrueLabel::Unmonitored, Verdict::Unmonitored) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fp
    }

    /// `tp / (tp + fn)`; 0 when no monitored trace was correctly
    /// classifiable (empty denominator).
    pub fn recall(&self) -> f64 {
        let d = self.tp + self.fn_;
        if d == 0 {
            0.0
        } else {
            self.tp as f64 / d as f64
        }
    }

    /// `tp / (tp + fp)`; 0 when the classifier made no positive verdict.
    pub fn precision(&self) -> f64 {
        let d = self.tp + self.fp;
        if d == 0 {
            0.0
        } else {
            self.tp as f64 / d as f64
        }
    }

    pub fn merge(&mut self, other: &Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

/// Cross-validated result: per-fold counts plus the pooled totals.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvalResult {
    pub per_fold: Vec<Counts>,
    pub totals: Counts,
}

impl EvalResult {
    pub fn from_folds(per_fold: Vec<Counts>) -> Self {
        let mut totals = Counts::default();
        for c in &per_fold {
            totals.merge(c);
        }
        Self { per_fold, totals }
    }

    pub fn recall(&self) -> f64 {
        self.totals.recall()
    }

    pub fn precision(&self) -> f64 {
        self.totals.precision()
    }
}
