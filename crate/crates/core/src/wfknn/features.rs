//! Feature extraction from cell traces.
//!
//! Every trace maps to a vector of [`F`] = 46 reals with a fixed
//! layout:
//!
//! | slot    | meaning                                              |
//! |---------|------------------------------------------------------|
//! | 0       | total cell count                                     |
//! | 1       | outgoing cell count                                  |
//! | 2       | incoming cell count                                  |
//! | 3       | outgoing fraction                                    |
//! | 4       | duration in ms (last timestamp minus first)          |
//! | 5..=24  | positions of the first 20 outgoing cells             |
//! | 25      | outgoing-burst count                                 |
//! | 26      | maximum outgoing-burst length                        |
//! | 27      | mean outgoing-burst length                           |
//! | 28..=45 | outgoing cells per bucket, 18 equal-width time buckets |
//!
//! A burst is a maximal run of consecutive same-direction cells.
//! Slots that do not apply — a missing n-th outgoing cell, or burst
//! max/mean when there is no outgoing burst — carry the [`SENTINEL`]
//! value `-1`, which the distance metric treats specially. All genuine
//! feature values are non-negative, so the sentinel is unambiguous.

use super::{CellTrace, Direction, WfError};

/// Feature-vector length.
pub const F: usize = 46;

/// Marker for feature slots that do not apply to a trace.
pub const SENTINEL: f64 = -1.0;

const FIRST_OUTGOING_SLOTS: usize = 20;
const TIME_BUCKETS: usize = 18;

/// Fixed-length feature vector; see the module table for the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Reduces a trace to its feature vector. Pure: equal traces yield
/// equal vectors.
pub fn extract_features(trace: &CellTrace) -> Result<FeatureVector, WfError> {
    let cells = &trace.cells;
    if cells.is_empty() {
        return Err(WfError::EmptyTrace);
    }
    let total = cells.len();
    let out_count = cells
        .iter()
        .filter(|c| c.direction == Direction::Outgoing)
        .count();
    let in_count = total - out_count;
    let t0 = cells[0].time_ms;
    let t_end = cells[total - 1].time_ms;
    let duration = (t_end - t0) as f64;

    let mut v = vec![0.0; F];
    v[0] = total as f64;
    v[1] = out_count as f64;
    v[2] = in_count as f64;
    v[3] = out_count as f64 / total as f64;
    v[4] = duration;

    // Positions of the first 20 outgoing cells.
    let mut slot = 0;
    for (i, c) in cells.iter().enumerate() {
        if slot == FIRST_OUTGOING_SLOTS {
            break;
        }
        if c.direction == Direction::Outgoing {
            v[5 + slot] = i as f64;
            slot += 1;
        }
    }
    for s in slot..FIRST_OUTGOING_SLOTS {
        v[5 + s] = SENTINEL;
    }

    // Outgoing bursts: maximal runs of consecutive outgoing cells.
    let mut burst_count = 0usize;
    let mut burst_total = 0usize;
    let mut burst_max = 0usize;
    let mut run = 0usize;
    for c in cells.iter() {
        if c.direction == Direction::Outgoing {
            run += 1;
        } else if run > 0 {
            burst_count += 1;
            burst_total += run;
            burst_max = burst_max.max(run);
            run = 0;
        }
    }
    if run > 0 {
        burst_count += 1;
        burst_total += run;
        burst_max = burst_max.max(run);
    }
    v[25] = burst_count as f64;
    if burst_count == 0 {
        v[26] = SENTINEL;
        v[27] = SENTINEL;
    } else {
        v[26] = burst_max as f64;
        v[27] = burst_total as f64 / burst_count as f64;
    }

    // Outgoing cells per equal-width time bucket; a zero-duration trace
    // puts everything in bucket 0.
    for c in cells.iter().filter(|c| c.direction == Direction::Outgoing) {
        let bucket = if duration == 0.0 {
            0
        } else {
            let frac = (c.time_ms - t0) as f64 / duration;
            ((frac * TIME_BUCKETS as f64) as usize).min(TIME_BUCKETS - 1)
        };
        v[28 + bucket] += 1.0;
    }

    Ok(FeatureVector(v))
}
