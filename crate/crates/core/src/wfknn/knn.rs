//! Weighted-distance kNN: the metric, weight learning, and the
//! all-k-agree decision rule.
//!
//! The distance between two feature vectors is a weighted L1 sum,
//! Σ_f w_f·|a_f − b_f|, except where the [`SENTINEL`] is involved: a
//! slot that applies to neither vector contributes nothing (the
//! vectors agree that the feature is absent), while a slot that
//! applies to exactly one side contributes the penalty `w_f·P_f`,
//! a stand-in for "these traces differ structurally here". The default
//! penalty `P_f` is the 95th percentile of `|x_f|` over the training
//! set, a robust scale estimate for the slot.
//!
//! Weight learning starts uniform and runs a fixed number of rounds.
//! Each round picks one training point, looks at its 5 nearest
//! same-class and 5 nearest different-class points under the current
//! weights, and scores each feature by how much it contributes to
//! keeping classmates apart versus pushing strangers away. Features
//! that mostly separate classmates shrink; features that mostly
//! separate strangers grow. Updates are multiplicative, clamped at
//! zero, and renormalised to sum 1, so `rounds = 0` simply returns the
//! uniform vector.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;

use super::features::{FeatureVector, SENTINEL};
use super::{CellTrace, WfError};
use crate::corpus::SiteId;
use crate::evaluation::metrics::{TrueLabel, Verdict};
use crate::wfknn::extract_features;

/// Number of same-class and different-class neighbours consulted per
/// weight-learning round.
const NEIGHBOURS_PER_SIDE: usize = 5;

/// Multiplicative learning rate for one weight-learning round.
const LEARNING_RATE: f64 = 0.01;

/// Percentile of |feature| used for the default sentinel penalty.
const PENALTY_PERCENTILE: f64 = 0.95;

/// kNN parameters: neighbourhood size and weight-learning rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnnConfig {
    pub k: usize,
    pub rounds: u32,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 2, rounds: 2500 }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<(), WfError> {
        if self.k == 0 {
            return Err(WfError::BadK);
        }
        Ok(())
    }
}

/// Non-negative per-feature weights with a positive sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(w: Vec<f64>) -> Result<Self, WfError> {
        if w.is_empty() || w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(WfError::BadWeights);
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(WfError::BadWeights);
        }
        Ok(Self(w))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Scales every weight by `c > 0`; classification decisions are
    /// invariant under this.
    pub fn scaled(&self, c: f64) -> Result<Self, WfError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(WfError::BadWeights);
        }
        Weights::new(self.0.iter().map(|&w| w * c).collect())
    }
}

/// The uniform weight vector `w_f = 1/n`.
pub fn uniform_weights(n: usize) -> Weights {
    Weights(vec![1.0 / n as f64; n])
}

/// Per-feature sentinel penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct Penalty(Vec<f64>);

impl Penalty {
    /// The same constant penalty for every feature.
    pub fn constant(p: f64, n: usize) -> Self {
        Self(vec![p; n])
    }

    /// Default penalty: for each feature, the 95th percentile
    /// (nearest-rank) of `|x_f|` across the training set.
    pub fn from_training(train: &TrainingSet) -> Self {
        let n = train.len();
        let mut p = vec![0.0; train.point(0).len()];
        let mut column = vec![0.0f64; n];
        for (f, slot) in p.iter_mut().enumerate() {
            for (i, cell) in column.iter_mut().enumerate() {
                *cell = train.point(i).values()[f].abs();
            }
            column.sort_unstable_by(f64::total_cmp);
            let rank = ((PENALTY_PERCENTILE * n as f64).ceil() as usize).clamp(1, n);
            *slot = column[rank - 1];
        }
        Self(p)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Labelled training points with aligned features and labels.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    points: Vec<FeatureVector>,
    labels: Vec<TrueLabel>,
}

impl TrainingSet {
    pub fn new(points: Vec<FeatureVector>, labels: Vec<TrueLabel>) -> Result<Self, WfError> {
        if points.is_empty() || points.len() != labels.len() {
            return Err(WfError::BadTrainingSet);
        }
        let len = points[0].len();
        for p in &points {
            if p.len() != len {
                return Err(WfError::LengthMismatch { a: len, b: p.len() });
            }
        }
        Ok(Self { points, labels })
    }

    /// Extracts features from labelled traces.
    pub fn from_traces(traces: &[CellTrace]) -> Result<Self, WfError> {
        let points = traces
            .iter()
            .map(extract_features)
            .collect::<Result<Vec<_>, _>>()?;
        let labels = traces.iter().map(|t| t.label).collect();
        Self::new(points, labels)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &FeatureVector {
        &self.points[i]
    }

    pub fn label(&self, i: usize) -> TrueLabel {
        self.labels[i]
    }

    /// True when some class has at least two instances and at least two
    /// distinct classes are present.
    fn supports_weight_learning(&self) -> bool {
        let mut seen: HashSet<TrueLabel> = HashSet::new();
        let mut repeated = false;
        for &l in &self.labels {
            if !seen.insert(l) {
                repeated = true;
            }
        }
        seen.len() >= 2 && repeated
    }
}

/// Weighted L1 distance with sentinel handling; see the module docs.
pub fn distance(
    w: &Weights,
    penalty: &Penalty,
    a: &FeatureVector,
    b: &FeatureVector,
) -> Result<f64, WfError> {
    if a.len() != b.len() {
        return Err(WfError::LengthMismatch { a: a.len(), b: b.len() });
    }
    if w.len() != a.len() || penalty.0.len() != a.len() {
        return Err(WfError::LengthMismatch { a: w.len(), b: a.len() });
    }
    Ok(distance_unchecked(w.values(), penalty.values(), a.values(), b.values()))
}

/// Hot path shared by classify and learn_weights; lengths already
/// validated.
fn distance_unchecked(w: &[f64], pen: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    for f in 0..a.len() {
        sum += term(w[f], pen[f], a[f], b[f]);
    }
    sum
}

/// One feature's contribution to the distance.
#[inline]
fn term(w: f64, pen: f64, a: f64, b: f64) -> f64 {
    let a_missing = a == SENTINEL;
    let b_missing = b == SENTINEL;
    match (a_missing, b_missing) {
        (true, true) => 0.0,
        (false, false) => w * (a - b).abs(),
        _ => w * pen,
    }
}

/// Learns feature weights by the multiplicative per-round update
/// described in the module docs. `cfg.rounds == 0` returns the uniform
/// vector untouched. Deterministic given the rng.
pub fn learn_weights<R: Rng + ?Sized>(
    train: &TrainingSet,
    penalty: &Penalty,
    cfg: &KnnConfig,
    rng: &mut R,
) -> Result<Weights, WfError> {
    cfg.validate()?;
    if !train.supports_weight_learning() {
        return Err(WfError::DegenerateTraining);
    }
    let n = train.len();
    let nf = train.point(0).len();
    if penalty.0.len() != nf {
        return Err(WfError::LengthMismatch { a: penalty.0.len(), b: nf });
    }
    let mut w = vec![1.0 / nf as f64; nf];
    if cfg.rounds == 0 {
        return Ok(Weights(w));
    }

    let mut same: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut diff: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut badness = vec![0.0f64; nf];

    for _ in 0..cfg.rounds {
        let p = rng.random_range(0..n);
        let p_label = train.label(p);
        let p_vec = train.point(p).values();

        same.clear();
        diff.clear();
        for q in 0..n {
            if q == p {
                continue;
            }
            let d = distance_unchecked(&w, penalty.values(), p_vec, train.point(q).values());
            if train.label(q) == p_label {
                same.push((d, q));
            } else {
                diff.push((d, q));
            }
        }
        let same_k = nearest(&mut same, NEIGHBOURS_PER_SIDE);
        let diff_k = nearest(&mut diff, NEIGHBOURS_PER_SIDE);

        // Per-feature badness: contribution to same-class distances
        // minus contribution to different-class distances. Positive
        // badness means the feature mostly splits classmates.
        badness.iter_mut().for_each(|b| *b = 0.0);
        for &(_, q) in same_k {
            let q_vec = train.point(q).values();
            for f in 0..nf {
                badness[f] += term(w[f], penalty.values()[f], p_vec[f], q_vec[f]);
            }
        }
        for &(_, q) in diff_k {
            let q_vec = train.point(q).values();
            for f in 0..nf {
                badness[f] -= term(w[f], penalty.values()[f], p_vec[f], q_vec[f]);
            }
        }
        let total: f64 = badness.iter().map(|b| b.abs()).sum();
        if total == 0.0 {
            continue;
        }
        for f in 0..nf {
            let step = LEARNING_RATE * badness[f].signum() * (badness[f].abs() / total).min(1.0);
            w[f] = (w[f] * (1.0 - step)).max(0.0);
        }
        let sum: f64 = w.iter().sum();
        if sum > 0.0 {
            w.iter_mut().for_each(|x| *x /= sum);
        } else {
            // All-zero weights would make every distance 0; fall back
            // to uniform rather than emit a degenerate metric.
            w.iter_mut().for_each(|x| *x = 1.0 / nf as f64);
        }
    }
    Weights::new(w)
}

/// Keeps the `k` nearest entries (ties broken by lower index) at the
/// front of `v` and returns them.
fn nearest(v: &mut [(f64, usize)], k: usize) -> &[(f64, usize)] {
    let k = k.min(v.len());
    if k == 0 {
        return &[];
    }
    if k < v.len() {
        v.select_nth_unstable_by(k - 1, |a, b| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        });
    }
    &v[..k]
}

/// Classifies one test vector by the all-k-agree rule.
///
/// With `candidate_classes` given, monitored training points whose
/// class is outside the set are skipped; unmonitored training points
/// are always eligible. Ties in distance are broken by lower training
/// index. Returns an error when fewer than `k` training points are
/// eligible.
pub fn classify(
    train: &TrainingSet,
    w: &Weights,
    penalty: &Penalty,
    cfg: &KnnConfig,
    test: &FeatureVector,
    candidate_classes: Option<&HashSet<SiteId>>,
) -> Result<Verdict, WfError> {
    cfg.validate()?;
    if w.len() != test.len() || penalty.0.len() != test.len() {
        return Err(WfError::LengthMismatch { a: w.len(), b: test.len() });
    }
    let k = cfg.k;
    // Running k-best, kept sorted ascending by (distance, index).
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    let mut eligible = 0usize;
    for i in 0..train.len() {
        if let Some(allowed) = candidate_classes {
            if let TrueLabel::Monitored(s) = train.label(i) {
                if !allowed.contains(&s) {
                    continue;
                }
            }
        }
        eligible += 1;
        let p = train.point(i);
        if p.len() != test.len() {
            return Err(WfError::LengthMismatch { a: p.len(), b: test.len() });
        }
        let d = distance_unchecked(w.values(), penalty.values(), test.values(), p.values());
        if best.len() == k {
            let worst = best[k - 1];
            if (d, i) >= (worst.0, worst.1) {
                continue;
            }
        }
        let pos = best.partition_point(|&(bd, bi)| (bd, bi) < (d, i));
        best.insert(pos, (d, i));
        if best.len() > k {
            best.pop();
        }
    }
    if eligible < k {
        return Err(WfError::NotEnoughEligible { eligible, k });
    }
    let mut verdict: Option<SiteId> = None;
    for &(_, i) in &best {
        match (train.label(i), verdict) {
            (TrueLabel::Unmonitored, _) => return Ok(Verdict::Unmonitored),
            (TrueLabel::Monitored(s), None) => verdict = Some(s),
            (TrueLabel::Monitored(s), Some(prev)) if s != prev => {
                return Ok(Verdict::Unmonitored)
            }
            _ => {}
        }
    }
    Ok(Verdict::Monitored(verdict.expect("k >= 1 neighbours")))
}

/// Classifies a batch of test vectors in parallel (no candidate
/// restriction). Output order matches input order.
pub fn classify_batch(
    train: &TrainingSet,
    w: &Weights,
    penalty: &Penalty,
    cfg: &KnnConfig,
    tests: &[FeatureVector],
) -> Result<Vec<Verdict>, WfError> {
    tests
        .par_iter()
        .map(|t| classify(train, w, penalty, cfg, t, None))
        .collect()
}
