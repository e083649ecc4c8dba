//! The two attack combinators that fuse a fingerprinting verdict with
//! windowed DNS observations.
//!
//! * **ctw** ("classify, then what was observed") re-runs the kNN
//!   classification with the candidate classes cut down to the
//!   monitored sites actually observed in DNS traffic during the
//!   attacker's window. Unmonitored training points always stay
//!   eligible, so the classifier can still abstain.
//! * **hp** ("high precision") takes the plain fingerprinting verdict
//!   and confirms it against the DNS observations: a named site that
//!   was not observed is demoted to `Unmonitored`.
//!
//! Both take the observed-site set as computed by
//! [`crate::dnscache::visible_sites`] over the window state at the end
//! of the visit being classified. hp's positives are by construction a
//! subset of the fingerprinting positives, so its recall can only be
//! lower and its precision benefits from the DNS confirmation.

use std::collections::HashSet;

use crate::corpus::SiteId;
use crate::evaluation::metrics::Verdict;
use crate::wfknn::{classify, FeatureVector, KnnConfig, Penalty, TrainingSet, Weights, WfError};

/// The attack variants an experiment can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    /// Plain website fingerprinting, no DNS.
    Wf,
    /// kNN restricted to DNS-observed candidate sites.
    Ctw,
    /// Fingerprinting verdict confirmed against DNS observations.
    Hp,
}

impl AttackKind {
    pub const ALL: [AttackKind; 3] = [AttackKind::Wf, AttackKind::Ctw, AttackKind::Hp];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Wf => "wf",
            AttackKind::Ctw => "ctw",
            AttackKind::Hp => "hp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// ctw: classify with candidate classes = `observed ∩ monitored`.
///
/// The intersection is implicit: `observed` is passed as the candidate
/// set, and only monitored training points are subject to candidate
/// filtering, so observed-but-unmonitored sites have no effect. When
/// the restriction leaves fewer than `k` eligible training points —
/// e.g. nothing was observed and no unmonitored training data exists —
/// the attack abstains: it cannot assemble `k` agreeing neighbours, so
/// the verdict is `Unmonitored` rather than an error.
pub fn attack_ctw(
    train: &TrainingSet,
    w: &Weights,
    penalty: &Penalty,
    cfg: &KnnConfig,
    test: &FeatureVector,
    observed: &HashSet<SiteId>,
) -> Result<Verdict, WfError> {
    match classify(train, w, penalty, cfg, test, Some(observed)) {
        Err(WfError::NotEnoughEligible { .. }) => Ok(Verdict::Unmonitored),
        other => other,
    }
}

/// hp: keep a monitored verdict only when DNS observed that same site.
pub fn attack_hp(wf_verdict: Verdict, observed: &HashSet<SiteId>) -> Verdict {
    match wf_verdict {
        Verdict::Monitored(s) if observed.contains(&s) => Verdict::Monitored(s),
        _ => Verdict::Unmonitored,
    }
}
