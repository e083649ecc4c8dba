//! Mapping DNS observations to websites.
//!
//! A domain that appears in exactly one site's profile identifies that
//! site whenever it shows up in DNS traffic. The classifier here is
//! deliberately minimal: given the domains observed for one visit, it
//! names a monitored site only when the unique domains in the sample
//! agree on a single site; shared domains carry no evidence and
//! conflicting unique evidence abstains. On noise-free per-visit
//! samples this can never name the wrong site when every site is
//! indexed, because a unique domain of another site cannot occur in the
//! visited site's sample.
//!
//! Cross-validation is open-world: unmonitored sites used for testing
//! in a fold are withheld from that fold's index, so "the classifier
//! has never seen this site" is part of what is measured. That is also
//! where false positives become possible — a held-out site may share a
//! domain with a monitored site, and with the sharer hidden the domain
//! looks unique.
//!
//! Sample file format, one visit per line:
//!
//! ```text
//! label,domain1;domain2;...
//! ```
//!
//! where `label` is the true site rank.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use rand::Rng;
use thiserror::Error;

use crate::corpus::{Corpus, Domain, SiteId};
use crate::evaluation::metrics::{Counts, EvalResult, TrueLabel, Verdict};

#[derive(Debug, Error)]
pub enum DnsMapError {
    #[error("line {line}: malformed sample: {reason}")]
    Parse { line: usize, reason: String },
    #[error("sample has no domains")]
    EmptySample,
    #[error("monitored set is empty")]
    NoMonitored,
    #[error("monitored site {0} not in corpus")]
    UnknownMonitored(SiteId),
    #[error("need {needed} non-monitored sites for the unmonitored pool, corpus has {available}")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("cross-validation needs at least 2 folds, got {0}")]
    BadFolds(usize),
    #[error("need at least as many samples per site ({samples}) as folds ({folds})")]
    TooFewSamples { samples: usize, folds: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Verdict of the DNS-only classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapVerdict {
    MonitoredSite(SiteId),
    Unknown,
}

/// The domains one visit resolved, with the true site for scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DnsSample {
    pub label: SiteId,
    pub domains: Vec<Domain>,
}

/// Classifies one sample against a unique-domain index.
///
/// Returns `MonitoredSite(s)` iff every unique domain present points to
/// the same site `s` and `s` is monitored; shared-only samples and
/// conflicting unique evidence return `Unknown`.
pub fn classify_sample(
    unique_index: &HashMap<Domain, SiteId>,
    monitored: &HashSet<SiteId>,
    sample: &DnsSample,
) -> Result<MapVerdict, DnsMapError> {
    if sample.domains.is_empty() {
        return Err(DnsMapError::EmptySample);
    }
    let mut owner: Option<SiteId> = None;
    for d in &sample.domains {
        if let Some(&site) = unique_index.get(d) {
            match owner {
                None => owner = Some(site),
                Some(prev) if prev != site => return Ok(MapVerdict::Unknown),
                Some(_) => {}
            }
        }
    }
    match owner {
        Some(site) if monitored.contains(&site) => Ok(MapVerdict::MonitoredSite(site)),
        _ => Ok(MapVerdict::Unknown),
    }
}

/// Convenience wrapper taking the corpus's own index.
pub fn classify_against_corpus(
    corpus: &Corpus,
    monitored: &HashSet<SiteId>,
    sample: &DnsSample,
) -> Result<MapVerdict, DnsMapError> {
    classify_sample(corpus.unique_index(), monitored, sample)
}

/// Noise-free per-visit samples for a site: each visit resolves exactly
/// the site's profile.
pub fn samples_for(corpus: &Corpus, site: SiteId, count: usize) -> Option<Vec<DnsSample>> {
    let profile = corpus.profile(site)?;
    let domains: Vec<Domain> = profile.records.iter().map(|r| r.domain.clone()).collect();
    Some((0..count).map(|_| DnsSample { label: site, domains: domains.clone() }).collect())
}

/// Result of [`crossvalidate`], with enough detail to audit the fold
/// hygiene.
#[derive(Debug, Clone)]
pub struct CrossValReport {
    pub result: EvalResult,
    /// Unmonitored sites tested (and therefore unindexed) per fold.
    pub held_out_per_fold: Vec<Vec<SiteId>>,
}

/// Cross-validates the unique-domain classifier on noise-free samples.
///
/// Monitored sites are always indexed (they are the attacker's own
/// targets). With `unmonitored_count == 0` the evaluation is
/// closed-world: only monitored samples are tested. Otherwise the
/// first `unmonitored_count` non-monitored ranks form the open-world
/// pool; each fold tests one slice of the pool and indexes the rest, so
/// no fold trains on an unmonitored site it tests.
pub fn crossvalidate<R: Rng + ?Sized>(
    corpus: &Corpus,
    monitored: &HashSet<SiteId>,
    unmonitored_count: usize,
    folds: usize,
    samples_per_site: usize,
    rng: &mut R,
) -> Result<CrossValReport, DnsMapError> {
    if monitored.is_empty() {
        return Err(DnsMapError::NoMonitored);
    }
    for &m in monitored {
        if corpus.profile(m).is_none() {
            return Err(DnsMapError::UnknownMonitored(m));
        }
    }
    if folds < 2 {
        return Err(DnsMapError::BadFolds(folds));
    }
    if samples_per_site < folds {
        return Err(DnsMapError::TooFewSamples { samples: samples_per_site, folds });
    }

    // Open-world pool: lowest non-monitored ranks, shuffled so fold
    // slices are not rank-ordered.
    let mut pool: Vec<SiteId> = (1..=corpus.len() as SiteId)
        .filter(|r| !monitored.contains(r))
        .take(unmonitored_count)
        .collect();
    if pool.len() < unmonitored_count {
        return Err(DnsMapError::PoolTooSmall {
            needed: unmonitored_count,
            available: pool.len(),
        });
    }
    for i in (1..pool.len()).rev() {
        pool.swap(i, rng.random_range(0..=i));
    }

    let mut monitored_sorted: Vec<SiteId> = monitored.iter().copied().collect();
    monitored_sorted.sort_unstable();

    let mut per_fold = Vec::with_capacity(folds);
    let mut held_out_per_fold = Vec::with_capacity(folds);
    for fold in 0..folds {
        let held_out: Vec<SiteId> = pool
            .iter()
            .enumerate()
            .filter(|(i, _)| i % folds == fold)
            .map(|(_, &s)| s)
            .collect();
        let held_set: HashSet<SiteId> = held_out.iter().copied().collect();

        // Fold index: unique domains over monitored plus the pool sites
        // not held out in this fold.
        let mut incidence: HashMap<&Domain, Option<SiteId>> = HashMap::new();
        let indexed_sites = monitored_sorted
            .iter()
            .chain(pool.iter().filter(|s| !held_set.contains(s)));
        for &site in indexed_sites {
            let profile = corpus.profile(site).expect("validated above");
            for rec in &profile.records {
                incidence
                    .entry(&rec.domain)
                    .and_modify(|o| *o = None)
                    .or_insert(Some(site));
            }
        }
        let fold_index: HashMap<Domain, SiteId> = incidence
            .into_iter()
            .filter_map(|(d, s)| s.map(|site| (d.clone(), site)))
            .collect();

        let mut counts = Counts::default();
        // Monitored test samples: those whose sample slot falls in this
        // fold (samples are noise-free, so the slot only sets weight).
        for &site in &monitored_sorted {
            let samples = samples_for(corpus, site, samples_per_site).expect("validated");
            for (j, sample) in samples.iter().enumerate() {
                if j % folds != fold {
                    continue;
                }
                let verdict = classify_sample(&fold_index, monitored, sample)?;
                counts.record(TrueLabel::Monitored(site), to_verdict(verdict));
            }
        }
        // Held-out unmonitored sites: one sample each.
        for &site in &held_out {
            let sample = &samples_for(corpus, site, 1).expect("pool site in corpus")[0];
            let verdict = classify_sample(&fold_index, monitored, sample)?;
            counts.record(TrueLabel::Unmonitored, to_verdict(verdict));
        }
        per_fold.push(counts);
        held_out_per_fold.push(held_out);
    }
    Ok(CrossValReport { result: EvalResult::from_folds(per_fold), held_out_per_fold })
}

fn to_verdict(v: MapVerdict) -> Verdict {
    match v {
        MapVerdict::MonitoredSite(s) => Verdict::Monitored(s),
        MapVerdict::Unknown => Verdict::Unmonitored,
    }
}

/// Writes samples in the `label,domain1;domain2;...` format.
pub fn write_samples<W: Write>(samples: &[DnsSample], mut w: W) -> Result<(), DnsMapError> {
    for s in samples {
        let joined: Vec<&str> = s.domains.iter().map(|d| d.as_str()).collect();
        writeln!(w, "{},{}", s.label, joined.join(";"))?;
    }
    Ok(())
}

/// Parses the sample file format.
pub fn read_samples<R: BufRead>(r: R) -> Result<Vec<DnsSample>, DnsMapError> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (label_s, rest) = line.split_once(',').ok_or_else(|| DnsMapError::Parse {
            line: lineno,
            reason: "missing comma after label".into(),
        })?;
        let label: SiteId = label_s.trim().parse().map_err(|_| DnsMapError::Parse {
            line: lineno,
            reason: format!("bad label {label_s:?}"),
        })?;
        let mut domains = Vec::new();
        for d in rest.split(';').filter(|d| !d.is_empty()) {
            domains.push(Domain::new(d).map_err(|e| DnsMapError::Parse {
                line: lineno,
                reason: e.to_string(),
            })?);
        }
        if domains.is_empty() {
            return Err(DnsMapError::Parse { line: lineno, reason: "no domains".into() });
        }
        out.push(DnsSample { label, domains });
    }
    Ok(out)
}
