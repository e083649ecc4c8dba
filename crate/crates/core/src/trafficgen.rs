//! Network-wide visit streams and their DNS expansion.
//!
//! Visits arrive as a homogeneous Poisson process calibrated to the
//! measured volume of the network: 700,000 visits per ten minutes at
//! scale 1.0. The scale knob covers the plausible range of that
//! estimate, from the interpolated lower bound (≈ 0.41, i.e. 288,000
//! per ten minutes) up to 10×.
//!
//! Each visit picks a site from a popularity model and an exit relay
//! proportional to exit bandwidth weights. Expanding a visit into DNS
//! requests pushes the site's domain records through the chosen exit's
//! shared cache; only the resulting misses are emitted, because hits
//! never leave the relay.
//!
//! The attacker observes a subset of exits whose weights sum to `pct`
//! of exit bandwidth. A distinguished target visit is pinned to a
//! bandwidth-weighted exit draw, which makes "the attacker sees the
//! target's DNS" a Bernoulli(pct) event.

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::io::Write;

use rand::Rng;
use thiserror::Error;

use crate::corpus::{Corpus, DomainRecord, SiteId};
use crate::dnscache::{DnsEvent, ExitCache, ExitId, Lookup, Time, TtlPolicy};
use crate::popmodel::PopModel;

/// Calibrated default visit volume per ten minutes at scale 1.0.
pub const DEFAULT_VISITS_PER_10MIN: f64 = 700_000.0;
/// Supported scale range; 0.41 corresponds to the interpolated
/// lower-bound estimate of network volume.
pub const MIN_SCALE: f64 = 0.41;
pub const MAX_SCALE: f64 = 10.0;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("scale {0} outside supported range [{MIN_SCALE}, {MAX_SCALE}]")]
    BadScale(f64),
    #[error("visit volume must be non-negative and finite, got {0}")]
    BadVolume(f64),
    #[error("network model needs at least one exit")]
    NoExits,
    #[error("exit weights must be non-negative and sum to 1 (off by {excess:e})")]
    BadWeights { excess: f64 },
    #[error("attacker pct {pct} does not match observed exit weight {realized} within 1e-6")]
    PctMismatch { pct: f64, realized: f64 },
    #[error("attacker references unknown exit {0}")]
    UnknownExit(ExitId),
    #[error("visit to site {0} not present in the corpus")]
    UnknownSite(SiteId),
    #[error("horizon must be non-negative and finite, got {0}")]
    BadHorizon(f64),
    #[error("cache error: {0}")]
    Cache(#[from] crate::dnscache::CacheError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Exit relays and visit volume of the simulated network.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    visits_per_10min: f64,
    scale: f64,
    /// Bandwidth weight per exit, summing to 1.
    exit_weights: Vec<f64>,
    /// Cumulative weights for sampling.
    exit_cdf: Vec<f64>,
}

impl NetworkModel {
    pub fn new(visits_per_10min: f64, scale: f64, exit_weights: Vec<f64>) -> Result<Self, TrafficError> {
        if !(visits_per_10min.is_finite() && visits_per_10min >= 0.0) {
            return Err(TrafficError::BadVolume(visits_per_10min));
        }
        if !(MIN_SCALE..=MAX_SCALE).contains(&scale) {
            return Err(TrafficError::BadScale(scale));
        }
        if exit_weights.is_empty() {
            return Err(TrafficError::NoExits);
        }
        let sum: f64 = exit_weights.iter().sum();
        if exit_weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(TrafficError::BadWeights { excess: (sum - 1.0).abs() });
        }
        let mut exit_cdf = Vec::with_capacity(exit_weights.len());
        let mut acc = 0.0;
        for w in &exit_weights {
            acc += w;
            exit_cdf.push(acc);
        }
        if let Some(last) = exit_cdf.last_mut() {
            *last = 1.0;
        }
        Ok(Self { visits_per_10min, scale, exit_weights, exit_cdf })
    }

    /// A network of `n` equally weighted exits at default volume.
    pub fn uniform_exits(n: usize) -> Result<Self, TrafficError> {
        Self::new(DEFAULT_VISITS_PER_10MIN, 1.0, vec![1.0 / n.max(1) as f64; n.max(1)])
    }

    pub fn with_volume(mut self, visits_per_10min: f64, scale: f64) -> Result<Self, TrafficError> {
        if !(visits_per_10min.is_finite() && visits_per_10min >= 0.0) {
            return Err(TrafficError::BadVolume(visits_per_10min));
        }
        if !(MIN_SCALE..=MAX_SCALE).contains(&scale) {
            return Err(TrafficError::BadScale(scale));
        }
        self.visits_per_10min = visits_per_10min;
        self.scale = scale;
        Ok(self)
    }

    pub fn visits_per_10min(&self) -> f64 {
        self.visits_per_10min
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn n_exits(&self) -> usize {
        self.exit_weights.len()
    }

    pub fn exit_weights(&self) -> &[f64] {
        &self.exit_weights
    }

    /// Visits per second after scaling.
    pub fn rate_per_second(&self) -> f64 {
        self.visits_per_10min * self.scale / 600.0
    }

    /// Draws an exit proportional to bandwidth weight.
    pub fn sample_exit<R: Rng + ?Sized>(&self, rng: &mut R) -> ExitId {
        let u: f64 = rng.random();
        self.exit_cdf.partition_point(|&c| c <= u).min(self.exit_weights.len() - 1) as ExitId
    }
}

/// One website visit on the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisitEvent {
    pub time: Time,
    pub site: SiteId,
    pub exit: ExitId,
}

/// Which exits the attacker taps, with the bandwidth fraction they
/// carry.
#[derive(Debug, Clone)]
pub struct AttackerConfig {
    pct: f64,
    observed: BTreeSet<ExitId>,
}

impl AttackerConfig {
    /// Builds the config from an explicit exit set; `pct` is the realized
    /// weight sum, so the invariant holds by construction.
    pub fn from_exits(net: &NetworkModel, observed: BTreeSet<ExitId>) -> Result<Self, TrafficError> {
        let mut pct = 0.0;
        for &e in &observed {
            let w = net
                .exit_weights
                .get(e as usize)
                .ok_or(TrafficError::UnknownExit(e))?;
            pct += w;
        }
        Ok(Self { pct: pct.min(1.0), observed })
    }

    /// Picks exits in a seeded random order until their weight reaches
    /// `target_pct`; the realized sum becomes `pct`. With uniform exit
    /// weights and a target that is a multiple of `1/n`, the realized
    /// value equals the target exactly.
    pub fn sample_for_pct<R: Rng + ?Sized>(
        net: &NetworkModel,
        target_pct: f64,
        rng: &mut R,
    ) -> Result<Self, TrafficError> {
        if !(0.0..=1.0).contains(&target_pct) {
            return Err(TrafficError::PctMismatch { pct: target_pct, realized: f64::NAN });
        }
        let mut order: Vec<ExitId> = (0..net.n_exits() as ExitId).collect();
        // Fisher-Yates with the caller's rng.
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut observed = BTreeSet::new();
        let mut acc = 0.0;
        for e in order {
            if acc + 1e-12 >= target_pct {
                break;
            }
            acc += net.exit_weights[e as usize];
            observed.insert(e);
        }
        Ok(Self { pct: acc.min(1.0), observed })
    }

    /// Fraction of exit bandwidth observed.
    pub fn pct(&self) -> f64 {
        self.pct
    }

    pub fn observed_exits(&self) -> &BTreeSet<ExitId> {
        &self.observed
    }

    pub fn observes(&self, exit: ExitId) -> bool {
        self.observed.contains(&exit)
    }

    /// Checks the weight-sum invariant against a network model.
    pub fn validate(&self, net: &NetworkModel) -> Result<(), TrafficError> {
        let mut realized = 0.0;
        for &e in &self.observed {
            realized += net
                .exit_weights
                .get(e as usize)
                .ok_or(TrafficError::UnknownExit(e))?;
        }
        if (realized - self.pct).abs() > 1e-6 {
            return Err(TrafficError::PctMismatch { pct: self.pct, realized });
        }
        Ok(())
    }
}

/// Generates the visit stream over `[0, horizon_s)`: Poisson arrivals
/// at `visits_per_10min * scale / 600` per second, sites from `pop`,
/// exits by bandwidth. Times are strictly increasing; a zero rate
/// yields an empty stream.
pub fn generate_visits<R: Rng + ?Sized>(
    net: &NetworkModel,
    pop: &PopModel,
    horizon_s: f64,
    rng: &mut R,
) -> Result<Vec<VisitEvent>, TrafficError> {
    if !(horizon_s.is_finite() && horizon_s >= 0.0) {
        return Err(TrafficError::BadHorizon(horizon_s));
    }
    let rate = net.rate_per_second();
    let mut events = Vec::new();
    if rate <= 0.0 {
        return Ok(events);
    }
    events.reserve((rate * horizon_s * 1.05) as usize + 16);
    let mut t = 0.0f64;
    loop {
        // Exponential inter-arrival; 1 - u avoids ln(0).
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / rate;
        if t >= horizon_s {
            break;
        }
        events.push(VisitEvent { time: t, site: pop.sample(rng), exit: net.sample_exit(rng) });
    }
    Ok(events)
}

/// Anything that can answer "which domains does a visit to this site
/// resolve": a materialized [`Corpus`] or a lazy synthetic model.
pub trait SiteCatalog {
    fn site_records(&self, site: SiteId) -> Option<Cow<'_, [DomainRecord]>>;
}

impl SiteCatalog for Corpus {
    fn site_records(&self, site: SiteId) -> Option<Cow<'_, [DomainRecord]>> {
        self.profile(site).map(|p| Cow::Borrowed(p.records.as_slice()))
    }
}

impl SiteCatalog for crate::corpus::SyntheticCorpusModel {
    fn site_records(&self, site: SiteId) -> Option<Cow<'_, [DomainRecord]>> {
        if site == 0 || site > self.n_sites() {
            None
        } else {
            Some(Cow::Owned(self.profile(site).records))
        }
    }
}

/// One cache per exit, all under one TTL policy.
#[derive(Debug)]
pub struct CacheFarm {
    caches: Vec<ExitCache>,
}

impl CacheFarm {
    pub fn new(n_exits: usize, policy: TtlPolicy) -> Self {
        Self { caches: (0..n_exits).map(|e| ExitCache::new(e as ExitId, policy)).collect() }
    }

    pub fn cache_mut(&mut self, exit: ExitId) -> Option<&mut ExitCache> {
        self.caches.get_mut(exit as usize)
    }

    pub fn caches(&self) -> &[ExitCache] {
        &self.caches
    }
}

/// Expands visits (in time order) into the cache-miss DNS events they
/// cause at their exits. Hits are silent; every domain of a visited
/// site is looked up once at the visit instant.
pub fn expand_to_dns<C: SiteCatalog>(
    visits: &[VisitEvent],
    catalog: &C,
    farm: &mut CacheFarm,
) -> Result<Vec<DnsEvent>, TrafficError> {
    let mut out = Vec::new();
    for v in visits {
        let records = catalog
            .site_records(v.site)
            .ok_or(TrafficError::UnknownSite(v.site))?;
        let cache = farm
            .cache_mut(v.exit)
            .ok_or(TrafficError::UnknownExit(v.exit))?;
        for rec in records.iter() {
            if cache.lookup(v.time, rec)? == Lookup::Miss {
                out.push(DnsEvent { time: v.time, domain: rec.domain.clone(), exit: v.exit });
            }
        }
    }
    Ok(out)
}

/// Restricts DNS events to the attacker's tapped exits.
pub fn observed_subset(events: &[DnsEvent], attacker: &AttackerConfig) -> Vec<DnsEvent> {
    events.iter().filter(|e| attacker.observes(e.exit)).cloned().collect()
}

/// Dumps a visit stream as CSV (`time,site,exit`).
pub fn write_events_csv<W: Write>(events: &[VisitEvent], w: W) -> Result<(), TrafficError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["time", "site", "exit"]).map_err(io_of_csv)?;
    for e in events {
        wtr.write_record(&[format!("{:.6}", e.time), e.site.to_string(), e.exit.to_string()])
            .map_err(io_of_csv)?;
    }
    wtr.flush()?;
    Ok(())
}

fn io_of_csv(e: csv::Error) -> TrafficError {
    TrafficError::Io(std::io::Error::other(e))
}
