//! Exit-side DNS caching and the attacker's observation window.
//!
//! Exit relays resolve DNS on behalf of all circuits they carry and
//! share one cache across them. Two cache behaviours are modelled:
//!
//! * [`TtlMode::Clip`] — entries live for the raw TTL clamped into
//!   `[min_ttl, max_ttl]` (60 s and 1800 s by default),
//! * [`TtlMode::Bug`] — every entry lives for exactly `min_ttl`,
//!   reproducing a long-standing implementation bug that pinned all
//!   cache lifetimes to 60 s.
//!
//! A cached entry inserted at `t0` with clipped TTL `l` answers lookups
//! for `t0 <= t < t0 + l`; the expiry instant itself is a miss. Only
//! misses leave the relay and are therefore observable upstream.
//!
//! The attacker model is a sliding window over observed misses: any
//! domain resolved during the last `length_x` seconds was either missed
//! inside the window or served from a cache entry whose own backing
//! miss lies inside the window (whenever `length_x` is at least the
//! maximum clipped TTL). Caching therefore does not hide sites from an
//! attacker who watches a window that long.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};

use thiserror::Error;

use crate::corpus::{Corpus, Domain, DomainRecord, SiteId, SiteProfile};

/// Identifier of an exit relay within a network model.
pub type ExitId = u32;

/// Simulation time in seconds.
pub type Time = f64;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("ttl bounds must satisfy 0 < min <= max, got min {min} max {max}")]
    BadTtlBounds { min: u32, max: u32 },
    #[error("time regression: cache clock at {clock}, lookup at {requested}")]
    TimeRegression { clock: Time, requested: Time },
    #[error("time regression: window at {now}, event at {requested}")]
    WindowRegression { now: Time, requested: Time },
    #[error("window length must be positive and finite, got {0}")]
    BadWindowLength(f64),
}

/// Cache lifetime behaviour of an exit resolver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TtlMode {
    /// Clamp the raw TTL into `[min_ttl, max_ttl]`.
    Clip,
    /// Ignore the raw TTL; every entry lives `min_ttl` seconds.
    Bug,
}

/// TTL policy applied by every exit cache of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TtlPolicy {
    pub mode: TtlMode,
    pub min_ttl: u32,
    pub max_ttl: u32,
}

pub const DEFAULT_MIN_TTL: u32 = 60;
pub const DEFAULT_MAX_TTL: u32 = 1800;

impl TtlPolicy {
    pub fn new(mode: TtlMode, min_ttl: u32, max_ttl: u32) -> Result<Self, CacheError> {
        if min_ttl == 0 || min_ttl > max_ttl {
            return Err(CacheError::BadTtlBounds { min: min_ttl, max: max_ttl });
        }
        Ok(Self { mode, min_ttl, max_ttl })
    }

    pub fn clip(mode: TtlMode) -> Self {
        Self { mode, min_ttl: DEFAULT_MIN_TTL, max_ttl: DEFAULT_MAX_TTL }
    }

    /// Effective cache lifetime of a record under this policy.
    pub fn clip_ttl(&self, ttl_raw: u32) -> u32 {
        match self.mode {
            TtlMode::Clip => ttl_raw.clamp(self.min_ttl, self.max_ttl),
            TtlMode::Bug => self.min_ttl,
        }
    }

    /// Largest lifetime any entry can have under this policy.
    pub fn max_clipped_ttl(&self) -> u32 {
        match self.mode {
            TtlMode::Clip => self.max_ttl,
            TtlMode::Bug => self.min_ttl,
        }
    }
}

impl Default for TtlPolicy {
    fn default() -> Self {
        Self::clip(TtlMode::Clip)
    }
}

/// Outcome of a cache lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    /// Served from cache; nothing leaves the relay.
    Hit,
    /// Resolved upstream; observable, and freshly cached.
    Miss,
}

/// The shared DNS cache of one exit relay.
///
/// The clock only moves forward; a lookup earlier than the last one is
/// a contract violation. Entries expired relative to the clock are
/// purged on advance, so the live-entry count reflects cache occupancy.
#[derive(Debug, Clone)]
pub struct ExitCache {
    exit: ExitId,
    policy: TtlPolicy,
    entries: HashMap<Domain, Time>,
    /// Min-heap of `(expiry bits, domain)` used to purge lazily;
    /// entries superseded by a re-insert are skipped on pop.
    expiries: BinaryHeap<Reverse<(u64, Domain)>>,
    clock: Time,
}

impl ExitCache {
    pub fn new(exit: ExitId, policy: TtlPolicy) -> Self {
        Self { exit, policy, entries: HashMap::new(), expiries: BinaryHeap::new(), clock: 0.0 }
    }

    pub fn exit(&self) -> ExitId {
        self.exit
    }

    pub fn policy(&self) -> &TtlPolicy {
        &self.policy
    }

    pub fn clock(&self) -> Time {
        self.clock
    }

    /// Number of non-expired entries relative to the current clock.
    pub fn live_entries(&self) -> usize {
        self.entries.len()
    }

    /// Read-only probe: would a lookup at `t >= clock` miss? Expiry is
    /// checked directly, so entries not yet purged do not mask it.
    pub fn would_miss(&self, t: Time, record: &DomainRecord) -> bool {
        !matches!(self.entries.get(&record.domain), Some(&expiry) if t < expiry)
    }

    /// Looks up `record.domain` at time `t`, advancing the clock.
    /// Misses insert the domain with expiry `t + clip_ttl(ttl_raw)`.
    pub fn lookup(&mut self, t: Time, record: &DomainRecord) -> Result<Lookup, CacheError> {
        if t < self.clock {
            return Err(CacheError::TimeRegression { clock: self.clock, requested: t });
        }
        self.clock = t;
        self.purge(t);
        match self.entries.get(&record.domain) {
            Some(&expiry) if t < expiry => Ok(Lookup::Hit),
            _ => {
                let expiry = t + self.policy.clip_ttl(record.ttl_raw) as Time;
                self.entries.insert(record.domain.clone(), expiry);
                self.expiries.push(Reverse((expiry.to_bits(), record.domain.clone())));
                Ok(Lookup::Miss)
            }
        }
    }

    fn purge(&mut self, t: Time) {
        while let Some(Reverse((bits, _))) = self.expiries.peek() {
            if Time::from_bits(*bits) > t {
                break;
            }
            let Reverse((bits, domain)) = self.expiries.pop().expect("peeked");
            // Only drop the map entry if this heap record is current.
            if self.entries.get(&domain) == Some(&Time::from_bits(bits)) {
                self.entries.remove(&domain);
            }
        }
    }
}

/// One observable DNS request: a cache miss leaving an exit.
#[derive(Debug, Clone, PartialEq)]
pub struct DnsEvent {
    pub time: Time,
    pub domain: Domain,
    pub exit: ExitId,
}

/// The attacker's sliding window over observed misses.
///
/// Events are fed in time order; feeding an event at `t` evicts
/// everything strictly older than `t - length_x`, so the window always
/// spans `[now - length_x, now]` inclusive.
#[derive(Debug, Clone)]
pub struct DnsWindow {
    length_x: f64,
    now: Time,
    events: VecDeque<DnsEvent>,
    /// Multiplicity of each domain currently in the window.
    counts: HashMap<Domain, u32>,
}

impl DnsWindow {
    pub fn new(length_x: f64) -> Result<Self, CacheError> {
        if !(length_x.is_finite() && length_x > 0.0) {
            return Err(CacheError::BadWindowLength(length_x));
        }
        Ok(Self { length_x, now: 0.0, events: VecDeque::new(), counts: HashMap::new() })
    }

    pub fn length_x(&self) -> f64 {
        self.length_x
    }

    pub fn now(&self) -> Time {
        self.now
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Appends an observed miss and evicts events that fell out of the
    /// window.
    pub fn observe(&mut self, event: DnsEvent) -> Result<(), CacheError> {
        if event.time < self.now {
            return Err(CacheError::WindowRegression { now: self.now, requested: event.time });
        }
        self.now = event.time;
        self.counts
            .entry(event.domain.clone())
            .and_modify(|c| *c += 1)
            .or_insert(1);
        self.events.push_back(event);
        self.evict();
        Ok(())
    }

    /// Advances the window clock without adding an event (e.g. to query
    /// visibility at an instant with no traffic of its own).
    pub fn advance_to(&mut self, t: Time) -> Result<(), CacheError> {
        if t < self.now {
            return Err(CacheError::WindowRegression { now: self.now, requested: t });
        }
        self.now = t;
        self.evict();
        Ok(())
    }

    fn evict(&mut self) {
        let cutoff = self.now - self.length_x;
        while let Some(front) = self.events.front() {
            if front.time >= cutoff {
                break;
            }
            let ev = self.events.pop_front().expect("front");
            match self.counts.get_mut(&ev.domain) {
                Some(c) if *c > 1 => *c -= 1,
                _ => {
                    self.counts.remove(&ev.domain);
                }
            }
        }
    }

    pub fn contains(&self, domain: &Domain) -> bool {
        self.counts.contains_key(domain)
    }

    pub fn events(&self) -> impl Iterator<Item = &DnsEvent> {
        self.events.iter()
    }
}

/// Sites identifiable from the window under the unique-domain mapping:
/// a site is visible if some domain unique to it is in the window, or
/// if its complete domain profile is contained in the window.
pub fn visible_sites(window: &DnsWindow, corpus: &Corpus) -> BTreeSet<SiteId> {
    visible_sites_among(window, corpus.profiles(), corpus.unique_index())
}

/// [`visible_sites`] restricted to an explicit candidate set, with the
/// unique-domain index supplied by the caller. The experiment harness
/// uses this to test only monitored sites against large windows.
pub fn visible_sites_among<'a>(
    window: &DnsWindow,
    candidates: impl IntoIterator<Item = &'a SiteProfile>,
    unique_index: &HashMap<Domain, SiteId>,
) -> BTreeSet<SiteId> {
    visible_sites_by(|d| window.contains(d), candidates, unique_index)
}

/// The visibility rule over an arbitrary membership predicate, e.g. a
/// window joined with one user's own fresh requests.
pub fn visible_sites_by<'a>(
    present_in_window: impl Fn(&Domain) -> bool,
    candidates: impl IntoIterator<Item = &'a SiteProfile>,
    unique_index: &HashMap<Domain, SiteId>,
) -> BTreeSet<SiteId> {
    let mut out = BTreeSet::new();
    for profile in candidates {
        let mut all_present = true;
        let mut unique_hit = false;
        for rec in &profile.records {
            let present = present_in_window(&rec.domain);
            all_present &= present;
            if present && !unique_hit {
                unique_hit = unique_index.get(&rec.domain) == Some(&profile.site);
            }
            if !all_present && unique_hit {
                break;
            }
        }
        if unique_hit || (all_present && !profile.records.is_empty()) {
            out.insert(profile.site);
        }
    }
    out
}
