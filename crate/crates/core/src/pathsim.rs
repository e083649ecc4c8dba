//! Monte-Carlo simulation of Tor client circuits and AS-level
//! compromise under four DNS configurations.
//!
//! Each simulated client keeps one bandwidth-weighted guard for the
//! whole horizon and builds a fresh circuit (new bandwidth-weighted
//! exit) for each ten-minute window in which it visits sites. Every
//! visit triggers exactly one DNS resolution. A visit is compromised
//! when some AS sees both sides: the ingress AS set (client AS →
//! guard path) intersects the egress AS set (exit → DNS destination
//! path, scenario-dependent).
//!
//! Scenarios differ only in the egress set:
//! * `IspDns` — the resolver shares the exit's AS: egress = {exit AS}.
//! * `GoogleDns` — the measured path from the exit AS to the public
//!   resolver (`dst_key = "google"`).
//! * `LocalDns` — the union of delegation-path traces for the visited
//!   domain (`dst_key = "local:<domain>"`).
//! * `StatusQuo` — the exit's own measured resolver
//!   (`dst_key = "resolver:<ip>"`); exits with several observed
//!   resolvers get one assigned at relay-load time.
//!
//! Missing egress data is handled conservatively: the exit's AS alone
//! is checked (it always sees the traffic), and otherwise the visit
//! counts as uncompromised. Missing *ingress* data is an error — the
//! client cannot reach its guard without a path.
//!
//! Simulation time is schedule-local seconds from day 1 00:00; the
//! timezone the schedule is quoted in does not enter the arithmetic.
//!
//! Per-client seeds derive from (master seed, client index), so
//! results are independent of evaluation order and thread count, and
//! scenario comparisons are paired: the same client sees the same
//! guard and exits under every scenario.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::net::Ipv4Addr;

use rand::Rng;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::corpus::Domain;
use crate::exposure::{AsSet, Asn};
use crate::seeds::task_rng;

/// Seconds per circuit window: visits in the same window share a
/// circuit.
pub const CIRCUIT_WINDOW_S: u64 = 600;

/// Default horizon in days.
pub const DEFAULT_HORIZON_DAYS: u32 = 31;

/// Default client ASes (US, RU, DE, FR, UK eyeball networks).
pub const DEFAULT_CLIENT_ASES: [Asn; 5] = [7922, 42610, 3320, 3215, 2856];

/// Default number of simulated clients at desk scale.
pub const DEFAULT_CLIENTS: usize = 2_000;

#[derive(Debug, Error)]
pub enum PathSimError {
    #[error("no eligible {role} relay with positive weight")]
    NoEligibleRelay { role: &'static str },
    #[error("no ingress path for client AS {client_asn} via guard {guard_id:?}")]
    MissingIngress { client_asn: Asn, guard_id: String },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("bad schedule: {0}")]
    BadSchedule(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One Tor relay as the simulation sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct Relay {
    pub id: String,
    pub bandwidth_weight: f64,
    pub is_guard: bool,
    pub is_exit: bool,
    pub asn: Asn,
    /// The exit's DNS resolver, when measured.
    pub resolver: Option<(Ipv4Addr, Asn)>,
}

/// Wire form of a relay line. `resolver_ip`/`resolver_asn` may be
/// null, a scalar, or parallel arrays (several observed resolvers, one
/// of which is assigned at load time).
#[derive(Debug, Deserialize)]
struct RelayWire {
    id: String,
    bw: f64,
    guard: bool,
    exit: bool,
    asn: Asn,
    #[serde(default)]
    resolver_ip: OneOrMany<Ipv4Addr>,
    #[serde(default)]
    resolver_asn: OneOrMany<Asn>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    #[default]
    None,
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn as_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::None => Vec::new(),
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(xs) => xs.clone(),
        }
    }
}

/// Parses the relay JSONL file. Multi-resolver exits get one resolver
/// picked with `rng`, fixing the assignment for the whole run.
pub fn load_relays<R: BufRead, G: Rng + ?Sized>(
    r: R,
    rng: &mut G,
) -> Result<Vec<Relay>, PathSimError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: RelayWire = serde_json::from_str(&line).map_err(|e| PathSimError::Parse {
            line: lineno,
            reason: e.to_string(),
        })?;
        if wire.bw < 0.0 || !wire.bw.is_finite() {
            return Err(PathSimError::Parse {
                line: lineno,
                reason: format!("bandwidth must be non-negative, got {}", wire.bw),
            });
        }
        let ips = wire.resolver_ip.as_vec();
        let asns = wire.resolver_asn.as_vec();
        if ips.len() != asns.len() {
            return Err(PathSimError::Parse {
                line: lineno,
                reason: format!(
                    "resolver_ip and resolver_asn disagree ({} vs {})",
                    ips.len(),
                    asns.len()
                ),
            });
        }
        let resolver = match ips.len() {
            0 => None,
            1 => Some((ips[0], asns[0])),
            n => {
                let pick = rng.random_range(0..n);
                Some((ips[pick], asns[pick]))
            }
        };
        out.push(Relay {
            id: wire.id,
            bandwidth_weight: wire.bw,
            is_guard: wire.guard,
            is_exit: wire.exit,
            asn: wire.asn,
            resolver,
        });
    }
    Ok(out)
}

/// Bandwidth-weighted pick among relays passing `eligible`. Shared by
/// guard and exit selection.
fn select_weighted<'a, R: Rng + ?Sized>(
    relays: &'a [Relay],
    eligible: impl Fn(&Relay) -> bool,
    role: &'static str,
    rng: &mut R,
) -> Result<&'a Relay, PathSimError> {
    let pool: Vec<&Relay> = relays
        .iter()
        .filter(|r| eligible(r) && r.bandwidth_weight > 0.0)
        .collect();
    let total: f64 = pool.iter().map(|r| r.bandwidth_weight).sum();
    if pool.is_empty() || total <= 0.0 {
        return Err(PathSimError::NoEligibleRelay { role });
    }
    let mut ticket = rng.random::<f64>() * total;
    for r in &pool {
        ticket -= r.bandwidth_weight;
        if ticket < 0.0 {
            return Ok(r);
        }
    }
    Ok(pool.last().expect("non-empty pool"))
}

/// Bandwidth-weighted guard selection (one guard per client horizon).
pub fn select_guard<'a, R: Rng + ?Sized>(
    relays: &'a [Relay],
    rng: &mut R,
) -> Result<&'a Relay, PathSimError> {
    select_weighted(relays, |r| r.is_guard, "guard", rng)
}

/// Bandwidth-weighted exit selection (fresh per circuit).
pub fn select_exit<'a, R: Rng + ?Sized>(
    relays: &'a [Relay],
    rng: &mut R,
) -> Result<&'a Relay, PathSimError> {
    select_weighted(relays, |r| r.is_exit, "exit", rng)
}

/// One daily visit opportunity: a time of day and the sites opened
/// together at it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailyEvent {
    pub tod_s: u32,
    pub domains: Vec<Domain>,
}

/// The client's repeating daily browsing pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageSchedule {
    pub events: Vec<DailyEvent>,
}

impl UsageSchedule {
    pub fn new(events: Vec<DailyEvent>) -> Result<Self, PathSimError> {
        if events.is_empty() {
            return Err(PathSimError::BadSchedule("no events".into()));
        }
        for e in &events {
            if e.tod_s >= 86_400 {
                return Err(PathSimError::BadSchedule(format!(
                    "time of day {} out of range",
                    e.tod_s
                )));
            }
            if e.domains.is_empty() {
                return Err(PathSimError::BadSchedule("event with no domains".into()));
            }
        }
        if events.windows(2).any(|p| p[1].tod_s <= p[0].tod_s) {
            return Err(PathSimError::BadSchedule(
                "event times must be strictly increasing".into(),
            ));
        }
        Ok(Self { events })
    }

    /// The built-in office-worker day: 09:00 mail+twitter, 12:00
    /// calendar+docs, 15:00 facebook+instagram, 18:00 and 18:20 the
    /// three search sites — 12 visits a day.
    pub fn default_daily() -> Self {
        let d = |s: &str| Domain::new(s).expect("static domain");
        let h = |hh: u32, mm: u32| hh * 3600 + mm * 60;
        Self::new(vec![
            DailyEvent { tod_s: h(9, 0), domains: vec![d("mail.google.com"), d("www.twitter.com")] },
            DailyEvent {
                tod_s: h(12, 0),
                domains: vec![d("calendar.google.com"), d("docs.google.com")],
            },
            DailyEvent {
                tod_s: h(15, 0),
                domains: vec![d("www.facebook.com"), d("www.instagram.com")],
            },
            DailyEvent {
                tod_s: h(18, 0),
                domains: vec![d("www.google.com"), d("www.startpage.com"), d("www.ixquick.com")],
            },
            DailyEvent {
                tod_s: h(18, 20),
                domains: vec![d("www.google.com"), d("www.startpage.com"), d("www.ixquick.com")],
            },
        ])
        .expect("default schedule is valid")
    }

    pub fn visits_per_day(&self) -> usize {
        self.events.iter().map(|e| e.domains.len()).sum()
    }
}

/// One planned visit: absolute time and the domain index into the
/// schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedVisit {
    pub t_s: u64,
    pub domain: Domain,
}

/// Visits sharing one circuit (same ten-minute window).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitGroup {
    /// `t_s / CIRCUIT_WINDOW_S`, unique per circuit.
    pub window: u64,
    pub visits: Vec<PlannedVisit>,
}

/// Expands the schedule over the horizon into chronological circuit
/// groups. Pure; every client shares the same plan.
pub fn visit_plan(schedule: &UsageSchedule, horizon_days: u32) -> Vec<CircuitGroup> {
    let mut groups: Vec<CircuitGroup> = Vec::new();
    for day in 0..horizon_days as u64 {
        for event in &schedule.events {
            let t = day * 86_400 + event.tod_s as u64;
            let window = t / CIRCUIT_WINDOW_S;
            for domain in &event.domains {
                let visit = PlannedVisit { t_s: t, domain: domain.clone() };
                match groups.last_mut() {
                    Some(g) if g.window == window => g.visits.push(visit),
                    _ => groups.push(CircuitGroup { window, visits: vec![visit] }),
                }
            }
        }
    }
    groups
}

/// The four DNS configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DnsScenario {
    IspDns,
    GoogleDns,
    LocalDns,
    StatusQuo,
}

impl DnsScenario {
    pub const ALL: [DnsScenario; 4] = [
        DnsScenario::IspDns,
        DnsScenario::GoogleDns,
        DnsScenario::LocalDns,
        DnsScenario::StatusQuo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DnsScenario::IspDns => "isp-dns",
            DnsScenario::GoogleDns => "google-dns",
            DnsScenario::LocalDns => "local-dns",
            DnsScenario::StatusQuo => "status-quo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|sc| sc.name() == s)
    }
}

/// AS-path map keyed by `(source ASN, destination key)`.
///
/// Destination keys: a guard relay id (ingress map), or for egress
/// maps `"google"`, `"local:<domain>"`, `"resolver:<ip>"`.
#[derive(Debug, Clone, Default)]
pub struct PathMap {
    paths: HashMap<(Asn, String), AsSet>,
}

impl PathMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, src_asn: Asn, dst_key: impl Into<String>, set: AsSet) {
        self.paths.insert((src_asn, dst_key.into()), set);
    }

    pub fn get(&self, src_asn: Asn, dst_key: &str) -> Option<&AsSet> {
        self.paths.get(&(src_asn, dst_key.to_string()))
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Parses the `src_asn,dst_key,asn_list` CSV (asn_list is
    /// `;`-separated, possibly empty).
    pub fn load<R: BufRead>(r: R) -> Result<Self, PathSimError> {
        let mut map = Self::new();
        for (i, line) in r.lines().enumerate() {
            let lineno = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, ',');
            let (src, key, list) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(PathSimError::Parse {
                        line: lineno,
                        reason: "expected `src_asn,dst_key,asn_list`".into(),
                    })
                }
            };
            let src_asn: Asn = src.trim().parse().map_err(|_| PathSimError::Parse {
                line: lineno,
                reason: format!("bad source ASN {src:?}"),
            })?;
            let mut set = AsSet::new();
            for tok in list.split(';').filter(|t| !t.trim().is_empty()) {
                let asn: Asn = tok.trim().parse().map_err(|_| PathSimError::Parse {
                    line: lineno,
                    reason: format!("bad ASN {tok:?} in path list"),
                })?;
                set.0.insert(asn);
            }
            map.insert(src_asn, key.trim(), set);
        }
        Ok(map)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), PathSimError> {
        let mut keys: Vec<&(Asn, String)> = self.paths.keys().collect();
        keys.sort();
        for key in keys {
            let set = &self.paths[key];
            let list: Vec<String> = set.0.iter().map(|a| a.to_string()).collect();
            writeln!(w, "{},{},{}", key.0, key.1, list.join(";"))?;
        }
        Ok(())
    }
}

/// Simulation dimensions and seeding.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub clients: usize,
    pub horizon_days: u32,
    pub client_ases: Vec<Asn>,
    pub master_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            clients: DEFAULT_CLIENTS,
            horizon_days: DEFAULT_HORIZON_DAYS,
            client_ases: DEFAULT_CLIENT_ASES.to_vec(),
            master_seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), PathSimError> {
        if self.clients == 0 {
            return Err(PathSimError::BadConfig("need at least one client".into()));
        }
        if self.horizon_days == 0 {
            return Err(PathSimError::BadConfig("horizon must be at least one day".into()));
        }
        if self.client_ases.is_empty() {
            return Err(PathSimError::BadConfig("need at least one client AS".into()));
        }
        Ok(())
    }

    pub fn cap_s(&self) -> u64 {
        self.horizon_days as u64 * 86_400
    }
}

/// Per-client outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientMetrics {
    pub client_idx: usize,
    pub client_asn: Asn,
    /// Compromised visits over total visits.
    pub fraction: f64,
    /// Seconds to the first compromised visit; the horizon cap when
    /// never compromised.
    pub time_to_first_s: u64,
}

/// Full simulation output for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub scenario: DnsScenario,
    pub per_client: Vec<ClientMetrics>,
    pub total_visits_per_client: usize,
}

/// Egress AS set for one visit, or `Conservative` when the data is
/// missing and only the exit AS itself can be checked.
enum Egress<'a> {
    Set(&'a AsSet),
    Own(AsSet),
    Conservative(Asn),
}

fn egress_for<'a>(
    scenario: DnsScenario,
    exit: &Relay,
    domain: &Domain,
    egress_paths: &'a PathMap,
) -> Egress<'a> {
    match scenario {
        DnsScenario::IspDns => Egress::Own(AsSet::from_iter([exit.asn])),
        DnsScenario::GoogleDns => match egress_paths.get(exit.asn, "google") {
            Some(set) => Egress::Set(set),
            None => Egress::Conservative(exit.asn),
        },
        DnsScenario::LocalDns => {
            match egress_paths.get(exit.asn, &format!("local:{}", domain.as_str())) {
                Some(set) => Egress::Set(set),
                None => Egress::Conservative(exit.asn),
            }
        }
        DnsScenario::StatusQuo => match exit.resolver {
            Some((ip, _)) => match egress_paths.get(exit.asn, &format!("resolver:{ip}")) {
                Some(set) => Egress::Set(set),
                None => Egress::Conservative(exit.asn),
            },
            None => Egress::Conservative(exit.asn),
        },
    }
}

fn compromised(ingress: &AsSet, egress: &Egress<'_>) -> bool {
    match egress {
        Egress::Set(set) => !ingress.0.is_disjoint(&set.0),
        Egress::Own(set) => !ingress.0.is_disjoint(&set.0),
        Egress::Conservative(exit_asn) => ingress.0.contains(exit_asn),
    }
}

/// Runs one scenario. Per-client seeds derive from
/// `(master_seed, client index)`; the stream is scenario-independent,
/// so scenario comparisons are paired.
pub fn run_simulation(
    cfg: &SimConfig,
    relays: &[Relay],
    schedule: &UsageSchedule,
    scenario: DnsScenario,
    ingress_paths: &PathMap,
    egress_paths: &PathMap,
) -> Result<SimOutput, PathSimError> {
    cfg.validate()?;
    let plan = visit_plan(schedule, cfg.horizon_days);
    let total_visits: usize = plan.iter().map(|g| g.visits.len()).sum();
    let cap = cfg.cap_s();

    let per_client: Vec<ClientMetrics> = (0..cfg.clients)
        .into_par_iter()
        .map(|idx| -> Result<ClientMetrics, PathSimError> {
            let client_asn = cfg.client_ases[idx % cfg.client_ases.len()];
            let mut rng = task_rng(cfg.master_seed, "pathsim-client", idx as u64);
            let guard = select_guard(relays, &mut rng)?;
            let ingress = ingress_paths.get(client_asn, &guard.id).ok_or_else(|| {
                PathSimError::MissingIngress { client_asn, guard_id: guard.id.clone() }
            })?;
            let mut hit = 0usize;
            let mut first: Option<u64> = None;
            for group in &plan {
                let exit = select_exit(relays, &mut rng)?;
                for visit in &group.visits {
                    let egress = egress_for(scenario, exit, &visit.domain, egress_paths);
                    if compromised(ingress, &egress) {
                        hit += 1;
                        first.get_or_insert(visit.t_s);
                    }
                }
            }
            Ok(ClientMetrics {
                client_idx: idx,
                client_asn,
                fraction: hit as f64 / total_visits as f64,
                time_to_first_s: first.unwrap_or(cap),
            })
        })
        .collect::<Result<_, _>>()?;

    Ok(SimOutput { scenario, per_client, total_visits_per_client: total_visits })
}

/// Nearest-rank quantile over a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Quartiles of both metrics for one (scenario, client AS) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummaryRow {
    pub scenario: DnsScenario,
    pub client_asn: Asn,
    pub clients: usize,
    pub fraction_q1: f64,
    pub fraction_median: f64,
    pub fraction_q3: f64,
    pub ttf_q1_s: f64,
    pub ttf_median_s: f64,
    pub ttf_q3_s: f64,
}

/// Summarises completed runs per (scenario, client AS). Row order:
/// output order given, client ASes ascending.
pub fn summarize_outputs(outputs: &[SimOutput]) -> Vec<ScenarioSummaryRow> {
    let mut rows = Vec::new();
    for out in outputs {
        let mut by_as: HashMap<Asn, (Vec<f64>, Vec<f64>)> = HashMap::new();
        for m in &out.per_client {
            let slot = by_as.entry(m.client_asn).or_default();
            slot.0.push(m.fraction);
            slot.1.push(m.time_to_first_s as f64);
        }
        let mut ases: Vec<Asn> = by_as.keys().copied().collect();
        ases.sort_unstable();
        for asn in ases {
            let (mut fracs, mut ttfs) = by_as.remove(&asn).expect("key exists");
            fracs.sort_by(f64::total_cmp);
            ttfs.sort_by(f64::total_cmp);
            rows.push(ScenarioSummaryRow {
                scenario: out.scenario,
                client_asn: asn,
                clients: fracs.len(),
                fraction_q1: quantile_sorted(&fracs, 0.25),
                fraction_median: quantile_sorted(&fracs, 0.5),
                fraction_q3: quantile_sorted(&fracs, 0.75),
                ttf_q1_s: quantile_sorted(&ttfs, 0.25),
                ttf_median_s: quantile_sorted(&ttfs, 0.5),
                ttf_q3_s: quantile_sorted(&ttfs, 0.75),
            });
        }
    }
    rows
}

/// Runs every scenario with the same seed base and summarises per
/// (scenario, client AS). Row order: scenario order given, client
/// ASes ascending.
pub fn scenario_compare(
    cfg: &SimConfig,
    relays: &[Relay],
    schedule: &UsageSchedule,
    scenarios: &[DnsScenario],
    ingress_paths: &PathMap,
    egress_paths: &PathMap,
) -> Result<Vec<ScenarioSummaryRow>, PathSimError> {
    let mut outputs = Vec::with_capacity(scenarios.len());
    for &scenario in scenarios {
        outputs.push(run_simulation(cfg, relays, schedule, scenario, ingress_paths, egress_paths)?);
    }
    Ok(summarize_outputs(&outputs))
}

/// Writes the per-client CSV:
/// `scenario,client_asn,client_idx,fraction,time_to_first_s`.
pub fn write_client_metrics_csv<W: Write>(
    outputs: &[SimOutput],
    mut w: W,
) -> Result<(), PathSimError> {
    writeln!(w, "scenario,client_asn,client_idx,fraction,time_to_first_s")?;
    for out in outputs {
        for m in &out.per_client {
            writeln!(
                w,
                "{},{},{},{:.6},{}",
                out.scenario.name(),
                m.client_asn,
                m.client_idx,
                m.fraction,
                m.time_to_first_s
            )?;
        }
    }
    Ok(())
}

/// Writes the per-(scenario, client AS) quartile summary:
/// `scenario,client_asn,clients,fraction_q1,fraction_median,fraction_q3,ttf_q1_s,ttf_median_s,ttf_q3_s`.
pub fn write_summary_csv<W: Write>(
    rows: &[ScenarioSummaryRow],
    mut w: W,
) -> Result<(), PathSimError> {
    writeln!(
        w,
        "scenario,client_asn,clients,fraction_q1,fraction_median,fraction_q3,\
         ttf_q1_s,ttf_median_s,ttf_q3_s"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.6},{:.6},{:.6},{:.0},{:.0},{:.0}",
            r.scenario.name(),
            r.client_asn,
            r.clients,
            r.fraction_q1,
            r.fraction_median,
            r.fraction_q3,
            r.ttf_q1_s,
            r.ttf_median_s,
            r.ttf_q3_s
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relay(id: &str, bw: f64, guard: bool, exit: bool, asn: Asn) -> Relay {
        Relay {
            id: id.into(),
            bandwidth_weight: bw,
            is_guard: guard,
            is_exit: exit,
            asn,
            resolver: None,
        }
    }

    /// One guard (AS 10) and one exit (AS 20); ingress map covers every
    /// default client AS.
    fn tiny_net() -> (Vec<Relay>, PathMap) {
        let relays = vec![relay("g1", 100.0, true, false, 10), relay("e1", 100.0, false, true, 20)];
        let mut ingress = PathMap::new();
        for asn in DEFAULT_CLIENT_ASES {
            ingress.insert(asn, "g1", AsSet::from_iter([1]));
        }
        (relays, ingress)
    }

    fn one_client_cfg() -> SimConfig {
        SimConfig { clients: 1, master_seed: 7, ..SimConfig::default() }
    }

    #[test]
    fn single_guard_is_always_chosen() {
        let relays = vec![relay("g1", 5.0, true, false, 1), relay("e1", 5.0, false, true, 2)];
        let mut rng = task_rng(100, "pathsim-single", 0);
        for _ in 0..100 {
            assert_eq!(select_guard(&relays, &mut rng).unwrap().id, "g1");
        }
    }

    #[test]
    fn zero_weight_relays_are_never_chosen() {
        let relays = vec![
            relay("g1", 5.0, true, false, 1),
            relay("g2", 0.0, true, false, 2),
            relay("e1", 1.0, false, true, 3),
        ];
        let mut rng = task_rng(101, "pathsim-zero", 0);
        for _ in 0..100_000 {
            assert_eq!(select_guard(&relays, &mut rng).unwrap().id, "g1");
        }
    }

    /// Two exits with weights 3:1 over 1e5 draws. The 0.75 frequency
    /// must land within ±4σ, σ = sqrt(0.75·0.25/1e5) ≈ 0.00137.
    #[test]
    fn exit_selection_is_bandwidth_weighted() {
        let relays = vec![
            relay("e1", 3.0, false, true, 1),
            relay("e2", 1.0, false, true, 2),
            relay("g1", 1.0, true, false, 3),
        ];
        let mut rng = task_rng(102, "pathsim-weighted", 0);
        let n = 100_000;
        let mut hits = 0usize;
        for _ in 0..n {
            if select_exit(&relays, &mut rng).unwrap().id == "e1" {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        assert!((0.7445..=0.7555).contains(&freq), "freq {freq}");
    }

    #[test]
    fn no_eligible_relay_is_an_error() {
        let relays = vec![relay("g1", 5.0, true, false, 1)];
        let mut rng = task_rng(103, "pathsim-none", 0);
        assert!(matches!(
            select_exit(&relays, &mut rng),
            Err(PathSimError::NoEligibleRelay { role: "exit" })
        ));
        let zero = vec![relay("e1", 0.0, false, true, 1)];
        assert!(matches!(
            select_exit(&zero, &mut rng),
            Err(PathSimError::NoEligibleRelay { role: "exit" })
        ));
    }

    #[test]
    fn default_schedule_has_372_visits_over_31_days() {
        let schedule = UsageSchedule::default_daily();
        assert_eq!(schedule.visits_per_day(), 12);
        let plan = visit_plan(&schedule, 31);
        let total: usize = plan.iter().map(|g| g.visits.len()).sum();
        assert_eq!(total, 372);
        // Five circuit windows per day: the 18:00 and 18:20 groups are
        // 20 minutes apart and must not share a circuit.
        assert_eq!(plan.len(), 5 * 31);
        let day1: Vec<&CircuitGroup> = plan.iter().take(5).collect();
        assert_eq!(day1[3].visits[0].t_s, 18 * 3600);
        assert_eq!(day1[4].visits[0].t_s, 18 * 3600 + 20 * 60);
        assert_ne!(day1[3].window, day1[4].window);
        // Within an event, all sites share the circuit window.
        assert_eq!(day1[0].visits.len(), 2);
        assert_eq!(day1[3].visits.len(), 3);
    }

    #[test]
    fn visits_within_ten_minutes_share_a_circuit() {
        let d = |s: &str| Domain::new(s).unwrap();
        let schedule = UsageSchedule::new(vec![
            DailyEvent { tod_s: 9 * 3600, domains: vec![d("a.example")] },
            DailyEvent { tod_s: 9 * 3600 + 540, domains: vec![d("b.example")] },
        ])
        .unwrap();
        let plan = visit_plan(&schedule, 1);
        // 09:00:00 and 09:09:00 fall in the same 600 s window.
        assert_eq!(plan.len(), 1);
        assert_eq!(plan[0].visits.len(), 2);
    }

    /// Hand-enumerated fixture: ingress {1}, egress {1,2} under
    /// GoogleDns. Every visit is compromised; the first event is
    /// 09:00 day 1 = 32,400 s.
    #[test]
    fn always_compromised_fixture() {
        let (relays, ingress) = tiny_net();
        let mut egress = PathMap::new();
        egress.insert(20, "google", AsSet::from_iter([1, 2]));
        let out = run_simulation(
            &one_client_cfg(),
            &relays,
            &UsageSchedule::default_daily(),
            DnsScenario::GoogleDns,
            &ingress,
            &egress,
        )
        .unwrap();
        assert_eq!(out.total_visits_per_client, 372);
        let m = &out.per_client[0];
        assert_eq!(m.fraction, 1.0);
        assert_eq!(m.time_to_first_s, 32_400);
    }

    #[test]
    fn never_compromised_reports_the_horizon_cap() {
        let (relays, ingress) = tiny_net();
        let mut egress = PathMap::new();
        egress.insert(20, "google", AsSet::from_iter([2]));
        let out = run_simulation(
            &one_client_cfg(),
            &relays,
            &UsageSchedule::default_daily(),
            DnsScenario::GoogleDns,
            &ingress,
            &egress,
        )
        .unwrap();
        let m = &out.per_client[0];
        assert_eq!(m.fraction, 0.0);
        assert_eq!(m.time_to_first_s, 31 * 86_400);
    }

    #[test]
    fn missing_ingress_names_the_pair() {
        let relays = vec![relay("g1", 1.0, true, false, 10), relay("e1", 1.0, false, true, 20)];
        let ingress = PathMap::new();
        let err = run_simulation(
            &one_client_cfg(),
            &relays,
            &UsageSchedule::default_daily(),
            DnsScenario::IspDns,
            &ingress,
            &PathMap::new(),
        )
        .unwrap_err();
        match err {
            PathSimError::MissingIngress { client_asn, guard_id } => {
                assert_eq!(client_asn, DEFAULT_CLIENT_ASES[0]);
                assert_eq!(guard_id, "g1");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    /// Conservative rule: without egress data, only the exit AS itself
    /// is checked.
    #[test]
    fn missing_egress_uses_the_exit_as_only() {
        let (relays, _) = tiny_net();
        let schedule = UsageSchedule::default_daily();
        // Ingress contains the exit AS (20): conservative rule still
        // catches it.
        let mut ingress_hit = PathMap::new();
        for asn in DEFAULT_CLIENT_ASES {
            ingress_hit.insert(asn, "g1", AsSet::from_iter([20]));
        }
        let out = run_simulation(
            &one_client_cfg(),
            &relays,
            &schedule,
            DnsScenario::StatusQuo,
            &ingress_hit,
            &PathMap::new(),
        )
        .unwrap();
        assert_eq!(out.per_client[0].fraction, 1.0);
        // Ingress without the exit AS: uncompromised, even though a
        // hypothetical resolver path might have intersected.
        let mut ingress_miss = PathMap::new();
        for asn in DEFAULT_CLIENT_ASES {
            ingress_miss.insert(asn, "g1", AsSet::from_iter([9]));
        }
        let out = run_simulation(
            &one_client_cfg(),
            &relays,
            &schedule,
            DnsScenario::StatusQuo,
            &ingress_miss,
            &PathMap::new(),
        )
        .unwrap();
        assert_eq!(out.per_client[0].fraction, 0.0);
    }

    #[test]
    fn zero_fraction_and_cap_are_equivalent() {
        let (relays, ingress) = tiny_net();
        let mut egress = PathMap::new();
        // Half the clients' ASes intersect, by alternating ingress.
        let mut ingress_mixed = PathMap::new();
        for (i, asn) in DEFAULT_CLIENT_ASES.iter().enumerate() {
            let set = if i % 2 == 0 { AsSet::from_iter([1]) } else { AsSet::from_iter([9]) };
            ingress_mixed.insert(*asn, "g1", set);
        }
        egress.insert(20, "google", AsSet::from_iter([1]));
        let cfg = SimConfig { clients: 40, master_seed: 11, ..SimConfig::default() };
        let out = run_simulation(
            &cfg,
            &relays,
            &UsageSchedule::default_daily(),
            DnsScenario::GoogleDns,
            &ingress_mixed,
            &egress,
        )
        .unwrap();
        drop(ingress);
        for m in &out.per_client {
            assert_eq!(m.fraction == 0.0, m.time_to_first_s == 31 * 86_400, "{m:?}");
        }
        // Both populations occur in this fixture.
        assert!(out.per_client.iter().any(|m| m.fraction == 0.0));
        assert!(out.per_client.iter().any(|m| m.fraction > 0.0));
    }

    /// Enlarging an egress set can only add intersections: per-client
    /// fractions are monotone under egress supersets (paired seeds).
    #[test]
    fn egress_supersets_never_reduce_compromise() {
        let relays = vec![
            relay("g1", 3.0, true, false, 10),
            relay("g2", 1.0, true, false, 11),
            relay("e1", 2.0, false, true, 20),
            relay("e2", 1.0, false, true, 21),
        ];
        let mut ingress = PathMap::new();
        for asn in DEFAULT_CLIENT_ASES {
            ingress.insert(asn, "g1", AsSet::from_iter([1, 3]));
            ingress.insert(asn, "g2", AsSet::from_iter([2]));
        }
        let mut small = PathMap::new();
        small.insert(20, "google", AsSet::from_iter([1]));
        small.insert(21, "google", AsSet::from_iter([7]));
        let mut big = PathMap::new();
        big.insert(20, "google", AsSet::from_iter([1, 2]));
        big.insert(21, "google", AsSet::from_iter([7, 3]));
        let cfg = SimConfig { clients: 200, master_seed: 13, ..SimConfig::default() };
        let schedule = UsageSchedule::default_daily();
        let run = |egress: &PathMap| {
            run_simulation(&cfg, &relays, &schedule, DnsScenario::GoogleDns, &ingress, egress)
                .unwrap()
        };
        let out_small = run(&small);
        let out_big = run(&big);
        for (a, b) in out_small.per_client.iter().zip(&out_big.per_client) {
            assert!(b.fraction >= a.fraction, "client {}", a.client_idx);
            assert!(b.time_to_first_s <= a.time_to_first_s, "client {}", a.client_idx);
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let (relays, ingress) = tiny_net();
        let mut egress = PathMap::new();
        egress.insert(20, "google", AsSet::from_iter([1]));
        let cfg = SimConfig { clients: 50, master_seed: 17, ..SimConfig::default() };
        let schedule = UsageSchedule::default_daily();
        let run = || {
            run_simulation(&cfg, &relays, &schedule, DnsScenario::GoogleDns, &ingress, &egress)
                .unwrap()
        };
        assert_eq!(run(), run());
    }

    /// IspDns (egress = exit AS only) must be safer than LocalDns in a
    /// fixture where the delegation path crosses the ingress AS but
    /// the exit AS does not.
    #[test]
    fn isp_dns_is_safer_than_local_dns_here() {
        let (relays, ingress) = tiny_net();
        let mut egress = PathMap::new();
        for event in &UsageSchedule::default_daily().events {
            for domain in &event.domains {
                egress.insert(
                    20,
                    format!("local:{}", domain.as_str()),
                    AsSet::from_iter([1, 5]),
                );
            }
        }
        let cfg = SimConfig { clients: 20, master_seed: 19, ..SimConfig::default() };
        let schedule = UsageSchedule::default_daily();
        let rows = scenario_compare(
            &cfg,
            &relays,
            &schedule,
            &[DnsScenario::IspDns, DnsScenario::LocalDns],
            &ingress,
            &egress,
        )
        .unwrap();
        let med = |s: DnsScenario| -> f64 {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.scenario == s)
                .map(|r| r.fraction_median)
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        assert!(med(DnsScenario::IspDns) < med(DnsScenario::LocalDns));
        assert_eq!(med(DnsScenario::IspDns), 0.0);
        assert_eq!(med(DnsScenario::LocalDns), 1.0);
    }

    #[test]
    fn identical_egress_semantics_give_identical_metrics() {
        let (relays, ingress) = tiny_net();
        // GoogleDns and LocalDns both resolve to the same AS set.
        let mut egress = PathMap::new();
        egress.insert(20, "google", AsSet::from_iter([1, 4]));
        for event in &UsageSchedule::default_daily().events {
            for domain in &event.domains {
                egress
                    .insert(20, format!("local:{}", domain.as_str()), AsSet::from_iter([1, 4]));
            }
        }
        let cfg = SimConfig { clients: 30, master_seed: 23, ..SimConfig::default() };
        let schedule = UsageSchedule::default_daily();
        let run = |s: DnsScenario| {
            let out =
                run_simulation(&cfg, &relays, &schedule, s, &ingress, &egress).unwrap();
            out.per_client
        };
        assert_eq!(run(DnsScenario::GoogleDns), run(DnsScenario::LocalDns));
    }

    #[test]
    fn empty_scenario_list_gives_an_empty_table() {
        let (relays, ingress) = tiny_net();
        let cfg = one_client_cfg();
        let rows = scenario_compare(
            &cfg,
            &relays,
            &UsageSchedule::default_daily(),
            &[],
            &ingress,
            &PathMap::new(),
        )
        .unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn relay_jsonl_covers_null_scalar_and_array_resolvers() {
        let input = concat!(
            "{\"id\":\"a\",\"bw\":10.0,\"guard\":true,\"exit\":false,\"asn\":1,",
            "\"resolver_ip\":null,\"resolver_asn\":null}\n",
            "{\"id\":\"b\",\"bw\":5.0,\"guard\":false,\"exit\":true,\"asn\":2,",
            "\"resolver_ip\":\"8.8.8.8\",\"resolver_asn\":15169}\n",
            "{\"id\":\"c\",\"bw\":5.0,\"guard\":false,\"exit\":true,\"asn\":3,",
            "\"resolver_ip\":[\"9.9.9.9\",\"1.1.1.1\"],\"resolver_asn\":[19281,13335]}\n",
        );
        let mut rng = task_rng(104, "pathsim-relays", 0);
        let relays = load_relays(input.as_bytes(), &mut rng).unwrap();
        assert_eq!(relays.len(), 3);
        assert_eq!(relays[0].resolver, None);
        assert_eq!(relays[1].resolver, Some(("8.8.8.8".parse().unwrap(), 15169)));
        let (ip, asn) = relays[2].resolver.unwrap();
        assert!(
            (ip, asn) == ("9.9.9.9".parse().unwrap(), 19281)
                || (ip, asn) == ("1.1.1.1".parse().unwrap(), 13335)
        );
        // Omitted resolver fields behave like null.
        let bare =
            "{\"id\":\"d\",\"bw\":1.0,\"guard\":true,\"exit\":false,\"asn\":4}\n";
        let relays = load_relays(bare.as_bytes(), &mut rng).unwrap();
        assert_eq!(relays[0].resolver, None);
        // Mismatched resolver arrays are rejected.
        let bad = concat!(
            "{\"id\":\"e\",\"bw\":1.0,\"guard\":false,\"exit\":true,\"asn\":5,",
            "\"resolver_ip\":[\"9.9.9.9\"],\"resolver_asn\":[1,2]}\n"
        );
        assert!(matches!(
            load_relays(bad.as_bytes(), &mut rng),
            Err(PathSimError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn path_map_roundtrip_and_errors() {
        let text = "7922,g1,1;2;3\n20,google,15169\n20,local:www.example.com,\n";
        let map = PathMap::load(text.as_bytes()).unwrap();
        assert_eq!(map.len(), 3);
        assert_eq!(map.get(7922, "g1"), Some(&AsSet::from_iter([1, 2, 3])));
        assert_eq!(map.get(20, "local:www.example.com"), Some(&AsSet::new()));
        let mut buf = Vec::new();
        map.write(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "20,google,15169\n20,local:www.example.com,\n7922,g1,1;2;3\n"
        );
        assert!(matches!(
            PathMap::load(&b"nocolumns\n"[..]),
            Err(PathSimError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            PathMap::load(&b"x,g1,1\n"[..]),
            Err(PathSimError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            PathMap::load(&b"1,g1,banana\n"[..]),
            Err(PathSimError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn client_metrics_csv_is_stable() {
        let (relays, ingress) = tiny_net();
        let mut egress = PathMap::new();
        egress.insert(20, "google", AsSet::from_iter([1]));
        let cfg = SimConfig { clients: 2, master_seed: 29, ..SimConfig::default() };
        let out = run_simulation(
            &cfg,
            &relays,
            &UsageSchedule::default_daily(),
            DnsScenario::GoogleDns,
            &ingress,
            &egress,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_client_metrics_csv(std::slice::from_ref(&out), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scenario,client_asn,client_idx,fraction,time_to_first_s"
        );
        assert_eq!(lines.next().unwrap(), "google-dns,7922,0,1.000000,32400");
        assert_eq!(lines.next().unwrap(), "google-dns,42610,1,1.000000,32400");
    }
}
