//! AS-exposure analysis.
//!
//! For a site, let `W` be the set of autonomous systems traversed by
//! its web (TCP) traceroutes and `D` the set traversed by traceroutes
//! to its DNS delegation path. The exposure
//!
//! ```text
//! λ = |D ∖ W| / |D ∪ W|
//! ```
//!
//! is the fraction of involved ASes that see the client's DNS traffic
//! *only* — networks that gain observation opportunities purely from
//! name resolution. λ = 0 means DNS adds no new observers; λ = 1 means
//! every involved AS is DNS-only (which requires `W` to be empty).
//!
//! Hop addresses are mapped to ASes by longest-prefix match against a
//! routing-table snapshot. Private and reserved addresses inside hops
//! are dropped rather than mapped — a site-local hop says nothing
//! about transit ASes — and unresponsive hops contribute nothing.
//!
//! On-disk formats: the routing snapshot is text with one
//! `prefix<TAB>asn` per line; traceroutes are line-oriented JSON, one
//! object per traceroute:
//!
//! ```text
//! {"target":"198.51.100.7","proto":"tcp","site":"example.com","role":"web",
//!  "hops":[{"ttl":1,"ip":"198.51.100.1"},{"ttl":2,"ip":null}]}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Domain;

/// Autonomous-system number; zero is not a valid public ASN here.
pub type Asn = u32;

#[derive(Debug, Error)]
pub enum ExposureError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate prefix {0}")]
    DuplicatePrefix(String),
    #[error("ASN must be positive")]
    BadAsn,
    #[error("hop TTLs must be strictly increasing")]
    TtlOrder,
    #[error("lambda is undefined when both AS sets are empty")]
    UndefinedLambda,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// An IPv4 prefix `address/length`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Prefix {
    addr: u32,
    len: u8,
}

impl Prefix {
    pub fn new(addr: Ipv4Addr, len: u8) -> Option<Self> {
        if len > 32 {
            return None;
        }
        let raw = u32::from(addr) & mask(len);
        Some(Self { addr: raw, len })
    }

    pub fn contains(&self, ip: Ipv4Addr) -> bool {
        u32::from(ip) & mask(self.len) == self.addr
    }

    pub fn len(&self) -> u8 {
        self.len
    }
}

impl std::fmt::Display for Prefix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", Ipv4Addr::from(self.addr), self.len)
    }
}

impl FromStr for Prefix {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (addr, len) = s
            .split_once('/')
            .ok_or_else(|| format!("prefix {s:?} missing /length"))?;
        let addr: Ipv4Addr = addr.parse().map_err(|_| format!("bad address {addr:?}"))?;
        let len: u8 = len.parse().map_err(|_| format!("bad prefix length {len:?}"))?;
        Prefix::new(addr, len).ok_or_else(|| format!("prefix length {len} out of range"))
    }
}

fn mask(len: u8) -> u32 {
    if len == 0 {
        0
    } else {
        u32::MAX << (32 - len)
    }
}

/// Result of a longest-prefix-match lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Asn(Asn),
    NoRoute,
}

/// Prefix → ASN table with longest-prefix-match lookup.
///
/// Stored per prefix length so a lookup scans at most 33 hash maps
/// from most to least specific.
#[derive(Debug, Default, Clone)]
pub struct RoutingTable {
    by_len: BTreeMap<u8, HashMap<u32, Asn>>,
    entries: usize,
}

impl RoutingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prefix: Prefix, asn: Asn) -> Result<(), ExposureError> {
        if asn == 0 {
            return Err(ExposureError::BadAsn);
        }
        let slot = self.by_len.entry(prefix.len).or_default();
        match slot.entry(prefix.addr) {
            std::collections::hash_map::Entry::Occupied(_) => {
                return Err(ExposureError::DuplicatePrefix(prefix.to_string()));
            }
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(asn);
            }
        }
        self.entries += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }

    /// Longest-prefix match; `NoRoute` when nothing covers `ip`.
    pub fn lpm(&self, ip: Ipv4Addr) -> Route {
        let raw = u32::from(ip);
        for (&len, slot) in self.by_len.iter().rev() {
            if let Some(&asn) = slot.get(&(raw & mask(len))) {
                return Route::Asn(asn);
            }
        }
        Route::NoRoute
    }

    /// Parses the `prefix<TAB>asn` snapshot format.
    pub fn load<R: BufRead>(r: R) -> Result<Self, ExposureError> {
        let mut table = Self::new();
        for (i, line) in r.lines().enumerate() {
            let lineno = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (prefix_s, asn_s) = line.split_once('\t').ok_or_else(|| {
                ExposureError::Parse {
                    line: lineno,
                    reason: "expected `prefix<TAB>asn`".into(),
                }
            })?;
            let prefix: Prefix = prefix_s.trim().parse().map_err(|reason| {
                ExposureError::Parse { line: lineno, reason }
            })?;
            let asn: Asn = asn_s.trim().parse().map_err(|_| ExposureError::Parse {
                line: lineno,
                reason: format!("bad ASN {asn_s:?}"),
            })?;
            table.insert(prefix, asn).map_err(|e| match e {
                ExposureError::DuplicatePrefix(p) => ExposureError::Parse {
                    line: lineno,
                    reason: format!("duplicate prefix {p}"),
                },
                ExposureError::BadAsn => ExposureError::Parse {
                    line: lineno,
                    reason: "ASN must be positive".into(),
                },
                other => other,
            })?;
        }
        Ok(table)
    }
}

/// True for addresses that carry no transit-AS information: private,
/// loopback, link-local, CGN, multicast, reserved, unspecified.
pub fn is_reserved(ip: Ipv4Addr) -> bool {
    let o = ip.octets();
    ip.is_private()
        || ip.is_loopback()
        || ip.is_link_local()
        || ip.is_multicast()
        || ip.is_broadcast()
        || ip.is_unspecified()
        || o[0] == 0
        || o[0] >= 240
        || (o[0] == 100 && (o[1] & 0xc0) == 64) // 100.64.0.0/10 CGN
}

/// Traceroute role: toward the web server or along the DNS delegation
/// path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceRole {
    Web,
    Dns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceProto {
    Tcp,
    Udp,
}

/// One hop: a TTL index and the responding address, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub ttl: u32,
    pub ip: Option<Ipv4Addr>,
}

/// One traceroute toward a site's web server or DNS delegation path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Traceroute {
    pub target: Ipv4Addr,
    pub proto: TraceProto,
    pub site: Domain,
    pub role: TraceRole,
    pub hops: Vec<Hop>,
}

impl Traceroute {
    pub fn new(
        target: Ipv4Addr,
        proto: TraceProto,
        site: Domain,
        role: TraceRole,
        hops: Vec<Hop>,
    ) -> Result<Self, ExposureError> {
        for pair in hops.windows(2) {
            if pair[1].ttl <= pair[0].ttl {
                return Err(ExposureError::TtlOrder);
            }
        }
        Ok(Self { target, proto, site, role, hops })
    }
}

/// Wire form of a traceroute line; converted into [`Traceroute`] with
/// validation on load.
#[derive(Debug, Serialize, Deserialize)]
struct TracerouteWire {
    target: Ipv4Addr,
    proto: TraceProto,
    site: String,
    role: TraceRole,
    hops: Vec<Hop>,
}

/// Parses a line-oriented JSON traceroute file.
pub fn load_traceroutes<R: BufRead>(r: R) -> Result<Vec<Traceroute>, ExposureError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: TracerouteWire =
            serde_json::from_str(&line).map_err(|e| ExposureError::Parse {
                line: lineno,
                reason: e.to_string(),
            })?;
        let site = Domain::new(&wire.site).map_err(|e| ExposureError::Parse {
            line: lineno,
            reason: e.to_string(),
        })?;
        let tr = Traceroute::new(wire.target, wire.proto, site, wire.role, wire.hops)
            .map_err(|e| ExposureError::Parse { line: lineno, reason: e.to_string() })?;
        out.push(tr);
    }
    Ok(out)
}

/// Serialises traceroutes in the line-oriented JSON format.
pub fn write_traceroutes<W: std::io::Write>(
    traces: &[Traceroute],
    mut w: W,
) -> Result<(), ExposureError> {
    for t in traces {
        let wire = TracerouteWire {
            target: t.target,
            proto: t.proto,
            site: t.site.as_str().to_string(),
            role: t.role,
            hops: t.hops.clone(),
        };
        let line = serde_json::to_string(&wire).expect("traceroute serialises");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// A set of ASNs with deterministic iteration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AsSet(pub BTreeSet<Asn>);

impl AsSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_iter<I: IntoIterator<Item = Asn>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Union of mapped hop ASes over the given traceroutes. Missing hops,
/// reserved addresses, and unrouted addresses contribute nothing.
pub fn as_set(traces: &[Traceroute], table: &RoutingTable) -> AsSet {
    let mut set = BTreeSet::new();
    for t in traces {
        for hop in &t.hops {
            let Some(ip) = hop.ip else { continue };
            if is_reserved(ip) {
                continue;
            }
            if let Route::Asn(asn) = table.lpm(ip) {
                set.insert(asn);
            }
        }
    }
    AsSet(set)
}

/// λ = |D ∖ W| / |D ∪ W|; undefined when both sets are empty.
pub fn lambda(d: &AsSet, w: &AsSet) -> Result<f64, ExposureError> {
    let union = d.0.union(&w.0).count();
    if union == 0 {
        return Err(ExposureError::UndefinedLambda);
    }
    let dns_only = d.0.difference(&w.0).count();
    Ok(dns_only as f64 / union as f64)
}

/// Per-site exposure: the two AS sets and their λ.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureResult {
    pub site: Domain,
    pub d_set: AsSet,
    pub w_set: AsSet,
    pub lambda: f64,
}

/// A site dropped from the report, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedSite {
    pub site: Domain,
    pub reason: String,
}

/// Output of [`exposure_report`].
#[derive(Debug, Clone)]
pub struct ExposureReport {
    pub results: Vec<ExposureResult>,
    pub skipped: Vec<SkippedSite>,
    /// Empirical CDF of λ: `(lambda, fraction of sites ≤ lambda)`,
    /// one point per site in ascending λ order.
    pub cdf: Vec<(f64, f64)>,
    /// Distinct ASes across all sites' D sets.
    pub dns_as_total: usize,
    /// Distinct ASes across all sites' W sets.
    pub web_as_total: usize,
}

/// Computes per-site λ for every requested site, skipping (with a
/// warning record) sites that lack a web or DNS traceroute or whose
/// mapped AS sets are both empty.
pub fn exposure_report(
    sites: &[Domain],
    web_traces: &[Traceroute],
    dns_traces: &[Traceroute],
    table: &RoutingTable,
) -> ExposureReport {
    let mut web_by_site: HashMap<&Domain, Vec<Traceroute>> = HashMap::new();
    for t in web_traces.iter().filter(|t| t.role == TraceRole::Web) {
        web_by_site.entry(&t.site).or_default().push(t.clone());
    }
    let mut dns_by_site: HashMap<&Domain, Vec<Traceroute>> = HashMap::new();
    for t in dns_traces.iter().filter(|t| t.role == TraceRole::Dns) {
        dns_by_site.entry(&t.site).or_default().push(t.clone());
    }

    let mut results = Vec::new();
    let mut skipped = Vec::new();
    let mut dns_union: BTreeSet<Asn> = BTreeSet::new();
    let mut web_union: BTreeSet<Asn> = BTreeSet::new();
    for site in sites {
        let web = web_by_site.get(site);
        let dns = dns_by_site.get(site);
        let (web, dns) = match (web, dns) {
            (Some(w), Some(d)) => (w, d),
            (None, _) => {
                skipped.push(SkippedSite {
                    site: site.clone(),
                    reason: "no web traceroute".into(),
                });
                continue;
            }
            (_, None) => {
                skipped.push(SkippedSite {
                    site: site.clone(),
                    reason: "no dns traceroute".into(),
                });
                continue;
            }
        };
        let w_set = as_set(web, table);
        let d_set = as_set(dns, table);
        match lambda(&d_set, &w_set) {
            Ok(l) => {
                dns_union.extend(d_set.0.iter().copied());
                web_union.extend(w_set.0.iter().copied());
                results.push(ExposureResult { site: site.clone(), d_set, w_set, lambda: l });
            }
            Err(_) => skipped.push(SkippedSite {
                site: site.clone(),
                reason: "no hop mapped to any AS".into(),
            }),
        }
    }

    let mut lambdas: Vec<f64> = results.iter().map(|r| r.lambda).collect();
    lambdas.sort_by(f64::total_cmp);
    let n = lambdas.len();
    let cdf = lambdas
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, (i + 1) as f64 / n as f64))
        .collect();

    ExposureReport {
        results,
        skipped,
        cdf,
        dns_as_total: dns_union.len(),
        web_as_total: web_union.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::task_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn table(entries: &[(&str, Asn)]) -> RoutingTable {
        let mut t = RoutingTable::new();
        for &(p, asn) in entries {
            t.insert(p.parse().unwrap(), asn).unwrap();
        }
        t
    }

    fn ip(s: &str) -> Ipv4Addr {
        s.parse().unwrap()
    }

    fn d(s: &str) -> Domain {
        Domain::new(s).unwrap()
    }

    fn route(site: &str, role: TraceRole, hop_ips: &[Option<&str>]) -> Traceroute {
        Traceroute::new(
            ip("198.51.100.250"),
            if role == TraceRole::Web { TraceProto::Tcp } else { TraceProto::Udp },
            d(site),
            role,
            hop_ips
                .iter()
                .enumerate()
                .map(|(i, h)| Hop { ttl: i as u32 + 1, ip: h.map(ip) })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn longest_prefix_wins() {
        let t = table(&[("10.0.0.0/8", 1), ("10.1.0.0/16", 2)]);
        assert_eq!(t.lpm(ip("10.1.2.3")), Route::Asn(2));
        assert_eq!(t.lpm(ip("10.9.9.9")), Route::Asn(1));
        assert_eq!(t.lpm(ip("192.0.2.1")), Route::NoRoute);
    }

    #[test]
    fn duplicate_prefixes_are_rejected() {
        let mut t = table(&[("10.0.0.0/8", 1)]);
        // Same prefix after masking, even written differently.
        let dup: Prefix = "10.200.1.1/8".parse().unwrap();
        assert!(matches!(
            t.insert(dup, 3),
            Err(ExposureError::DuplicatePrefix(p)) if p == "10.0.0.0/8"
        ));
    }

    #[test]
    fn snapshot_parsing_and_errors() {
        let good = "10.0.0.0/8\t64512\n198.51.100.0/24\t65001\n";
        let t = RoutingTable::load(good.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.lpm(ip("198.51.100.9")), Route::Asn(65001));

        for (bad, want_line) in [
            ("10.0.0.0/8 64512\n", 1),              // no tab
            ("10.0.0.0/33\t1\n", 1),                // bad length
            ("banana/8\t1\n", 1),                   // bad address
            ("10.0.0.0/8\tzero\n", 1),              // bad asn
            ("10.0.0.0/8\t1\n10.0.0.0/8\t2\n", 2),  // duplicate
            ("10.0.0.0/8\t0\n", 1),                 // zero asn
        ] {
            match RoutingTable::load(bad.as_bytes()) {
                Err(ExposureError::Parse { line, .. }) => assert_eq!(line, want_line),
                other => panic!("expected parse error for {bad:?}, got {other:?}"),
            }
        }
    }

    /// The lookup agrees with a brute-force scan over every prefix for
    /// randomly generated tables.
    #[test]
    fn lpm_matches_brute_force() {
        let mut rng = task_rng(90, "lpm-oracle", 0);
        for _ in 0..10 {
            let mut t = RoutingTable::new();
            let mut prefixes: Vec<(Prefix, Asn)> = Vec::new();
            while prefixes.len() < 2_000 {
                let len = rng.random_range(4..=28u8);
                let addr = Ipv4Addr::from(rng.random::<u32>());
                let p = Prefix::new(addr, len).unwrap();
                let asn = rng.random_range(1..=70_000u32);
                if t.insert(p, asn).is_ok() {
                    prefixes.push((p, asn));
                }
            }
            for _ in 0..1_000 {
                let probe = Ipv4Addr::from(rng.random::<u32>());
                let brute = prefixes
                    .iter()
                    .filter(|(p, _)| p.contains(probe))
                    .max_by_key(|(p, _)| p.len())
                    .map(|&(_, asn)| Route::Asn(asn))
                    .unwrap_or(Route::NoRoute);
                assert_eq!(t.lpm(probe), brute, "probe {probe}");
            }
        }
    }

    #[test]
    fn as_set_unions_mapped_hops() {
        let t = table(&[("198.51.100.0/24", 1), ("203.0.113.0/24", 2)]);
        // Hops map to {1, 1, 2}; a missing hop and an unrouted hop
        // contribute nothing.
        let tr = route(
            "example.com",
            TraceRole::Web,
            &[
                Some("198.51.100.1"),
                Some("198.51.100.77"),
                None,
                Some("8.8.8.8"),
                Some("203.0.113.5"),
            ],
        );
        assert_eq!(as_set(&[tr], &t), AsSet::from_iter([1, 2]));
    }

    #[test]
    fn all_missing_hops_give_the_empty_set() {
        let t = table(&[("198.51.100.0/24", 1)]);
        let tr = route("example.com", TraceRole::Web, &[None, None, None]);
        assert!(as_set(&[tr], &t).is_empty());
    }

    #[test]
    fn multiple_traceroutes_union() {
        let t = table(&[("198.51.100.0/24", 1), ("203.0.113.0/24", 2)]);
        let a = route("example.com", TraceRole::Web, &[Some("198.51.100.1")]);
        let b = route("example.com", TraceRole::Web, &[Some("203.0.113.1")]);
        assert_eq!(as_set(&[a, b], &t), AsSet::from_iter([1, 2]));
    }

    #[test]
    fn as_set_is_hop_order_invariant() {
        let t = table(&[("198.51.100.0/24", 1), ("203.0.113.0/24", 2), ("192.0.2.0/24", 3)]);
        let hops = ["198.51.100.1", "203.0.113.1", "192.0.2.9"];
        let forward = route("example.com", TraceRole::Web, &hops.map(Some));
        let mut reversed_ips = hops;
        reversed_ips.reverse();
        let reversed = route("example.com", TraceRole::Web, &reversed_ips.map(Some));
        assert_eq!(as_set(&[forward], &t), as_set(&[reversed], &t));
    }

    /// Reserved addresses are dropped at the hop level even when the
    /// table technically covers them.
    #[test]
    fn reserved_hops_are_dropped() {
        let t = table(&[("0.0.0.0/0", 99), ("198.51.100.0/24", 1)]);
        let tr = route(
            "example.com",
            TraceRole::Web,
            &[
                Some("192.168.1.1"),
                Some("10.0.0.1"),
                Some("100.64.3.2"),
                Some("169.254.0.9"),
                Some("198.51.100.1"),
            ],
        );
        assert_eq!(as_set(&[tr], &t), AsSet::from_iter([1]));
    }

    #[test]
    fn lambda_worked_examples() {
        let l = lambda(&AsSet::from_iter([1, 2, 3]), &AsSet::from_iter([2, 3, 4])).unwrap();
        assert_eq!(l, 0.25);
        let same = AsSet::from_iter([5, 6]);
        assert_eq!(lambda(&same, &same.clone()).unwrap(), 0.0);
        assert_eq!(
            lambda(&AsSet::from_iter([1]), &AsSet::from_iter([2])).unwrap(),
            0.5
        );
        assert!(matches!(
            lambda(&AsSet::new(), &AsSet::new()),
            Err(ExposureError::UndefinedLambda)
        ));
    }

    proptest! {
        /// λ stays in [0,1] and hits 1 exactly when the web set is
        /// empty while the DNS set is not.
        #[test]
        fn lambda_bounds_and_extreme(
            d_asns in proptest::collection::btree_set(1u32..50, 0..12),
            w_asns in proptest::collection::btree_set(1u32..50, 0..12),
        ) {
            let d = AsSet(d_asns);
            let w = AsSet(w_asns);
            match lambda(&d, &w) {
                Ok(l) => {
                    prop_assert!((0.0..=1.0).contains(&l));
                    prop_assert_eq!(l == 1.0, w.is_empty() && !d.is_empty());
                }
                Err(_) => prop_assert!(d.is_empty() && w.is_empty()),
            }
        }
    }

    #[test]
    fn traceroute_jsonl_roundtrip_and_errors() {
        let t = vec![
            route("example.com", TraceRole::Web, &[Some("198.51.100.1"), None]),
            route("example.com", TraceRole::Dns, &[Some("203.0.113.1")]),
        ];
        let mut buf = Vec::new();
        write_traceroutes(&t, &mut buf).unwrap();
        assert_eq!(load_traceroutes(&buf[..]).unwrap(), t);

        let bad_json = b"{\"target\": nope}\n";
        assert!(matches!(
            load_traceroutes(&bad_json[..]),
            Err(ExposureError::Parse { line: 1, .. })
        ));
        let bad_ttl = concat!(
            "{\"target\":\"198.51.100.7\",\"proto\":\"tcp\",\"site\":\"example.com\",",
            "\"role\":\"web\",\"hops\":[{\"ttl\":2,\"ip\":null},{\"ttl\":1,\"ip\":null}]}\n"
        );
        assert!(matches!(
            load_traceroutes(bad_ttl.as_bytes()),
            Err(ExposureError::Parse { line: 1, .. })
        ));
    }

    /// Ten sites with hand-built AS paths; λ checked against hand
    /// arithmetic. Site k's web path crosses ASes {1..=k} and its DNS
    /// path crosses {k+1}, so λ = 1/(k+1).
    #[test]
    fn report_matches_hand_computation() {
        let entries: Vec<(String, Asn)> = (1..=11u32)
            .map(|asn| (format!("203.0.{asn}.0/24"), asn))
            .collect();
        let mut t = RoutingTable::new();
        for (p, asn) in &entries {
            t.insert(p.parse().unwrap(), *asn).unwrap();
        }
        let hop_for = |asn: u32| format!("203.0.{asn}.9");

        let mut sites = Vec::new();
        let mut web = Vec::new();
        let mut dns = Vec::new();
        for k in 1..=10u32 {
            let site = d(&format!("site{k}.example"));
            sites.push(site.clone());
            let web_hops: Vec<String> = (1..=k).map(hop_for).collect();
            let web_refs: Vec<Option<&str>> =
                web_hops.iter().map(|h| Some(h.as_str())).collect();
            web.push(route(site.as_str(), TraceRole::Web, &web_refs));
            let dns_hop = hop_for(k + 1);
            dns.push(route(site.as_str(), TraceRole::Dns, &[Some(dns_hop.as_str())]));
        }
        let report = exposure_report(&sites, &web, &dns, &t);
        assert_eq!(report.results.len(), 10);
        assert!(report.skipped.is_empty());
        for (k, r) in report.results.iter().enumerate() {
            let k = k as u32 + 1;
            let expect = 1.0 / (k + 1) as f64;
            assert_eq!(r.lambda, expect, "site {k}");
            assert_eq!(r.w_set.len(), k as usize);
            assert_eq!(r.d_set.len(), 1);
        }
        // D sets cover ASes 2..=11, W sets cover 1..=10.
        assert_eq!(report.dns_as_total, 10);
        assert_eq!(report.web_as_total, 10);
        // CDF is ascending and ends at fraction 1.
        assert!(report.cdf.windows(2).all(|p| p[0].0 <= p[1].0 && p[0].1 < p[1].1));
        assert_eq!(report.cdf.last().unwrap().1, 1.0);
    }

    #[test]
    fn dns_subset_of_web_gives_all_zero_lambda() {
        let t = table(&[("203.0.1.0/24", 1), ("203.0.2.0/24", 2)]);
        let sites = vec![d("a.example"), d("b.example")];
        let web: Vec<Traceroute> = sites
            .iter()
            .map(|s| route(s.as_str(), TraceRole::Web, &[Some("203.0.1.9"), Some("203.0.2.9")]))
            .collect();
        let dns: Vec<Traceroute> = sites
            .iter()
            .map(|s| route(s.as_str(), TraceRole::Dns, &[Some("203.0.1.9")]))
            .collect();
        let report = exposure_report(&sites, &web, &dns, &t);
        assert!(report.results.iter().all(|r| r.lambda == 0.0));
        assert!(report.cdf.iter().all(|&(l, _)| l == 0.0));
    }

    #[test]
    fn sites_without_traces_are_skipped_with_reasons() {
        let t = table(&[("203.0.1.0/24", 1)]);
        let sites = vec![d("hasweb.example"), d("hasdns.example"), d("unmapped.example")];
        let web = vec![
            route("hasweb.example", TraceRole::Web, &[Some("203.0.1.9")]),
            route("unmapped.example", TraceRole::Web, &[None]),
        ];
        let dns = vec![
            route("hasdns.example", TraceRole::Dns, &[Some("203.0.1.9")]),
            route("unmapped.example", TraceRole::Dns, &[None]),
        ];
        let report = exposure_report(&sites, &web, &dns, &t);
        assert!(report.results.is_empty());
        let reasons: Vec<(&str, &str)> = report
            .skipped
            .iter()
            .map(|s| (s.site.as_str(), s.reason.as_str()))
            .collect();
        assert_eq!(
            reasons,
            vec![
                ("hasweb.example", "no dns traceroute"),
                ("hasdns.example", "no web traceroute"),
                ("unmapped.example", "no hop mapped to any AS"),
            ]
        );
    }
}
