//! Shared fixtures and process helpers for the CLI integration tests.
//!
//! The exposure fixture is a ten-site routing/traceroute corpus with
//! hand-computed per-site AS sets; the pathsim fixture is a
//! three-relay, two-AS network whose four DNS scenarios are each
//! either always or never compromised, so every expected output value
//! is exact.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Path of the compiled `defector` binary.
pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_defector")
}

/// Runs the binary with the given arguments and waits for it.
pub fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(bin()).args(args).output().expect("binary runs")
}

/// Exit status code, defaulting to 101 for signal deaths.
pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(101)
}

pub fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Asserts success, echoing both streams on failure.
pub fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed with status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        stdout_str(out),
        stderr_str(out)
    );
}

/// Every regular file under `dir` (recursively) except the run
/// manifest, keyed by its relative path.
pub fn snapshot_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    collect_files(dir, dir, &mut files);
    files
}

fn collect_files(root: &Path, dir: &Path, files: &mut BTreeMap<String, Vec<u8>>) {
    for entry in fs::read_dir(dir).expect("readable output dir") {
        let entry = entry.expect("dir entry");
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, files);
            continue;
        }
        if path.file_name().is_some_and(|n| n == "run_manifest.json") {
            continue;
        }
        let rel = path.strip_prefix(root).expect("under root").to_string_lossy().into_owned();
        files.insert(rel, fs::read(&path).expect("readable output file"));
    }
}

/// Asserts two output trees are byte-identical outside their manifests.
pub fn assert_same_outputs(a: &Path, b: &Path, what: &str) {
    let (sa, sb) = (snapshot_outputs(a), snapshot_outputs(b));
    let (ka, kb): (Vec<_>, Vec<_>) = (sa.keys().collect(), sb.keys().collect());
    assert_eq!(ka, kb, "{what}: file sets differ");
    for (name, bytes) in &sa {
        assert_eq!(bytes, &sb[name], "{what}: {name} differs between runs");
    }
}

/// Writes the exposure fixture and returns `(routes, traces)` paths.
///
/// Routing table (tab-separated `prefix asn`):
///   198.51.100.0/24 -> 100     198.51.0.0/16 -> 150
///   203.0.113.0/24  -> 200     192.0.2.0/24  -> 300
///   11.0.0.0/8      -> 400     11.1.0.0/16   -> 500
///
/// Hop addresses per AS (the two /16-over-/8 and /24-over-/16 pairs
/// exercise longest-prefix matching): 198.51.100.7=100, 198.51.99.1=150,
/// 203.0.113.5=200, 192.0.2.9=300, 11.0.0.3=400, 11.1.2.3=500.
/// 8.8.8.8 is public but unrouted; 10.1.2.3 is reserved; both map to
/// no AS. Expected per-site sets and λ:
///
///   site0  D={100}          W={100}          λ=0
///   site1  D={300}          W={100,200}      λ=1/3
///   site2  D={100,200,300}  W={200,300,400}  λ=1/4
///   site3  D={100}          W=∅              λ=1
///   site4  D=∅              W={100}          λ=0
///   site5  D={100,500}      W={100}          λ=1/2
///   site6  D={400}          W={500}          λ=1/2
///   site7  D={100,200,400}  W={100}          λ=2/3
///   site8  D={150}          W={150,300}      λ=0
///   site9  D=∅              W=∅              skipped
pub fn write_exposure_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    fs::create_dir_all(dir).expect("fixture dir");
    let routes = dir.join("routes.tsv");
    fs::write(
        &routes,
        "198.51.100.0/24\t100\n\
         198.51.0.0/16\t150\n\
         203.0.113.0/24\t200\n\
         192.0.2.0/24\t300\n\
         11.0.0.0/8\t400\n\
         11.1.0.0/16\t500\n",
    )
    .expect("write routes");

    let a100 = "198.51.100.7";
    let a150 = "198.51.99.1";
    let a200 = "203.0.113.5";
    let a300 = "192.0.2.9";
    let a400 = "11.0.0.3";
    let a500 = "11.1.2.3";
    let unrouted = "8.8.8.8";
    let reserved = "10.1.2.3";

    let line = |site: &str, role: &str, hops: &[Option<&str>]| {
        let hops_json: Vec<String> = hops
            .iter()
            .enumerate()
            .map(|(i, ip)| match ip {
                Some(ip) => format!("{{\"ttl\":{},\"ip\":\"{ip}\"}}", i + 1),
                None => format!("{{\"ttl\":{},\"ip\":null}}", i + 1),
            })
            .collect();
        format!(
            "{{\"target\":\"203.0.113.77\",\"proto\":\"tcp\",\"site\":\"{site}.example\",\
             \"role\":\"{role}\",\"hops\":[{}]}}\n",
            hops_json.join(",")
        )
    };

    let mut traces = String::new();
    // site0: null hop mixed into an otherwise mapped path.
    traces += &line("site0", "web", &[None, Some(a100)]);
    traces += &line("site0", "dns", &[Some(a100)]);
    traces += &line("site1", "web", &[Some(a100), Some(a200)]);
    traces += &line("site1", "dns", &[Some(a300)]);
    traces += &line("site2", "web", &[Some(a200), Some(a300), Some(a400)]);
    traces += &line("site2", "dns", &[Some(a100), Some(a200), Some(a300)]);
    // site3: the web path answered only from unmapped space.
    traces += &line("site3", "web", &[None, Some(unrouted)]);
    traces += &line("site3", "dns", &[Some(a100)]);
    traces += &line("site4", "web", &[Some(a100)]);
    traces += &line("site4", "dns", &[Some(unrouted), Some(reserved)]);
    traces += &line("site5", "web", &[Some(a100)]);
    traces += &line("site5", "dns", &[Some(a100), Some(a500)]);
    traces += &line("site6", "web", &[Some(a500)]);
    traces += &line("site6", "dns", &[Some(a400)]);
    traces += &line("site7", "web", &[Some(a100)]);
    traces += &line("site7", "dns", &[Some(a100), Some(a200), Some(a400)]);
    traces += &line("site8", "web", &[Some(a150), Some(a300)]);
    traces += &line("site8", "dns", &[Some(a150)]);
    // site9: no hop on either side maps to an AS -> skipped.
    traces += &line("site9", "web", &[None, Some(unrouted), Some(reserved)]);
    traces += &line("site9", "dns", &[Some(reserved)]);

    let traces_path = dir.join("traces.jsonl");
    fs::write(&traces_path, traces).expect("write traces");
    (routes, traces_path)
}

/// The λ table the exposure fixture must produce.
pub const EXPOSURE_EXPECTED: &str = "site,lambda,d_set,w_set\n\
     site0.example,0.000000,100,100\n\
     site1.example,0.333333,300,100;200\n\
     site2.example,0.250000,100;200;300,200;300;400\n\
     site3.example,1.000000,100,\n\
     site4.example,0.000000,,100\n\
     site5.example,0.500000,100;500,100\n\
     site6.example,0.500000,400,500\n\
     site7.example,0.666667,100;200;400,100\n\
     site8.example,0.000000,150,150;300\n";

/// The λ CDF the exposure fixture must produce (nine sites, sorted).
pub const EXPOSURE_EXPECTED_CDF: &str = "lambda,cum_fraction\n\
     0.000000,0.111111\n\
     0.000000,0.222222\n\
     0.000000,0.333333\n\
     0.250000,0.444444\n\
     0.333333,0.555556\n\
     0.500000,0.666667\n\
     0.500000,0.777778\n\
     0.666667,0.888889\n\
     1.000000,1.000000\n";

/// Writes the pathsim fixture and returns `(relays, ingress, egress)`.
///
/// One guard (AS 10) and two exits (both AS 20, same resolver). The
/// client sits in AS 7922 with ingress path {10, 40}, so each scenario
/// is decided identically for every circuit:
///
///   isp-dns:    egress {20}      — disjoint, never compromised;
///   google-dns: egress {40, 50}  — hits 40, always compromised;
///   local-dns:  egress {60}      — disjoint, never compromised;
///   status-quo: egress {10}      — hits 10, always compromised.
pub fn write_pathsim_fixture(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    fs::create_dir_all(dir).expect("fixture dir");
    let relays = dir.join("relays.jsonl");
    fs::write(
        &relays,
        concat!(
            "{\"id\":\"guard1\",\"bw\":100.0,\"guard\":true,\"exit\":false,\"asn\":10,",
            "\"resolver_ip\":null,\"resolver_asn\":null}\n",
            "{\"id\":\"exit1\",\"bw\":50.0,\"guard\":false,\"exit\":true,\"asn\":20,",
            "\"resolver_ip\":\"198.51.100.53\",\"resolver_asn\":77}\n",
            "{\"id\":\"exit2\",\"bw\":30.0,\"guard\":false,\"exit\":true,\"asn\":20,",
            "\"resolver_ip\":\"198.51.100.53\",\"resolver_asn\":77}\n",
        ),
    )
    .expect("write relays");

    let ingress = dir.join("ingress.csv");
    fs::write(&ingress, "7922,guard1,10;40\n").expect("write ingress");

    let egress = dir.join("egress.csv");
    let mut rows = String::from("20,google,40;50\n20,resolver:198.51.100.53,10\n");
    for domain in [
        "mail.google.com",
        "www.twitter.com",
        "calendar.google.com",
        "docs.google.com",
        "www.facebook.com",
        "www.instagram.com",
        "www.google.com",
        "www.startpage.com",
        "www.ixquick.com",
    ] {
        rows += &format!("20,local:{domain},60\n");
    }
    fs::write(&egress, rows).expect("write egress");
    (relays, ingress, egress)
}

/// The summary the pathsim fixture must produce for `clients` clients
/// (every client is identical, so all quartiles coincide).
pub fn pathsim_expected_summary(clients: usize) -> String {
    format!(
        "scenario,client_asn,clients,fraction_q1,fraction_median,fraction_q3,\
         ttf_q1_s,ttf_median_s,ttf_q3_s\n\
         isp-dns,7922,{clients},0.000000,0.000000,0.000000,2678400,2678400,2678400\n\
         google-dns,7922,{clients},1.000000,1.000000,1.000000,32400,32400,32400\n\
         local-dns,7922,{clients},0.000000,0.000000,0.000000,2678400,2678400,2678400\n\
         status-quo,7922,{clients},1.000000,1.000000,1.000000,32400,32400,32400\n"
    )
}

/// Experiment flags for a small, fast evaluation: 8 monitored sites x
/// 2 instances, 16 unmonitored, 2 folds, light background traffic.
pub fn tiny_experiment_flags() -> Vec<String> {
    [
        "--monitored",
        "8",
        "--instances",
        "2",
        "--unmonitored",
        "16",
        "--folds",
        "2",
        "--start-rank",
        "100",
        "--pop-label",
        "pc",
        "--pop-sites",
        "500",
        "--window",
        "15",
        "--visits-per-10min",
        "20000",
        "--rounds",
        "0",
        "--separability",
        "0.7",
        "--pct",
        "0.5",
        "--desk-scale",
        "1",
        "--seed",
        "3",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Argument vector for a small, fast `eval` run writing into `out`.
pub fn tiny_eval_args(out: &Path) -> Vec<String> {
    let mut v = vec!["eval".to_string()];
    v.extend(tiny_experiment_flags());
    v.push("--out".into());
    v.push(out.to_string_lossy().into_owned());
    v
}
