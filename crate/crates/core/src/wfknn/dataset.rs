//! On-disk formats for cell traces.
//!
//! One trace per CSV file: a header line carrying the label, then one
//! `time_ms,direction` row per cell with direction `+1` (outgoing) or
//! `-1` (incoming):
//!
//! ```text
//! label,42
//! 0,1
//! 17,-1
//! ```
//!
//! The label is a site rank or the string `unmonitored`. A dataset is
//! a directory of trace files plus a `manifest.jsonl` listing the
//! files per class, one JSON object per line:
//!
//! ```text
//! {"site":42,"files":["trace_00000.csv","trace_00001.csv"]}
//! {"site":null,"files":["trace_00002.csv"]}
//! ```
//!
//! with `site: null` for the unmonitored class. File paths are
//! relative to the manifest's directory.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cell, CellTrace, Direction, WfError};
use crate::corpus::SiteId;
use crate::evaluation::metrics::TrueLabel;

const UNMONITORED_LABEL: &str = "unmonitored";

/// Writes one trace in the per-trace CSV format.
pub fn write_trace<W: Write>(trace: &CellTrace, mut w: W) -> Result<(), WfError> {
    match trace.label {
        TrueLabel::Monitored(s) => writeln!(w, "label,{s}")?,
        TrueLabel::Unmonitored => writeln!(w, "label,{UNMONITORED_LABEL}")?,
    }
    for cell in &trace.cells {
        let dir = match cell.direction {
            Direction::Outgoing => 1,
            Direction::Incoming => -1,
        };
        writeln!(w, "{},{}", cell.time_ms, dir)?;
    }
    Ok(())
}

/// Parses one trace from the per-trace CSV format.
pub fn read_trace<R: BufRead>(r: R) -> Result<CellTrace, WfError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| WfError::Parse { line: 1, reason: "missing label header".into() })??;
    let label_value = header.strip_prefix("label,").ok_or_else(|| WfError::Parse {
        line: 1,
        reason: format!("expected `label,<site>` header, got {header:?}"),
    })?;
    let label = if label_value == UNMONITORED_LABEL {
        TrueLabel::Unmonitored
    } else {
        let site: SiteId = label_value.trim().parse().map_err(|_| WfError::Parse {
            line: 1,
            reason: format!("bad site label {label_value:?}"),
        })?;
        TrueLabel::Monitored(site)
    };
    let mut cells = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (t, d) = line.split_once(',').ok_or_else(|| WfError::Parse {
            line: lineno,
            reason: "expected `time_ms,direction`".into(),
        })?;
        let time_ms: u64 = t.trim().parse().map_err(|_| WfError::Parse {
            line: lineno,
            reason: format!("bad timestamp {t:?}"),
        })?;
        let direction = match d.trim() {
            "1" | "+1" => Direction::Outgoing,
            "-1" => Direction::Incoming,
            other => {
                return Err(WfError::Parse {
                    line: lineno,
                    reason: format!("direction must be +1 or -1, got {other:?}"),
                })
            }
        };
        cells.push(Cell { time_ms, direction });
    }
    CellTrace::new(label, cells)
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    site: Option<SiteId>,
    files: Vec<String>,
}

/// Writes every trace plus a manifest into `dir` (created if absent).
/// Files are named `trace_00000.csv` in input order, so a dataset
/// written twice from the same traces is byte-identical.
pub fn write_dataset(dir: &Path, traces: &[CellTrace]) -> Result<(), WfError> {
    std::fs::create_dir_all(dir)?;
    // BTreeMap keyed so the unmonitored class sorts after all sites.
    let mut by_class: BTreeMap<(bool, SiteId), Vec<String>> = BTreeMap::new();
    for (i, trace) in traces.iter().enumerate() {
        let name = format!("trace_{i:05}.csv");
        let f = File::create(dir.join(&name))?;
        write_trace(trace, BufWriter::new(f))?;
        let key = match trace.label {
            TrueLabel::Monitored(s) => (false, s),
            TrueLabel::Unmonitored => (true, 0),
        };
        by_class.entry(key).or_default().push(name);
    }
    let manifest = File::create(dir.join("manifest.jsonl"))?;
    let mut manifest = BufWriter::new(manifest);
    for ((unmon, site), files) in by_class {
        let entry = ManifestEntry { site: (!unmon).then_some(site), files };
        serde_json::to_writer(&mut manifest, &entry)
            .map_err(|e| WfError::Manifest(e.to_string()))?;
        manifest.write_all(b"\n")?;
    }
    Ok(())
}

/// Loads a dataset via its `manifest.jsonl`; trace labels must match
/// the class their file is listed under.
pub fn read_dataset(manifest_path: &Path) -> Result<Vec<CellTrace>, WfError> {
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let reader = BufReader::new(File::open(manifest_path)?);
    let mut traces = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line)
            .map_err(|e| WfError::Manifest(format!("line {}: {e}", i + 1)))?;
        let expected = match entry.site {
            Some(s) => TrueLabel::Monitored(s),
            None => TrueLabel::Unmonitored,
        };
        for file in &entry.files {
            let trace = read_trace(BufReader::new(File::open(dir.join(file))?))?;
            if trace.label != expected {
                return Err(WfError::Manifest(format!(
                    "{file}: label {:?} does not match manifest class {:?}",
                    trace.label, expected
                )));
            }
            traces.push(trace);
        }
    }
    Ok(traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::task_rng;
    use crate::wfknn::synth::{generate_traces, SynthTraceConfig};

    use Direction::{Incoming as I, Outgoing as O};

    fn sample_trace(label: TrueLabel) -> CellTrace {
        CellTrace::new(
            label,
            vec![
                Cell { time_ms: 0, direction: O },
                Cell { time_ms: 12, direction: I },
                Cell { time_ms: 12, direction: I },
                Cell { time_ms: 30, direction: O },
            ],
        )
        .unwrap()
    }

    #[test]
    fn trace_roundtrip_preserves_cells_and_label() {
        for label in [TrueLabel::Monitored(42), TrueLabel::Unmonitored] {
            let t = sample_trace(label);
            let mut buf = Vec::new();
            write_trace(&t, &mut buf).unwrap();
            assert_eq!(read_trace(&buf[..]).unwrap(), t);
        }
    }

    #[test]
    fn trace_format_is_exactly_as_documented() {
        let t = sample_trace(TrueLabel::Monitored(42));
        let mut buf = Vec::new();
        write_trace(&t, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "label,42\n0,1\n12,-1\n12,-1\n30,1\n"
        );
    }

    #[test]
    fn parse_errors_name_the_line() {
        assert!(matches!(
            read_trace(&b"nolabel\n0,1\n"[..]),
            Err(WfError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_trace(&b"label,3\n0,1\nbroken\n"[..]),
            Err(WfError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            read_trace(&b"label,3\n0,2\n"[..]),
            Err(WfError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_trace(&b"label,3\n5,1\n3,1\n"[..]),
            Err(WfError::TimeRegression { .. })
        ));
    }

    #[test]
    fn dataset_roundtrip_over_a_directory() {
        let mut rng = task_rng(70, "dataset-rt", 0);
        let cfg = SynthTraceConfig { n_sites: 4, instances_per_site: 3, separability: 0.7 };
        let mut traces = generate_traces(&cfg, &mut rng).unwrap();
        // Relabel one site's traces as unmonitored to exercise both
        // classes.
        for t in traces.iter_mut().filter(|t| t.site() == Some(4)) {
            t.label = TrueLabel::Unmonitored;
        }
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &traces).unwrap();
        let mut loaded = read_dataset(&dir.path().join("manifest.jsonl")).unwrap();
        // The manifest groups by class; compare as multisets via sort.
        let key = |t: &CellTrace| (t.site().is_none(), t.site(), t.cells.clone());
        traces.sort_by_key(key);
        loaded.sort_by_key(key);
        assert_eq!(traces, loaded);
    }

    #[test]
    fn mislabelled_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let t = sample_trace(TrueLabel::Monitored(1));
        write_dataset(dir.path(), std::slice::from_ref(&t)).unwrap();
        // Corrupt the manifest to claim the file is unmonitored.
        std::fs::write(
            dir.path().join("manifest.jsonl"),
            "{\"site\":null,\"files\":[\"trace_00000.csv\"]}\n",
        )
        .unwrap();
        assert!(matches!(
            read_dataset(&dir.path().join("manifest.jsonl")),
            Err(WfError::Manifest(_))
        ));
    }
}
