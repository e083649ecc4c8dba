//! Synthetic cell traces for desk-scale experiments.
//!
//! Each site draws one latent template — a cell count, a
//! per-position direction pattern, and exponential inter-cell gaps —
//! and every instance of that site replays the template with noise
//! scaled by `1 − separability`: cells may be dropped, directions
//! flipped, and gaps jittered. At separability 1 all instances of a
//! site are identical; at 0 the noise is at full strength. The
//! generator is a stand-in for a real browser crawl and is fully
//! deterministic given its rng.

use rand::Rng;

use super::{Cell, CellTrace, Direction, WfError};
use crate::evaluation::metrics::TrueLabel;

/// Template cell-count range.
const MIN_CELLS: usize = 80;
const MAX_CELLS: usize = 400;
/// Template range for the probability that a cell is outgoing
/// (page loads are download-heavy).
const MIN_OUT_PROB: f64 = 0.15;
const MAX_OUT_PROB: f64 = 0.45;
/// Template range for the mean inter-cell gap in milliseconds.
const MIN_MEAN_GAP_MS: f64 = 5.0;
const MAX_MEAN_GAP_MS: f64 = 50.0;
/// Per-cell noise rates at full noise (separability 0).
const DROP_RATE: f64 = 0.1;
const FLIP_RATE: f64 = 0.25;
/// Half-width of the per-instance tempo factor at full noise: the
/// whole load runs up to this much faster or slower, so absolute
/// timing (duration) is noisy across instances while relative timing
/// (bucket shape) stays informative — mirroring how real page loads
/// vary in pace but not structure.
const TEMPO_SPREAD: f64 = 0.5;
/// Half-width of the independent per-gap jitter at full noise.
const GAP_JITTER: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct SynthTraceConfig {
    pub n_sites: u64,
    pub instances_per_site: usize,
    /// 1 = instances of a site are identical; 0 = full noise.
    pub separability: f64,
}

struct Template {
    dirs: Vec<Direction>,
    /// Gap `j` separates cells `j` and `j+1`.
    gaps: Vec<f64>,
}

fn draw_template<R: Rng + ?Sized>(rng: &mut R) -> Template {
    let len = rng.random_range(MIN_CELLS..=MAX_CELLS);
    let p_out = rng.random_range(MIN_OUT_PROB..MAX_OUT_PROB);
    let mean_gap = rng.random_range(MIN_MEAN_GAP_MS..MAX_MEAN_GAP_MS);
    let dirs = (0..len)
        .map(|_| {
            if rng.random::<f64>() < p_out {
                Direction::Outgoing
            } else {
                Direction::Incoming
            }
        })
        .collect();
    let gaps = (0..len - 1)
        .map(|_| -mean_gap * (1.0 - rng.random::<f64>()).ln())
        .collect();
    Template { dirs, gaps }
}

fn instance_cells<R: Rng + ?Sized>(tpl: &Template, noise: f64, rng: &mut R) -> Vec<Cell> {
    let tempo = 1.0 + 2.0 * TEMPO_SPREAD * noise * (rng.random::<f64>() - 0.5);
    let mut cells = Vec::with_capacity(tpl.dirs.len());
    let mut t = 0.0f64;
    for (j, &dir) in tpl.dirs.iter().enumerate() {
        if j > 0 {
            // Time passes whether or not the cell survives; jitter is
            // multiplicative and vanishes at zero noise.
            let jitter = 1.0 + 2.0 * GAP_JITTER * noise * (rng.random::<f64>() - 0.5);
            t += tpl.gaps[j - 1] * tempo * jitter;
        }
        let dropped = rng.random::<f64>() < DROP_RATE * noise;
        let flipped = rng.random::<f64>() < FLIP_RATE * noise;
        if dropped {
            continue;
        }
        let direction = if flipped { dir.flipped() } else { dir };
        cells.push(Cell { time_ms: t.round() as u64, direction });
    }
    if cells.is_empty() {
        cells.push(Cell { time_ms: 0, direction: tpl.dirs[0] });
    }
    cells
}

/// Generates `n_sites × instances_per_site` labelled traces, grouped
/// by site in label order `1..=n_sites`.
pub fn generate_traces<R: Rng + ?Sized>(
    cfg: &SynthTraceConfig,
    rng: &mut R,
) -> Result<Vec<CellTrace>, WfError> {
    if cfg.n_sites == 0 {
        return Err(WfError::NoSites);
    }
    if !(0.0..=1.0).contains(&cfg.separability) {
        return Err(WfError::BadSeparability(cfg.separability));
    }
    let noise = 1.0 - cfg.separability;
    let mut traces = Vec::with_capacity(cfg.n_sites as usize * cfg.instances_per_site);
    for site in 1..=cfg.n_sites {
        let tpl = draw_template(rng);
        for _ in 0..cfg.instances_per_site {
            let cells = instance_cells(&tpl, noise, rng);
            traces.push(
                CellTrace::new(TrueLabel::Monitored(site), cells)
                    .expect("generated cells are time-ordered and non-empty"),
            );
        }
    }
    Ok(traces)
}
