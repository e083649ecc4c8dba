//! Sensitivity sweeps: one cross-validated experiment per value along
//! a single parameter axis.
//!
//! Each point derives its own master seed from
//! `(base master seed, point index)`, so a sweep's outcome does not
//! depend on evaluation order or worker count, and any point can be
//! reproduced in isolation. Points execute sequentially — parallelism
//! lives inside each experiment — which keeps peak memory at one
//! fold's working set without changing a single output byte.

use std::io::Write;

use crate::evaluation::harness::{run_experiment, EvalError, ExperimentConfig, ExperimentOutput};
use crate::seeds::derive_seed_u64;

/// The sweepable parameter axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// Fraction of exit bandwidth the attacker taps.
    Pct,
    /// First popularity rank of the monitored band.
    StartRank,
    /// Weight-learning rounds.
    Rounds,
    /// Attacker window length in seconds.
    Window,
    /// Network traffic scale factor.
    Scale,
    /// Popularity-model label (`pc`, `pr`, `uc`, `ur`).
    Distribution,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] = [
        SweepAxis::Pct,
        SweepAxis::StartRank,
        SweepAxis::Rounds,
        SweepAxis::Window,
        SweepAxis::Scale,
        SweepAxis::Distribution,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Pct => "pct",
            SweepAxis::StartRank => "start_rank",
            SweepAxis::Rounds => "rounds",
            SweepAxis::Window => "window",
            SweepAxis::Scale => "scale",
            SweepAxis::Distribution => "distribution",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    /// Returns the base config with this axis set to `raw`.
    fn apply(self, base: &ExperimentConfig, raw: &str) -> Result<ExperimentConfig, EvalError> {
        let mut cfg = base.clone();
        let bad = |what: &str| {
            EvalError::Config(format!("axis {}: expected {what}, got {raw:?}", self.name()))
        };
        match self {
            SweepAxis::Pct => cfg.pct = raw.parse().map_err(|_| bad("a fraction"))?,
            SweepAxis::StartRank => {
                cfg.start_rank = raw.parse().map_err(|_| bad("a rank"))?;
            }
            SweepAxis::Rounds => cfg.rounds = raw.parse().map_err(|_| bad("a round count"))?,
            SweepAxis::Window => cfg.window_s = raw.parse().map_err(|_| bad("seconds"))?,
            SweepAxis::Scale => cfg.scale = raw.parse().map_err(|_| bad("a scale factor"))?,
            SweepAxis::Distribution => cfg.pop_label = raw.to_string(),
        }
        Ok(cfg)
    }
}

/// One completed sweep point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: String,
    /// The point's derived master seed (recorded in every output row).
    pub seed: u64,
    pub output: ExperimentOutput,
}

/// A completed sweep in point order.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub points: Vec<SweepPoint>,
}

impl SweepTable {
    pub fn point(&self, value: &str) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.value == value)
    }
}

/// Runs one experiment per axis value. Value strings are parsed per
/// axis; invalid values are configuration errors, and experiment
/// errors propagate.
pub fn sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[String],
) -> Result<SweepTable, EvalError> {
    if values.is_empty() {
        return Err(EvalError::Config(format!("axis {}: no values given", axis.name())));
    }
    let mut points = Vec::with_capacity(values.len());
    for (idx, raw) in values.iter().enumerate() {
        let seed = derive_seed_u64(base.master_seed, "sweep-point", idx as u64);
        let cfg = ExperimentConfig { master_seed: seed, ..axis.apply(base, raw)? };
        let output = run_experiment(&cfg)?;
        points.push(SweepPoint { axis, value: raw.clone(), seed, output });
    }
    Ok(SweepTable { points })
}

/// Writes the long-format results table:
/// `attack,axis,value,fold,tp,fp,tn,fn,recall,precision,seed` — one
/// row per (attack, point, fold).
pub fn write_results_csv<W: Write>(table: &SweepTable, mut w: W) -> Result<(), EvalError> {
    writeln!(w, "attack,axis,value,fold,tp,fp,tn,fn,recall,precision,seed")?;
    for point in &table.points {
        for (kind, result) in &point.output.results {
            for (fold, c) in result.per_fold.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{:.6},{:.6},{}",
                    kind.name(),
                    point.axis.name(),
                    point.value,
                    fold,
                    c.tp,
                    c.fp,
                    c.tn,
                    c.fn_,
                    c.recall(),
                    c.precision(),
                    point.seed
                )?;
            }
        }
    }
    Ok(())
}
