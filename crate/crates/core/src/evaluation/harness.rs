//! The cross-validated open-world experiment.
//!
//! One experiment trains the fingerprinting classifier on synthetic
//! cell traces, simulates background DNS traffic through per-exit
//! caches, and scores the three attacks on identical verdict inputs:
//!
//! * `wf` — the trace classifier alone;
//! * `ctw` — the classifier restricted to sites visible in the
//!   attacker's DNS window at the verdict instant;
//! * `hp` — the `wf` verdict kept only when the DNS window confirms
//!   that same site.
//!
//! Monitored sites occupy popularity ranks
//! `[start_rank+1, start_rank+monitored]`; unmonitored sites take the
//! lowest ranks outside that band. Folds partition the monitored
//! instances by global index and the unmonitored sites by site index,
//! so no tested unmonitored site is ever trained on. Each fold runs on
//! one continuous background timeline: verdict instants sit one second
//! apart after a full window of warm-up, and each verdict models an
//! independent user — the caches and the attacker's window hold
//! background traffic only, while the victim's own visit contributes
//! just the cache misses it would produce at its drawn exit, and only
//! when the attacker taps that exit. Test traces therefore never see
//! each other's DNS.
//!
//! Open-world test folds are balanced 1:1 (as many unmonitored test
//! traces as monitored ones) while training still uses every
//! non-held-out unmonitored site; `unmonitored_count = 0` selects the
//! closed world, where the base-rate rule does not apply.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{
    CorpusError, Domain, DomainRecord, SiteId, SiteProfile, SynthStats, SyntheticCorpusModel,
};
use crate::defector::{attack_ctw, attack_hp, AttackKind};
use crate::dnscache::{visible_sites_by, CacheError, DnsEvent, DnsWindow, ExitCache, TtlPolicy};
use crate::evaluation::metrics::{Counts, EvalResult, TrueLabel, Verdict};
use crate::popmodel::{PopError, PopModel};
use crate::seeds::{derive_seed_u64, task_rng};
use crate::trafficgen::{
    generate_visits, AttackerConfig, NetworkModel, TrafficError, MAX_SCALE, MIN_SCALE,
};
use crate::wfknn::{
    extract_features, generate_traces, learn_weights, classify, FeatureVector, KnnConfig, Penalty,
    SynthTraceConfig, TrainingSet, WfError, F,
};

/// Seconds between consecutive verdict instants on a fold's timeline.
pub const VERDICT_SPACING_S: f64 = 1.0;

/// Desk-scale divisor applied to the full-size defaults.
pub const DEFAULT_DESK_SCALE: u64 = 20;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("bad configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Wf(#[from] WfError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Pop(#[from] PopError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Full experiment parameterization. Counts are quoted at full scale
/// and divided by `desk_scale` before running.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub monitored_count: u64,
    pub instances_per_site: u64,
    /// 0 selects the closed world (no unmonitored train or test sites).
    pub unmonitored_count: u64,
    pub folds: u64,
    pub start_rank: u64,
    pub attacks: Vec<AttackKind>,
    /// Fraction of exit bandwidth the attacker taps.
    pub pct: f64,
    pub window_s: f64,
    pub scale: f64,
    pub visits_per_10min: f64,
    pub n_exits: usize,
    pub pop_label: String,
    /// Overrides the label's catalog size (power-law labels only).
    pub pop_sites: Option<u64>,
    pub rounds: u32,
    pub separability: f64,
    pub master_seed: u64,
    pub desk_scale: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            monitored_count: 1_000,
            instances_per_site: 100,
            unmonitored_count: 100_000,
            folds: 10,
            start_rank: 10_000,
            attacks: AttackKind::ALL.to_vec(),
            pct: 0.33,
            window_s: 60.0,
            scale: 1.0,
            visits_per_10min: crate::trafficgen::DEFAULT_VISITS_PER_10MIN,
            n_exits: 100,
            pop_label: "pc".into(),
            pop_sites: None,
            rounds: 2_500,
            separability: 0.5,
            master_seed: 0,
            desk_scale: DEFAULT_DESK_SCALE,
        }
    }
}

/// Desk-scaled counts derived from a validated config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaledCounts {
    pub monitored: u64,
    pub instances: u64,
    pub unmonitored: u64,
    /// Monitored (= unmonitored, open world) test traces per fold.
    pub tests_per_fold: u64,
}

impl ExperimentConfig {
    /// Checks divisibility, fold feasibility and parameter ranges, and
    /// returns the desk-scaled counts.
    pub fn validate(&self) -> Result<ScaledCounts, EvalError> {
        let fail = |msg: String| Err(EvalError::Config(msg));
        if self.desk_scale == 0 {
            return fail("desk_scale must be at least 1".into());
        }
        for (name, v) in [
            ("monitored_count", self.monitored_count),
            ("instances_per_site", self.instances_per_site),
            ("unmonitored_count", self.unmonitored_count),
        ] {
            if v % self.desk_scale != 0 {
                return fail(format!(
                    "desk_scale {} does not divide {name} {v}",
                    self.desk_scale
                ));
            }
        }
        let monitored = self.monitored_count / self.desk_scale;
        let instances = self.instances_per_site / self.desk_scale;
        let unmonitored = self.unmonitored_count / self.desk_scale;
        if monitored == 0 || instances == 0 {
            return fail("need at least one monitored site and instance after scaling".into());
        }
        if self.folds < 2 {
            return fail(format!("need at least two folds, got {}", self.folds));
        }
        if (monitored * instances) % self.folds != 0 {
            return fail(format!(
                "folds {} do not divide the {} monitored traces",
                self.folds,
                monitored * instances
            ));
        }
        if unmonitored > 0 {
            if unmonitored % self.folds != 0 {
                return fail(format!(
                    "folds {} do not divide the {unmonitored} unmonitored sites",
                    self.folds
                ));
            }
            if unmonitored < monitored * instances {
                return fail(format!(
                    "cannot balance test folds 1:1 — {unmonitored} unmonitored sites \
                     for {} monitored traces",
                    monitored * instances
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.pct) {
            return fail(format!("pct must lie in [0, 1], got {}", self.pct));
        }
        if !(self.window_s.is_finite() && self.window_s > 0.0) {
            return fail(format!("window must be positive, got {}", self.window_s));
        }
        if !(MIN_SCALE..=MAX_SCALE).contains(&self.scale) {
            return fail(format!(
                "network scale must lie in [{MIN_SCALE}, {MAX_SCALE}], got {}",
                self.scale
            ));
        }
        if !(self.visits_per_10min.is_finite() && self.visits_per_10min >= 0.0) {
            return fail(format!(
                "visit volume must be non-negative, got {}",
                self.visits_per_10min
            ));
        }
        if !(0.0..=1.0).contains(&self.separability) {
            return fail(format!(
                "separability must lie in [0, 1], got {}",
                self.separability
            ));
        }
        if self.n_exits == 0 {
            return fail("need at least one exit".into());
        }
        if self.attacks.is_empty() {
            return fail("no attack kinds requested".into());
        }
        let pop = self
            .pop_model()
            .map_err(|e| EvalError::Config(format!("popularity model: {e}")))?;
        if self.start_rank + monitored > pop.n_sites() {
            return fail(format!(
                "monitored ranks end at {} but the popularity model has {} sites",
                self.start_rank + monitored,
                pop.n_sites()
            ));
        }
        Ok(ScaledCounts {
            monitored,
            instances,
            unmonitored,
            tests_per_fold: monitored * instances / self.folds,
        })
    }

    pub fn pop_model(&self) -> Result<PopModel, PopError> {
        match self.pop_sites {
            Some(n) => PopModel::from_label_sized(&self.pop_label, n),
            None => PopModel::from_label(&self.pop_label),
        }
    }
}

/// One scored test trace, with everything needed to recompute the
/// aggregate results.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceVerdict {
    pub trace_id: String,
    pub fold: u64,
    pub truth: TrueLabel,
    pub wf: Verdict,
    pub ctw: Verdict,
    pub hp: Verdict,
    pub observed_sites: usize,
}

impl TraceVerdict {
    pub fn verdict_for(&self, kind: AttackKind) -> Verdict {
        match kind {
            AttackKind::Wf => self.wf,
            AttackKind::Ctw => self.ctw,
            AttackKind::Hp => self.hp,
        }
    }
}

/// Experiment output: per-attack results plus the verdict log they
/// were computed from.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub results: Vec<(AttackKind, EvalResult)>,
    pub verdicts: Vec<TraceVerdict>,
    /// Exit-bandwidth fraction the sampled attacker actually covers.
    pub realized_pct: f64,
}

impl ExperimentOutput {
    pub fn result(&self, kind: AttackKind) -> Option<&EvalResult> {
        self.results.iter().find(|(k, _)| *k == kind).map(|(_, r)| r)
    }
}

/// Rebuilds per-attack results from a verdict log; used as the
/// self-consistency audit of reported numbers.
pub fn recompute_results(
    verdicts: &[TraceVerdict],
    folds: u64,
    attacks: &[AttackKind],
) -> Vec<(AttackKind, EvalResult)> {
    attacks
        .iter()
        .map(|&kind| {
            let mut per_fold = vec![Counts::default(); folds as usize];
            for v in verdicts {
                per_fold[v.fold as usize].record(v.truth, v.verdict_for(kind));
            }
            (kind, EvalResult::from_folds(per_fold))
        })
        .collect()
}

fn label_str(l: TrueLabel) -> String {
    match l {
        TrueLabel::Monitored(s) => s.to_string(),
        TrueLabel::Unmonitored => "unmonitored".into(),
    }
}

fn verdict_str(v: Verdict) -> String {
    match v {
        Verdict::Monitored(s) => s.to_string(),
        Verdict::Unmonitored => "unmonitored".into(),
    }
}

/// Writes the per-trace verdict log:
/// `trace_id,true_label,wf,ctw,hp,observed_sites_count`.
pub fn write_verdict_csv<W: Write>(verdicts: &[TraceVerdict], mut w: W) -> Result<(), EvalError> {
    writeln!(w, "trace_id,true_label,wf,ctw,hp,observed_sites_count")?;
    for v in verdicts {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            v.trace_id,
            label_str(v.truth),
            verdict_str(v.wf),
            verdict_str(v.ctw),
            verdict_str(v.hp),
            v.observed_sites
        )?;
    }
    Ok(())
}

/// Writes one experiment's per-attack fold results:
/// `attack,fold,tp,fp,tn,fn,recall,precision,seed`.
pub fn write_experiment_csv<W: Write>(
    out: &ExperimentOutput,
    master_seed: u64,
    mut w: W,
) -> Result<(), EvalError> {
    writeln!(w, "attack,fold,tp,fp,tn,fn,recall,precision,seed")?;
    for (kind, result) in &out.results {
        for (fold, c) in result.per_fold.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{:.6},{:.6},{}",
                kind.name(),
                fold,
                c.tp,
                c.fp,
                c.tn,
                c.fn_,
                c.recall(),
                c.precision(),
                master_seed
            )?;
        }
    }
    Ok(())
}

/// The lowest `count` ranks outside the monitored band.
fn unmonitored_ranks(start_rank: u64, monitored: u64, count: u64) -> Vec<SiteId> {
    let band = start_rank + 1..=start_rank + monitored;
    (1..)
        .filter(|r| !band.contains(r))
        .take(count as usize)
        .collect()
}

/// One planned test trace of a fold, in verdict order.
struct TestCase {
    trace_id: String,
    truth: TrueLabel,
    /// Rank visited for DNS purposes (also set for unmonitored tests).
    rank: SiteId,
    features: FeatureVector,
}

/// Site profiles the simulation will need repeatedly (monitored and
/// unmonitored test sites); background ranks outside this map are
/// derived on the fly.
struct PinnedProfiles {
    map: HashMap<SiteId, Vec<DomainRecord>>,
}

impl PinnedProfiles {
    fn records<'a>(
        &'a self,
        model: &SyntheticCorpusModel,
        rank: SiteId,
        scratch: &'a mut Vec<DomainRecord>,
    ) -> &'a [DomainRecord] {
        match self.map.get(&rank) {
            Some(r) => r,
            None => {
                *scratch = model.profile(rank).records;
                scratch
            }
        }
    }
}

/// Feeds one fold's background visit stream through the exit caches
/// and the attacker's window, then samples the observed-site set at
/// each verdict instant.
///
/// Each verdict models an independent user: shared state (caches,
/// window) holds background traffic only, and the victim's own visit
/// contributes just the cache misses it would produce at its drawn
/// exit — checked read-only, and only when the attacker taps that
/// exit — so one test trace's DNS never leaks into another's verdict.
#[allow(clippy::too_many_arguments)]
fn simulate_observed_sets(
    cfg: &ExperimentConfig,
    fold: u64,
    net: &NetworkModel,
    pop: &PopModel,
    model: &SyntheticCorpusModel,
    pinned: &PinnedProfiles,
    attacker: &AttackerConfig,
    mon_profiles: &[SiteProfile],
    unique_index: &HashMap<Domain, SiteId>,
    victim_ranks: &[SiteId],
) -> Result<Vec<HashSet<SiteId>>, EvalError> {
    let n_tests = victim_ranks.len();
    let verdict_time = |i: usize| cfg.window_s + i as f64 * VERDICT_SPACING_S;
    let horizon = cfg.window_s + n_tests as f64 * VERDICT_SPACING_S + 1.0;

    let background =
        generate_visits(net, pop, horizon, &mut task_rng(cfg.master_seed, "eval-bg", fold))?;
    let mut victim_rng = task_rng(cfg.master_seed, "eval-victims", fold);

    let mut caches: Vec<ExitCache> =
        (0..cfg.n_exits).map(|e| ExitCache::new(e as u32, TtlPolicy::default())).collect();
    let mut window = DnsWindow::new(cfg.window_s)?;
    let mut observed_sets = Vec::with_capacity(n_tests);
    let mut scratch = Vec::new();

    let mut bi = 0;
    for (i, &rank) in victim_ranks.iter().enumerate() {
        let t = verdict_time(i);
        // Background visits up to the verdict instant feed the caches;
        // misses at tapped exits land in the attacker's window.
        while let Some(visit) = background.get(bi) {
            if visit.time > t {
                break;
            }
            bi += 1;
            let records = pinned.records(model, visit.site, &mut scratch);
            let cache = &mut caches[visit.exit as usize];
            for rec in records {
                if cache.lookup(visit.time, rec)? == crate::dnscache::Lookup::Miss
                    && attacker.observes(visit.exit)
                {
                    window.observe(DnsEvent {
                        time: visit.time,
                        domain: rec.domain.clone(),
                        exit: visit.exit,
                    })?;
                }
            }
        }
        window.advance_to(t)?;

        let exit = net.sample_exit(&mut victim_rng);
        let mut own: HashSet<Domain> = HashSet::new();
        if attacker.observes(exit) {
            let records = pinned.records(model, rank, &mut scratch);
            for rec in records {
                if caches[exit as usize].would_miss(t, rec) {
                    own.insert(rec.domain.clone());
                }
            }
        }
        let visible: BTreeSet<SiteId> = visible_sites_by(
            |d| own.contains(d) || window.contains(d),
            mon_profiles,
            unique_index,
        );
        observed_sets.push(visible.into_iter().collect());
    }
    Ok(observed_sets)
}

/// Runs the cross-validated experiment and scores every requested
/// attack on identical verdict inputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, EvalError> {
    let scaled = cfg.validate()?;
    let (m, k, u) = (scaled.monitored, scaled.instances, scaled.unmonitored);
    let pop = cfg.pop_model()?;
    let net = NetworkModel::uniform_exits(cfg.n_exits)?
        .with_volume(cfg.visits_per_10min, cfg.scale)?;
    let attacker = AttackerConfig::sample_for_pct(
        &net,
        cfg.pct,
        &mut task_rng(cfg.master_seed, "eval-attacker", 0),
    )?;

    let n_model_sites = pop.n_sites().max(cfg.start_rank + m);
    let model = SyntheticCorpusModel::new(
        n_model_sites,
        SynthStats::default(),
        derive_seed_u64(cfg.master_seed, "eval-corpus", 0),
    )?;
    let mon_ranks: Vec<SiteId> = (cfg.start_rank + 1..=cfg.start_rank + m).collect();
    let unm_ranks = unmonitored_ranks(cfg.start_rank, m, u);
    if let Some(&max_rank) = unm_ranks.last() {
        if max_rank > n_model_sites {
            return Err(EvalError::Config(format!(
                "unmonitored ranks reach {max_rank} but the catalog has {n_model_sites} sites"
            )));
        }
    }
    let mon_profiles: Vec<SiteProfile> = mon_ranks.iter().map(|&r| model.profile(r)).collect();
    let unique_index = model.unique_index_for(mon_ranks.iter().copied());
    let mut pinned = PinnedProfiles { map: HashMap::new() };
    for p in &mon_profiles {
        pinned.map.insert(p.site, p.records.clone());
    }
    for &r in &unm_ranks {
        pinned.map.insert(r, model.profile(r).records);
    }

    // Synthetic traces: `k` instances per monitored site, one per
    // unmonitored site. Features are extracted once, up front.
    let mon_traces = generate_traces(
        &SynthTraceConfig { n_sites: m, instances_per_site: k as usize, separability: cfg.separability },
        &mut task_rng(cfg.master_seed, "eval-mon-traces", 0),
    )?;
    let mon_feats: Vec<FeatureVector> =
        mon_traces.iter().map(extract_features).collect::<Result<_, _>>()?;
    let (unm_feats, _unm_traces) = if u > 0 {
        let traces = generate_traces(
            &SynthTraceConfig { n_sites: u, instances_per_site: 1, separability: cfg.separability },
            &mut task_rng(cfg.master_seed, "eval-unm-traces", 0),
        )?;
        let feats: Vec<FeatureVector> =
            traces.iter().map(extract_features).collect::<Result<_, _>>()?;
        (feats, traces)
    } else {
        (Vec::new(), Vec::new())
    };

    let kcfg = KnnConfig { k: 2, rounds: cfg.rounds };
    let mut per_fold: Vec<HashMap<AttackKind, Counts>> = Vec::with_capacity(cfg.folds as usize);
    let mut verdicts: Vec<TraceVerdict> = Vec::new();

    for fold in 0..cfg.folds {
        // Training set: monitored instances outside the fold, then
        // every non-held-out unmonitored site.
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for g in 0..(m * k) as usize {
            if g as u64 % cfg.folds != fold {
                let site_idx = g / k as usize;
                points.push(mon_feats[g].clone());
                labels.push(TrueLabel::Monitored(mon_ranks[site_idx]));
            }
        }
        for j in 0..u as usize {
            if j as u64 % cfg.folds != fold {
                points.push(unm_feats[j].clone());
                labels.push(TrueLabel::Unmonitored);
            }
        }
        let train = TrainingSet::new(points, labels)?;
        let penalty = Penalty::from_training(&train);
        let weights = if cfg.rounds == 0 {
            uniform_fallback()
        } else {
            learn_weights(&train, &penalty, &kcfg, &mut task_rng(cfg.master_seed, "eval-weights", fold))?
        };

        // Test cases in verdict order: monitored by global index, then
        // the first `tests_per_fold` held-out unmonitored sites.
        let mut cases: Vec<TestCase> = Vec::new();
        for g in 0..(m * k) as usize {
            if g as u64 % cfg.folds == fold {
                let site_idx = g / k as usize;
                let inst = g % k as usize;
                let rank = mon_ranks[site_idx];
                cases.push(TestCase {
                    trace_id: format!("f{fold}-m{rank}-i{inst}"),
                    truth: TrueLabel::Monitored(rank),
                    rank,
                    features: mon_feats[g].clone(),
                });
            }
        }
        let mut unm_tests = 0;
        for j in 0..u as usize {
            if j as u64 % cfg.folds == fold && unm_tests < scaled.tests_per_fold {
                unm_tests += 1;
                cases.push(TestCase {
                    trace_id: format!("f{fold}-u{}", unm_ranks[j]),
                    truth: TrueLabel::Unmonitored,
                    rank: unm_ranks[j],
                    features: unm_feats[j].clone(),
                });
            }
        }

        let victim_ranks: Vec<SiteId> = cases.iter().map(|c| c.rank).collect();
        let observed_sets = simulate_observed_sets(
            cfg,
            fold,
            &net,
            &pop,
            &model,
            &pinned,
            &attacker,
            &mon_profiles,
            &unique_index,
            &victim_ranks,
        )?;

        let fold_verdicts: Vec<TraceVerdict> = cases
            .par_iter()
            .zip(observed_sets.par_iter())
            .map(|(case, observed)| -> Result<TraceVerdict, EvalError> {
                let wf = classify(&train, &weights, &penalty, &kcfg, &case.features, None)?;
                let ctw = attack_ctw(&train, &weights, &penalty, &kcfg, &case.features, observed)?;
                let hp = attack_hp(wf, observed);
                Ok(TraceVerdict {
                    trace_id: case.trace_id.clone(),
                    fold,
                    truth: case.truth,
                    wf,
                    ctw,
                    hp,
                    observed_sites: observed.len(),
                })
            })
            .collect::<Result<_, _>>()?;

        let mut counts: HashMap<AttackKind, Counts> = HashMap::new();
        for v in &fold_verdicts {
            for kind in AttackKind::ALL {
                counts.entry(kind).or_default().record(v.truth, v.verdict_for(kind));
            }
        }
        per_fold.push(counts);
        verdicts.extend(fold_verdicts);
    }

    let results = cfg
        .attacks
        .iter()
        .map(|&kind| {
            let folds = per_fold
                .iter()
                .map(|c| c.get(&kind).copied().unwrap_or_default())
                .collect();
            (kind, EvalResult::from_folds(folds))
        })
        .collect();
    Ok(ExperimentOutput { results, verdicts, realized_pct: attacker.pct() })
}

fn uniform_fallback() -> crate::wfknn::Weights {
    crate::wfknn::uniform_weights(F)
}
