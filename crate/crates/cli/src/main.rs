//! `defector` — command-line front end for the evaluation toolkit.
//!
//! Subcommands cover the whole pipeline: synthetic corpus and trace
//! generation, the cross-validated attack evaluation, parameter
//! sweeps, AS-exposure analysis of traceroute data, and the
//! relay-selection compromise simulation. Every run writes its outputs
//! plus a `run_manifest.json` (configuration snapshot, master seed,
//! input digests) into the output location, and identical
//! configurations reproduce identical output bytes regardless of
//! `--workers`.
//!
//! Exit status: 0 on success, 1 on configuration errors (bad flags,
//! bad config-file values, infeasible parameter combinations), 2 on
//! data errors (missing or malformed input files, write failures).

use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use defector_core::config::{experiment_pairs, parse_attack_list, ConfigError, ConfigFile};
use defector_core::corpus::{generate_synthetic, CorpusError, Domain, SynthStats};
use defector_core::evaluation::{
    run_experiment, sweep, write_experiment_csv, write_results_csv, write_verdict_csv, EvalError,
    ExperimentConfig, SweepAxis, TrueLabel,
};
use defector_core::exposure::{exposure_report, load_traceroutes, ExposureError, RoutingTable};
use defector_core::manifest::RunManifest;
use defector_core::pathsim::{
    load_relays, run_simulation, summarize_outputs, write_client_metrics_csv, write_summary_csv,
    DnsScenario, PathMap, PathSimError, SimConfig, SimOutput, UsageSchedule,
};
use defector_core::seeds::task_rng;
use defector_core::wfknn::{generate_traces, write_dataset, SynthTraceConfig, WfError};

#[derive(Parser)]
#[command(
    name = "defector",
    version,
    about = "Evaluation toolkit for DNS-enhanced traffic-correlation attacks",
    max_term_width = 100
)]
struct Cli {
    /// Worker threads for parallel sections (0 = one per core).
    /// Results are byte-identical for any value.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic site→domain corpus file.
    GenCorpus(GenCorpusArgs),
    /// Generate a labelled synthetic cell-trace dataset.
    GenTraces(GenTracesArgs),
    /// Run the cross-validated open-world attack evaluation.
    Eval(EvalArgs),
    /// Repeat the evaluation along one parameter axis.
    Sweep(SweepArgs),
    /// Compute per-site AS exposure (λ) from traceroute data.
    Exposure(ExposureArgs),
    /// Simulate client compromise under a DNS configuration scenario.
    Pathsim(PathsimArgs),
}

#[derive(Args)]
struct GenCorpusArgs {
    /// Number of sites to generate.
    #[arg(long, default_value_t = 1_000)]
    sites: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corpus file to write; the run manifest lands next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenTracesArgs {
    /// Number of monitored sites.
    #[arg(long, default_value_t = 50)]
    sites: u64,
    /// Instances per monitored site.
    #[arg(long, default_value_t = 5)]
    instances: usize,
    /// Additional unmonitored traces (one instance each).
    #[arg(long, default_value_t = 0)]
    unmonitored: u64,
    /// Class separability of the synthetic traces, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    separability: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the trace files and their manifest.
    #[arg(long)]
    out: PathBuf,
}

/// Experiment parameters shared by `eval` and `sweep`: defaults, then
/// the `--config` file, then explicit flags, each layer overriding the
/// previous one.
#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Desk-scale divisor applied to the full-size counts.
    #[arg(long)]
    desk_scale: Option<u64>,
    /// Monitored site count (full scale).
    #[arg(long)]
    monitored: Option<u64>,
    /// Instances per monitored site (full scale).
    #[arg(long)]
    instances: Option<u64>,
    /// Unmonitored site count (full scale); 0 = closed world.
    #[arg(long)]
    unmonitored: Option<u64>,
    #[arg(long)]
    folds: Option<u64>,
    /// First popularity rank of the monitored band.
    #[arg(long)]
    start_rank: Option<u64>,
    /// Comma list of attacks to score: wf,ctw,hp.
    #[arg(long)]
    attacks: Option<String>,
    /// Fraction of exit bandwidth the attacker taps.
    #[arg(long)]
    pct: Option<f64>,
    /// Attacker DNS window in seconds.
    #[arg(long)]
    window: Option<f64>,
    /// Network traffic scale factor.
    #[arg(long)]
    scale: Option<f64>,
    /// Background visit volume per ten minutes.
    #[arg(long)]
    visits_per_10min: Option<f64>,
    #[arg(long)]
    n_exits: Option<usize>,
    /// Popularity model label: pc, pr, uc or ur.
    #[arg(long)]
    pop_label: Option<String>,
    /// Popularity catalog size override, or `none`.
    #[arg(long)]
    pop_sites: Option<String>,
    /// Weight-learning rounds (0 = uniform weights).
    #[arg(long)]
    rounds: Option<u32>,
    /// Synthetic trace separability, in [0, 1].
    #[arg(long)]
    separability: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Output directory (results.csv, verdicts.csv, run manifest).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Axis to sweep: pct, start_rank, rounds, window, scale or
    /// distribution.
    #[arg(long)]
    axis: String,
    /// Comma list of axis values, one experiment per value.
    #[arg(long)]
    values: String,
    /// Output directory (results.csv, run manifest).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExposureArgs {
    /// Routing snapshot: one `prefix<TAB>asn` per line.
    #[arg(long)]
    routes: PathBuf,
    /// Traceroute file (JSON lines, web and dns roles mixed).
    #[arg(long)]
    traces: PathBuf,
    /// Per-site λ CSV to write; the CDF table and run manifest land
    /// next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PathsimArgs {
    /// Relay file (JSON lines).
    #[arg(long)]
    relays: PathBuf,
    /// Ingress path map CSV: client AS → guard.
    #[arg(long)]
    ingress: PathBuf,
    /// Egress path map CSV: exit AS → resolver destination.
    #[arg(long)]
    egress: PathBuf,
    /// Comma list of scenarios: isp-dns, google-dns, local-dns,
    /// status-quo.
    #[arg(long, default_value = "isp-dns,google-dns,local-dns,status-quo")]
    scenarios: String,
    #[arg(long, default_value_t = 2_000)]
    clients: usize,
    #[arg(long, default_value_t = 31)]
    horizon_days: u32,
    /// Comma list of client ASNs, assigned round-robin.
    #[arg(long)]
    client_ases: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (clients.csv, summary.csv, run manifest).
    #[arg(long)]
    out: PathBuf,
}

/// A failure with its exit status: configuration problems exit 1,
/// input-data and I/O problems exit 2.
enum Failure {
    Config(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Data(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Data(m) => m,
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn config_err(e: impl Display) -> Failure {
    Failure::Config(e.to_string())
}

fn data_err(e: impl Display) -> Failure {
    Failure::Data(e.to_string())
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(_) => data_err(format!("config file: {e}")),
            _ => config_err(e),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(_) => config_err(e),
            _ => data_err(e),
        }
    }
}

impl From<PathSimError> for Failure {
    fn from(e: PathSimError) -> Self {
        match e {
            PathSimError::BadConfig(_) | PathSimError::BadSchedule(_) => config_err(e),
            PathSimError::NoEligibleRelay { .. } => config_err(e),
            _ => data_err(e),
        }
    }
}

impl From<ExposureError> for Failure {
    fn from(e: ExposureError) -> Self {
        data_err(e)
    }
}

impl From<defector_core::manifest::ManifestError> for Failure {
    fn from(e: defector_core::manifest::ManifestError) -> Self {
        data_err(format!("run manifest: {e}"))
    }
}

fn open_input(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| data_err(format!("cannot read {}: {e}", path.display())))
}

fn create_output(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| data_err(format!("cannot write {}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| data_err(format!("cannot create {}: {e}", dir.display())))
}

/// Directory that receives the run manifest for a file output.
fn parent_dir(file: &Path) -> PathBuf {
    match file.parent() {
        Some(p) if p.as_os_str().is_empty() => PathBuf::from("."),
        Some(p) => p.to_path_buf(),
        None => PathBuf::from("."),
    }
}

fn finish_manifest(mut manifest: RunManifest, dir: &Path) -> CliResult<()> {
    manifest.finish();
    manifest.write_to(dir)?;
    Ok(())
}

impl ExperimentArgs {
    /// Layers defaults, the config file, and the explicit flags.
    fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            ConfigFile::from_path(path)?.apply(&mut cfg)?;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.desk_scale {
            cfg.desk_scale = v;
        }
        if let Some(v) = self.monitored {
            cfg.monitored_count = v;
        }
        if let Some(v) = self.instances {
            cfg.instances_per_site = v;
        }
        if let Some(v) = self.unmonitored {
            cfg.unmonitored_count = v;
        }
        if let Some(v) = self.folds {
            cfg.folds = v;
        }
        if let Some(v) = self.start_rank {
            cfg.start_rank = v;
        }
        if let Some(v) = &self.attacks {
            cfg.attacks = parse_attack_list(v)?;
        }
        if let Some(v) = self.pct {
            cfg.pct = v;
        }
        if let Some(v) = self.window {
            cfg.window_s = v;
        }
        if let Some(v) = self.scale {
            cfg.scale = v;
        }
        if let Some(v) = self.visits_per_10min {
            cfg.visits_per_10min = v;
        }
        if let Some(v) = self.n_exits {
            cfg.n_exits = v;
        }
        if let Some(v) = &self.pop_label {
            cfg.pop_label = v.clone();
        }
        if let Some(v) = &self.pop_sites {
            cfg.pop_sites = match v.as_str() {
                "none" => None,
                _ => Some(v.parse().map_err(|_| {
                    config_err(format!("--pop-sites: expected an integer or `none`, got `{v}`"))
                })?),
            };
        }
        if let Some(v) = self.rounds {
            cfg.rounds = v;
        }
        if let Some(v) = self.separability {
            cfg.separability = v;
        }
        Ok(cfg)
    }

    /// Starts the run manifest for the resolved configuration,
    /// digesting the config file when one was given.
    fn begin_manifest(&self, command: &str, cfg: &ExperimentConfig) -> CliResult<RunManifest> {
        let mut manifest = RunManifest::begin(command, cfg.master_seed, experiment_pairs(cfg));
        if let Some(path) = &self.config {
            manifest
                .add_input("config", path)
                .map_err(|e| data_err(format!("cannot digest {}: {e}", path.display())))?;
        }
        Ok(manifest)
    }
}

fn run_gen_corpus(args: &GenCorpusArgs) -> CliResult<()> {
    let mut manifest = RunManifest::begin(
        "gen-corpus",
        args.seed,
        [
            ("sites".to_string(), args.sites.to_string()),
            ("master_seed".to_string(), args.seed.to_string()),
        ],
    );
    let corpus = generate_synthetic(
        args.sites,
        &SynthStats::default(),
        &mut task_rng(args.seed, "gen-corpus", 0),
    )
    .map_err(|e| match e {
        CorpusError::Io(_) => data_err(&e),
        _ => config_err(&e),
    })?;
    let mut w = create_output(&args.out)?;
    corpus.save(&mut w).map_err(data_err)?;
    w.flush().map_err(data_err)?;
    manifest.add_input("corpus", &args.out)?;
    finish_manifest(manifest, &parent_dir(&args.out))?;
    println!(
        "wrote {} sites (unique-domain fraction {:.3}) to {}",
        corpus.len(),
        corpus.unique_site_fraction(),
        args.out.display()
    );
    Ok(())
}

fn run_gen_traces(args: &GenTracesArgs) -> CliResult<()> {
    let manifest = RunManifest::begin(
        "gen-traces",
        args.seed,
        [
            ("sites".to_string(), args.sites.to_string()),
            ("instances".to_string(), args.instances.to_string()),
            ("unmonitored".to_string(), args.unmonitored.to_string()),
            ("separability".to_string(), args.separability.to_string()),
            ("master_seed".to_string(), args.seed.to_string()),
        ],
    );
    let gen_err = |e: WfError| match e {
        WfError::Io(_) => data_err(&e),
        _ => config_err(&e),
    };
    let cfg = SynthTraceConfig {
        n_sites: args.sites,
        instances_per_site: args.instances,
        separability: args.separability,
    };
    let mut traces =
        generate_traces(&cfg, &mut task_rng(args.seed, "gen-traces", 0)).map_err(gen_err)?;
    if args.unmonitored > 0 {
        let ucfg = SynthTraceConfig {
            n_sites: args.unmonitored,
            instances_per_site: 1,
            separability: args.separability,
        };
        let mut unm = generate_traces(&ucfg, &mut task_rng(args.seed, "gen-traces-unmonitored", 0))
            .map_err(gen_err)?;
        for t in &mut unm {
            t.label = TrueLabel::Unmonitored;
        }
        traces.append(&mut unm);
    }
    ensure_dir(&args.out)?;
    write_dataset(&args.out, &traces).map_err(data_err)?;
    finish_manifest(manifest, &args.out)?;
    println!("wrote {} traces to {}", traces.len(), args.out.display());
    Ok(())
}

fn run_eval(args: &EvalArgs) -> CliResult<()> {
    let cfg = args.experiment.resolve()?;
    cfg.validate()?;
    let manifest = args.experiment.begin_manifest("eval", &cfg)?;
    let output = run_experiment(&cfg)?;

    ensure_dir(&args.out)?;
    let mut results = create_output(&args.out.join("results.csv"))?;
    write_experiment_csv(&output, cfg.master_seed, &mut results)?;
    results.flush().map_err(data_err)?;
    let mut verdicts = create_output(&args.out.join("verdicts.csv"))?;
    write_verdict_csv(&output.verdicts, &mut verdicts)?;
    verdicts.flush().map_err(data_err)?;
    finish_manifest(manifest, &args.out)?;

    println!("realized attacker pct: {:.4}", output.realized_pct);
    println!("attack  recall  precision  (tp/fp/tn/fn over {} traces)", output.verdicts.len());
    for (kind, result) in &output.results {
        let c = &result.totals;
        println!(
            "{:<6}  {:.4}  {:.4}     ({}/{}/{}/{})",
            kind.name(),
            result.recall(),
            result.precision(),
            c.tp,
            c.fp,
            c.tn,
            c.fn_
        );
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> CliResult<()> {
    let base = args.experiment.resolve()?;
    let axis = SweepAxis::parse(&args.axis)
        .ok_or_else(|| config_err(format!("unknown sweep axis `{}`", args.axis)))?;
    let values: Vec<String> =
        args.values.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();

    let mut manifest = args.experiment.begin_manifest("sweep", &base)?;
    manifest.config.insert("sweep_axis".into(), axis.name().to_string());
    manifest.config.insert("sweep_values".into(), values.join(","));

    let table = sweep(&base, axis, &values)?;
    ensure_dir(&args.out)?;
    let mut results = create_output(&args.out.join("results.csv"))?;
    write_results_csv(&table, &mut results)?;
    results.flush().map_err(data_err)?;
    finish_manifest(manifest, &args.out)?;

    println!("axis {}: {} points", axis.name(), table.points.len());
    for point in &table.points {
        for (kind, result) in &point.output.results {
            println!(
                "{} = {:<8} {:<4} recall {:.4} precision {:.4}",
                axis.name(),
                point.value,
                kind.name(),
                result.recall(),
                result.precision()
            );
        }
    }
    Ok(())
}

fn run_exposure(args: &ExposureArgs) -> CliResult<()> {
    let mut manifest = RunManifest::begin("exposure", 0, []);
    manifest
        .add_input("routes", &args.routes)
        .and_then(|_| manifest.add_input("traces", &args.traces))
        .map_err(|e| data_err(format!("cannot digest inputs: {e}")))?;

    let table = RoutingTable::load(open_input(&args.routes)?)?;
    let traces = load_traceroutes(open_input(&args.traces)?)?;
    let sites: Vec<Domain> =
        traces.iter().map(|t| t.site.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    if sites.is_empty() {
        return Err(data_err(format!("{}: no traceroutes", args.traces.display())));
    }
    let report = exposure_report(&sites, &traces, &traces, &table);

    let mut w = create_output(&args.out)?;
    let fmt_set = |set: &BTreeSet<u32>| {
        set.iter().map(u32::to_string).collect::<Vec<_>>().join(";")
    };
    (|| -> std::io::Result<()> {
        writeln!(w, "site,lambda,d_set,w_set")?;
        for r in &report.results {
            writeln!(
                w,
                "{},{:.6},{},{}",
                r.site.as_str(),
                r.lambda,
                fmt_set(&r.d_set.0),
                fmt_set(&r.w_set.0)
            )?;
        }
        w.flush()
    })()
    .map_err(data_err)?;

    let cdf_path = args.out.with_extension("cdf.csv");
    let mut w = create_output(&cdf_path)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "lambda,cum_fraction")?;
        for (lambda, frac) in &report.cdf {
            writeln!(w, "{lambda:.6},{frac:.6}")?;
        }
        w.flush()
    })()
    .map_err(data_err)?;
    finish_manifest(manifest, &parent_dir(&args.out))?;

    for s in &report.skipped {
        eprintln!("warning: skipped {}: {}", s.site.as_str(), s.reason);
    }
    println!(
        "{} sites, {} skipped; DNS ASes {}, web ASes {}; λ table {}, CDF {}",
        report.results.len(),
        report.skipped.len(),
        report.dns_as_total,
        report.web_as_total,
        args.out.display(),
        cdf_path.display()
    );
    Ok(())
}

fn run_pathsim(args: &PathsimArgs) -> CliResult<()> {
    let scenarios: Vec<DnsScenario> = args
        .scenarios
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            DnsScenario::parse(s).ok_or_else(|| config_err(format!("unknown scenario `{s}`")))
        })
        .collect::<CliResult<_>>()?;
    if scenarios.is_empty() {
        return Err(config_err("no scenarios requested"));
    }
    let mut cfg = SimConfig {
        clients: args.clients,
        horizon_days: args.horizon_days,
        master_seed: args.seed,
        ..SimConfig::default()
    };
    if let Some(list) = &args.client_ases {
        cfg.client_ases = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| config_err(format!("--client-ases: bad ASN `{s}`")))
            })
            .collect::<CliResult<_>>()?;
    }
    cfg.validate()?;

    let client_ases =
        cfg.client_ases.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
    let scenario_names =
        scenarios.iter().map(|s| s.name().to_string()).collect::<Vec<_>>().join(",");
    let mut manifest = RunManifest::begin(
        "pathsim",
        args.seed,
        [
            ("clients".to_string(), cfg.clients.to_string()),
            ("horizon_days".to_string(), cfg.horizon_days.to_string()),
            ("client_ases".to_string(), client_ases),
            ("scenarios".to_string(), scenario_names),
            ("master_seed".to_string(), args.seed.to_string()),
        ],
    );
    for (label, path) in
        [("relays", &args.relays), ("ingress", &args.ingress), ("egress", &args.egress)]
    {
        manifest
            .add_input(label, path)
            .map_err(|e| data_err(format!("cannot digest {}: {e}", path.display())))?;
    }

    let relays =
        load_relays(open_input(&args.relays)?, &mut task_rng(args.seed, "pathsim-relays", 0))?;
    let ingress = PathMap::load(open_input(&args.ingress)?)?;
    let egress = PathMap::load(open_input(&args.egress)?)?;
    let schedule = UsageSchedule::default_daily();

    let mut outputs: Vec<SimOutput> = Vec::with_capacity(scenarios.len());
    for &scenario in &scenarios {
        outputs.push(run_simulation(&cfg, &relays, &schedule, scenario, &ingress, &egress)?);
    }
    let summary = summarize_outputs(&outputs);

    ensure_dir(&args.out)?;
    let mut clients = create_output(&args.out.join("clients.csv"))?;
    write_client_metrics_csv(&outputs, &mut clients)?;
    clients.flush().map_err(data_err)?;
    let mut rows = create_output(&args.out.join("summary.csv"))?;
    write_summary_csv(&summary, &mut rows)?;
    rows.flush().map_err(data_err)?;
    finish_manifest(manifest, &args.out)?;

    println!(
        "{} clients x {} scenarios over {} days ({} visits each)",
        cfg.clients,
        scenarios.len(),
        cfg.horizon_days,
        outputs.first().map_or(0, |o| o.total_visits_per_client)
    );
    for row in &summary {
        println!(
            "{:<10} AS{:<6} median fraction {:.4}, median time-to-first {:.0} s",
            row.scenario.name(),
            row.client_asn,
            row.fraction_median,
            row.ttf_median_s
        );
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::GenCorpus(args) => run_gen_corpus(args),
        Command::GenTraces(args) => run_gen_traces(args),
        Command::Eval(args) => run_eval(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Exposure(args) => run_exposure(args),
        Command::Pathsim(args) => run_pathsim(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version print to stdout and exit 0; real
            // usage errors are configuration errors (status 1).
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.workers > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global()
        {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
