//! `fbid` command line: solve an instance, verify a strategy file, or run a
//! batch of random instances.
//!
//! Exit codes: 0 success, 1 unreadable input, 2 invalid instance or
//! strategies, 3 epsilon target not reached.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::instances::{self, GridSpec, LoadedInstance, NamedInstance};
use crate::model::{AuctionInstance, BidGrid, MixedStrategy, PaymentRule, StrategyProfile};
use crate::payoff::payoff_curve;
use crate::solver::{self, Initialization, LearningSchedule, SolverConfig, SolverResult};
use crate::verify::{certify, EquilibriumCertificate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_TARGET_MISSED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fbid", version, about = "Fictitious bidding for sealed-bid auctions")]
pub struct Cli {
    /// Log progress to stderr
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solver and write strategies, payoffs, certificate and manifest
    Solve(SolveArgs),
    /// Certify a strategies.csv against an instance
    Verify(VerifyArgs),
    /// Solve a range of random pair auctions
    Batch(BatchArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Built-in example (1-6; 6 is a random instance, see --seed)
    #[arg(long)]
    pub example: Option<u32>,

    /// Instance JSON file
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaKind {
    Harmonic,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    Uniform,
    Zero,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Replace the grid by [0, max/N, ..., max], keeping its maximum
    #[arg(long)]
    pub grid_steps: Option<usize>,
    /// Learning-rate schedule: c/(k+1) or constant c
    #[arg(long, value_enum)]
    pub eta_kind: Option<EtaKind>,
    /// Schedule coefficient c in (0, 1]
    #[arg(long)]
    pub eta_c: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Stop once a check certifies ε at or below this
    #[arg(long)]
    pub eps_target: Option<f64>,
    /// Certify every N iterations
    #[arg(long)]
    pub check_interval: Option<u64>,
    /// Payment rule: winner pays alpha * own bid + (1 - alpha) * second bid
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Seed of the random instance for --example 6
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial profile: uniform, or a point mass at bid 0
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    /// Share opponent-set evaluations between agents (true/false)
    #[arg(long)]
    pub player_cache: Option<bool>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub overrides: Overrides,
    /// strategies.csv written by `solve`
    #[arg(long)]
    pub strategies: PathBuf,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long, default_value_t = 0)]
    pub seed_start: u64,
    /// Number of consecutive seeds
    #[arg(long, default_value_t = 10)]
    pub count: u64,
    #[arg(long, default_value_t = 10)]
    pub agents: usize,
    #[arg(long, default_value_t = 20)]
    pub scenarios: usize,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Output directory (batch.csv)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Where an instance came from, for the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceIdentity {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    pub grid: GridSpec,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub instance: InstanceIdentity,
    pub config: SolverConfig,
    pub artifacts: Vec<PathBuf>,
    pub duration_secs: f64,
    pub iterations_run: u64,
    pub renormalizations: u64,
    pub trajectory: Vec<(u64, f64)>,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub epsilon: f64,
    pub gaps: Vec<f64>,
    pub payoffs: Vec<f64>,
    pub best_response_bids: Vec<f64>,
    pub best_response_indices: Vec<usize>,
    pub iterations: Option<u64>,
    pub config_echo: Option<SolverConfig>,
}

impl CertificateFile {
    pub fn new(cert: &EquilibriumCertificate, grid: &BidGrid, iterations: Option<u64>, config: Option<&SolverConfig>) -> Self {
        Self {
            epsilon: cert.epsilon,
            gaps: cert.gaps.clone(),
            payoffs: cert.payoffs.clone(),
            best_response_bids: cert.best_response_indices.iter().map(|&j| grid.bid(j)).collect(),
            best_response_indices: cert.best_response_indices.clone(),
            iterations,
            config_echo: config.cloned(),
        }
    }
}

/// An instance ready to solve, with the merged configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub identity: InstanceIdentity,
    pub instance: AuctionInstance,
    pub config: SolverConfig,
}

fn schedule_coefficient(schedule: LearningSchedule) -> f64 {
    match schedule {
        LearningSchedule::Harmonic { c } | LearningSchedule::Constant { c } => c,
    }
}

impl Overrides {
    pub fn apply_instance(&self, mut instance: AuctionInstance) -> Result<AuctionInstance> {
        if let Some(steps) = self.grid_steps {
            let grid = BidGrid::uniform(instance.grid().max(), steps)?;
            instance = instance.with_grid(grid);
        }
        if let Some(alpha) = self.alpha {
            instance = instance.with_rule(PaymentRule::mixture(alpha)?);
        }
        Ok(instance)
    }

    pub fn apply_config(&self, config: &mut SolverConfig) {
        let c = self.eta_c.unwrap_or_else(|| schedule_coefficient(config.schedule));
        let kind = self.eta_kind.unwrap_or(match config.schedule {
            LearningSchedule::Harmonic { .. } => EtaKind::Harmonic,
            LearningSchedule::Constant { .. } => EtaKind::Constant,
        });
        config.schedule = match kind {
            EtaKind::Harmonic => LearningSchedule::Harmonic { c },
            EtaKind::Constant => LearningSchedule::Constant { c },
        };
        if let Some(n) = self.max_iters {
            config.max_iterations = n;
        }
        if let Some(t) = self.eps_target {
            config.epsilon_target = Some(t);
        }
        if let Some(c) = self.check_interval {
            config.check_interval = c;
        }
        match self.init {
            Some(InitKind::Uniform) => config.init = Initialization::Uniform,
            Some(InitKind::Zero) => config.init = Initialization::PointMassAtZero,
            None => {}
        }
        if let Some(cache) = self.player_cache {
            config.independent_player_cache = cache;
        }
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Resolves `--example`/`--file` and applies every override.
pub fn prepare(source: &SourceArgs, overrides: &Overrides) -> Result<Prepared> {
    let (name, file, sha256, instance, mut config) = match (source.example, &source.file) {
        (Some(6), None) => {
            let named = instances::random_instance(overrides.seed.unwrap_or(0), 10, 20)?;
            (named.name, None, None, named.instance, named.config)
        }
        (Some(n), None) => {
            let NamedInstance { name, instance, config, .. } = instances::example(n)?;
            (name, None, None, instance, config)
        }
        (None, Some(path)) => {
            let LoadedInstance { name, instance, solver, players } = instances::load_instance(path)?;
            let mut config = SolverConfig { independent_player_cache: players.is_some(), ..SolverConfig::default() };
            if let Some(spec) = solver {
                spec.apply(&mut config)?;
            }
            let name = name.unwrap_or_else(|| path.display().to_string());
            (name, Some(path.clone()), Some(sha256_file(path)?), instance, config)
        }
        _ => return Err(Error::Config("give exactly one of --example or --file".into())),
    };
    let instance = overrides.apply_instance(instance)?;
    overrides.apply_config(&mut config);
    config.validate()?;
    Ok(Prepared {
        identity: InstanceIdentity {
            name,
            file,
            sha256,
            grid: GridSpec::of(instance.grid()),
            alpha: instance.rule().alpha,
        },
        instance,
        config,
    })
}

/// Decimal with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_owned(), source }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

pub fn write_strategies(path: &Path, profile: &StrategyProfile, grid: &BidGrid) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["agent_id", "bid", "pdf", "cdf"]).map_err(csv_err)?;
    for (a, strategy) in profile.strategies().iter().enumerate() {
        for ((&bid, &pdf), cdf) in grid.bids().iter().zip(strategy.weights()).zip(strategy.cdf()) {
            w.write_record([a.to_string(), fmt_num(bid), fmt_num(pdf), fmt_num(cdf)]).map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err(path))
}

pub fn write_payoffs(path: &Path, profile: &StrategyProfile, instance: &AuctionInstance) -> Result<()> {
    let curves: Vec<Vec<f64>> = instance
        .agents()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&a| payoff_curve(a, profile, instance))
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["agent_id", "bid", "expected_payoff"]).map_err(csv_err)?;
    for (a, curve) in curves.iter().enumerate() {
        for (&bid, &p) in instance.grid().bids().iter().zip(curve) {
            w.write_record([a.to_string(), fmt_num(bid), fmt_num(p)]).map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Deserialize)]
struct StrategyRow {
    agent_id: usize,
    bid: f64,
    pdf: f64,
    #[allow(dead_code)]
    cdf: f64,
}

/// Reads a strategies.csv and checks it against `instance`'s agents and grid.
pub fn read_strategies(path: &Path, instance: &AuctionInstance) -> Result<StrategyProfile> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let grid = instance.grid();
    let mut weights: Vec<Vec<f64>> = vec![Vec::new(); instance.n_agents()];
    for row in reader.deserialize::<StrategyRow>() {
        let row = row.map_err(csv_err)?;
        let slot = weights.get_mut(row.agent_id).ok_or(Error::Agent(row.agent_id))?;
        let j = slot.len();
        if j >= grid.len() {
            return Err(Error::Dimension { expected: grid.len(), got: j + 1 });
        }
        let expected = grid.bid(j);
        if (row.bid - expected).abs() > 1e-12 * expected.abs().max(1.0) {
            return Err(Error::Csv(format!("agent {}: bid {} where the grid has {}", row.agent_id, row.bid, expected)));
        }
        slot.push(row.pdf);
    }
    let strategies = weights
        .into_iter()
        .map(|w| {
            if w.len() != grid.len() {
                return Err(Error::Dimension { expected: grid.len(), got: w.len() });
            }
            MixedStrategy::new(w)
        })
        .collect::<Result<_>>()?;
    Ok(StrategyProfile::new(strategies))
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Json(_) => EXIT_PARSE,
        _ => EXIT_INVALID,
    }
}

fn report(err: &Error) -> i32 {
    eprintln!("error: {err}");
    exit_code(err)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

/// Runs the solver and writes every artifact into `out`.
pub fn solve_to_dir(prepared: &Prepared, out: &Path) -> Result<SolverResult> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let started = Instant::now();
    info!("solving {} with {}", prepared.identity.name, prepared.config.schedule);
    let result = solver::run(&prepared.instance, &prepared.config)?;
    let duration = started.elapsed().as_secs_f64();

    let grid = prepared.instance.grid();
    let strategies = out.join("strategies.csv");
    let payoffs = out.join("payoffs.csv");
    let certificate = out.join("certificate.json");
    let manifest = out.join("manifest.json");
    write_strategies(&strategies, &result.profile, grid)?;
    write_payoffs(&payoffs, &result.profile, &prepared.instance)?;
    write_json(
        &certificate,
        &CertificateFile::new(&result.certificate, grid, Some(result.iterations_run), Some(&prepared.config)),
    )?;
    write_json(
        &manifest,
        &RunManifest {
            instance: prepared.identity.clone(),
            config: prepared.config.clone(),
            artifacts: vec![strategies, payoffs, certificate, manifest.clone()],
            duration_secs: duration,
            iterations_run: result.iterations_run,
            renormalizations: result.renormalizations,
            trajectory: result.trajectory.clone(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
        },
    )?;
    Ok(result)
}

pub fn cmd_solve(args: &SolveArgs) -> i32 {
    let prepared = match prepare(&args.source, &args.overrides) {
        Ok(p) => p,
        Err(e) => return report(&e),
    };
    match solve_to_dir(&prepared, &args.out) {
        Ok(result) => {
            println!("epsilon {} after {} iterations", fmt_num(result.certificate.epsilon), result.iterations_run);
            match prepared.config.epsilon_target {
                Some(t) if result.certificate.epsilon > t => {
                    eprintln!("epsilon target {t} not reached");
                    EXIT_TARGET_MISSED
                }
                _ => EXIT_OK,
            }
        }
        Err(e) => report(&e),
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> i32 {
    let prepared = match prepare(&args.source, &args.overrides) {
        Ok(p) => p,
        Err(e) => return report(&e),
    };
    let profile = match read_strategies(&args.strategies, &prepared.instance) {
        Ok(p) => p,
        Err(e @ Error::Io { .. }) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
        Err(e) => return report(&e),
    };
    match certify(&profile, &prepared.instance) {
        Ok(cert) => {
            let file = CertificateFile::new(&cert, prepared.instance.grid(), None, None);
            println!("{}", serde_json::to_string_pretty(&file).expect("certificate serializes"));
            EXIT_OK
        }
        Err(e) => report(&e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub seed: u64,
    pub epsilon: Option<f64>,
    pub duration_secs: f64,
    pub iterations: Option<u64>,
    pub status: String,
}

fn solve_seed(seed: u64, args: &BatchArgs) -> BatchRow {
    let started = Instant::now();
    let outcome = instances::random_instance(seed, args.agents, args.scenarios).and_then(|named| {
        let instance = args.overrides.apply_instance(named.instance)?;
        let mut config = named.config;
        args.overrides.apply_config(&mut config);
        solver::run(&instance, &config)
    });
    let duration_secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok(result) => BatchRow {
            seed,
            epsilon: Some(result.certificate.epsilon),
            duration_secs,
            iterations: Some(result.iterations_run),
            status: "ok".into(),
        },
        Err(e) => {
            warn!("seed {seed}: {e}");
            BatchRow { seed, epsilon: None, duration_secs, iterations: None, status: format!("error: {e}") }
        }
    }
}

/// Solves every seed in parallel; rows come back in seed order.
pub fn run_batch(args: &BatchArgs) -> Vec<BatchRow> {
    let seeds: Vec<u64> = (args.seed_start..args.seed_start.saturating_add(args.count)).collect();
    seeds.par_iter().map(|&seed| solve_seed(seed, args)).collect()
}

pub fn write_batch(path: &Path, rows: &[BatchRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["seed", "epsilon", "duration_secs", "iterations", "status"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.epsilon.map(fmt_num).unwrap_or_default(),
            format!("{:.3}", r.duration_secs),
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            r.status.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn cmd_batch(args: &BatchArgs) -> i32 {
    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("error: {}: {e}", args.out.display());
        return EXIT_PARSE;
    }
    let rows = run_batch(args);
    let path = args.out.join("batch.csv");
    if let Err(e) = write_batch(&path, &rows) {
        return report(&e);
    }
    let mut stdout = std::io::stdout().lock();
    for r in &rows {
        let _ = writeln!(stdout, "seed {} epsilon {}", r.seed, r.epsilon.map(fmt_num).unwrap_or_else(|| r.status.clone()));
    }
    EXIT_OK
}

/// Parses `args` (program name first) and runs the chosen command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    let level = if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Batch(args) => cmd_batch(args),
    }
}
