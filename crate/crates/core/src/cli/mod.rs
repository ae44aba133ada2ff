//! Command-line front end: `estimate`, `monitor`, `simulate` and `validate`.
//!
//! Every failure prints one line starting with `error:` on stderr. Exit
//! codes: 0 success, 1 runtime or validation failure, 2 bad input, 3 AMS
//! extinction.

mod validate;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::estimators::{
    ams_estimate, ce_estimate, is_fixed_estimate, mc_estimate, AmsParams, CeParams, Estimate, EstimatorError,
    ProposalParams,
};
use crate::lane_change::{LaneChange, LaneChangeConfig, Rule};
use crate::monitor::{BoundFormula, MonitorError, WorkList};
use crate::sim::toy::ToyWalk;
use crate::sim::{read_states_csv, run_trajectory, NoiseStream, RunOptions, Sampler, Scenario, SimError, Simulator, TrajectoryError};
use crate::stl::{parse_formula, Formula, PredicateTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EXTINCTION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Trace(#[from] TrajectoryError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("extinction after {stages} stages: every trajectory tied at the level")]
    Extinction { stages: usize },
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Trace(_) => EXIT_CONFIG,
            CliError::Estimator(EstimatorError::Params(_) | EstimatorError::Proposal(_)) => EXIT_CONFIG,
            CliError::Monitor(MonitorError::UnboundPredicate(_) | MonitorError::Arity { .. }) => EXIT_CONFIG,
            CliError::Extinction { .. } => EXIT_EXTINCTION,
            _ => EXIT_FAILURE,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

#[derive(Parser, Debug)]
#[command(name = "stl-splitter", version, about = "Rare-event failure probabilities for STL specifications")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate the probability that a run violates the specification.
    Estimate(EstimateArgs),
    /// Robustness of every prefix of a recorded trace.
    Monitor(MonitorArgs),
    /// Run one trajectory and write it as CSV.
    Simulate(SimulateArgs),
    /// Check the toy oracle and the monitor against its batch reference.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Builtin {
    LaneChange,
    ToyWalk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mc,
    Ams,
    Is,
    Ce,
}

#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    /// Built-in scenario with embedded defaults.
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// JSON config; a lane-change config unless `--builtin toy_walk` is given.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SpecArgs {
    /// Named rule: phi1..phi4 for the lane change, `barrier` or `floor` for the toy walk.
    #[arg(long, conflicts_with = "formula")]
    pub rule: Option<String>,
    /// Formula text over the scenario's predicates.
    #[arg(long)]
    pub formula: Option<String>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Sample size (per stage for CE).
    #[arg(long, default_value_t = 250)]
    pub n: usize,
    /// AMS discards per stage.
    #[arg(long, default_value_t = 25)]
    pub k: usize,
    /// CE stages.
    #[arg(long, default_value_t = 5)]
    pub stages: usize,
    #[arg(long, default_value_t = 0.1)]
    pub elite_frac: f64,
    /// IS proposal: `target`, `naive` or a JSON object.
    #[arg(long, default_value = "naive")]
    pub proposal: String,
    #[arg(long, env = "STL_SPLITTER_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Estimate JSON; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Level trace CSV `stage,gamma,discards`.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MonitorArgs {
    /// Trace CSV. Without a scenario every column is a predicate of the same name.
    pub trace: PathBuf,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// `t,robustness` CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, env = "STL_SPLITTER_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Trajectory CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Prefix robustness CSV `t,robustness` (needs a rule or formula).
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Oracle,
    Differential,
    All,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Fewer repetitions with correspondingly wider bounds.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, env = "STL_SPLITTER_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A loaded scenario of either kind.
pub enum Loaded {
    Lane(LaneChange),
    Toy(ToyWalk),
}

/// Calls `$body` with `$sc` bound to the concrete scenario.
macro_rules! with_scenario {
    ($loaded:expr, $sc:ident => $body:expr) => {
        match $loaded {
            Loaded::Lane($sc) => $body,
            Loaded::Toy($sc) => $body,
        }
    };
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

pub fn load_scenario(args: &ScenarioArgs) -> Result<Option<Loaded>, CliError> {
    let config = |e: String| CliError::Config(e);
    Ok(match (args.builtin, &args.scenario) {
        (None, None) => None,
        (Some(Builtin::ToyWalk), None) => Some(Loaded::Toy(ToyWalk::default())),
        (Some(Builtin::ToyWalk), Some(p)) => {
            let walk: ToyWalk =
                serde_json::from_str(&read_text(p)?).map_err(|e| config(format!("{}: {e}", p.display())))?;
            if !(walk.sigma >= 0.0) || walk.horizon == 0 {
                return Err(config(format!("{}: toy walk needs sigma >= 0 and horizon >= 1", p.display())));
            }
            Some(Loaded::Toy(walk))
        }
        (Some(Builtin::LaneChange), None) => Some(Loaded::Lane(LaneChange::default())),
        (_, Some(p)) => {
            let cfg = LaneChangeConfig::from_json(&read_text(p)?).map_err(|e| config(format!("{}: {e}", p.display())))?;
            Some(Loaded::Lane(LaneChange::new(cfg).map_err(|e| config(e.to_string()))?))
        }
    })
}

fn require_scenario(args: &ScenarioArgs) -> Result<Loaded, CliError> {
    load_scenario(args)?.ok_or_else(|| CliError::Config("one of --builtin or --scenario is required".into()))
}

fn parse_text(text: &str, table: &PredicateTable) -> Result<Formula, CliError> {
    parse_formula(text, table).map_err(|e| CliError::Config(format!("formula: {e}")))
}

/// The formula selected by `--rule` / `--formula`, if any.
pub fn resolve_formula(loaded: &Loaded, spec: &SpecArgs) -> Result<Option<Formula>, CliError> {
    if let Some(text) = &spec.formula {
        let table = with_scenario!(loaded, sc => sc.predicates());
        return parse_text(text, &table).map(Some);
    }
    let Some(rule) = &spec.rule else { return Ok(None) };
    match loaded {
        Loaded::Lane(sc) => {
            let r: Rule = rule.parse().map_err(CliError::Config)?;
            Ok(Some(sc.rule_formula(r)))
        }
        Loaded::Toy(walk) => match rule.as_str() {
            "barrier" => Ok(Some(walk.formula())),
            "floor" => Ok(Some(walk.floor_formula())),
            other => Err(CliError::Config(format!("unknown rule `{other}` (expected barrier or floor)"))),
        },
    }
}

/// Resolved formula, falling back to the toy walk's barrier rule.
fn formula_or_default(loaded: &Loaded, spec: &SpecArgs) -> Result<Formula, CliError> {
    match (resolve_formula(loaded, spec)?, loaded) {
        (Some(f), _) => Ok(f),
        (None, Loaded::Toy(walk)) => Ok(walk.formula()),
        (None, Loaded::Lane(_)) => Err(CliError::Config("one of --rule or --formula is required".into())),
    }
}

fn parse_proposal(text: &str) -> Result<ProposalParams, CliError> {
    let p = match text {
        "target" => ProposalParams::target(),
        "naive" => ProposalParams::naive(),
        json => serde_json::from_str(json).map_err(|e| CliError::Config(format!("proposal: {e}")))?,
    };
    p.validate().map_err(|e| CliError::Config(format!("proposal: {e}")))?;
    Ok(p)
}

/// Runs `f` on a pool of `workers` threads (the global pool when `None`).
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    if workers == Some(0) {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    if let Some(w) = workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
        return Ok(pool.install(f));
    }
    Ok(f())
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_err(p))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::Io { path: "<stdout>".into(), source: e }
}

fn estimate_on<S: Scenario>(sc: &S, formula: Formula, args: &EstimateArgs) -> Result<Estimate, CliError> {
    let spec = BoundFormula::new(formula, &sc.predicates())?;
    let est = match args.method {
        MethodArg::Mc => mc_estimate(sc, &spec, args.n, args.seed)?,
        MethodArg::Ams => ams_estimate(sc, &spec, &AmsParams::new(args.n, args.k), args.seed)?,
        MethodArg::Is => is_fixed_estimate(sc, &spec, &parse_proposal(&args.proposal)?, args.n, args.seed)?,
        MethodArg::Ce => {
            let params = CeParams { elite_frac: args.elite_frac, ..CeParams::new(args.n, args.stages) };
            ce_estimate(sc, &spec, &params, args.seed)?
        }
    };
    Ok(est)
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<Estimate, CliError> {
    let loaded = require_scenario(&args.scenario)?;
    let formula = formula_or_default(&loaded, &args.spec)?;
    let est = with_workers(args.workers, || with_scenario!(&loaded, sc => estimate_on(sc, formula, args)))??;

    let json = est.to_json();
    match &args.out {
        Some(p) => std::fs::write(p, format!("{json}\n")).map_err(io_err(p))?,
        None => println!("{json}"),
    }
    if let Some(p) = &args.trace_out {
        let file = File::create(p).map_err(io_err(p))?;
        est.write_level_csv(file).map_err(|e| CliError::Io { path: p.display().to_string(), source: e.into() })?;
    }
    let summary = format!(
        "{} p_hat={:e} stages={} trajectories={} steps={} extinction={}",
        est.method,
        est.p_hat,
        est.levels.len(),
        est.trajectories_run,
        est.total_simulation_steps,
        est.extinction
    );
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    if est.extinction {
        return Err(CliError::Extinction { stages: est.levels.len() });
    }
    Ok(est)
}

/// Column names of a trace CSV, in file order.
fn trace_columns(path: &Path) -> Result<Vec<String>, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(File::open(path).map_err(io_err(path))?);
    let header = r.headers().map_err(TrajectoryError::from)?;
    Ok(header.iter().map(str::to_string).collect())
}

/// Prefix robustness `levels[t]` of `formula` at index 0 over `states`.
pub fn monitor_levels(formula: Formula, table: &PredicateTable, states: &[Vec<f64>]) -> Result<Vec<f64>, CliError> {
    let spec = BoundFormula::new(formula, table)?;
    let mut wl = WorkList::new(spec);
    let mut out = Vec::with_capacity(states.len());
    for x in states {
        wl.update(x)?;
        out.push(wl.robustness()?);
    }
    Ok(out)
}

fn write_levels(out: Box<dyn Write>, levels: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let fail = |e: csv::Error| CliError::Io { path: "<output>".into(), source: e.into() };
    w.write_record(["t", "robustness"]).map_err(fail)?;
    for (t, l) in levels.iter().enumerate() {
        w.write_record([t.to_string(), l.to_string()]).map_err(fail)?;
    }
    w.flush().map_err(stdout_err)
}

pub fn cmd_monitor(args: &MonitorArgs) -> Result<Vec<f64>, CliError> {
    let states = read_states_csv(File::open(&args.trace).map_err(io_err(&args.trace))?)?;
    let (formula, table) = match load_scenario(&args.scenario)? {
        Some(loaded) => {
            let dim = with_scenario!(&loaded, sc => sc.build().state().len());
            if states[0].len() != dim {
                return Err(CliError::Config(format!(
                    "trace has {} state columns, the scenario needs {dim}",
                    states[0].len()
                )));
            }
            let formula = resolve_formula(&loaded, &args.spec)?
                .ok_or_else(|| CliError::Config("one of --rule or --formula is required".into()))?;
            (formula, with_scenario!(&loaded, sc => sc.predicates()))
        }
        None => {
            if args.spec.rule.is_some() {
                return Err(CliError::Config("--rule needs --builtin or --scenario".into()));
            }
            let text = args.spec.formula.as_deref().ok_or_else(|| CliError::Config("--formula is required".into()))?;
            let names: Vec<String> = trace_columns(&args.trace)?
                .into_iter()
                .filter(|h| h != "t" && !(h.len() > 1 && h.starts_with('a') && h[1..].chars().all(|c| c.is_ascii_digit())))
                .collect();
            let mut table = PredicateTable::new();
            for (k, name) in names.into_iter().enumerate() {
                table.insert(name, move |x: &[f64]| x[k]);
            }
            (parse_text(text, &table)?, table)
        }
    };
    let levels = monitor_levels(formula, &table, &states)?;
    write_levels(open_out(&args.out)?, &levels)?;
    Ok(levels)
}

fn simulate_on<S: Scenario>(sc: &S, formula: Option<Formula>, args: &SimulateArgs) -> Result<(), CliError> {
    // the monitor needs some formula to run; `true` costs nothing
    let spec = BoundFormula::new(formula.clone().unwrap_or_else(Formula::truth), &sc.predicates())?;
    let sampler = Sampler::target(NoiseStream::new(args.seed, args.stream));
    let run = run_trajectory(sc, &spec, sampler, RunOptions::default())?;
    let mut out = open_out(&args.out)?;
    run.trajectory.write_csv(&mut out)?;
    out.flush().map_err(stdout_err)?;
    if let Some(p) = &args.trace_out {
        if formula.is_none() {
            return Err(CliError::Config("--trace-out needs --rule or --formula".into()));
        }
        write_levels(open_out(&Some(p.clone()))?, &run.levels)?;
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let loaded = require_scenario(&args.scenario)?;
    let formula = resolve_formula(&loaded, &args.spec)?;
    with_scenario!(&loaded, sc => simulate_on(sc, formula, args))
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let mut out = open_out(&args.out)?;
    let report = with_workers(args.workers, || validate::run(args.suite, args.quick, args.seed))?;
    for line in &report.lines {
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    out.flush().map_err(stdout_err)?;
    match report.failures() {
        0 => Ok(()),
        n => Err(CliError::Validation(format!("{n} check(s) failed"))),
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a).map(drop),
        Command::Monitor(a) => cmd_monitor(a).map(drop),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return EXIT_CONFIG;
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}
