//! The `csgcheck` command line.
//!
//! Exit codes: 0 on success, 1 when a bounded property is false or an
//! evaluated strategy is not an ε-equilibrium, 2 for input errors (bad
//! arguments, unreadable or malformed files, unsupported queries) and 3
//! for solver failures.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};

use csgcheck_core::checker::{check, CheckOptions, CheckResult, DEFAULT_EPSILON, DEFAULT_MAX_ITERS};
use csgcheck_core::equilibria::{solve_query, Criterion, EquilibriumKind, EquilibriumQuery, OptDirection, Witness};
use csgcheck_core::eval::{goals_for, Verdict, DEFAULT_MAX_STEPS};
use csgcheck_core::expr::Value;
use csgcheck_core::game::parse_nfg_table;
use csgcheck_core::model::{elaborate, parse_model};
use csgcheck_core::props::{parse_properties, parse_property, StateFormula};
use csgcheck_core::{Csg, Error};

use crate::interchange::{export_game, import_game};
use crate::simulation::{evaluate_parallel, pool};
use crate::strategy_file::{export_strategy, import_strategy};
use crate::{read_file, write_file, FileError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "csgcheck", version, about = "Model checking and equilibrium synthesis for concurrent stochastic games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check properties of a model, optionally over a constant sweep.
    Check(CheckArgs),
    /// Check properties over a constant sweep; CSV output by default.
    Sweep(CheckArgs),
    /// Evaluate and certify an exported strategy.
    Eval(EvalArgs),
    /// Write the explicit game of a model as JSON.
    Export(ExportArgs),
    /// Solve a normal form game table.
    Nfg(NfgArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file: a `.csg` model or a `.json` explicit game.
    #[arg(long)]
    pub model: PathBuf,
    /// Constant binding `name=value`; repeatable.
    #[arg(long = "const", value_name = "NAME=VALUE")]
    pub constants: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PropertyArgs {
    /// Property file, one property per line.
    #[arg(long)]
    pub props: Option<PathBuf>,
    /// Inline property; repeatable, checked after those of `--props`.
    #[arg(long)]
    pub prop: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Value iteration stops once the largest change is below this.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
}

impl SolverArgs {
    fn options(&self) -> CheckOptions {
        CheckOptions { epsilon: self.epsilon, max_iters: self.max_iters }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub properties: PropertyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Sweep one constant over `name=lo:hi:step`.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Write synthesized strategies here. With several strategies the
    /// files are numbered: `s.json` becomes `s.1.json`, `s.2.json`, ...
    #[arg(long)]
    pub export_strategy: Option<PathBuf>,
    /// Include wall-clock times in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub properties: PropertyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Strategy file written by `check --export-strategy`.
    #[arg(long)]
    pub import_strategy: PathBuf,
    /// Which of the listed properties the strategy was synthesized for,
    /// counting from 1.
    #[arg(long, default_value_t = 1)]
    pub select: usize,
    /// Simulation runs per objective.
    #[arg(long, default_value_t = 10_000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for simulation.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Step cap for simulated paths of unbounded objectives.
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
    /// Largest deviation gain accepted as an equilibrium.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Ne,
    Ce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Sw,
    Sf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Max,
    Min,
}

#[derive(Debug, Args)]
pub struct NfgArgs {
    /// Game table: lines `a1 ... an : u1 ... un`.
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long, value_enum, default_value_t = KindArg::Ne)]
    pub kind: KindArg,
    #[arg(long, value_enum, default_value_t = CriterionArg::Sw)]
    pub criterion: CriterionArg,
    /// `min` treats utilities as costs.
    #[arg(long, value_enum, default_value_t = DirectionArg::Max)]
    pub direction: DirectionArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A failure with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver(_) | Error::NonConvergence { .. } | Error::Numeric(_) | Error::Internal(_) => EXIT_SOLVER,
        Error::Input(_)
        | Error::Parse(_)
        | Error::Elaboration(_)
        | Error::Unsupported(_)
        | Error::IncompleteStrategy(_) => EXIT_INPUT,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { code: exit_code(&e), message: e.to_string() }
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        match e {
            FileError::Core(inner) => inner.into(),
            other => CliError::input(other.to_string()),
        }
    }
}

/// Runs a parsed command line and returns the exit code. Reports go to
/// standard output or `--output`, errors to standard error.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Check(args) => cmd_check(&args, false),
        Command::Sweep(args) => cmd_check(&args, true),
        Command::Eval(args) => cmd_eval(&args),
        Command::Export(args) => cmd_export(&args),
        Command::Nfg(args) => cmd_nfg(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn emit(output: &Option<PathBuf>, report: &str) -> Result<(), CliError> {
    match output {
        Some(path) => Ok(write_file(path, report)?),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(report.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::input(format!("cannot write output: {e}")))
        }
    }
}

/// Parses `name=value` into a binding: `true`/`false`, an integer, or a
/// real.
pub fn parse_binding(text: &str) -> Result<(String, Value), CliError> {
    let (name, value) = text.split_once('=').ok_or_else(|| CliError::input(format!("binding {text:?} is not of the form name=value")))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(CliError::input(format!("binding {text:?} has no name")));
    }
    Ok((name.to_string(), parse_value(value.trim()).ok_or_else(|| CliError::input(format!("cannot read the value of {text:?}")))?))
}

fn parse_value(text: &str) -> Option<Value> {
    match text {
        "true" => Some(Value::Bool(true)),
        "false" => Some(Value::Bool(false)),
        _ => text
            .parse::<i64>()
            .map(Value::Int)
            .ok()
            .or_else(|| text.parse::<f64>().ok().filter(|x| x.is_finite()).map(Value::Real)),
    }
}

/// One swept constant and its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub name: String,
    pub values: Vec<Value>,
}

/// Parses `name=lo:hi:step`. The grid is `lo + i*step` up to `hi`; it is
/// integer when all three numbers are, and empty when `lo > hi`.
pub fn parse_sweep(text: &str) -> Result<Sweep, CliError> {
    let bad = || CliError::input(format!("sweep {text:?} is not of the form name=lo:hi:step"));
    let (name, range) = text.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').map(str::trim).collect();
    if parts.len() != 3 || name.trim().is_empty() {
        return Err(bad());
    }
    let nums: Vec<Value> = parts.iter().map(|p| parse_value(p).filter(|v| !matches!(v, Value::Bool(_)))).collect::<Option<_>>().ok_or_else(bad)?;
    let values = match (nums[0], nums[1], nums[2]) {
        (Value::Int(lo), Value::Int(hi), Value::Int(step)) => {
            if step <= 0 {
                return Err(CliError::input("sweep step must be positive"));
            }
            if lo > hi {
                Vec::new()
            } else {
                (0..=(hi - lo) / step).map(|i| Value::Int(lo + i * step)).collect()
            }
        }
        (lo, hi, step) => {
            let as_f = |v: Value| v.as_f64().unwrap_or(f64::NAN);
            let (lo, hi, step) = (as_f(lo), as_f(hi), as_f(step));
            if !(step > 0.0) {
                return Err(CliError::input("sweep step must be positive"));
            }
            let count = ((hi - lo) / step + 1e-9).floor();
            if count > 1e6 {
                return Err(CliError::input("sweep has more than a million points"));
            }
            if count < 0.0 {
                Vec::new()
            } else {
                (0..=count as i64).map(|i| Value::Real(lo + i as f64 * step)).collect()
            }
        }
    };
    Ok(Sweep { name: name.trim().to_string(), values })
}

/// Loads a `.json` explicit game or parses and elaborates a model.
pub fn load_model(path: &Path, bindings: &[(String, Value)]) -> Result<Csg, CliError> {
    let text = read_file(path)?;
    let shown = path.display();
    if path.extension().is_some_and(|e| e == "json") {
        if !bindings.is_empty() {
            return Err(CliError::input(format!("{shown}: explicit games take no constant bindings")));
        }
        return import_game(&text).map_err(|e| CliError { message: format!("{shown}: {}", CliError::from(e).message), code: EXIT_INPUT });
    }
    let ast = parse_model(&text).map_err(|e| CliError { code: exit_code(&e), message: format!("{shown}: {e}") })?;
    elaborate(&ast, bindings).map_err(|e| CliError { code: exit_code(&e), message: format!("{shown}: {e}") })
}

fn load_properties(args: &PropertyArgs) -> Result<Vec<StateFormula>, CliError> {
    let mut formulas = Vec::new();
    if let Some(path) = &args.props {
        let text = read_file(path)?;
        let props = parse_properties(&text).map_err(|e| CliError { code: EXIT_INPUT, message: format!("{}: {e}", path.display()) })?;
        formulas.extend(props.into_iter().map(|p| p.formula));
    }
    for p in &args.prop {
        formulas.push(parse_property(p).map_err(|e| CliError::input(format!("property {p:?}: {e}")))?);
    }
    if formulas.is_empty() {
        return Err(CliError::input("no properties given; use --props or --prop"));
    }
    Ok(formulas)
}

/// A float that serializes non-finite values as strings.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&fmt_num(self.0))
        }
    }
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == 0.0 || (1e-5..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Serialize)]
struct CheckReport {
    model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    states: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transitions: Option<usize>,
    constants: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<String>,
    results: Vec<PropertyReport>,
}

#[derive(Debug, Serialize)]
struct PropertyReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    constant: Option<String>,
    property: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<Num>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    values: Vec<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    satisfied: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    strategy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip)]
    code: i32,
}

impl PropertyReport {
    fn new(constant: Option<String>, property: String) -> Self {
        PropertyReport {
            constant,
            property,
            value: None,
            values: Vec::new(),
            satisfied: None,
            iterations: None,
            residual: None,
            wall_time: None,
            strategy: None,
            error: None,
            code: EXIT_OK,
        }
    }

    fn fill(&mut self, r: &CheckResult) {
        self.property = r.property.clone();
        self.value = r.value.map(Num);
        self.values = r.coalition_values.iter().copied().map(Num).collect();
        self.satisfied = r.satisfied;
        if r.value.is_some() {
            self.iterations = Some(r.iterations);
            self.residual = Some(Num(r.residual));
        }
        if r.satisfied == Some(false) {
            self.code = EXIT_FALSE;
        }
    }

    fn fail(&mut self, e: CliError) {
        self.code = e.code;
        self.error = Some(e.message);
    }

    /// The value column of CSV output.
    fn value_cell(&self) -> String {
        match (self.value, self.satisfied) {
            (Some(v), _) => fmt_num(v.0),
            (None, Some(b)) => b.to_string(),
            (None, None) => String::new(),
        }
    }
}

/// `s.json` with index 2 becomes `s.2.json`.
fn numbered(path: &Path, index: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{index}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{index}"),
    };
    path.with_file_name(name)
}

fn cmd_check(args: &CheckArgs, sweep_command: bool) -> Result<i32, CliError> {
    let options = args.solver.options();
    if !(options.epsilon > 0.0) || !options.epsilon.is_finite() {
        return Err(CliError::input("--epsilon must be positive"));
    }
    let bindings = args.model.constants.iter().map(|c| parse_binding(c)).collect::<Result<Vec<_>, _>>()?;
    let sweep = match &args.sweep {
        Some(s) => Some(parse_sweep(s)?),
        None if sweep_command => return Err(CliError::input("the sweep command needs --sweep name=lo:hi:step")),
        None => None,
    };
    let format = args.output.format.unwrap_or(if sweep.is_some() { Format::Csv } else { Format::Text });
    let formulas = load_properties(&args.properties)?;

    // each grid point gets its own elaboration; without a sweep there is one
    let points: Vec<Option<(String, Value)>> = match &sweep {
        Some(s) => s.values.iter().map(|v| Some((s.name.clone(), *v))).collect(),
        None => vec![None],
    };
    let games_per_point = formulas.iter().filter(|f| f.is_game_operator()).count();
    let numbering = games_per_point * points.len() > 1;
    let mut strategy_index = 0;

    let mut report = CheckReport {
        model: args.model.model.display().to_string(),
        states: None,
        transitions: None,
        constants: args.model.constants.clone(),
        sweep: args.sweep.clone(),
        results: Vec::new(),
    };
    for point in &points {
        let mut point_bindings: Vec<(String, Value)> = bindings.iter().filter(|(n, _)| point.as_ref().is_none_or(|p| &p.0 != n)).cloned().collect();
        let label = point.as_ref().map(|(n, v)| format!("{n}={v}"));
        if let Some(p) = point {
            point_bindings.push(p.clone());
        }
        let game = match load_model(&args.model.model, &point_bindings) {
            Ok(g) => g,
            Err(e) if sweep.is_some() => {
                // a failing grid point is recorded and the sweep goes on
                for f in &formulas {
                    let mut r = PropertyReport::new(label.clone(), f.to_string());
                    r.fail(e.clone());
                    report.results.push(r);
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        if sweep.is_none() {
            report.states = Some(game.num_states());
            report.transitions = Some(game.num_transitions());
        }
        for f in &formulas {
            let mut r = PropertyReport::new(label.clone(), f.to_string());
            let start = Instant::now();
            let outcome = check(&game, f, &options);
            if args.timing {
                r.wall_time = Some(start.elapsed().as_secs_f64());
            }
            match outcome {
                Ok(result) => {
                    r.fill(&result);
                    if let (Some(path), Some(strategy)) = (&args.export_strategy, &result.strategy) {
                        strategy_index += 1;
                        let target = if numbering { numbered(path, strategy_index) } else { path.clone() };
                        match export_strategy(&game, strategy).and_then(|text| write_file(&target, &text)) {
                            Ok(()) => r.strategy = Some(target.display().to_string()),
                            Err(e) => r.fail(e.into()),
                        }
                    }
                }
                Err(e) => r.fail(e.into()),
            }
            report.results.push(r);
        }
    }

    let text = match format {
        Format::Text => check_text(&report),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| CliError::input(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => check_csv(&report)?,
    };
    emit(&args.output.output, &text)?;
    for r in &report.results {
        if let Some(e) = &r.error {
            match &r.constant {
                Some(c) => eprintln!("error: {c}: {}: {e}", r.property),
                None => eprintln!("error: {}: {e}", r.property),
            }
        }
    }
    Ok(report.results.iter().map(|r| r.code).max().unwrap_or(EXIT_OK))
}

fn check_text(report: &CheckReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "Model: {}", report.model);
    if let (Some(s), Some(t)) = (report.states, report.transitions) {
        let _ = write!(out, " ({s} states, {t} transitions)");
    }
    out.push('\n');
    if !report.constants.is_empty() {
        let _ = writeln!(out, "Constants: {}", report.constants.join(", "));
    }
    if let Some(s) = &report.sweep {
        let _ = writeln!(out, "Sweep: {s}");
    }
    for r in &report.results {
        out.push('\n');
        match &r.constant {
            Some(c) => {
                let _ = writeln!(out, "[{c}] {}", r.property);
            }
            None => {
                let _ = writeln!(out, "{}", r.property);
            }
        }
        if let Some(e) = &r.error {
            let _ = writeln!(out, "  error: {e}");
            continue;
        }
        if let Some(v) = r.value {
            let _ = writeln!(out, "  value: {}", fmt_num(v.0));
        }
        if !r.values.is_empty() {
            let vs: Vec<String> = r.values.iter().map(|v| fmt_num(v.0)).collect();
            let _ = writeln!(out, "  coalition values: ({})", vs.join(", "));
        }
        if let Some(b) = r.satisfied {
            let _ = writeln!(out, "  satisfied: {b}");
        }
        if let (Some(i), Some(res)) = (r.iterations, r.residual) {
            let _ = writeln!(out, "  iterations: {i} (residual {})", fmt_num(res.0));
        }
        if let Some(t) = r.wall_time {
            let _ = writeln!(out, "  time: {t:.3}s");
        }
        if let Some(p) = &r.strategy {
            let _ = writeln!(out, "  strategy: {p}");
        }
    }
    out
}

fn check_csv(report: &CheckReport) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::input(format!("cannot write CSV: {e}"));
    w.write_record(["constant", "property", "value", "error"]).map_err(io)?;
    for r in &report.results {
        let constant = r.constant.clone().unwrap_or_default();
        let value = r.value_cell();
        w.write_record([constant.as_str(), r.property.as_str(), value.as_str(), r.error.as_deref().unwrap_or("")]).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::input(format!("cannot write CSV: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::input(e.to_string()))
}

#[derive(Debug, Serialize)]
struct EvalReport {
    property: String,
    strategy: String,
    chain_states: usize,
    goals: Vec<GoalReport>,
    tolerance: f64,
    certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation: Option<ViolationReport>,
}

#[derive(Debug, Serialize)]
struct GoalReport {
    coalition: Vec<String>,
    direction: &'static str,
    exact: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<EstimateReport>,
    gain: Num,
    state: usize,
    memory: usize,
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    mean: Num,
    half_width: Num,
    runs: usize,
    truncated: usize,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct ViolationReport {
    coalition: usize,
    state: usize,
    memory: usize,
    gain: Num,
}

fn direction_name(d: OptDirection) -> &'static str {
    match d {
        OptDirection::Max => "max",
        OptDirection::Min => "min",
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<i32, CliError> {
    if args.runs == 0 {
        return Err(CliError::input("--runs must be at least 1"));
    }
    if !(args.tolerance >= 0.0) {
        return Err(CliError::input("--tolerance must be nonnegative"));
    }
    let bindings = args.model.constants.iter().map(|c| parse_binding(c)).collect::<Result<Vec<_>, _>>()?;
    let game = load_model(&args.model.model, &bindings)?;
    let formulas = load_properties(&args.properties)?;
    let formula = args
        .select
        .checked_sub(1)
        .and_then(|i| formulas.get(i))
        .ok_or_else(|| CliError::input(format!("--select {} is out of range for {} properties", args.select, formulas.len())))?;
    let options = args.solver.options();
    let goals = goals_for(&game, formula, &options)?;
    let text = read_file(&args.import_strategy)?;
    let strategy = import_strategy(&text, &game)
        .map_err(|e| CliError::input(format!("{}: {}", args.import_strategy.display(), CliError::from(e).message)))?;
    if strategy.coalitions.len() != goals.len() {
        return Err(CliError::input(format!(
            "the strategy has {} coalitions but the property has {} goals",
            strategy.coalitions.len(),
            goals.len()
        )));
    }
    let workers = pool(args.threads)?;
    let report = evaluate_parallel(&workers, &game, &strategy, &goals, args.runs, args.seed, args.max_steps, args.tolerance)?;
    let br = &report.best_response;
    let goal_reports: Vec<GoalReport> = goals
        .iter()
        .zip(&report.goals)
        .enumerate()
        .map(|(i, (goal, e))| GoalReport {
            coalition: strategy.coalitions[i].iter().map(|&p| game.player_names()[p].clone()).collect(),
            direction: direction_name(goal.direction),
            exact: Num(e.exact),
            estimate: e.estimate.as_ref().map(|s| EstimateReport {
                mean: Num(s.mean),
                half_width: Num(s.half_width),
                runs: s.runs,
                truncated: s.truncated,
                seed: s.seed,
            }),
            gain: Num(br.gains[i]),
            state: br.locations[i].0,
            memory: br.locations[i].1,
        })
        .collect();
    let violation = match br.verdict {
        Verdict::Certified => None,
        Verdict::Violated { coalition, state, memory, gain } => Some(ViolationReport { coalition: coalition + 1, state, memory, gain: Num(gain) }),
    };
    let out = EvalReport {
        property: formula.to_string(),
        strategy: args.import_strategy.display().to_string(),
        chain_states: report.chain_states,
        goals: goal_reports,
        tolerance: args.tolerance,
        certified: br.is_certified(),
        violation,
    };
    let text = match args.output.format.unwrap_or(Format::Text) {
        Format::Text => eval_text(&out),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out).map_err(|e| CliError::input(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => return Err(CliError::input("eval reports are text or json")),
    };
    emit(&args.output.output, &text)?;
    Ok(if out.certified { EXIT_OK } else { EXIT_FALSE })
}

/// The verdict line of an evaluation.
pub fn verdict_text(certified: bool, tolerance: f64) -> String {
    if certified {
        format!("ε-equilibrium (ε ≤ {tolerance:e})")
    } else {
        format!("violated (gain above ε = {tolerance:e})")
    }
}

fn eval_text(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Property: {}", r.property);
    let _ = writeln!(out, "Strategy: {} ({} product states)", r.strategy, r.chain_states);
    for (i, g) in r.goals.iter().enumerate() {
        let _ = writeln!(out, "\nCoalition {} ({}, {})", i + 1, g.coalition.join(","), g.direction);
        let _ = writeln!(out, "  exact value: {}", fmt_num(g.exact.0));
        if let Some(e) = &g.estimate {
            let _ = writeln!(
                out,
                "  simulated: {} ± {} ({} runs, {} truncated, seed {})",
                fmt_num(e.mean.0),
                fmt_num(e.half_width.0),
                e.runs,
                e.truncated,
                e.seed
            );
        }
        let _ = writeln!(out, "  best-response gain: {} at state {}, memory {}", fmt_num(g.gain.0), g.state, g.memory);
    }
    let _ = writeln!(out, "\nVerdict: {}", verdict_text(r.certified, r.tolerance));
    if let Some(v) = &r.violation {
        let _ = writeln!(out, "  coalition {} gains {} at state {}, memory {}", v.coalition, fmt_num(v.gain.0), v.state, v.memory);
    }
    out
}

fn cmd_export(args: &ExportArgs) -> Result<i32, CliError> {
    let bindings = args.model.constants.iter().map(|c| parse_binding(c)).collect::<Result<Vec<_>, _>>()?;
    let game = load_model(&args.model.model, &bindings)?;
    emit(&args.output, &export_game(&game))?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct NfgReport {
    game: String,
    query: String,
    values: Vec<Num>,
    epsilon: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<Vec<Vec<Num>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    joint: Option<Vec<JointReport>>,
}

#[derive(Debug, Serialize)]
struct JointReport {
    actions: Vec<String>,
    prob: Num,
}

fn cmd_nfg(args: &NfgArgs) -> Result<i32, CliError> {
    let text = read_file(&args.game)?;
    let game = parse_nfg_table(&text).map_err(|e| CliError { code: exit_code(&e), message: format!("{}: {e}", args.game.display()) })?;
    let query = EquilibriumQuery {
        kind: match args.kind {
            KindArg::Ne => EquilibriumKind::Nash,
            KindArg::Ce => EquilibriumKind::Correlated,
        },
        criterion: match args.criterion {
            CriterionArg::Sw => Criterion::SocialWelfare,
            CriterionArg::Sf => Criterion::SocialFairness,
        },
        direction: match args.direction {
            DirectionArg::Max => OptDirection::Max,
            DirectionArg::Min => OptDirection::Min,
        },
    };
    let result = solve_query(&game, query)?;
    let query_name = format!(
        "({},{}){}",
        if args.kind == KindArg::Ne { "NE" } else { "CE" },
        if args.criterion == CriterionArg::Sw { "SW" } else { "SF" },
        direction_name(query.direction)
    );
    let (profile, joint) = match &result.witness {
        Witness::Profile(p) => (Some(p.strategies().iter().map(|s| s.probs().iter().copied().map(Num).collect()).collect()), None),
        Witness::Joint(j) => {
            let entries = j
                .probs()
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(i, &p)| JointReport {
                    actions: game.joint(i).iter().enumerate().map(|(pl, &a)| game.action_names(pl)[a].clone()).collect(),
                    prob: Num(p),
                })
                .collect();
            (None, Some(entries))
        }
    };
    let report = NfgReport {
        game: args.game.display().to_string(),
        query: query_name,
        values: result.values.iter().copied().map(Num).collect(),
        epsilon: Num(result.epsilon),
        profile,
        joint,
    };
    let text = match args.output.format.unwrap_or(Format::Text) {
        Format::Text => nfg_text(&report, &game),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| CliError::input(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => return Err(CliError::input("nfg reports are text or json")),
    };
    emit(&args.output.output, &text)?;
    Ok(EXIT_OK)
}

fn nfg_text(r: &NfgReport, game: &csgcheck_core::NormalFormGame) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Game: {} ({} players)", r.game, game.num_players());
    let _ = writeln!(out, "Query: {}", r.query);
    let vs: Vec<String> = r.values.iter().map(|v| fmt_num(v.0)).collect();
    let _ = writeln!(out, "Values: ({})", vs.join(", "));
    if let Some(profile) = &r.profile {
        for (p, row) in profile.iter().enumerate() {
            let cells: Vec<String> = row.iter().zip(game.action_names(p)).map(|(x, a)| format!("{a}: {}", fmt_num(x.0))).collect();
            let _ = writeln!(out, "  player {}: {}", p + 1, cells.join(", "));
        }
    }
    if let Some(joint) = &r.joint {
        for j in joint {
            let _ = writeln!(out, "  ({}): {}", j.actions.join(","), fmt_num(j.prob.0));
        }
    }
    let _ = writeln!(out, "Largest deviation gain: {}", fmt_num(r.epsilon.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bindings_pick_the_narrowest_type() {
        assert_eq!(parse_binding("D=10").unwrap(), ("D".into(), Value::Int(10)));
        assert_eq!(parse_binding("q = 0.9").unwrap(), ("q".into(), Value::Real(0.9)));
        assert_eq!(parse_binding("b=true").unwrap(), ("b".into(), Value::Bool(true)));
        assert_eq!(parse_binding("nope").unwrap_err().code, EXIT_INPUT);
        assert!(parse_binding("x=inf").is_err());
    }

    #[test]
    fn sweep_grids() {
        let s = parse_sweep("D=0:10:1").unwrap();
        assert_eq!(s.values.len(), 11);
        assert_eq!(s.values[10], Value::Int(10));
        assert!(parse_sweep("D=5:0:1").unwrap().values.is_empty());
        let q = parse_sweep("q=0.5:0.9:0.4").unwrap();
        assert_eq!(q.values, vec![Value::Real(0.5), Value::Real(0.9)]);
        assert!(parse_sweep("q=0:1:0").is_err());
        assert!(parse_sweep("q=0:1").is_err());
        assert!(parse_sweep("q=0:inf:1").is_err());
    }

    #[test]
    fn exit_codes_follow_error_kinds() {
        assert_eq!(exit_code(&Error::Unsupported("x".into())), EXIT_INPUT);
        assert_eq!(exit_code(&Error::NonConvergence { iterations: 1, residual: 1.0 }), EXIT_SOLVER);
        assert_eq!(exit_code(&Error::Solver("x".into())), EXIT_SOLVER);
    }

    #[test]
    fn non_finite_numbers_become_strings() {
        let s = serde_json::to_string(&[Num(f64::INFINITY), Num(0.5)]).unwrap();
        assert_eq!(s, r#"["inf",0.5]"#);
    }

    #[test]
    fn numbered_paths() {
        assert_eq!(numbered(Path::new("out/s.json"), 2), PathBuf::from("out/s.2.json"));
        assert_eq!(numbered(Path::new("s"), 1), PathBuf::from("s.1"));
    }

    #[test]
    fn verdict_wording() {
        assert_eq!(verdict_text(true, 1e-4), "ε-equilibrium (ε ≤ 1e-4)");
    }
}
