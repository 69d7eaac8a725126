//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use resplan_core::exact::{greedy_from_values, solve_exact_lp, value_iteration, ExactError, ValueTable};
use resplan_core::factored_lp::{
    build_alp, column_names, solve_alp, AlpConfig, AlpError, AlpSolution, ConstraintMethod, OrderHeuristic, TieBreak,
};
use resplan_core::fmdp::{ActionVector, FactoredModel, SystemState};
use resplan_core::generate::demo_scenario;
use resplan_core::lp::{DenseSimplex, LpBackend};
use resplan_core::network::Layer;
use resplan_core::policy::{centralized_action, threshold_classify, PolicyError, PolicyKind};
use resplan_core::scenario::{AlphaSpec, Scenario, ScenarioError};
use resplan_core::sim::{
    compare_policies, estimate_value, resilience_series, RepRng, ResilienceSeries, SimConfig, SimError, RNG_ALGORITHM,
};
use resplan_core::{Policy, Weights};

use crate::clarabel_backend::Clarabel;
use crate::lp_format::write_lp;
use crate::minilp_backend::MiniLp;
use crate::scenario_file::{load_scenario, scenario_hash, to_json, LoadError};

/// Compiled programs up to this many rows go to the dense simplex under `--backend auto`.
pub const AUTO_DENSE_ROWS: usize = 500;

#[derive(Debug, Parser)]
#[command(
    name = "resplan",
    version,
    about = "Repair planning for interdependent infrastructure networks with factored MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the approximate LP and print the basis weights.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the action a policy takes in one state.
    Act {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Node states as a string of 0/1, node 0 first.
        #[arg(long)]
        state: String,
        #[arg(long, default_value = "optimal")]
        policy: String,
        /// Limit the optimal policy to this many actions per step.
        #[arg(long)]
        budget: Option<usize>,
        /// Compare against exhaustive search over joint actions.
        #[arg(long)]
        check_centralized: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Classify each node's optimal repair behaviour.
    Thresholds {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Simulate one policy and print the resilience series.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, default_value = "optimal")]
        policy: String,
    },
    /// Compare the optimal policy with the three baselines.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Generate a two-layer network and simulate no action against the optimal policy.
    Demo {
        /// Number of nodes.
        #[arg(long, default_value_t = 100)]
        scale: usize,
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write a scenario as JSON.
    ExportScenario {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact optimal values for small models.
    Exact {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, value_enum, default_value_t = ExactMethod::Vi)]
        method: ExactMethod,
        /// Value-iteration tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Debug, Clone, Args)]
struct ScenarioArgs {
    /// Scenario file, `builtin:case-study` or `builtin:demo[:<scale>[:<seed>]]`.
    #[arg(long, default_value = "builtin:case-study")]
    scenario: String,
    #[arg(long)]
    gamma: Option<f64>,
    /// State-relevance weights of the approximate LP.
    #[arg(long, value_enum)]
    alpha: Option<AlphaArg>,
}

#[derive(Debug, Clone, Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = OrderArg::MinDegree)]
    order: OrderArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Eliminate)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
    backend: BackendArg,
    /// Pick the lexicographically smallest optimal weights when the LP has
    /// several optima (one extra solve per weight).
    #[arg(long)]
    lexicographic: bool,
    /// Write the compiled LP in CPLEX LP format.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct SimArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, default_value_t = 200)]
    horizon: usize,
    /// Steps a repaired or maintained node cannot fail (3 for `demo`, else 0).
    #[arg(long)]
    immunity: Option<usize>,
    /// Limit the optimal policy to this many actions per step.
    #[arg(long)]
    budget: Option<usize>,
    /// Initial state as 0/1 string; all working by default.
    #[arg(long)]
    start: Option<String>,
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlphaArg {
    Uniform,
    AllOnes,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrderArg {
    MinDegree,
    MinFill,
    Natural,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Eliminate,
    Enumerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Auto,
    Dense,
    Minilp,
    Clarabel,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExactMethod {
    Vi,
    Lp,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Alp(#[from] AlpError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("{0}")]
    Check(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn pretty(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.4}"),
            Cell::Empty => "-".into(),
            other => other.csv(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Num(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Debug, Clone, Default)]
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, out: &mut String) {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::pretty).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([self.columns[j].len()]).max().unwrap_or(0))
            .collect();
        let line = |out: &mut String, items: Vec<&str>| {
            let text: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            let _ = writeln!(out, "{}", text.join("  ").trim_end());
        };
        line(out, self.columns.clone());
        for r in &cells {
            line(out, r.iter().map(String::as_str).collect());
        }
    }

    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> =
                        self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Everything a command prints: the configuration echo, headline numbers
/// and one main table, plus optional extra tables.
#[derive(Debug, Default)]
struct Report {
    echo: Vec<(&'static str, Value)>,
    summary: Vec<(&'static str, Value)>,
    table: Table,
    extra: Vec<(&'static str, Table)>,
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Report {
    fn echo(&mut self, key: &'static str, value: impl Into<Value>) {
        self.echo.push((key, value.into()));
    }

    fn summary(&mut self, key: &'static str, value: impl Into<Value>) {
        self.summary.push((key, value.into()));
    }

    fn echo_lines(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.echo {
            let _ = writeln!(s, "# {k}={}", plain(v));
        }
        s
    }

    fn render_table(&self) -> String {
        let mut s = self.echo_lines();
        if !self.summary.is_empty() {
            s.push('\n');
            let width = self.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in &self.summary {
                let text = match v {
                    Value::Number(n) if n.is_f64() => format!("{:.6}", n.as_f64().unwrap()),
                    other => plain(other),
                };
                let _ = writeln!(s, "{k:<width$}  {text}");
            }
        }
        s.push('\n');
        self.table.render(&mut s);
        for (name, t) in &self.extra {
            let _ = writeln!(s, "\n[{name}]");
            t.render(&mut s);
        }
        s
    }

    fn render_json(&self) -> String {
        let config: Map<String, Value> = self.echo.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let mut doc = Map::new();
        doc.insert("config".into(), Value::Object(config));
        doc.insert("summary".into(), Value::Object(summary));
        doc.insert("rows".into(), self.table.to_json());
        for (name, t) in &self.extra {
            doc.insert(name.to_string(), t.to_json());
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("reports serialize");
        s.push('\n');
        s
    }
}

fn write_target(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
    }
}

fn emit(report: &Report, out: &OutputArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let text = match out.format {
        Format::Table => report.render_table(),
        Format::Json => report.render_json(),
        Format::Csv => {
            // keep the CSV itself a single clean table
            let _ = stderr.write_all(report.echo_lines().as_bytes());
            report.table.to_csv()
        }
    };
    write_target(out.output.as_deref(), &text, stdout)
}

fn load(args: &ScenarioArgs) -> Result<Scenario, CliError> {
    let mut sc = load_scenario(&args.scenario)?;
    if let Some(g) = args.gamma {
        sc.gamma = g;
    }
    if let Some(a) = args.alpha {
        sc.alpha = match a {
            AlphaArg::Uniform => AlphaSpec::Uniform,
            AlphaArg::AllOnes => AlphaSpec::AllOnes,
        };
    }
    sc.validate()?;
    Ok(sc)
}

fn echo_scenario(report: &mut Report, source: &str, sc: &Scenario) {
    report.echo("version", env!("CARGO_PKG_VERSION"));
    report.echo("scenario", source);
    report.echo("scenario_sha256", scenario_hash(sc));
    report.echo("nodes", sc.n());
    report.echo("gamma", sc.gamma);
    report.echo("p0", sc.p0);
    report.echo("pc", sc.pc);
    report.echo("alpha", sc.alpha.as_str());
}

fn parse_state(text: &str, n: usize, flag: &str) -> Result<SystemState, CliError> {
    if text.len() != n {
        return Err(CliError::Usage(format!("--{flag} needs {n} characters of 0/1, got {}", text.len())));
    }
    let bits = text
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(CliError::Usage(format!("--{flag} may only contain 0 and 1, found {other:?}"))),
        })
        .collect::<Result<Vec<bool>, _>>()?;
    Ok(SystemState::from_bits(bits))
}

fn bits(x: &[bool]) -> String {
    x.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_policy(text: &str, budget: Option<usize>) -> Result<PolicyKind, CliError> {
    let kind: PolicyKind = text.parse().map_err(|e: PolicyError| CliError::Usage(e.to_string()))?;
    Ok(match (kind, budget) {
        (PolicyKind::OptimalDistributed, Some(b)) => PolicyKind::Budgeted(b),
        (k, _) => k,
    })
}

fn alp_config(sc: &Scenario, solver: &SolverArgs) -> AlpConfig {
    AlpConfig {
        alpha: sc.alpha,
        order: match solver.order {
            OrderArg::MinDegree => OrderHeuristic::MinDegree,
            OrderArg::MinFill => OrderHeuristic::MinFill,
            OrderArg::Natural => OrderHeuristic::Natural,
        },
        method: match solver.method {
            MethodArg::Eliminate => ConstraintMethod::Eliminate,
            MethodArg::Enumerate => ConstraintMethod::Enumerate,
        },
        tie_break: if solver.lexicographic { TieBreak::Lexicographic } else { TieBreak::Backend },
        ..AlpConfig::default()
    }
}

fn order_name(o: OrderArg) -> &'static str {
    match o {
        OrderArg::MinDegree => "min-degree",
        OrderArg::MinFill => "min-fill",
        OrderArg::Natural => "natural",
    }
}

/// Compiles, optionally dumps and solves the approximate LP.
fn solve(
    sc: &Scenario,
    model: &FactoredModel,
    solver: &SolverArgs,
    report: &mut Report,
) -> Result<AlpSolution, CliError> {
    let cfg = alp_config(sc, solver);
    let (set, lp) = build_alp(model, &cfg)?;
    if let Some(path) = &solver.dump_lp {
        let names = column_names(&set, model.n(), cfg.constant_basis);
        let comment = format!(
            "approximate LP, scenario sha256 {}\n{} constraints, {} variables",
            scenario_hash(sc),
            lp.rows.len(),
            lp.num_vars()
        );
        fs::write(path, write_lp(&lp, &names, &comment))
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    }
    let dense = DenseSimplex::default();
    let backend: &dyn LpBackend = match solver.backend {
        BackendArg::Dense => &dense,
        BackendArg::Minilp => &MiniLp,
        BackendArg::Clarabel => &Clarabel::default(),
        BackendArg::Auto if lp.rows.len() <= AUTO_DENSE_ROWS => &dense,
        BackendArg::Auto => &Clarabel::default(),
    };
    report.echo("order", order_name(solver.order));
    report.echo("backend", backend.name());
    if solver.lexicographic {
        report.echo("tie_break", "lexicographic");
    }
    Ok(solve_alp(model, &cfg, backend)?)
}

fn alp_summary(report: &mut Report, sol: &AlpSolution) {
    report.summary("alp_objective", sol.objective);
    report.summary("constant_weight", sol.bias);
    report.summary("constraints", sol.num_constraints);
    report.summary("variables", sol.num_variables);
    report.summary("induced_width", sol.induced_width);
}

fn sim_config(sim: &SimArgs, default_immunity: usize) -> SimConfig {
    SimConfig {
        horizon: sim.horizon,
        reps: sim.reps,
        seed: sim.seed,
        immunity: sim.immunity.unwrap_or(default_immunity),
    }
}

fn echo_sim(report: &mut Report, cfg: &SimConfig) {
    report.echo("seed", cfg.seed);
    report.echo("reps", cfg.reps);
    report.echo("horizon", cfg.horizon);
    report.echo("immunity", cfg.immunity);
    report.echo("rng", RNG_ALGORITHM);
}

fn start_state(sim: &SimArgs, n: usize) -> Result<SystemState, CliError> {
    match &sim.start {
        Some(s) => parse_state(s, n, "start"),
        None => Ok(SystemState::all(n, true)),
    }
}

fn series_table(series: &ResilienceSeries) -> Table {
    let mut t = Table::new(&["step", "mean_working", "var_working", "mean_reward", "mean_connectivity"]);
    for p in &series.points {
        t.push(vec![
            p.step.into(),
            p.mean_working.into(),
            p.var_working.into(),
            p.mean_reward.into(),
            p.mean_connectivity.into(),
        ]);
    }
    t
}

fn layer_table(series: &ResilienceSeries) -> Table {
    let mut t = Table::new(&["layer", "size", "step", "mean_working", "var_working"]);
    for l in &series.layers {
        for p in &l.points {
            t.push(vec![
                l.layer.as_str().into(),
                l.size.into(),
                p.step.into(),
                p.mean_working.into(),
                p.var_working.into(),
            ]);
        }
    }
    t
}

fn cmd_solve(scenario: &ScenarioArgs, solver: &SolverArgs) -> Result<Report, CliError> {
    let sc = load(scenario)?;
    let model = sc.model()?;
    let mut report = Report::default();
    report.echo("command", "solve");
    echo_scenario(&mut report, &scenario.scenario, &sc);
    let sol = solve(&sc, &model, solver, &mut report)?;
    alp_summary(&mut report, &sol);
    report.summary("value_all_working", sol.value(&SystemState::all(model.n(), true)));
    report.summary("value_all_failed", sol.value(&SystemState::all(model.n(), false)));
    let mut t = Table::new(&["node", "name", "layer", "weight"]);
    for (i, node) in model.network().nodes().iter().enumerate() {
        t.push(vec![i.into(), node.name.as_str().into(), node.layer.as_str().into(), sol.weights.0[i].into()]);
    }
    report.table = t;
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn cmd_act(
    scenario: &ScenarioArgs,
    solver: &SolverArgs,
    state: &str,
    policy: &str,
    budget: Option<usize>,
    check_centralized: bool,
    seed: u64,
) -> Result<Report, CliError> {
    let sc = load(scenario)?;
    let model = sc.model()?;
    let x = parse_state(state, model.n(), "state")?;
    let kind = parse_policy(policy, budget)?;
    let mut report = Report::default();
    report.echo("command", "act");
    echo_scenario(&mut report, &scenario.scenario, &sc);
    report.echo("policy", kind.to_string());
    report.echo("seed", seed);
    report.echo("state", state);
    let weights: Option<Weights> = if kind.needs_weights() || check_centralized {
        Some(solve(&sc, &model, solver, &mut report)?.weights)
    } else {
        None
    };
    let policy_weights = if kind.needs_weights() { weights.clone() } else { None };
    let pol = Policy::new(kind, policy_weights)?;
    let mut rng = RepRng::new(seed, 0).policy;
    let a = pol.act(&model, &x, &mut rng)?;
    report.summary("actions", a.count_ones());
    if let Some(w) = &weights {
        let q = model.q_value(&w.0, &x, &a);
        report.summary("q_value", q);
        if check_centralized {
            let c = centralized_action(&model, w, &x)?;
            let qc = model.q_value(&w.0, &x, &c);
            report.summary("q_centralized", qc);
            report.summary("centralized_action", bits(c.bits()));
            let agree = q == qc;
            report.summary("q_equal", agree);
            if !agree {
                return Err(CliError::Check(format!(
                    "distributed Q-value {q} differs from centralized {qc} at state {state}"
                )));
            }
        }
    }
    let mut t = Table::new(&["node", "name", "state", "action"]);
    for (i, node) in model.network().nodes().iter().enumerate() {
        t.push(vec![i.into(), node.name.as_str().into(), Cell::Int(x.get(i) as i64), Cell::Int(a.get(i) as i64)]);
    }
    report.table = t;
    Ok(report)
}

fn cmd_thresholds(scenario: &ScenarioArgs, solver: &SolverArgs) -> Result<Report, CliError> {
    let sc = load(scenario)?;
    let model = sc.model()?;
    let mut report = Report::default();
    report.echo("command", "thresholds");
    echo_scenario(&mut report, &scenario.scenario, &sc);
    let sol = solve(&sc, &model, solver, &mut report)?;
    alp_summary(&mut report, &sol);
    let mut t = Table::new(&[
        "node",
        "name",
        "weight",
        "cost_gap",
        "faulty_threshold",
        "healthy_threshold",
        "degraded_threshold",
        "regime",
    ]);
    for (i, node) in model.network().nodes().iter().enumerate() {
        let r = threshold_classify(&model, &sol.weights, i)?;
        t.push(vec![
            i.into(),
            node.name.as_str().into(),
            sol.weights.0[i].into(),
            r.cost_gap.into(),
            r.faulty_threshold.into(),
            r.healthy_threshold.into(),
            r.degraded_threshold.into(),
            r.regime.as_str().into(),
        ]);
    }
    report.table = t;
    Ok(report)
}

fn cmd_simulate(scenario: &ScenarioArgs, solver: &SolverArgs, sim: &SimArgs, policy: &str) -> Result<Report, CliError> {
    let sc = load(scenario)?;
    let model = sc.model()?;
    let kind = parse_policy(policy, sim.budget)?;
    let x0 = start_state(sim, model.n())?;
    let cfg = sim_config(sim, 0);
    let mut report = Report::default();
    report.echo("command", "simulate");
    echo_scenario(&mut report, &scenario.scenario, &sc);
    report.echo("policy", kind.to_string());
    report.echo("start", bits(x0.bits()));
    echo_sim(&mut report, &cfg);
    let weights = if kind.needs_weights() { Some(solve(&sc, &model, solver, &mut report)?.weights) } else { None };
    let pol = Policy::new(kind, weights)?;
    let est = estimate_value(&model, &pol, &x0, &cfg)?;
    let series = resilience_series(&model, &pol, &x0, &cfg)?;
    report.summary("value_mean", est.mean);
    report.summary("value_stderr", est.stderr);
    report.summary("truncation_budget", est.truncation_budget);
    report.table = series_table(&series);
    report.extra.push(("layers", layer_table(&series)));
    Ok(report)
}

fn cmd_compare(scenario: &ScenarioArgs, solver: &SolverArgs, sim: &SimArgs) -> Result<Report, CliError> {
    let sc = load(scenario)?;
    let model = sc.model()?;
    let x0 = start_state(sim, model.n())?;
    let cfg = sim_config(sim, 0);
    let mut report = Report::default();
    report.echo("command", "compare");
    echo_scenario(&mut report, &scenario.scenario, &sc);
    report.echo("start", bits(x0.bits()));
    echo_sim(&mut report, &cfg);
    let sol = solve(&sc, &model, solver, &mut report)?;
    let optimal = match sim.budget {
        Some(b) => PolicyKind::Budgeted(b),
        None => PolicyKind::OptimalDistributed,
    };
    let policies = vec![
        Policy::new(optimal, Some(sol.weights.clone()))?,
        Policy::baseline(PolicyKind::RepairFaulty),
        Policy::baseline(PolicyKind::RANDOMIZED_DEFAULT),
        Policy::baseline(PolicyKind::NoAction),
    ];
    let cmp = compare_policies(&model, &policies, &x0, &cfg)?;
    let alp_value = sol.value(&x0);
    let best = cmp.estimates[0].mean;
    alp_summary(&mut report, &sol);
    report.summary("alp_value_at_start", alp_value);
    report.summary("alp_gap_percent", 100.0 * (alp_value - best) / best.abs());
    let mut t = Table::new(&["policy", "mean", "stderr", "gap_to_next", "gap_stderr", "gap_significant"]);
    for (k, (p, e)) in policies.iter().zip(&cmp.estimates).enumerate() {
        let (gap, se, sig) = if k + 1 < policies.len() {
            let g = cmp.paired_mean(k, k + 1);
            let s = cmp.paired_stderr(k, k + 1);
            (Cell::Num(g), Cell::Num(s), Cell::Bool(g > 2.0 * s))
        } else {
            (Cell::Empty, Cell::Empty, Cell::Empty)
        };
        t.push(vec![p.kind.to_string().into(), e.mean.into(), e.stderr.into(), gap, se, sig]);
    }
    report.table = t;
    Ok(report)
}

fn cmd_demo(scale: usize, gamma: Option<f64>, solver: &SolverArgs, sim: &SimArgs) -> Result<Report, CliError> {
    let mut sc = demo_scenario(sim.seed, scale)?;
    if let Some(g) = gamma {
        sc.gamma = g;
        sc.validate()?;
    }
    let model = sc.model()?;
    let x0 = start_state(sim, model.n())?;
    let cfg = sim_config(sim, 3);
    let mut report = Report::default();
    report.echo("command", "demo");
    echo_scenario(&mut report, &format!("builtin:demo:{scale}:{}", sim.seed), &sc);
    report.echo("start", bits(x0.bits()));
    echo_sim(&mut report, &cfg);
    let sol = solve(&sc, &model, solver, &mut report)?;
    alp_summary(&mut report, &sol);
    let optimal = match sim.budget {
        Some(b) => PolicyKind::Budgeted(b),
        None => PolicyKind::OptimalDistributed,
    };
    let runs = [Policy::baseline(PolicyKind::NoAction), Policy::new(optimal, Some(sol.weights))?];
    let mut t = Table::new(&[
        "policy",
        "step",
        "mean_working",
        "var_working",
        "mean_reward",
        "mean_connectivity",
        "power_working",
        "subway_working",
    ]);
    for pol in &runs {
        let series = resilience_series(&model, pol, &x0, &cfg)?;
        let layer = |l: Layer, k: usize| series.layer(l).map_or(Cell::Empty, |s| s.points[k].mean_working.into());
        for (k, p) in series.points.iter().enumerate() {
            t.push(vec![
                pol.kind.to_string().into(),
                p.step.into(),
                p.mean_working.into(),
                p.var_working.into(),
                p.mean_reward.into(),
                p.mean_connectivity.into(),
                layer(Layer::Power, k),
                layer(Layer::Subway, k),
            ]);
        }
        let last = series.points.last().expect("series has T+1 points");
        let key = if pol.kind == PolicyKind::NoAction { "final_working_no_action" } else { "final_working_optimal" };
        report.summary(key, last.mean_working);
    }
    report.table = t;
    Ok(report)
}

fn cmd_export(scenario: &ScenarioArgs, output: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let sc = load(scenario)?;
    let description = if scenario.scenario == "builtin:case-study" {
        load_scenario_description()
    } else {
        Some(format!("exported from {}", scenario.scenario))
    };
    write_target(output, &to_json(&sc, description), stdout)
}

fn load_scenario_description() -> Option<String> {
    let doc: Value = serde_json::from_str(crate::scenario_file::CASE_STUDY_JSON).ok()?;
    doc.get("description")?.as_str().map(str::to_string)
}

fn cmd_exact(scenario: &ScenarioArgs, method: ExactMethod, tol: f64) -> Result<Report, CliError> {
    let sc = load(scenario)?;
    let model = sc.model()?;
    let mut report = Report::default();
    report.echo("command", "exact");
    echo_scenario(&mut report, &scenario.scenario, &sc);
    let values: ValueTable = match method {
        ExactMethod::Vi => {
            report.echo("method", "value-iteration");
            report.echo("tol", tol);
            value_iteration(&model, tol)?
        }
        ExactMethod::Lp => {
            report.echo("method", "exact-lp");
            solve_exact_lp(&model, sc.alpha, &DenseSimplex::default())?
        }
    };
    let mut t = Table::new(&["state", "value", "greedy_action"]);
    for (x, v) in values.iter() {
        let a: ActionVector = greedy_from_values(&model, &values, &x)?;
        t.push(vec![bits(x.bits()).into(), v.into(), bits(a.bits()).into()]);
    }
    report.table = t;
    Ok(report)
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                return 2;
            }
            let _ = stdout.write_all(text.as_bytes());
            return 0;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let (report, output) = match command {
        Command::Solve { scenario, solver, output } => (cmd_solve(&scenario, &solver)?, output),
        Command::Act { scenario, solver, output, state, policy, budget, check_centralized, seed } => {
            (cmd_act(&scenario, &solver, &state, &policy, budget, check_centralized, seed)?, output)
        }
        Command::Thresholds { scenario, solver, output } => (cmd_thresholds(&scenario, &solver)?, output),
        Command::Simulate { scenario, solver, sim, output, policy } => {
            (cmd_simulate(&scenario, &solver, &sim, &policy)?, output)
        }
        Command::Compare { scenario, solver, sim, output } => (cmd_compare(&scenario, &solver, &sim)?, output),
        Command::Demo { scale, gamma, solver, sim, output } => (cmd_demo(scale, gamma, &solver, &sim)?, output),
        Command::ExportScenario { scenario, output } => return cmd_export(&scenario, output.as_deref(), stdout),
        Command::Exact { scenario, output, method, tol } => (cmd_exact(&scenario, method, tol)?, output),
    };
    emit(&report, &output, stdout, stderr)
}

pub fn main() -> ExitCode {
    let code = run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code)
}
