//! Argument parsing and the four subcommands.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use scorebounds_core::bounds::{bound_interval, bound_rows, screened_rows, BoundInterval, BoundsSpec};
use scorebounds_core::classify::{classify_abstain, classify_random, Action};
use scorebounds_core::confidence::{region, Inference, Variant};
use scorebounds_core::data::{group, Design};
use scorebounds_core::dgp::{open_uniform, rep_rng, Clustering, DgpSpec};
use scorebounds_core::experiment::{BoundsConfig, ClassConfig};
use scorebounds_core::lp::Status;

use crate::error::{CliError, CliResult};
use crate::ingest::{ingest_csv, read_queries, Ingested, Schema};
use crate::report::{render_csv, render_table, Metadata, SimulationReport};
use crate::runner::{run_bounds, run_classification, thread_pool};

#[derive(Debug, Parser)]
#[command(
    name = "scorebounds",
    version,
    about = "Interval bounds and abstaining classifiers for the maximum score model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound a linear functional of the coefficients.
    Bounds(BoundsArgs),
    /// Classify query rows with the abstaining or randomized rule.
    Classify(ClassifyArgs),
    /// Run a Monte Carlo experiment.
    Simulate(SimulateArgs),
    /// Render a stored simulation report.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InferenceArg {
    None,
    Finite,
    Asymptotic,
}

impl From<InferenceArg> for Inference {
    fn from(a: InferenceArg) -> Self {
        match a {
            InferenceArg::None => Inference::None,
            InferenceArg::Finite => Inference::Finite,
            InferenceArg::Asymptotic => Inference::Asymptotic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignArg {
    Fixed,
    Random,
}

impl From<DesignArg> for Design {
    fn from(a: DesignArg) -> Self {
        match a {
            DesignArg::Fixed => Design::Fixed,
            DesignArg::Random => Design::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Json,
    Csv,
}

/// Data and estimation flags shared by `bounds` and `classify`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimationArgs {
    /// Observation CSV with an outcome column `y`.
    #[arg(long)]
    pub data: PathBuf,
    /// Covariate columns (default: every non-reserved column).
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Do not append the constant column `const`.
    #[arg(long)]
    pub no_intercept: bool,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = DesignArg::Fixed)]
    pub design: DesignArg,
    #[arg(long, value_enum, default_value_t = InferenceArg::Finite)]
    pub inference: InferenceArg,
    /// Cluster-robust regions; needs a `cluster` column.
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    pub cluster: Switch,
    /// Coefficient pinned to +1 (default: the first interval covariate if
    /// any, else the first covariate).
    #[arg(long)]
    pub normalize: Option<String>,
    /// Box for every free coefficient.
    #[arg(long = "box", num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub bbox: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub est: EstimationArgs,
    /// Coefficient name, or comma-separated weights over all coefficients.
    #[arg(long, allow_hyphen_values = true)]
    pub target: String,
    /// Write the JSON result here as well as to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleArg {
    Abstain,
    Random,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub est: EstimationArgs,
    /// Query CSV with the training covariate columns.
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_enum, default_value_t = RuleArg::Abstain)]
    pub rule: RuleArg,
    /// Seed of the shared randomization bits.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Scenario {
    #[value(name = "appendixB", alias = "appendixb")]
    #[serde(rename = "appendixB")]
    BinnedNormal,
    #[value(name = "kls")]
    #[serde(rename = "kls")]
    Kls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentArg {
    Bounds,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseArg {
    Homoskedastic,
    Heteroskedastic,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    /// Default: bounds for the binned-normal scenario, classification for kls.
    #[arg(long, value_enum)]
    pub experiment: Option<ExperimentArg>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = InferenceArg::Finite)]
    pub inference: InferenceArg,
    #[arg(long, value_enum, default_value_t = DesignArg::Fixed)]
    pub design: DesignArg,
    /// Clusters of five consecutive rows with correlated noise.
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    pub cluster: Switch,
    #[arg(long, value_enum, default_value_t = NoiseArg::Homoskedastic)]
    pub noise: NoiseArg,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write the JSON report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

fn log_config<T: Serialize>(command: &str, args: &T) {
    let cfg = serde_json::to_string(args).unwrap_or_default();
    eprintln!("scorebounds {command}: {cfg}");
}

fn open(path: &PathBuf, flag: &str) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::validation(format!("{flag} {}: {e}", path.display())))
}

fn write_json<T: Serialize>(value: &T, output: Option<&PathBuf>) -> CliResult<String> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    if let Some(path) = output {
        std::fs::write(path, &text).map_err(|e| CliError::validation(format!("--output {}: {e}", path.display())))?;
    }
    Ok(text)
}

struct Prepared {
    ingested: Ingested,
    variant: Variant,
    spec: BoundsSpec,
    names: Vec<String>,
}

fn prepare(est: &EstimationArgs) -> CliResult<Prepared> {
    if !(est.tau > 0.0 && est.tau < 1.0) {
        return Err(CliError::validation(format!("--tau {} must lie in (0, 1)", est.tau)));
    }
    if !(est.alpha > 0.0 && est.alpha < 1.0) {
        return Err(CliError::validation(format!("--alpha {} must lie in (0, 1)", est.alpha)));
    }
    let schema = Schema { covariates: est.covariates.clone(), intercept: !est.no_intercept };
    let ingested = ingest_csv(open(&est.data, "--data")?, &schema, est.design.into(), est.tau)?;
    let cluster = est.cluster == Switch::On;
    if cluster && !ingested.has_clusters {
        return Err(CliError::validation("--cluster on needs a 'cluster' column in --data"));
    }
    let variant = Variant::select(est.inference.into(), est.design.into(), cluster);
    let layout = &ingested.layout;
    let names = layout.coefficient_names();
    let q = layout.q();
    let normalized = match &est.normalize {
        Some(name) => layout
            .index_of(name)
            .ok_or_else(|| CliError::validation(format!("--normalize: unknown coefficient '{name}'")))?,
        None if !layout.intervals.is_empty() => q,
        None => 0,
    };
    let mut spec = BoundsSpec::new(vec![0.0; names.len()]).with_normalized(normalized).with_epsilon(est.epsilon);
    if !layout.intervals.is_empty() {
        spec.monotone_from = Some(q);
    }
    if let Some(b) = &est.bbox {
        if b[0] > b[1] || !b[0].is_finite() || !b[1].is_finite() {
            return Err(CliError::validation(format!("--box {} {}: need finite LO <= HI", b[0], b[1])));
        }
        spec = spec.with_box(b[0], b[1]);
    }
    if est.epsilon < 0.0 || !est.epsilon.is_finite() {
        return Err(CliError::validation(format!("--epsilon {} must be nonnegative", est.epsilon)));
    }
    Ok(Prepared { ingested, variant, spec, names })
}

fn parse_target(raw: &str, names: &[String]) -> CliResult<Vec<f64>> {
    if let Some(i) = names.iter().position(|n| n == raw) {
        let mut r = vec![0.0; names.len()];
        r[i] = 1.0;
        return Ok(r);
    }
    let parsed: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match parsed {
        Ok(r) if r.len() == names.len() => Ok(r),
        Ok(r) => Err(CliError::validation(format!(
            "--target: {} weights given, {} coefficients ({})",
            r.len(),
            names.len(),
            names.join(", ")
        ))),
        Err(_) => Err(CliError::validation(format!(
            "--target: '{raw}' is neither a coefficient ({}) nor a list of numbers",
            names.join(", ")
        ))),
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Optimal => "optimal",
        Status::Infeasible => "infeasible",
    }
}

fn interval_json(iv: &BoundInterval) -> serde_json::Value {
    json!({
        "lower": iv.lower,
        "upper": iv.upper,
        "statuses": { "lower": status_name(iv.lower_status), "upper": status_name(iv.upper_status) },
        "binding": { "lower": iv.lower_binding, "upper": iv.upper_binding },
    })
}

pub fn cmd_bounds(args: &BoundsArgs) -> CliResult<String> {
    log_config("bounds", args);
    let p = prepare(&args.est)?;
    let target = parse_target(&args.target, &p.names)?;
    let spec = BoundsSpec { target, ..p.spec };
    let grouped = group(&p.ingested.dataset);
    let reg = region(&grouped, args.est.alpha, p.variant)?;
    let iv = bound_interval(&grouped, &reg, &spec)?;
    let mut out = interval_json(&iv);
    let extra = json!({
        "alpha": args.est.alpha,
        "variant": p.variant,
        "J": grouped.num_groups(),
        "n": grouped.n,
        "coefficients": p.names,
        "target": spec.target,
        "normalized": p.names[spec.normalized_index],
    });
    out.as_object_mut().expect("object").extend(extra.as_object().expect("object").clone());
    let text = write_json(&out, args.output.as_ref())?;
    if !iv.is_feasible() {
        print!("{text}");
        return Err(CliError::Infeasible(
            "screened sign constraints are contradictory: empty feasible set".to_string(),
        ));
    }
    Ok(text)
}

fn action_name(a: Action) -> &'static str {
    match a {
        Action::One => "one",
        Action::Zero => "zero",
        Action::Abstain => "abstain",
    }
}

pub fn cmd_classify(args: &ClassifyArgs) -> CliResult<String> {
    log_config("classify", args);
    let p = prepare(&args.est)?;
    let queries = read_queries(open(&args.queries, "--queries")?, &p.ingested.layout)?;
    let grouped = group(&p.ingested.dataset);
    let reg = region(&grouped, args.est.alpha, p.variant)?;
    let rows = screened_rows(&grouped, &reg, &p.spec)?;
    let mut bits = rep_rng(args.seed, 0);
    let mut results = Vec::with_capacity(queries.len());
    for (k, q) in queries.iter().enumerate() {
        let r_bit = u8::from(open_uniform(&mut bits) < 0.5);
        let r_lo = q.with_endpoints(&q.v_lo);
        let r_hi = q.with_endpoints(&q.v_hi);
        let spec = BoundsSpec { target: r_hi.clone(), ..p.spec.clone() };
        let iv = bound_rows(&rows, &spec, &r_lo, &r_hi)
            .map_err(|e| CliError::validation(format!("query row {}: {e}", k + 1)))?;
        let decision = match args.rule {
            RuleArg::Abstain => classify_abstain(&iv)?,
            RuleArg::Random => classify_random(&iv, r_bit)?,
        };
        let x_star: serde_json::Value =
            if q.v_lo == q.v_hi { json!(r_hi) } else { json!({ "lower": r_lo, "upper": r_hi }) };
        results.push(json!({
            "x_star": x_star,
            "lower": iv.lower,
            "upper": iv.upper,
            "decision": action_name(decision.outcome),
            "draw_used": decision.draw_used,
        }));
    }
    let out = json!({
        "rule": args.rule,
        "alpha": args.est.alpha,
        "variant": p.variant,
        "J": grouped.num_groups(),
        "n": grouped.n,
        "coefficients": p.names,
        "queries": results,
    });
    write_json(&out, args.output.as_ref())
}

fn scenario_dgp(args: &SimulateArgs) -> DgpSpec {
    match args.scenario {
        Scenario::BinnedNormal => DgpSpec::binned_normal(),
        Scenario::Kls => DgpSpec::kls(args.noise == NoiseArg::Heteroskedastic),
    }
}

pub fn simulate_report(args: &SimulateArgs) -> CliResult<SimulationReport> {
    if args.reps == 0 {
        return Err(CliError::validation("--reps must be at least 1"));
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::validation(format!("--alpha {} must lie in (0, 1)", args.alpha)));
    }
    if args.n.contains(&0) {
        return Err(CliError::validation("--n values must be positive"));
    }
    let experiment = args.experiment.unwrap_or(match args.scenario {
        Scenario::BinnedNormal => ExperimentArg::Bounds,
        Scenario::Kls => ExperimentArg::Classification,
    });
    let dgp = scenario_dgp(args);
    let pool = thread_pool()?;
    let started = Instant::now();
    let mut report = SimulationReport {
        scenario: dgp.name.clone(),
        experiment: String::new(),
        settings: serde_json::Value::Null,
        bounds: Vec::new(),
        classification: Vec::new(),
        metadata: Metadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            runtime_secs: 0.0,
            threads: pool.current_num_threads(),
        },
    };
    match experiment {
        ExperimentArg::Bounds => {
            let cluster = args.cluster == Switch::On;
            let variant = Variant::select(args.inference.into(), args.design.into(), cluster);
            report.experiment = "bounds".into();
            report.settings = json!({
                "reps": args.reps, "alpha": args.alpha, "seed": args.seed, "variant": variant,
                "design": args.design, "cluster": args.cluster, "noise": args.noise,
            });
            for &n in &args.n {
                report.bounds.push(run_bounds(
                    &pool,
                    BoundsConfig {
                        dgp: dgp.clone(),
                        n,
                        reps: args.reps,
                        alpha: args.alpha,
                        variant,
                        design: args.design.into(),
                        cluster: cluster.then_some(Clustering::DEFAULT),
                        seed: args.seed,
                    },
                )?);
            }
        }
        ExperimentArg::Classification => {
            report.experiment = "classification".into();
            report.settings = json!({
                "reps": args.reps, "alpha": args.alpha, "seed": args.seed, "variant": Variant::AsympFixed,
                "design": DesignArg::Fixed, "noise": args.noise,
            });
            for &n in &args.n {
                report.classification.extend(run_classification(
                    &pool,
                    ClassConfig { dgp: dgp.clone(), n, reps: args.reps, alpha: args.alpha, seed: args.seed },
                )?);
            }
        }
    }
    report.metadata.runtime_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

fn render(report: &SimulationReport, format: Format) -> CliResult<String> {
    Ok(match format {
        Format::Table => render_table(report),
        Format::Csv => render_csv(report),
        Format::Json => serde_json::to_string_pretty(report)? + "\n",
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<String> {
    log_config("simulate", args);
    let report = simulate_report(args)?;
    write_json(&report, args.output.as_ref())?;
    render(&report, args.format)
}

pub fn cmd_report(args: &ReportArgs) -> CliResult<String> {
    log_config("report", args);
    let report: SimulationReport = serde_json::from_reader(open(&args.input, "--input")?)?;
    render(&report, args.format)
}

/// Parse `argv`, run, print, and return the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
