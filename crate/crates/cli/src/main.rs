//! `speclint`: lint, monitor, falsify and mine temporal-logic specifications.
//!
//! Exit codes: 0 success, 1 lint issues or monitor violation, 2 usage or input error,
//! 3 falsification budget exhausted, 4 satisfied but vacuous.

use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use speclint::debugger::{lint, LintOptions};
use speclint::falsifier::{
    falsify, mine_parameter, simulate_candidate, FalsificationStatus, Grid, SearchConfig,
};
use speclint::logic::{parse, Formula};
use speclint::monitor::{eval_bool, robustness, signal_vacuity, VacuityVerdict};
use speclint::plant::ModelSpec;
use speclint::rational::{format_rational, parse_rational, Rational};
use speclint::templates::{list_templates, TemplateInstance};
use speclint::trace::Trace;

const EXIT_OK: u8 = 0;
const EXIT_FINDINGS: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_VACUOUS: u8 = 4;

#[derive(Parser)]
#[command(
    name = "speclint",
    version,
    about = "Debug, monitor and falsify temporal-logic requirements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a specification for validity, redundancy and vacuity issues.
    Lint(LintArgs),
    /// Evaluate a specification over a trace CSV and report vacuous satisfaction.
    Monitor(MonitorArgs),
    /// Search for model inputs that violate a specification.
    Falsify(FalsifyArgs),
    /// Mine the tightest unfalsified value of a template parameter.
    Mine(MineArgs),
    /// List the available specification templates.
    Templates(FormatArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct FormatArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct LintArgs {
    /// Formula file, or a template literal such as `template:overshoot(x,ref=1,m=0.2,H=40)`.
    spec: String,
    /// Time step of the discretization (default: gcd of the interval endpoints).
    #[arg(long, value_parser = rational_arg)]
    delta: Option<Rational>,
    /// Unrolling horizon (default: the formula horizon).
    #[arg(long, value_parser = rational_arg)]
    horizon: Option<Rational>,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args)]
struct MonitorArgs {
    /// Formula file or template literal.
    spec: String,
    /// Trace CSV with a leading `time` column.
    trace: PathBuf,
    /// Evaluation time; must be a sample instant.
    #[arg(long, value_parser = rational_arg, default_value = "0")]
    t0: Rational,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args)]
struct SearchArgs {
    /// Model: `secondorder`, `cruise` or `external:<command>`.
    #[arg(long)]
    model: String,
    /// Model parameter override `name=value`; repeatable.
    #[arg(long = "model-param", value_name = "NAME=VALUE")]
    model_params: Vec<String>,
    /// Integrator step of built-in models.
    #[arg(long)]
    integrator_step: Option<f64>,
    /// Output sample period.
    #[arg(long, value_parser = rational_arg)]
    sample_period: Option<Rational>,
    /// Grid JSON file with control times and value levels per input channel.
    #[arg(long)]
    grid: PathBuf,
    /// Maximum number of simulations per search.
    #[arg(long, default_value_t = 200)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Neighbours sampled per iteration.
    #[arg(long, default_value_t = 8)]
    neighbors: usize,
    /// Non-improving iterations before refining or restarting.
    #[arg(long, default_value_t = 10)]
    stall: usize,
    #[arg(long, default_value_t = 3)]
    refinements: usize,
    #[arg(long, default_value_t = 1000)]
    tabu: usize,
    /// Maximum number of random restarts (default: unlimited).
    #[arg(long)]
    restarts: Option<usize>,
    /// Threads for neighbour evaluation; does not change results.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct FalsifyArgs {
    /// Formula file or template literal.
    spec: String,
    #[command(flatten)]
    search: SearchArgs,
    /// Write the best trace found as CSV.
    #[arg(long)]
    dump_trace: Option<PathBuf>,
    /// Write the result JSON to a file instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args)]
struct MineArgs {
    /// Template literal, e.g. `template:overshoot(x,ref=1,m=0.2,H=40)`.
    template: String,
    /// Parameter to mine; must be monotone.
    #[arg(long)]
    param: String,
    #[arg(long, value_parser = rational_arg)]
    lo: Rational,
    #[arg(long, value_parser = rational_arg)]
    hi: Rational,
    /// Bisection rounds.
    #[arg(long, default_value_t = 6)]
    iters: usize,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    format: FormatArgs,
}

fn rational_arg(text: &str) -> Result<Rational, String> {
    parse_rational(text).map_err(|e| e.to_string())
}

fn color_enabled() -> bool {
    std::env::var("SPECLINT_COLOR").map_or(true, |v| v != "0") && std::io::stdout().is_terminal()
}

fn paint(code: &str, text: &str) -> String {
    if color_enabled() {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

fn load_spec(spec: &str) -> Result<Formula> {
    if spec.trim_start().starts_with("template:") {
        let instance = TemplateInstance::parse(spec)?;
        return Ok(instance.instantiate()?);
    }
    let text = fs::read_to_string(spec).with_context(|| format!("cannot read {spec}"))?;
    parse(&text).map_err(|e| anyhow!("{spec}:{e}"))
}

fn print_json(value: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("JSON values serialize")
    );
}

fn run_lint(args: LintArgs) -> Result<u8> {
    let formula = load_spec(&args.spec)?;
    let report = lint(
        &formula,
        &LintOptions {
            delta: args.delta,
            horizon: args.horizon,
        },
    )?;
    match args.format.format {
        Format::Json => print_json(&report.to_json()),
        Format::Text => print!("{}", report.to_text(color_enabled())),
    }
    Ok(if report.issues.is_empty() {
        EXIT_OK
    } else {
        EXIT_FINDINGS
    })
}

fn run_monitor(args: MonitorArgs) -> Result<u8> {
    let formula = load_spec(&args.spec)?;
    let file = fs::File::open(&args.trace)
        .with_context(|| format!("cannot read {}", args.trace.display()))?;
    let trace = Trace::read_csv(file).with_context(|| format!("{}", args.trace.display()))?;
    let rho = robustness(&formula, &trace, args.t0)?;
    let satisfied = eval_bool(&formula, &trace, args.t0)?;
    let flags = signal_vacuity(&formula, &trace)?;
    let vacuous = flags.iter().any(|f| f.verdict == VacuityVerdict::Vacuous);
    let (status, code) = match (satisfied, vacuous) {
        (false, _) => ("falsified", EXIT_FINDINGS),
        (true, true) => ("vacuous", EXIT_VACUOUS),
        (true, false) => ("satisfied", EXIT_OK),
    };
    match args.format.format {
        Format::Json => {
            let vacuity: Vec<Value> = flags
                .iter()
                .map(|f| json!({"path": f.path.to_string(), "antecedent": f.antecedent.to_string(), "verdict": f.verdict}))
                .collect();
            print_json(&json!({
                "formula": formula.to_string(),
                "t0": format_rational(args.t0),
                "status": status,
                "satisfied": satisfied,
                "robustness": rho,
                "vacuity": vacuity,
            }));
        }
        Format::Text => {
            let colored = match status {
                "satisfied" => paint("32", status),
                "vacuous" => paint("33", status),
                _ => paint("1;31", status),
            };
            println!("formula: {formula}");
            println!("t0: {}", format_rational(args.t0));
            println!("status: {colored}");
            println!("satisfied: {satisfied}");
            println!("robustness: {rho}");
            for flag in &flags {
                let verdict = match flag.verdict {
                    VacuityVerdict::Vacuous => "vacuous",
                    VacuityVerdict::NonVacuous => "non_vacuous",
                };
                println!("antecedent {} at {}: {verdict}", flag.antecedent, flag.path);
            }
        }
    }
    Ok(code)
}

fn build_model(args: &SearchArgs) -> Result<ModelSpec> {
    let mut model = ModelSpec::parse(&args.model)?;
    for assignment in &args.model_params {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| anyhow!("expected NAME=VALUE, got `{assignment}`"))?;
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("model parameter `{name}`"))?;
        model.set_parameter(name.trim(), value)?;
    }
    if let Some(step) = args.integrator_step {
        model.integrator_step = step;
    }
    if let Some(period) = args.sample_period {
        model.sample_period = period;
    }
    model.validate()?;
    Ok(model)
}

fn build_search(args: &SearchArgs) -> Result<(ModelSpec, Grid, SearchConfig)> {
    let model = build_model(args)?;
    let text = fs::read_to_string(&args.grid)
        .with_context(|| format!("cannot read {}", args.grid.display()))?;
    let grid = Grid::from_json(&text).with_context(|| format!("{}", args.grid.display()))?;
    let cfg = SearchConfig {
        budget: args.budget,
        seed: args.seed,
        neighbor_sample_size: args.neighbors,
        stall_threshold: args.stall,
        max_refinements: args.refinements,
        tabu_capacity: args.tabu,
        restart_limit: args.restarts,
        jobs: args.jobs,
    };
    cfg.validate()?;
    Ok((model, grid, cfg))
}

/// The simulated outputs merged with the input signal sampled at the same instants.
fn with_inputs(trace: Trace, inputs: &speclint::plant::InputSignal) -> Result<Trace> {
    let mut channels = trace.channels().clone();
    for (name, input) in &inputs.channels {
        if channels.contains_key(name) {
            continue;
        }
        channels.insert(
            name.clone(),
            trace.times().iter().map(|t| input.value_at(*t)).collect(),
        );
    }
    Ok(Trace::new(trace.times().to_vec(), channels)?)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn run_falsify(args: FalsifyArgs) -> Result<u8> {
    let formula = load_spec(&args.spec)?;
    let (model, grid, cfg) = build_search(&args.search)?;
    let result = falsify(&formula, &model, &grid, &cfg)?;
    if let Some(path) = &args.dump_trace {
        let trace =
            simulate_candidate(&formula, &model, &result.best_candidate, &result.best_grid)?;
        write_file(
            path,
            &with_inputs(trace, &result.best_input())?.to_csv_string(),
        )?;
    }
    let json = result.to_json();
    match (&args.output, args.format.format) {
        (Some(path), _) => write_file(path, &(serde_json::to_string_pretty(&json)? + "\n"))?,
        (None, Format::Json) => print_json(&json),
        (None, Format::Text) => {}
    }
    if let Format::Text = args.format.format {
        let status = match result.status {
            FalsificationStatus::Falsified => paint("1;31", "falsified"),
            FalsificationStatus::BudgetExhausted => paint("33", "budget_exhausted"),
        };
        println!("formula: {formula}");
        println!("status: {status}");
        println!("best_robustness: {}", result.best_robustness);
        println!("simulations_used: {}", result.simulations_used);
        for (name, input) in &result.best_input().channels {
            let points: Vec<String> = input
                .times
                .iter()
                .zip(&input.values)
                .map(|(t, v)| format!("({}, {v})", format_rational(*t)))
                .collect();
            println!("best_candidate {name}: {}", points.join(" "));
        }
    }
    Ok(match result.status {
        FalsificationStatus::Falsified => EXIT_OK,
        FalsificationStatus::BudgetExhausted => EXIT_BUDGET,
    })
}

fn run_mine(args: MineArgs) -> Result<u8> {
    if !args.template.trim_start().starts_with("template:") {
        bail!("mining needs a template literal such as `template:overshoot(x,ref=1,m=0.2,H=40)`");
    }
    let template = TemplateInstance::parse(&args.template)?;
    template.require_monotone(&args.param)?;
    let (model, grid, cfg) = build_search(&args.search)?;
    let mined = mine_parameter(
        &template,
        &args.param,
        args.lo,
        args.hi,
        &model,
        &grid,
        &cfg,
        args.iters,
    )?;
    match args.format.format {
        Format::Json => {
            let mut json = mined.to_json(&args.param);
            json["template"] = Value::String(template.to_string());
            print_json(&json);
        }
        Format::Text => {
            println!("template: {template}");
            for step in &mined.steps {
                let status = match step.status {
                    FalsificationStatus::Falsified => "falsified",
                    FalsificationStatus::BudgetExhausted => "not falsified",
                };
                println!(
                    "{} = {}: {status} (best robustness {}, {} simulations)",
                    args.param,
                    format_rational(step.value),
                    step.best_robustness,
                    step.simulations_used
                );
            }
            println!(
                "{} = {} (not falsified within budget; not a proof)",
                paint("1", &args.param),
                format_rational(mined.value)
            );
        }
    }
    Ok(EXIT_OK)
}

fn run_templates(args: FormatArgs) -> Result<u8> {
    match args.format {
        Format::Json => {
            let catalog: Vec<Value> = list_templates()
                .iter()
                .map(|d| {
                    let parameters: Vec<Value> = d
                        .parameters
                        .iter()
                        .map(|p| json!({"name": p.name, "bound": p.bound, "monotone": p.monotone, "example": p.example, "doc": p.doc}))
                        .collect();
                    json!({"id": d.id, "doc": d.doc, "parameters": parameters, "example": d.example().to_string()})
                })
                .collect();
            print_json(&Value::Array(catalog));
        }
        Format::Text => {
            for d in list_templates() {
                println!("{}: {}", paint("1", d.id.name()), d.doc);
                for p in d.parameters {
                    let monotone = if p.monotone { ", minable" } else { "" };
                    println!("  {:<8} {}{monotone}", p.name, p.doc);
                }
                println!("  example: {}", d.example());
            }
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Lint(args) => run_lint(args),
        Command::Monitor(args) => run_monitor(args),
        Command::Falsify(args) => run_falsify(args),
        Command::Mine(args) => run_mine(args),
        Command::Templates(args) => run_templates(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(error) => {
            eprintln!("{}: {error:#}", paint("1;31", "error"));
            ExitCode::from(EXIT_ERROR)
        }
    }
}
