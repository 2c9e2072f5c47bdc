use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use airload::analysis::{shear_profile, validate, LoadingPlan, ShearCheck, ValidationReport};
use airload::bench::{emit_report, emit_timing, report_stem, run_benchmark, BenchConfig, ReportFormat};
use airload::io::{emit_instance, load_instance};
use airload::qubo::{assemble_with, calibrate_weights, AssemblyOptions, PenaltyWeights};
use airload::solvers::{exact_solve, tabu_solve, SearchSpace, SolverParams};
use airload::{ConstraintSet, ProblemInstance};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// QUBO-based aircraft cargo loading planner.
#[derive(Parser)]
#[command(name = "airload", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance with tabu search and write the decoded plan.
    Solve(SolveArgs),
    /// Find the heaviest valid plan by exhaustive search.
    Exact(ExactArgs),
    /// Write the QUBO matrix and its variable map.
    ExportQubo(ExportArgs),
    /// Repeat seeded solves and write summary reports.
    Bench(BenchArgs),
    /// Derive penalty weights by sampling and print them.
    Calibrate(CalibrateArgs),
    /// Check a plan file against an instance.
    Validate(ValidateArgs),
    /// Print an instance as a single self-contained document.
    Convert(ConvertArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Override the instance's constraint set (none, pl, pl+cl, pl+cl+sl).
    #[arg(long)]
    set: Option<ConstraintSet>,
    /// Penalty weights document; defaults to weights scaled from the instance.
    #[arg(long, conflicts_with = "calibrate")]
    weights: Option<PathBuf>,
    /// Calibrate weights by sampling instead of using the scaled defaults.
    #[arg(long)]
    calibrate: bool,
    /// Samples used by --calibrate.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Leave out the maximum-capacity penalty.
    #[arg(long)]
    no_capacity: bool,
}

#[derive(Args)]
struct TabuArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iterations per restart.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    tenure: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Search every QUBO bit, slacks included.
    #[arg(long)]
    all_bits: bool,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    tabu: TabuArgs,
}

#[derive(Args)]
struct ExactArgs {
    instance: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    set: Option<ConstraintSet>,
    /// Search even when the instance exceeds the size guard.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ExportArgs {
    instance: PathBuf,
    /// QUBO file; the variable map goes next to it as `<stem>.vars.csv`.
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct BenchArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    /// Constraint sets to run, comma separated or repeated.
    #[arg(long, value_delimiter = ',', default_values_t = [ConstraintSet::PL])]
    set: Vec<ConstraintSet>,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
    /// First trial seed; trial i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Known optimum weight, enables the optimal-rate column.
    #[arg(long)]
    optimum: Option<f64>,
    /// Compute the optimum with the exact solver first.
    #[arg(long, conflicts_with = "optimum")]
    exact: bool,
    /// Keep solver times in the main reports too.
    #[arg(long)]
    timing: bool,
    #[arg(long, conflicts_with = "calibrate")]
    weights: Option<PathBuf>,
    #[arg(long)]
    calibrate: bool,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    no_capacity: bool,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    tenure: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    all_bits: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    set: Option<ConstraintSet>,
}

#[derive(Args)]
struct ValidateArgs {
    instance: PathBuf,
    /// JSON plan, or the output of `solve` / `exact`.
    plan: PathBuf,
    #[arg(long)]
    set: Option<ConstraintSet>,
}

#[derive(Args)]
struct ConvertArgs {
    instance: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    instance: &'a str,
    constraints: String,
    seed: u64,
    energy: f64,
    iterations_used: usize,
    feasible: bool,
    weights: &'a PenaltyWeights,
    report: &'a ValidationReport,
    plan: &'a LoadingPlan,
    shear: Vec<ShearCheck>,
}

#[derive(Serialize)]
struct ExactOutput<'a> {
    instance: &'a str,
    constraints: String,
    weight: f64,
    feasible: bool,
    report: &'a ValidationReport,
    plan: &'a LoadingPlan,
    shear: Vec<ShearCheck>,
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    feasible: bool,
    report: &'a ValidationReport,
    shear: Vec<ShearCheck>,
}

fn load(path: &Path, set: Option<ConstraintSet>) -> Result<ProblemInstance> {
    let inst = load_instance(path)?;
    Ok(match set {
        Some(s) => inst.with_constraints(s)?,
        None => inst,
    })
}

fn weights_for(
    instance: &ProblemInstance,
    file: Option<&Path>,
    calibrate: bool,
    samples: usize,
    seed: u64,
) -> Result<PenaltyWeights> {
    if let Some(path) = file {
        let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
        return PenaltyWeights::from_toml_str(&text).with_context(|| format!("{}", path.display()));
    }
    if calibrate {
        return Ok(calibrate_weights(instance, samples, seed)?);
    }
    Ok(PenaltyWeights::scaled(instance))
}

fn solver_params(
    model: &airload::QuadraticModel,
    seed: u64,
    iterations: Option<usize>,
    tenure: Option<usize>,
    restarts: Option<usize>,
    all_bits: bool,
) -> SolverParams {
    let mut p = if all_bits {
        SolverParams { space: SearchSpace::AllBits, ..SolverParams::for_size(model.num_vars(), seed) }
    } else {
        SolverParams::for_model(model, seed)
    };
    if let Some(v) = iterations {
        p.max_iterations = v;
    }
    if let Some(v) = tenure {
        p.tabu_tenure = v;
    }
    if let Some(v) = restarts {
        p.restarts = v;
    }
    p
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("{}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn status(feasible: bool) -> ExitCode {
    if feasible {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn cmd_solve(a: SolveArgs) -> Result<ExitCode> {
    let inst = load(&a.instance, a.model.set)?;
    let w = weights_for(&inst, a.model.weights.as_deref(), a.model.calibrate, a.model.samples, a.tabu.seed)?;
    let model = assemble_with(&inst, &w, &AssemblyOptions { capacity: !a.model.no_capacity })?;
    let t = &a.tabu;
    let params = solver_params(&model, t.seed, t.iterations, t.tenure, t.restarts, t.all_bits);
    let sol = tabu_solve(&model, &params)?;
    let plan = airload::decode(&sol.bits, model.registry(), &inst)?;
    let report = validate(&plan, &inst)?;
    let feasible = report.feasible_for(&inst);
    let out = SolveOutput {
        instance: inst.name(),
        constraints: inst.constraints().label(),
        seed: t.seed,
        energy: sol.energy,
        iterations_used: sol.iterations_used,
        feasible,
        weights: &w,
        report: &report,
        plan: &plan,
        shear: shear_profile(&plan, &inst),
    };
    write_out(a.output.as_deref(), &to_json(&out))?;
    eprintln!(
        "{}: weight {} cog {:.3} feasible {} ({:.3} s)",
        inst.name(),
        report.loaded_weight,
        report.cog,
        feasible,
        sol.wall_time
    );
    Ok(status(feasible))
}

fn cmd_exact(a: ExactArgs) -> Result<ExitCode> {
    let inst = load(&a.instance, a.set)?;
    let sol = exact_solve(&inst, a.force)?;
    let out = ExactOutput {
        instance: inst.name(),
        constraints: inst.constraints().label(),
        weight: sol.weight,
        feasible: sol.feasible,
        report: &sol.report,
        plan: &sol.plan,
        shear: shear_profile(&sol.plan, &inst),
    };
    write_out(a.output.as_deref(), &to_json(&out))?;
    eprintln!("{}: optimum {}", inst.name(), sol.weight);
    Ok(status(sol.feasible))
}

fn vars_path(qubo: &Path) -> PathBuf {
    let stem = qubo.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    qubo.with_file_name(format!("{stem}.vars.csv"))
}

fn cmd_export(a: ExportArgs) -> Result<ExitCode> {
    let inst = load(&a.instance, a.model.set)?;
    let w = weights_for(&inst, a.model.weights.as_deref(), a.model.calibrate, a.model.samples, 0)?;
    let model = assemble_with(&inst, &w, &AssemblyOptions { capacity: !a.model.no_capacity })?;
    let mut buf = Vec::new();
    model.write_qubo(&mut buf)?;
    fs::write(&a.output, buf).with_context(|| format!("{}", a.output.display()))?;
    let mut map = Vec::new();
    model.write_variable_map(&inst, &mut map)?;
    let side = vars_path(&a.output);
    fs::write(&side, map).with_context(|| format!("{}", side.display()))?;
    eprintln!(
        "{} variables ({} position, {} slack), {} terms",
        model.num_vars(),
        model.registry().num_position_vars(),
        model.registry().num_slack_vars(),
        model.num_terms()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode> {
    if a.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let base = load(&a.instance, None)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("{}", a.out_dir.display()))?;
    for &set in &a.set {
        let inst = base.with_constraints(set)?;
        let w = weights_for(&inst, a.weights.as_deref(), a.calibrate, a.samples, a.seed)?;
        let mut config = BenchConfig::new(a.runs, a.seed);
        config.assembly = AssemblyOptions { capacity: !a.no_capacity };
        config.exact_optimum = match (a.optimum, a.exact) {
            (Some(v), _) => Some(v),
            (None, true) => Some(exact_solve(&inst, false)?.weight),
            (None, false) => None,
        };
        if a.iterations.is_some() || a.tenure.is_some() || a.restarts.is_some() || a.all_bits {
            let model = assemble_with(&inst, &w, &config.assembly)?;
            config.solver = Some(solver_params(&model, a.seed, a.iterations, a.tenure, a.restarts, a.all_bits));
        }
        let report = run_benchmark(&inst, &w, &config)?;
        let stem = report_stem(&report.summary);
        for fmt in [ReportFormat::Structured, ReportFormat::Tabular] {
            let path = a.out_dir.join(format!("{stem}.{}", fmt.extension()));
            fs::write(&path, emit_report(&report, fmt, a.timing)).with_context(|| format!("{}", path.display()))?;
        }
        let path = a.out_dir.join(format!("{stem}.timing.csv"));
        fs::write(&path, emit_timing(&report)).with_context(|| format!("{}", path.display()))?;
        let s = &report.summary;
        println!(
            "{} {}: runs {} pl {}% cl {}% sl {}% feasible {}% max {} mean time {:.3} s",
            s.instance,
            s.constraints,
            s.runs,
            s.pct_pl_valid,
            s.pct_cl_valid,
            s.pct_sl_valid,
            s.pct_feasible,
            s.max_weight.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
            s.mean_time
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<ExitCode> {
    let inst = load(&a.instance, a.set)?;
    let w = calibrate_weights(&inst, a.samples, a.seed)?;
    print!("{}", w.to_toml_string());
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(a: ValidateArgs) -> Result<ExitCode> {
    let inst = load(&a.instance, a.set)?;
    let text = fs::read_to_string(&a.plan).with_context(|| format!("{}", a.plan.display()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("{}", a.plan.display()))?;
    if let Some(inner) = value.get_mut("plan") {
        value = inner.take();
    }
    let given: LoadingPlan = serde_json::from_value(value).context("plan document")?;
    let plan = LoadingPlan::from_placements(&inst, given.placement)?;
    let report = validate(&plan, &inst)?;
    let feasible = report.feasible_for(&inst);
    print!("{}", to_json(&ValidateOutput { feasible, report: &report, shear: shear_profile(&plan, &inst) }));
    Ok(status(feasible))
}

fn cmd_convert(a: ConvertArgs) -> Result<ExitCode> {
    let inst = load(&a.instance, None)?;
    write_out(a.output.as_deref(), &emit_instance(&inst))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Exact(a) => cmd_exact(a),
        Command::ExportQubo(a) => cmd_export(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Convert(a) => cmd_convert(a),
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let head: Vec<&str> = text.lines().take_while(|l| !l.trim().is_empty()).collect();
            eprintln!("error: {}", one_line(head.join(" ").trim_start_matches("error:")));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            ExitCode::from(1)
        }
    }
}
