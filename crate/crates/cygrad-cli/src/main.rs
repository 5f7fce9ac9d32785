use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use cygrad::bench::{run_bench, BenchMethod, BenchProblem, BenchSpec, OutputFormat};
use cygrad::matrix_market::{write_coordinate, write_vector};
use cygrad::parallel::{partition_rows, simulate_with_reduce_order, ReduceOrder, Strategy};
use cygrad::problems::{load_matrix_market, GeneratorSpec, RhsPolicy};
use cygrad::solver::{solve_cg, solve_gradient, GradientUpdate, NormRef, SolveConfig, SolveStatus};
use cygrad::steplengths::SteplengthRule;
use cygrad::{Error, Result};
use cygrad_cli::{
    build_problem, exit_code_for, parse_bool, parse_gradient_update, parse_norm_ref,
    parse_rhs_policy, parse_thresholds, ConfigMap,
};

#[derive(Parser)]
#[command(
    name = "cygrad",
    version,
    about = "Gradient methods with cyclic and spectral steplengths for SPD systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one problem and report status, iterations, and history
    Solve(SolveArgs),
    /// Run a methods-by-thresholds benchmark grid
    Bench(BenchArgs),
    /// Solve while routing steplength evaluations through a simulated
    /// parallel strategy, reporting traffic and divergence
    Simulate(SimulateArgs),
    /// Write a generated problem as a matrix file plus rhs/x0 vectors
    Generate(GenerateArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Generator spec, e.g. diag:n=100,loguniform,kmax=1e4,seed=1
    #[arg(long)]
    gen: Option<String>,
    /// Symmetric Matrix Market file
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Right-hand side for --matrix problems: zero|ones|random:<seed>|file:<path>
    #[arg(long)]
    rhs_policy: Option<String>,
    /// Starting point override: zeros|ones
    #[arg(long)]
    x0_policy: Option<String>,
    /// Steplength rule, or `cg` for the conjugate gradient baseline
    #[arg(long)]
    rule: Option<String>,
    /// Relative residual tolerance (default 1e-8)
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap (default 10000)
    #[arg(long)]
    max_iter: Option<usize>,
    /// Stopping-rule denominator: initial-gradient|rhs
    #[arg(long)]
    norm_ref: Option<String>,
    /// Gradient update: recompute|recurrence
    #[arg(long)]
    gradient_update: Option<String>,
    /// Record the objective value per iteration
    #[arg(long)]
    record_objective: bool,
    /// History file format: csv|json (default csv)
    #[arg(long)]
    format: Option<String>,
    /// History output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value config file; command-line flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Generator spec (repeatable)
    #[arg(long = "gen")]
    gen: Vec<String>,
    /// Matrix file (repeatable)
    #[arg(long = "matrix")]
    matrix: Vec<PathBuf>,
    /// rhs policy for --matrix problems
    #[arg(long)]
    rhs_policy: Option<String>,
    /// Method row (repeatable): `cg` or a rule string; defaults to the
    /// standard seven-method set
    #[arg(long = "rule")]
    rule: Vec<String>,
    /// Comma-separated decreasing thresholds (default 1e-1..1e-6)
    #[arg(long)]
    thresholds: Option<String>,
    /// Repetitions per cell, seed-shifted (default 1)
    #[arg(long)]
    reps: Option<usize>,
    /// Iteration cap (default 10000)
    #[arg(long)]
    max_iter: Option<usize>,
    /// Table format: csv|json|markdown (default markdown)
    #[arg(long)]
    format: Option<String>,
    /// Output path (default stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    gen: Option<String>,
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    rhs_policy: Option<String>,
    #[arg(long)]
    x0_policy: Option<String>,
    /// Steplength rule (gradient rules only)
    #[arg(long)]
    rule: Option<String>,
    /// Simulated processor count
    #[arg(long)]
    p: Option<usize>,
    /// Steplength evaluation strategy: ga|ra
    #[arg(long)]
    strategy: Option<String>,
    /// Partial-sum order for ra: ascending|tree
    #[arg(long)]
    reduce_order: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Writes <prefix>.history.csv and <prefix>.trace.csv
    #[arg(long)]
    out_prefix: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator spec to realize
    #[arg(long)]
    gen: Option<String>,
    /// Writes <prefix>.mtx, <prefix>.rhs.txt, <prefix>.x0.txt
    #[arg(long)]
    out_prefix: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match cli.cmd {
        Cmd::Solve(args) => cmd_solve(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Generate(args) => cmd_generate(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    }
}

fn suffixed(prefix: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_config(path: Option<&PathBuf>) -> Result<ConfigMap> {
    match path {
        Some(p) => ConfigMap::load(p),
        None => Ok(ConfigMap::default()),
    }
}

fn take_parsed<T, F>(map: &mut ConfigMap, key: &str, parse: F) -> Result<Option<T>>
where
    F: FnOnce(&str) -> Result<T>,
{
    map.take(key).map(|s| parse(&s)).transpose()
}

fn parse_usize(key: &str) -> impl Fn(&str) -> Result<usize> + '_ {
    move |s| {
        s.parse::<usize>()
            .map_err(|_| Error::Config(format!("{key}: `{s}` is not a nonnegative integer")))
    }
}

fn parse_f64(key: &str) -> impl Fn(&str) -> Result<f64> + '_ {
    move |s| {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("{key}: `{s}` is not a number")))
    }
}

#[derive(Clone, Copy)]
enum HistoryFormat {
    Csv,
    Json,
}

fn parse_history_format(s: &str) -> Result<HistoryFormat> {
    match s {
        "csv" => Ok(HistoryFormat::Csv),
        "json" => Ok(HistoryFormat::Json),
        other => Err(Error::Config(format!(
            "unknown history format `{other}`: expected `csv` or `json`"
        ))),
    }
}

fn print_warnings(problem: &cygrad::ProblemInstance) {
    for w in &problem.warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_solve(mut a: SolveArgs) -> Result<i32> {
    let mut cfg = load_config(a.config.as_ref())?;
    a.gen = a.gen.or(cfg.take("gen"));
    a.matrix = a.matrix.or(cfg.take("matrix").map(PathBuf::from));
    a.rhs_policy = a.rhs_policy.or(cfg.take("rhs-policy"));
    a.x0_policy = a.x0_policy.or(cfg.take("x0-policy"));
    a.rule = a.rule.or(cfg.take("rule"));
    if a.tol.is_none() {
        a.tol = take_parsed(&mut cfg, "tol", parse_f64("tol"))?;
    }
    if a.max_iter.is_none() {
        a.max_iter = take_parsed(&mut cfg, "max-iter", parse_usize("max-iter"))?;
    }
    a.norm_ref = a.norm_ref.or(cfg.take("norm-ref"));
    a.gradient_update = a.gradient_update.or(cfg.take("gradient-update"));
    if !a.record_objective {
        a.record_objective = take_parsed(&mut cfg, "record-objective", |s| {
            parse_bool("record-objective", s)
        })?
        .unwrap_or(false);
    }
    a.format = a.format.or(cfg.take("format"));
    a.out = a.out.or(cfg.take("out").map(PathBuf::from));
    cfg.finish()?;

    let problem = build_problem(
        a.gen.as_deref(),
        a.matrix.as_deref(),
        a.rhs_policy.as_deref(),
        a.x0_policy.as_deref(),
    )?;
    print_warnings(&problem);
    let rule = a
        .rule
        .ok_or_else(|| Error::Config("a method is required: --rule <rule|cg>".into()))?;
    let method = BenchMethod::parse(&rule)?;
    let config = SolveConfig {
        rule: match &method {
            BenchMethod::Rule(r) => r.clone(),
            BenchMethod::Cg => SteplengthRule::Sd,
        },
        tol: a.tol.unwrap_or(1e-8),
        max_iter: a.max_iter.unwrap_or(10_000),
        norm_ref: a
            .norm_ref
            .as_deref()
            .map(parse_norm_ref)
            .transpose()?
            .unwrap_or(NormRef::InitialGradient),
        gradient_update: a
            .gradient_update
            .as_deref()
            .map(parse_gradient_update)
            .transpose()?
            .unwrap_or(GradientUpdate::Recompute),
        record_history: true,
        record_objective: a.record_objective,
        diagnostics: None,
    };
    let started = Instant::now();
    let history = match method {
        BenchMethod::Cg => solve_cg(&problem, &config)?,
        BenchMethod::Rule(_) => solve_gradient(&problem, &config)?,
    };
    let elapsed = started.elapsed();

    println!("status: {}", history.status.as_str());
    if let SolveStatus::NumericalBreakdown { reason } = &history.status {
        println!("reason: {reason}");
    }
    println!("iterations: {}", history.iterations);
    println!("final grad norm: {:e}", history.final_grad_norm);
    if let Some(path) = &a.out {
        let file = BufWriter::new(File::create(path)?);
        match a
            .format
            .as_deref()
            .map(parse_history_format)
            .transpose()?
            .unwrap_or(HistoryFormat::Csv)
        {
            HistoryFormat::Csv => history.write_csv(file)?,
            HistoryFormat::Json => history.write_json(file, &config, Some(elapsed))?,
        }
        println!("history written to {}", path.display());
    }
    Ok(exit_code_for(&history.status))
}

fn cmd_bench(mut a: BenchArgs) -> Result<i32> {
    let mut cfg = load_config(a.config.as_ref())?;
    a.gen.extend(cfg.take_all("gen"));
    a.matrix
        .extend(cfg.take_all("matrix").into_iter().map(PathBuf::from));
    a.rhs_policy = a.rhs_policy.or(cfg.take("rhs-policy"));
    a.rule.extend(cfg.take_all("rule"));
    a.thresholds = a.thresholds.or(cfg.take("thresholds"));
    if a.reps.is_none() {
        a.reps = take_parsed(&mut cfg, "reps", parse_usize("reps"))?;
    }
    if a.max_iter.is_none() {
        a.max_iter = take_parsed(&mut cfg, "max-iter", parse_usize("max-iter"))?;
    }
    a.format = a.format.or(cfg.take("format"));
    a.out = a.out.or(cfg.take("out").map(PathBuf::from));
    cfg.finish()?;

    let mut problems = Vec::new();
    for spec in &a.gen {
        problems.push(BenchProblem::generated(spec.parse::<GeneratorSpec>()?));
    }
    let rhs_policy = match a.rhs_policy.as_deref() {
        Some(s) => parse_rhs_policy(s)?,
        None => RhsPolicy::Ones,
    };
    for path in &a.matrix {
        let instance = load_matrix_market(path, &rhs_policy)?;
        print_warnings(&instance);
        problems.push(BenchProblem::fixed(instance));
    }
    let methods = if a.rule.is_empty() {
        BenchSpec::default_methods()
    } else {
        a.rule
            .iter()
            .map(|r| BenchMethod::parse(r))
            .collect::<Result<Vec<_>>>()?
    };
    let thresholds = match a.thresholds.as_deref() {
        Some(list) => parse_thresholds(list)?,
        None => BenchSpec::default_thresholds(),
    };
    let output = a
        .format
        .as_deref()
        .map(|s| s.parse::<OutputFormat>())
        .transpose()?
        .unwrap_or(OutputFormat::Markdown);
    let spec = BenchSpec {
        problems,
        methods,
        thresholds,
        repetitions: a.reps.unwrap_or(1),
        max_iter: a.max_iter.unwrap_or(10_000),
        output,
    };
    let report = run_bench(&spec)?;
    let render = |w: &mut dyn Write| -> Result<()> {
        match output {
            OutputFormat::Csv => report.write_csv(w),
            OutputFormat::Json => report.write_json(w),
            OutputFormat::Markdown => report.write_markdown(w),
        }
    };
    match &a.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            render(&mut file)?;
            file.flush()?;
            println!("benchmark written to {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            render(&mut stdout.lock())?;
        }
    }
    Ok(0)
}

fn cmd_simulate(mut a: SimulateArgs) -> Result<i32> {
    let mut cfg = load_config(a.config.as_ref())?;
    a.gen = a.gen.or(cfg.take("gen"));
    a.matrix = a.matrix.or(cfg.take("matrix").map(PathBuf::from));
    a.rhs_policy = a.rhs_policy.or(cfg.take("rhs-policy"));
    a.x0_policy = a.x0_policy.or(cfg.take("x0-policy"));
    a.rule = a.rule.or(cfg.take("rule"));
    if a.p.is_none() {
        a.p = take_parsed(&mut cfg, "p", parse_usize("p"))?;
    }
    a.strategy = a.strategy.or(cfg.take("strategy"));
    a.reduce_order = a.reduce_order.or(cfg.take("reduce-order"));
    if a.tol.is_none() {
        a.tol = take_parsed(&mut cfg, "tol", parse_f64("tol"))?;
    }
    if a.max_iter.is_none() {
        a.max_iter = take_parsed(&mut cfg, "max-iter", parse_usize("max-iter"))?;
    }
    a.out_prefix = a.out_prefix.or(cfg.take("out-prefix").map(PathBuf::from));
    cfg.finish()?;

    let problem = build_problem(
        a.gen.as_deref(),
        a.matrix.as_deref(),
        a.rhs_policy.as_deref(),
        a.x0_policy.as_deref(),
    )?;
    print_warnings(&problem);
    let rule: SteplengthRule = a
        .rule
        .ok_or_else(|| Error::Config("a gradient rule is required: --rule".into()))?
        .parse()?;
    let p = a.p.ok_or_else(|| Error::Config("--p is required".into()))?;
    let strategy: Strategy = a
        .strategy
        .ok_or_else(|| Error::Config("--strategy is required: ga or ra".into()))?
        .parse()?;
    let order: ReduceOrder = a
        .reduce_order
        .as_deref()
        .map(str::parse)
        .transpose()?
        .unwrap_or(ReduceOrder::Ascending);
    let plan = partition_rows(problem.dimension(), p)?;
    let config = SolveConfig {
        rule: rule.clone(),
        tol: a.tol.unwrap_or(1e-8),
        max_iter: a.max_iter.unwrap_or(10_000),
        ..Default::default()
    };
    let (history, trace) =
        simulate_with_reduce_order(&problem, rule, &plan, strategy, order, &config)?;

    println!("status: {}", history.status.as_str());
    println!("iterations: {}", history.iterations);
    println!("total steplength scalars: {}", trace.total_scalars_sent());
    println!("total gather volume: {}", trace.total_gather_volume());
    println!("max divergence: {:e}", trace.max_divergence());
    if let Some(prefix) = &a.out_prefix {
        let history_path = suffixed(prefix, ".history.csv");
        let trace_path = suffixed(prefix, ".trace.csv");
        history.write_csv(BufWriter::new(File::create(&history_path)?))?;
        trace.write_csv(BufWriter::new(File::create(&trace_path)?))?;
        println!("history written to {}", history_path.display());
        println!("trace written to {}", trace_path.display());
    }
    Ok(exit_code_for(&history.status))
}

fn cmd_generate(mut a: GenerateArgs) -> Result<i32> {
    let mut cfg = load_config(a.config.as_ref())?;
    a.gen = a.gen.or(cfg.take("gen"));
    a.out_prefix = a.out_prefix.or(cfg.take("out-prefix").map(PathBuf::from));
    cfg.finish()?;

    let spec: GeneratorSpec = a
        .gen
        .ok_or_else(|| Error::Config("a generator spec is required: --gen".into()))?
        .parse()?;
    let prefix = a
        .out_prefix
        .ok_or_else(|| Error::Config("--out-prefix is required".into()))?;
    let problem = spec.realize()?;

    let matrix_path = suffixed(&prefix, ".mtx");
    let rhs_path = suffixed(&prefix, ".rhs.txt");
    let x0_path = suffixed(&prefix, ".x0.txt");
    write_coordinate(
        BufWriter::new(File::create(&matrix_path)?),
        &problem.operator,
    )?;
    write_vector(
        BufWriter::new(File::create(&rhs_path)?),
        problem.rhs.as_slice(),
    )?;
    write_vector(
        BufWriter::new(File::create(&x0_path)?),
        problem.x0.as_slice(),
    )?;
    println!("matrix written to {}", matrix_path.display());
    println!("rhs written to {}", rhs_path.display());
    println!("x0 written to {}", x0_path.display());
    Ok(0)
}
