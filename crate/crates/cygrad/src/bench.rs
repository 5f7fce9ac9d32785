//! Benchmark grids: methods × residual thresholds, averaged over seeded
//! repetitions.
//!
//! Each (problem, method) pair is solved once per repetition at the
//! tightest threshold with the iteration cap, and every looser threshold's
//! iteration count is read off the recorded gradient norms. A cell shows
//! the mean first-crossing iteration; if any repetition fails to reach the
//! threshold within the cap the cell becomes a sentinel instead of an
//! average over survivors. Markdown output bolds each column's minimum and
//! renders the sentinel as a backslash; JSON carries per-cell status
//! counts and timings; CSV is timing-free and byte-reproducible.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::{GeneratorSpec, ProblemInstance};
use crate::solver::{solve_cg, solve_gradient, SolveConfig, SolveStatus};
use crate::steplengths::SteplengthRule;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BenchMethod {
    Cg,
    Rule(SteplengthRule),
}

impl BenchMethod {
    pub fn label(&self) -> String {
        match self {
            BenchMethod::Cg => "cg".into(),
            BenchMethod::Rule(r) => r.to_string(),
        }
    }

    /// Parses `cg` or any steplength rule string.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "cg" {
            return Ok(BenchMethod::Cg);
        }
        Ok(BenchMethod::Rule(s.parse()?))
    }
}

/// Where a bench problem comes from. Generated problems shift their seed
/// by the repetition index; fixed instances repeat identically.
#[derive(Clone, Debug)]
pub enum ProblemSource {
    Generated(GeneratorSpec),
    Fixed(ProblemInstance),
}

#[derive(Clone, Debug)]
pub struct BenchProblem {
    pub label: String,
    pub source: ProblemSource,
}

impl BenchProblem {
    pub fn generated(spec: GeneratorSpec) -> Self {
        BenchProblem {
            label: spec.to_string(),
            source: ProblemSource::Generated(spec),
        }
    }

    pub fn fixed(instance: ProblemInstance) -> Self {
        BenchProblem {
            label: instance.label.clone(),
            source: ProblemSource::Fixed(instance),
        }
    }

    fn realize(&self, rep: u64) -> Result<ProblemInstance> {
        match &self.source {
            ProblemSource::Generated(spec) => spec.with_seed_offset(rep).realize(),
            ProblemSource::Fixed(instance) => Ok(instance.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Markdown,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            other => Err(Error::Format(format!(
                "unknown output format `{other}`: expected `csv`, `json`, or `markdown`"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub problems: Vec<BenchProblem>,
    pub methods: Vec<BenchMethod>,
    /// Relative residual thresholds, strictly decreasing.
    pub thresholds: Vec<f64>,
    pub repetitions: usize,
    pub max_iter: usize,
    pub output: OutputFormat,
}

impl BenchSpec {
    /// The benchmark's standard row set, in table order.
    pub fn default_methods() -> Vec<BenchMethod> {
        ["cg", "cy:l=4,m=3", "csd:m=3", "cbb:m=4", "dy", "bb1", "sd"]
            .iter()
            .map(|s| BenchMethod::parse(s).expect("default methods parse"))
            .collect()
    }

    /// 1e-1 down to 1e-6 by decades.
    pub fn default_thresholds() -> Vec<f64> {
        (1..=6).map(|e| 10f64.powi(-e)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() {
            return Err(Error::Config("bench needs at least one problem".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("bench needs at least one method".into()));
        }
        if self.thresholds.is_empty() {
            return Err(Error::Config("bench needs at least one threshold".into()));
        }
        for t in &self.thresholds {
            if !t.is_finite() || *t <= 0.0 || *t >= 1.0 {
                return Err(Error::Config(format!(
                    "thresholds must satisfy 0 < t < 1, got {t}"
                )));
            }
        }
        if self.thresholds.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(
                "thresholds must be strictly decreasing".into(),
            ));
        }
        if self.repetitions < 1 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        for m in &self.methods {
            if let BenchMethod::Rule(r) = m {
                r.validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchCell {
    /// Mean first iteration k with ‖g_k‖ ≤ t·‖g_0‖; None when any
    /// repetition missed the threshold within the cap.
    pub mean_iterations: Option<f64>,
    pub converged: usize,
    pub max_iter_reached: usize,
    pub breakdowns: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub method: String,
    pub cells: Vec<BenchCell>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchTable {
    pub problem: String,
    pub rows: Vec<BenchRow>,
    pub elapsed_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub thresholds: Vec<f64>,
    pub repetitions: usize,
    pub max_iter: usize,
    pub tables: Vec<BenchTable>,
}

/// Runs the full grid. Individual solve breakdowns are recorded in their
/// cells; only configuration errors abort.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchReport> {
    spec.validate()?;
    let tightest = *spec.thresholds.last().expect("validated nonempty");
    let mut tables = Vec::with_capacity(spec.problems.len());
    for problem in &spec.problems {
        let started = Instant::now();
        let mut rows = Vec::with_capacity(spec.methods.len());
        for method in &spec.methods {
            let mut crossings: Vec<Vec<Option<usize>>> =
                vec![Vec::with_capacity(spec.repetitions); spec.thresholds.len()];
            let mut converged = 0;
            let mut max_iter_reached = 0;
            let mut breakdowns = 0;
            for rep in 0..spec.repetitions {
                let instance = problem.realize(rep as u64)?;
                let config = SolveConfig {
                    rule: match method {
                        BenchMethod::Rule(r) => r.clone(),
                        BenchMethod::Cg => SteplengthRule::Sd,
                    },
                    tol: tightest,
                    max_iter: spec.max_iter,
                    record_objective: false,
                    diagnostics: None,
                    ..Default::default()
                };
                let history = match method {
                    BenchMethod::Cg => solve_cg(&instance, &config)?,
                    BenchMethod::Rule(_) => solve_gradient(&instance, &config)?,
                };
                match history.status {
                    SolveStatus::Converged => converged += 1,
                    SolveStatus::MaxIterReached => max_iter_reached += 1,
                    SolveStatus::NumericalBreakdown { .. } => breakdowns += 1,
                }
                for (ti, t) in spec.thresholds.iter().enumerate() {
                    let cut = t * history.ref_norm;
                    let hit = history
                        .records
                        .iter()
                        .find(|r| r.grad_norm <= cut)
                        .map(|r| r.k);
                    crossings[ti].push(hit);
                }
            }
            let cells = crossings
                .iter()
                .map(|reps| {
                    let mean = if reps.iter().all(|c| c.is_some()) {
                        let total: usize = reps.iter().map(|c| c.unwrap()).sum();
                        Some(total as f64 / reps.len() as f64)
                    } else {
                        None
                    };
                    BenchCell {
                        mean_iterations: mean,
                        converged,
                        max_iter_reached,
                        breakdowns,
                    }
                })
                .collect();
            rows.push(BenchRow {
                method: method.label(),
                cells,
            });
        }
        tables.push(BenchTable {
            problem: problem.label.clone(),
            rows,
            elapsed_seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok(BenchReport {
        thresholds: spec.thresholds.clone(),
        repetitions: spec.repetitions,
        max_iter: spec.max_iter,
        tables,
    })
}

fn format_mean(mean: f64) -> String {
    if mean.fract() == 0.0 {
        format!("{}", mean as u64)
    } else {
        format!("{mean:.1}")
    }
}

impl BenchReport {
    /// Long-form rows for plotting; no timings, so repeated runs of the
    /// same spec produce byte-identical output.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "problem,method,threshold,mean_iterations,converged,max_iter_reached,breakdowns"
        )?;
        for table in &self.tables {
            for row in &table.rows {
                for (t, cell) in self.thresholds.iter().zip(&row.cells) {
                    let mean = cell
                        .mean_iterations
                        .map(|m| m.to_string())
                        .unwrap_or_default();
                    writeln!(
                        w,
                        "{},{},{:e},{},{},{},{}",
                        table.problem,
                        row.method,
                        t,
                        mean,
                        cell.converged,
                        cell.max_iter_reached,
                        cell.breakdowns
                    )?;
                }
            }
        }
        Ok(())
    }

    /// One table per problem; per-column minima bold, misses shown as `\`.
    pub fn write_markdown<W: Write>(&self, mut w: W) -> Result<()> {
        for table in &self.tables {
            writeln!(w, "### {}", table.problem)?;
            writeln!(w)?;
            write!(w, "| method |")?;
            for t in &self.thresholds {
                write!(w, " {t:e} |")?;
            }
            writeln!(w)?;
            write!(w, "| --- |")?;
            for _ in &self.thresholds {
                write!(w, " --- |")?;
            }
            writeln!(w)?;
            let col_minima: Vec<Option<f64>> = (0..self.thresholds.len())
                .map(|ti| {
                    table
                        .rows
                        .iter()
                        .filter_map(|r| r.cells[ti].mean_iterations)
                        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
                })
                .collect();
            for row in &table.rows {
                write!(w, "| {} |", row.method)?;
                for (ti, cell) in row.cells.iter().enumerate() {
                    match cell.mean_iterations {
                        None => write!(w, " \\ |")?,
                        Some(m) => {
                            let text = format_mean(m);
                            if col_minima[ti] == Some(m) {
                                write!(w, " **{text}** |")?;
                            } else {
                                write!(w, " {text} |")?;
                            }
                        }
                    }
                }
                writeln!(w)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Full structured report, cell misses as null, timings included.
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)
            .map_err(|e| Error::Format(format!("serializing bench report: {e}")))?;
        Ok(())
    }
}
