//! Single-process simulation of two distributed steplength evaluations.
//!
//! The operator's rows are split into contiguous blocks, one per simulated
//! processor. Each iteration every processor ends up holding the full
//! gradient (the mandatory all-gather, `gather_volume`), and the steplength
//! quotient is evaluated one of two ways:
//!
//! * gather: every matvec result is assembled globally and both dot
//!   products run in canonical left-to-right order. Costs n(p-1) scalars
//!   per matvec, reproduces the sequential steplength bit for bit.
//! * reduce: the final matvec stays block-local; each processor computes
//!   its partial dot and the p partials are summed in a fixed order.
//!   Costs p-1 scalars, but the regrouped denominator sum can differ from
//!   the canonical order in the last bits.
//!
//! Intermediate powers (quotients with rho > 0) must be assembled under
//! both strategies, since the next matvec needs the whole vector; only the
//! last product is cheap to keep local. The simulation counts traffic in
//! scalar values and measures each steplength's relative divergence from
//! the sequential oracle, which is the actual cost/precision tradeoff of
//! interest; no real message passing is involved.

use std::io::Write;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{dot_unchecked, rayleigh_step, SpdOperator, Vector};
use crate::problems::ProblemInstance;
use crate::solver::{solve_loop, ConvergenceHistory, SolveConfig};
use crate::steplengths::{AlphaPair, QuotientKernel, SteplengthRule};

/// Contiguous near-equal row blocks, one per simulated processor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionPlan {
    pub n: usize,
    pub p: usize,
    pub row_ranges: Vec<Range<usize>>,
}

/// Splits n rows into p contiguous blocks with sizes differing by at most
/// one; remainder rows go to the first blocks.
pub fn partition_rows(n: usize, p: usize) -> Result<PartitionPlan> {
    if p < 1 || p > n {
        return Err(Error::Config(format!(
            "processor count p = {p} must satisfy 1 <= p <= n = {n}"
        )));
    }
    let base = n / p;
    let remainder = n % p;
    let mut row_ranges = Vec::with_capacity(p);
    let mut start = 0;
    for b in 0..p {
        let size = base + usize::from(b < remainder);
        row_ranges.push(start..start + size);
        start += size;
    }
    Ok(PartitionPlan { n, p, row_ranges })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Ga,
    Ra,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Ga => "ga",
            Strategy::Ra => "ra",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ga" => Ok(Strategy::Ga),
            "ra" => Ok(Strategy::Ra),
            other => Err(Error::Format(format!(
                "unknown strategy `{other}`: expected `ga` or `ra`"
            ))),
        }
    }
}

/// Order in which the reduce strategy combines the p partial sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceOrder {
    /// Processor 0 upward; the default, and identical to the canonical
    /// order when every block has a single row.
    Ascending,
    /// Pairwise rounds, for studying grouping effects.
    Tree,
}

impl FromStr for ReduceOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascending" => Ok(ReduceOrder::Ascending),
            "tree" => Ok(ReduceOrder::Tree),
            other => Err(Error::Format(format!(
                "unknown reduce order `{other}`: expected `ascending` or `tree`"
            ))),
        }
    }
}

/// One iteration's communication and divergence measurements.
#[derive(Clone, Copy, Debug)]
pub struct CommRecord {
    pub k: usize,
    pub strategy: Strategy,
    /// Scalars crossing the interconnect for the steplength itself;
    /// zero on iterations that reuse a held steplength.
    pub scalars_sent: u64,
    /// Scalars for the mandatory gradient all-gather, n(p-1); identical
    /// between strategies.
    pub gather_volume: u64,
    pub alpha: f64,
    /// |alpha - alpha_sequential| / |alpha_sequential|.
    pub divergence: f64,
}

#[derive(Clone, Debug, Default)]
pub struct CommTrace {
    pub records: Vec<CommRecord>,
}

impl CommTrace {
    pub fn total_scalars_sent(&self) -> u64 {
        self.records.iter().map(|r| r.scalars_sent).sum()
    }

    pub fn total_gather_volume(&self) -> u64 {
        self.records.iter().map(|r| r.gather_volume).sum()
    }

    pub fn max_divergence(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(r.divergence))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,strategy,scalars_sent,gather_volume,alpha,divergence")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{:e},{:e}",
                r.k, r.strategy, r.scalars_sent, r.gather_volume, r.alpha, r.divergence
            )?;
        }
        Ok(())
    }
}

fn reduce_partials(partials: &[f64], order: ReduceOrder) -> f64 {
    match order {
        ReduceOrder::Ascending => {
            let mut acc = partials[0];
            for c in &partials[1..] {
                acc += *c;
            }
            acc
        }
        ReduceOrder::Tree => {
            let mut level = partials.to_vec();
            while level.len() > 1 {
                let mut next = Vec::with_capacity(level.len().div_ceil(2));
                for pair in level.chunks(2) {
                    next.push(if pair.len() == 2 {
                        pair[0] + pair[1]
                    } else {
                        pair[0]
                    });
                }
                level = next;
            }
            level[0]
        }
    }
}

/// Quotient kernel that routes every steplength evaluation through the
/// chosen strategy while shadowing the sequential value for divergence
/// measurement.
pub struct StrategyKernel<'a> {
    plan: &'a PartitionPlan,
    strategy: Strategy,
    order: ReduceOrder,
    pending_scalars: u64,
    records: Vec<CommRecord>,
}

impl<'a> StrategyKernel<'a> {
    pub fn new(plan: &'a PartitionPlan, strategy: Strategy, order: ReduceOrder) -> Self {
        StrategyKernel {
            plan,
            strategy,
            order,
            pending_scalars: 0,
            records: Vec::new(),
        }
    }

    pub fn into_trace(self) -> CommTrace {
        CommTrace {
            records: self.records,
        }
    }

    /// Scalars moved by one all-gather of a length-n vector: each block is
    /// sent to the p-1 other processors.
    fn gather_cost(&self) -> u64 {
        (self.plan.n as u64) * (self.plan.p as u64 - 1)
    }

    /// w = A x computed block by block. Row results do not depend on the
    /// partition, so the assembled vector is bitwise the sequential matvec.
    fn blockwise_matvec(&self, a: &SpdOperator, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.plan.n];
        for r in &self.plan.row_ranges {
            a.matvec_range(r.clone(), x, &mut out[r.clone()]);
        }
        out
    }
}

impl QuotientKernel for StrategyKernel<'_> {
    fn rayleigh(&mut self, a: &SpdOperator, v: &Vector, rho: u32) -> Result<AlphaPair> {
        if a.dimension() != self.plan.n || v.len() != self.plan.n {
            return Err(Error::DimensionMismatch {
                context: "partition plan",
                expected: self.plan.n,
                got: a.dimension().min(v.len()),
            });
        }
        let canonical = rayleigh_step(a, v, rho)?;

        // intermediate powers are assembled under both strategies: the
        // next matvec needs the full vector on every processor
        let mut power: Vec<f64> = v.to_vec();
        for _ in 0..rho {
            power = self.blockwise_matvec(a, &power);
            self.pending_scalars += self.gather_cost();
        }
        let num = dot_unchecked(v.as_slice(), &power);

        let value = match self.strategy {
            Strategy::Ga => {
                let last = self.blockwise_matvec(a, &power);
                self.pending_scalars += self.gather_cost();
                num / dot_unchecked(v.as_slice(), &last)
            }
            Strategy::Ra => {
                let mut scratch = vec![0.0; self.plan.n];
                let mut partials = Vec::with_capacity(self.plan.p);
                for r in &self.plan.row_ranges {
                    a.matvec_range(r.clone(), &power, &mut scratch[r.clone()]);
                    partials.push(dot_unchecked(&v.as_slice()[r.clone()], &scratch[r.clone()]));
                }
                self.pending_scalars += self.plan.p as u64 - 1;
                num / reduce_partials(&partials, self.order)
            }
        };
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::NumericalBreakdown(format!(
                "strategy Rayleigh quotient is {value} (sequential value {canonical})"
            )));
        }
        Ok(AlphaPair { value, canonical })
    }

    fn end_iteration(&mut self, k: usize, alpha: AlphaPair) {
        self.records.push(CommRecord {
            k,
            strategy: self.strategy,
            scalars_sent: std::mem::take(&mut self.pending_scalars),
            gather_volume: self.gather_cost(),
            alpha: alpha.value,
            divergence: alpha.divergence(),
        });
    }
}

fn one_shot(
    plan: &PartitionPlan,
    a: &SpdOperator,
    g: &Vector,
    strategy: Strategy,
) -> Result<(f64, CommRecord)> {
    let mut kernel = StrategyKernel::new(plan, strategy, ReduceOrder::Ascending);
    let pair = kernel.rayleigh(a, g, 0)?;
    Ok((
        pair.value,
        CommRecord {
            k: 0,
            strategy,
            scalars_sent: kernel.pending_scalars,
            gather_volume: 0,
            alpha: pair.value,
            divergence: pair.divergence(),
        },
    ))
}

/// One steepest-descent quotient under the gather strategy: every block's
/// slice of Ag is assembled and both dots run in canonical order, so the
/// value is bitwise the sequential one. Steplength traffic: n(p-1).
pub fn ga_steplength(
    plan: &PartitionPlan,
    a: &SpdOperator,
    g: &Vector,
) -> Result<(f64, CommRecord)> {
    one_shot(plan, a, g, Strategy::Ga)
}

/// One steepest-descent quotient under the reduce strategy: each block
/// computes a partial denominator dot and the p partials are summed in
/// ascending processor order. Steplength traffic: p-1.
pub fn ra_steplength(
    plan: &PartitionPlan,
    a: &SpdOperator,
    g: &Vector,
) -> Result<(f64, CommRecord)> {
    one_shot(plan, a, g, Strategy::Ra)
}

/// Full solve with every steplength evaluation routed through the chosen
/// strategy. The explicit `rule` wins over `config.rule`. The history is
/// comparable record for record with the sequential solver's; the trace
/// has one record per executed iteration.
pub fn simulate_parallel_solve(
    problem: &ProblemInstance,
    rule: SteplengthRule,
    plan: &PartitionPlan,
    strategy: Strategy,
    config: &SolveConfig,
) -> Result<(ConvergenceHistory, CommTrace)> {
    simulate_with_reduce_order(
        problem,
        rule,
        plan,
        strategy,
        ReduceOrder::Ascending,
        config,
    )
}

/// [`simulate_parallel_solve`] with the reduce order exposed.
pub fn simulate_with_reduce_order(
    problem: &ProblemInstance,
    rule: SteplengthRule,
    plan: &PartitionPlan,
    strategy: Strategy,
    order: ReduceOrder,
    config: &SolveConfig,
) -> Result<(ConvergenceHistory, CommTrace)> {
    if plan.n != problem.dimension() {
        return Err(Error::DimensionMismatch {
            context: "partition plan",
            expected: problem.dimension(),
            got: plan.n,
        });
    }
    let effective = SolveConfig {
        rule,
        ..config.clone()
    };
    let mut kernel = StrategyKernel::new(plan, strategy, order);
    let history = solve_loop(problem, &effective, &mut kernel)?;
    Ok((history, kernel.into_trace()))
}
