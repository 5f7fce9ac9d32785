//! Steplength rules for gradient iterations on SPD systems.
//!
//! A rule is a pure phase schedule (which kind of step happens at iteration
//! k) plus a small set of quotient evaluations. All Rayleigh quotients are
//! requested through a [`QuotientKernel`], so the same rule code runs both
//! sequentially and inside the communication-strategy simulator; the kernel
//! also carries a `canonical` shadow value (what strict sequential
//! arithmetic produces for the same inputs) used to quantify steplength
//! divergence under reordered reductions.
//!
//! Rules:
//! - `sd`: steepest descent, alpha = g'g / g'Ag.
//! - `bb1` / `bb2`: spectral steplengths from the previous gradient
//!   (g'g / g'Ag respectively g'Ag / g'A^2g evaluated at g_{k-1}).
//!   At k = 0 no previous gradient exists; the value falls back to the
//!   steepest-descent quotient of g_0 while keeping the rule's own branch
//!   label.
//! - `y`: the Yuan steplength (see [`yuan_step`]) with a steepest-descent
//!   start.
//! - `dy`, `yb`, `ybr:m=..`: fixed patterns mixing SD and Yuan steps
//!   (`ybr` appends m hold steps per period).
//! - `csd:m=..` / `cbb:m=..`: cyclic SD / cyclic BB1, recomputing every m
//!   iterations and holding in between.
//! - `cy:l=..,m=..`: one SD step, one Yuan step, l further SD steps, then
//!   m holds, repeating with period l + m + 2.
//! - `gmr:tau=..,rho=..`: the general retarded quotient
//!   alpha_k = (g_t' A^r g_t) / (g_t' A^(r+1) g_t) with t = tau(k) drawn
//!   from the window {max(0, k-m), ..., k} and r = rho(k) >= 0.
//!
//! No safeguarding is applied anywhere: a non-finite or non-positive
//! steplength is reported as a numerical breakdown, never clipped.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{dot_unchecked, rayleigh_step, SpdOperator, Vector};

/// Which formula actually produced the steplength at one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Sd,
    Y,
    Bb1,
    Bb2,
    Hold,
    Gmr,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Branch::Sd => "sd",
            Branch::Y => "y",
            Branch::Bb1 => "bb1",
            Branch::Bb2 => "bb2",
            Branch::Hold => "hold",
            Branch::Gmr => "gmr",
        };
        f.write_str(s)
    }
}

/// A positive, finite steplength together with the branch that produced it.
#[derive(Clone, Copy, Debug)]
pub struct StepResult {
    pub alpha: f64,
    pub branch: Branch,
}

/// A steplength value paired with its strict-sequential reference.
///
/// For [`CanonicalKernel`] the two fields are equal. Strategy kernels that
/// reorder reductions put the reordered result in `value` and the value
/// sequential arithmetic would give for the same operands in `canonical`.
#[derive(Clone, Copy, Debug)]
pub struct AlphaPair {
    pub value: f64,
    pub canonical: f64,
}

impl AlphaPair {
    pub(crate) fn exact(v: f64) -> Self {
        AlphaPair {
            value: v,
            canonical: v,
        }
    }

    /// |value - canonical| / |canonical|.
    pub fn divergence(&self) -> f64 {
        if self.value == self.canonical {
            0.0
        } else {
            (self.value - self.canonical).abs() / self.canonical.abs()
        }
    }
}

/// Evaluates generalized Rayleigh quotients on behalf of steplength rules.
pub trait QuotientKernel {
    /// (v' A^rho v) / (v' A^(rho+1) v), or the strategy's rendition of it.
    fn rayleigh(&mut self, a: &SpdOperator, v: &Vector, rho: u32) -> Result<AlphaPair>;

    /// Called once per solver iteration after the steplength is fixed.
    fn end_iteration(&mut self, _k: usize, _alpha: AlphaPair) {}
}

/// Strict sequential evaluation; the reference all strategies are compared to.
#[derive(Clone, Copy, Debug, Default)]
pub struct CanonicalKernel;

impl QuotientKernel for CanonicalKernel {
    fn rayleigh(&mut self, a: &SpdOperator, v: &Vector, rho: u32) -> Result<AlphaPair> {
        Ok(AlphaPair::exact(rayleigh_step(a, v, rho)?))
    }
}

/// Per-iteration state a rule needs: the current gradient, the previous
/// gradient, the previous steplength, cached steepest-descent quotients, and
/// the squared length of the last step.
///
/// At k = 0 every `prev` field is absent. `advance` maintains
/// `s_prev_sq = alpha_prev^2 * ||g_prev||^2` (the step is s = -alpha g) and
/// carries the current SD quotient into `sd_prev`, so a Yuan step only ever
/// sees an `sd_prev` that some earlier step actually computed.
pub struct SolverContext<'a> {
    op: &'a SpdOperator,
    k: usize,
    g_curr: Vector,
    gnorm_sq: f64,
    g_prev: Option<Vector>,
    alpha_prev: Option<AlphaPair>,
    sd_curr: Option<AlphaPair>,
    sd_prev: Option<AlphaPair>,
    s_prev_sq: Option<f64>,
}

impl<'a> SolverContext<'a> {
    pub fn new(op: &'a SpdOperator, g0: Vector) -> Result<Self> {
        if g0.len() != op.dimension() {
            return Err(Error::DimensionMismatch {
                context: "SolverContext",
                expected: op.dimension(),
                got: g0.len(),
            });
        }
        let gnorm_sq = dot_unchecked(g0.as_slice(), g0.as_slice());
        Ok(SolverContext {
            op,
            k: 0,
            g_curr: g0,
            gnorm_sq,
            g_prev: None,
            alpha_prev: None,
            sd_curr: None,
            sd_prev: None,
            s_prev_sq: None,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn operator(&self) -> &SpdOperator {
        self.op
    }

    pub fn gradient(&self) -> &Vector {
        &self.g_curr
    }

    pub fn grad_norm_sq(&self) -> f64 {
        self.gnorm_sq
    }

    /// SD quotient of the current gradient if some step already computed it.
    pub fn sd_curr_cached(&self) -> Option<f64> {
        self.sd_curr.map(|p| p.value)
    }

    /// SD quotient of the previous gradient, when a step computed it.
    pub fn sd_prev_cached(&self) -> Option<f64> {
        self.sd_prev.map(|p| p.value)
    }

    /// Lazily computes and caches the SD quotient of the current gradient.
    pub(crate) fn sd_quotient<K: QuotientKernel>(&mut self, kernel: &mut K) -> Result<AlphaPair> {
        if let Some(p) = self.sd_curr {
            return Ok(p);
        }
        let p = kernel.rayleigh(self.op, &self.g_curr, 0)?;
        self.sd_curr = Some(p);
        Ok(p)
    }

    /// SD quotient of the previous gradient, computing it if no earlier step
    /// left it cached (a BB1 step after holds, for instance).
    pub(crate) fn sd_prev_quotient<K: QuotientKernel>(
        &mut self,
        kernel: &mut K,
    ) -> Result<AlphaPair> {
        if let Some(p) = self.sd_prev {
            return Ok(p);
        }
        let g_prev = self.g_prev.as_ref().ok_or_else(|| {
            Error::RuleSequencing("no previous gradient before iteration 1".into())
        })?;
        let p = kernel.rayleigh(self.op, g_prev, 0)?;
        self.sd_prev = Some(p);
        Ok(p)
    }

    /// Shifts the state to iteration k+1 after a step of length `alpha`.
    pub(crate) fn advance(&mut self, alpha: AlphaPair, g_next: Vector) {
        self.s_prev_sq = Some(alpha.value * alpha.value * self.gnorm_sq);
        self.gnorm_sq = dot_unchecked(g_next.as_slice(), g_next.as_slice());
        self.g_prev = Some(std::mem::replace(&mut self.g_curr, g_next));
        self.sd_prev = self.sd_curr.take();
        self.alpha_prev = Some(alpha);
        self.k += 1;
    }
}

/// Keeps the last `retard + 1` gradients for retarded (GMR) rules.
pub struct GradientRing {
    cap: usize,
    entries: VecDeque<(usize, Vector)>,
}

impl GradientRing {
    pub fn new(retard: usize) -> Self {
        GradientRing {
            cap: retard + 1,
            entries: VecDeque::with_capacity(retard + 2),
        }
    }

    pub fn push(&mut self, k: usize, g: Vector) {
        if self.entries.len() == self.cap {
            self.entries.pop_front();
        }
        self.entries.push_back((k, g));
    }

    pub fn get(&self, k: usize) -> Option<&Vector> {
        self.entries.iter().find(|(kk, _)| *kk == k).map(|(_, g)| g)
    }
}

/// Retard schedule tau(k) for GMR rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauSchedule {
    /// tau(k) = k.
    Current,
    /// tau(k) = max(0, k - j).
    Lag(usize),
}

impl TauSchedule {
    pub fn tau(&self, k: usize) -> usize {
        match self {
            TauSchedule::Current => k,
            TauSchedule::Lag(j) => k.saturating_sub(*j),
        }
    }

    /// Maximum look-back; the admissible window is {max(0, k-m), ..., k}.
    pub fn retard(&self) -> usize {
        match self {
            TauSchedule::Current => 0,
            TauSchedule::Lag(j) => *j,
        }
    }
}

/// Power schedule rho(k) >= 0 for GMR rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhoSchedule {
    Constant(u32),
}

impl RhoSchedule {
    pub fn rho(&self, _k: usize) -> u32 {
        match self {
            RhoSchedule::Constant(r) => *r,
        }
    }
}

/// Which formula the schedule calls for at an iteration, before evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlannedStep {
    Sd,
    Yuan,
    Bb1,
    Bb2,
    Hold,
    Gmr,
}

/// A steplength rule: one of the fixed kinds plus its parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SteplengthRule {
    Sd,
    Bb1,
    Bb2,
    Y,
    Dy,
    Yb,
    Ybr { m: usize },
    Csd { m: usize },
    Cbb { m: usize },
    Cy { l: usize, m: usize },
    Gmr { tau: TauSchedule, rho: RhoSchedule },
}

impl SteplengthRule {
    /// Checks parameter ranges (cycle lengths >= 1, lags >= 1).
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("parameter `{what}` must be >= 1")));
        match self {
            SteplengthRule::Ybr { m } | SteplengthRule::Csd { m } | SteplengthRule::Cbb { m } => {
                if *m < 1 {
                    return bad("m");
                }
            }
            SteplengthRule::Cy { l, m } => {
                if *l < 1 {
                    return bad("l");
                }
                if *m < 1 {
                    return bad("m");
                }
            }
            SteplengthRule::Gmr { tau, .. } => {
                if let TauSchedule::Lag(j) = tau {
                    if *j < 1 {
                        return bad("lag");
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The pure phase schedule: what kind of step happens at iteration k.
    ///
    /// Every cyclic rule opens its period with a computed step, so a hold is
    /// never scheduled at k = 0; Yuan steps are always scheduled directly
    /// after a computed step, so the SD quotient they need is in the cache.
    pub fn planned(&self, k: usize) -> PlannedStep {
        match self {
            SteplengthRule::Sd => PlannedStep::Sd,
            SteplengthRule::Bb1 => PlannedStep::Bb1,
            SteplengthRule::Bb2 => PlannedStep::Bb2,
            SteplengthRule::Y => {
                if k == 0 {
                    PlannedStep::Sd
                } else {
                    PlannedStep::Yuan
                }
            }
            SteplengthRule::Dy => {
                if k % 4 < 2 {
                    PlannedStep::Sd
                } else {
                    PlannedStep::Yuan
                }
            }
            SteplengthRule::Yb => match k % 3 {
                1 => PlannedStep::Yuan,
                _ => PlannedStep::Sd,
            },
            SteplengthRule::Ybr { m } => {
                let r = k % (3 + m);
                if r > 2 {
                    PlannedStep::Hold
                } else if r == 1 {
                    PlannedStep::Yuan
                } else {
                    PlannedStep::Sd
                }
            }
            SteplengthRule::Csd { m } => {
                if k % m == 0 {
                    PlannedStep::Sd
                } else {
                    PlannedStep::Hold
                }
            }
            SteplengthRule::Cbb { m } => {
                if k % m == 0 {
                    PlannedStep::Bb1
                } else {
                    PlannedStep::Hold
                }
            }
            SteplengthRule::Cy { l, m } => {
                let r = k % (l + m + 2);
                if r == 1 {
                    PlannedStep::Yuan
                } else if r < l + 2 {
                    PlannedStep::Sd
                } else {
                    PlannedStep::Hold
                }
            }
            SteplengthRule::Gmr { .. } => PlannedStep::Gmr,
        }
    }

    /// Look-back window the solver must keep gradients for (GMR only).
    pub fn retard(&self) -> usize {
        match self {
            SteplengthRule::Gmr { tau, .. } => tau.retard(),
            _ => 0,
        }
    }

    /// Short upper-case label for tables (CY, BB1, ...).
    pub fn kind_label(&self) -> &'static str {
        match self {
            SteplengthRule::Sd => "SD",
            SteplengthRule::Bb1 => "BB1",
            SteplengthRule::Bb2 => "BB2",
            SteplengthRule::Y => "Y",
            SteplengthRule::Dy => "DY",
            SteplengthRule::Yb => "YB",
            SteplengthRule::Ybr { .. } => "YBR",
            SteplengthRule::Csd { .. } => "CSD",
            SteplengthRule::Cbb { .. } => "CBB",
            SteplengthRule::Cy { .. } => "CY",
            SteplengthRule::Gmr { .. } => "GMR",
        }
    }

    /// Evaluates the scheduled step at `ctx.k()`.
    pub fn step<K: QuotientKernel>(
        &self,
        ctx: &mut SolverContext,
        kernel: &mut K,
        ring: Option<&GradientRing>,
    ) -> Result<StepResult> {
        let eval = self.step_internal(ctx, kernel, ring)?;
        Ok(StepResult {
            alpha: eval.alpha.value,
            branch: eval.branch,
        })
    }

    pub(crate) fn step_internal<K: QuotientKernel>(
        &self,
        ctx: &mut SolverContext,
        kernel: &mut K,
        ring: Option<&GradientRing>,
    ) -> Result<EvalStep> {
        let (alpha, branch) = match self.planned(ctx.k()) {
            PlannedStep::Sd => (ctx.sd_quotient(kernel)?, Branch::Sd),
            PlannedStep::Yuan => (eval_yuan(ctx, kernel)?, Branch::Y),
            PlannedStep::Bb1 => (eval_bb1(ctx, kernel)?, Branch::Bb1),
            PlannedStep::Bb2 => (eval_bb2(ctx, kernel)?, Branch::Bb2),
            PlannedStep::Hold => (eval_hold(ctx)?, Branch::Hold),
            PlannedStep::Gmr => {
                let SteplengthRule::Gmr { tau, rho } = self else {
                    unreachable!()
                };
                (eval_gmr(ctx, kernel, *tau, *rho, ring)?, Branch::Gmr)
            }
        };
        if !alpha.value.is_finite() || alpha.value <= 0.0 {
            return Err(Error::NumericalBreakdown(format!(
                "steplength {} from branch {branch} is not a positive finite number",
                alpha.value
            )));
        }
        Ok(EvalStep { alpha, branch })
    }
}

pub(crate) struct EvalStep {
    pub alpha: AlphaPair,
    pub branch: Branch,
}

/// Steepest descent: the SD quotient of the current gradient.
pub fn sd_step<K: QuotientKernel>(ctx: &mut SolverContext, kernel: &mut K) -> Result<StepResult> {
    let p = ctx.sd_quotient(kernel)?;
    Ok(StepResult {
        alpha: p.value,
        branch: Branch::Sd,
    })
}

/// BB1: the SD quotient of the previous gradient. At k = 0 the value falls
/// back to the SD quotient of g_0 (the branch label stays `bb1`).
pub fn bb1_step<K: QuotientKernel>(ctx: &mut SolverContext, kernel: &mut K) -> Result<StepResult> {
    let p = eval_bb1(ctx, kernel)?;
    Ok(StepResult {
        alpha: p.value,
        branch: Branch::Bb1,
    })
}

/// BB2: (g'Ag)/(g'A^2 g) at the previous gradient, with the same k = 0
/// fallback as [`bb1_step`].
pub fn bb2_step<K: QuotientKernel>(ctx: &mut SolverContext, kernel: &mut K) -> Result<StepResult> {
    let p = eval_bb2(ctx, kernel)?;
    Ok(StepResult {
        alpha: p.value,
        branch: Branch::Bb2,
    })
}

/// The Yuan steplength
///
/// alpha = 2 / ( sqrt((1/a - 1/b)^2 + 4 ||g_k||^2 / s's) + 1/a + 1/b )
///
/// where a and b are the SD quotients of the previous and current gradients
/// and s = x_k - x_{k-1}. Requires k >= 1 with the previous SD quotient in
/// the cache; a zero step norm means the iteration already converged.
pub fn yuan_step<K: QuotientKernel>(ctx: &mut SolverContext, kernel: &mut K) -> Result<StepResult> {
    let p = eval_yuan(ctx, kernel)?;
    Ok(StepResult {
        alpha: p.value,
        branch: Branch::Y,
    })
}

pub(crate) fn yuan_alpha(sd_prev: f64, sd_curr: f64, gnorm_sq: f64, s_prev_sq: f64) -> f64 {
    let inv_a = 1.0 / sd_prev;
    let inv_b = 1.0 / sd_curr;
    let d = inv_a - inv_b;
    let disc = d * d + 4.0 * gnorm_sq / s_prev_sq;
    2.0 / (disc.sqrt() + inv_a + inv_b)
}

fn eval_yuan<K: QuotientKernel>(ctx: &mut SolverContext, kernel: &mut K) -> Result<AlphaPair> {
    if ctx.k == 0 {
        return Err(Error::RuleSequencing(
            "Yuan step at k = 0: no previous iterate".into(),
        ));
    }
    let sd_prev = ctx.sd_prev.ok_or_else(|| {
        Error::RuleSequencing(
            "Yuan step without a cached SD quotient for the previous gradient".into(),
        )
    })?;
    let s_prev_sq = ctx
        .s_prev_sq
        .ok_or_else(|| Error::RuleSequencing("Yuan step without a previous step".into()))?;
    if s_prev_sq == 0.0 {
        // s = -alpha g_prev vanished: the previous iterate was a solution.
        return Err(Error::ZeroGradient);
    }
    let sd_curr = ctx.sd_quotient(kernel)?;
    let value = yuan_alpha(sd_prev.value, sd_curr.value, ctx.gnorm_sq, s_prev_sq);
    let canonical = yuan_alpha(
        sd_prev.canonical,
        sd_curr.canonical,
        ctx.gnorm_sq,
        s_prev_sq,
    );
    Ok(AlphaPair { value, canonical })
}

fn eval_bb1<K: QuotientKernel>(ctx: &mut SolverContext, kernel: &mut K) -> Result<AlphaPair> {
    if ctx.k == 0 {
        return ctx.sd_quotient(kernel);
    }
    ctx.sd_prev_quotient(kernel)
}

fn eval_bb2<K: QuotientKernel>(ctx: &mut SolverContext, kernel: &mut K) -> Result<AlphaPair> {
    if ctx.k == 0 {
        return ctx.sd_quotient(kernel);
    }
    let g_prev = ctx
        .g_prev
        .as_ref()
        .ok_or_else(|| Error::RuleSequencing("no previous gradient before iteration 1".into()))?;
    kernel.rayleigh(ctx.op, g_prev, 1)
}

fn eval_hold(ctx: &SolverContext) -> Result<AlphaPair> {
    ctx.alpha_prev
        .ok_or_else(|| Error::RuleSequencing("hold step with no previous steplength".into()))
}

fn eval_gmr<K: QuotientKernel>(
    ctx: &mut SolverContext,
    kernel: &mut K,
    tau: TauSchedule,
    rho: RhoSchedule,
    ring: Option<&GradientRing>,
) -> Result<AlphaPair> {
    let k = ctx.k();
    let t = tau.tau(k);
    let window_lo = k.saturating_sub(tau.retard());
    if t < window_lo || t > k {
        return Err(Error::ScheduleViolation(format!(
            "tau({k}) = {t} outside window {window_lo}..={k}"
        )));
    }
    let r = rho.rho(k);
    if t == k {
        // The current gradient: route through the SD cache when rho = 0 so
        // repeated evaluations cost one kernel call.
        if r == 0 {
            return ctx.sd_quotient(kernel);
        }
        let g = ctx.g_curr.clone();
        return kernel.rayleigh(ctx.op, &g, r);
    }
    let ring = ring.ok_or_else(|| {
        Error::ScheduleViolation(format!("tau({k}) = {t} but no gradient history is kept"))
    })?;
    let g_t = ring.get(t).ok_or_else(|| {
        Error::ScheduleViolation(format!("gradient {t} already evicted from the history"))
    })?;
    kernel.rayleigh(ctx.op, g_t, r)
}

// ---------------------------------------------------------------------------
// rule string grammar
// ---------------------------------------------------------------------------

impl fmt::Display for SteplengthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SteplengthRule::Sd => write!(f, "sd"),
            SteplengthRule::Bb1 => write!(f, "bb1"),
            SteplengthRule::Bb2 => write!(f, "bb2"),
            SteplengthRule::Y => write!(f, "y"),
            SteplengthRule::Dy => write!(f, "dy"),
            SteplengthRule::Yb => write!(f, "yb"),
            SteplengthRule::Ybr { m } => write!(f, "ybr:m={m}"),
            SteplengthRule::Csd { m } => write!(f, "csd:m={m}"),
            SteplengthRule::Cbb { m } => write!(f, "cbb:m={m}"),
            SteplengthRule::Cy { l, m } => write!(f, "cy:l={l},m={m}"),
            SteplengthRule::Gmr { tau, rho } => {
                let t = match tau {
                    TauSchedule::Current => "current".to_string(),
                    TauSchedule::Lag(j) => format!("lag{j}"),
                };
                let RhoSchedule::Constant(r) = rho;
                write!(f, "gmr:tau={t},rho={r}")
            }
        }
    }
}

/// Splits `k1=v1,k2=v2,...`, rejecting malformed or duplicate pairs.
fn parse_params<'s>(kind: &str, rest: &'s str) -> Result<Vec<(&'s str, &'s str)>> {
    let mut out: Vec<(&str, &str)> = Vec::new();
    for tok in rest.split(',') {
        let Some((key, value)) = tok.split_once('=') else {
            return Err(Error::Config(format!(
                "rule `{kind}`: expected key=value, got `{tok}`"
            )));
        };
        if out.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!(
                "rule `{kind}`: duplicate parameter `{key}`"
            )));
        }
        out.push((key, value));
    }
    Ok(out)
}

fn take_param<'s>(kind: &str, params: &mut Vec<(&'s str, &'s str)>, key: &str) -> Result<&'s str> {
    match params.iter().position(|(k, _)| *k == key) {
        Some(i) => Ok(params.remove(i).1),
        None => Err(Error::Config(format!(
            "rule `{kind}` requires parameter `{key}`"
        ))),
    }
}

fn parse_count(kind: &str, key: &str, value: &str) -> Result<usize> {
    match value.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(Error::Config(format!(
            "rule `{kind}`: parameter `{key}` must be a positive integer, got `{value}`"
        ))),
    }
}

fn reject_leftovers(kind: &str, params: &[(&str, &str)]) -> Result<()> {
    if let Some((key, _)) = params.first() {
        return Err(Error::Config(format!(
            "rule `{kind}` does not take parameter `{key}`"
        )));
    }
    Ok(())
}

impl FromStr for SteplengthRule {
    type Err = Error;

    /// Parses the rule grammar: `sd`, `bb1`, `bb2`, `y`, `dy`, `yb`,
    /// `ybr:m=2`, `csd:m=3`, `cbb:m=4`, `cy:l=4,m=3`,
    /// `gmr:tau=lag1,rho=0`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (s, None),
        };
        let bare = |rule: SteplengthRule| match rest {
            None => Ok(rule),
            Some(r) => Err(Error::Config(format!(
                "rule `{kind}` takes no parameters, got `{r}`"
            ))),
        };
        match kind {
            "sd" => bare(SteplengthRule::Sd),
            "bb1" => bare(SteplengthRule::Bb1),
            "bb2" => bare(SteplengthRule::Bb2),
            "y" => bare(SteplengthRule::Y),
            "dy" => bare(SteplengthRule::Dy),
            "yb" => bare(SteplengthRule::Yb),
            "ybr" | "csd" | "cbb" => {
                let mut params = parse_params(kind, rest.unwrap_or(""))?;
                let m = parse_count(kind, "m", take_param(kind, &mut params, "m")?)?;
                reject_leftovers(kind, &params)?;
                Ok(match kind {
                    "ybr" => SteplengthRule::Ybr { m },
                    "csd" => SteplengthRule::Csd { m },
                    _ => SteplengthRule::Cbb { m },
                })
            }
            "cy" => {
                let mut params = parse_params(kind, rest.unwrap_or(""))?;
                let l = parse_count(kind, "l", take_param(kind, &mut params, "l")?)?;
                let m = parse_count(kind, "m", take_param(kind, &mut params, "m")?)?;
                reject_leftovers(kind, &params)?;
                Ok(SteplengthRule::Cy { l, m })
            }
            "gmr" => {
                let mut params = parse_params(kind, rest.unwrap_or(""))?;
                let tau_s = take_param(kind, &mut params, "tau")?;
                let rho_s = take_param(kind, &mut params, "rho")?;
                reject_leftovers(kind, &params)?;
                let tau = if tau_s == "current" {
                    TauSchedule::Current
                } else if let Some(lag) = tau_s.strip_prefix("lag") {
                    TauSchedule::Lag(parse_count(kind, "tau", lag)?)
                } else {
                    return Err(Error::Config(format!(
                        "rule `gmr`: unknown tau schedule `{tau_s}` (expected `current` or `lag<j>`)"
                    )));
                };
                let rho = match rho_s.parse::<u32>() {
                    Ok(r) => RhoSchedule::Constant(r),
                    Err(_) => return Err(Error::Config(format!(
                        "rule `gmr`: parameter `rho` must be a nonnegative integer, got `{rho_s}`"
                    ))),
                };
                Ok(SteplengthRule::Gmr { tau, rho })
            }
            _ => Err(Error::Config(format!("unknown rule kind `{kind}`"))),
        }
    }
}
