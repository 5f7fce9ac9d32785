//! Gradient iteration driver and conjugate gradient baseline.
//!
//! Both solvers iterate until the gradient norm falls under a relative
//! threshold, the iteration cap is hit, or a numerical breakdown occurs.
//! Breakdown never aborts the call: the history is truncated at the failing
//! iteration and returned with status [`SolveStatus::NumericalBreakdown`],
//! so benchmark tables can distinguish divergence from slowness. Hard
//! errors (bad config, dimension mismatches) are returned as `Err`.

use std::io::Write;
use std::time::Duration;

use serde::Serialize;

use crate::diagnostics::PropertyACheckConfig;
use crate::error::{Error, Result};
use crate::linalg::{dot_unchecked, SpdOperator, Vector};
use crate::problems::ProblemInstance;
use crate::steplengths::{
    Branch, CanonicalKernel, GradientRing, QuotientKernel, SolverContext, SteplengthRule,
};

/// Denominator of the relative stopping rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormRef {
    /// `‖g_k‖ ≤ tol · ‖g_0‖` (default; scale-invariant in the iterates).
    InitialGradient,
    /// `‖g_k‖ ≤ tol · ‖b‖`.
    Rhs,
}

/// How the gradient moves from one iterate to the next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientUpdate {
    /// g = A x − b recomputed from the iterate each iteration (default;
    /// avoids drift).
    Recompute,
    /// g_{k+1} = g_k − α_k A g_k; one matvec either way, kept for
    /// round-off studies.
    Recurrence,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveStatus {
    Converged,
    MaxIterReached,
    NumericalBreakdown { reason: String },
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterReached => "max_iter_reached",
            SolveStatus::NumericalBreakdown { .. } => "breakdown",
        }
    }
}

/// Branch label in history records; the gradient branches plus CG.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchTag {
    Sd,
    Y,
    Bb1,
    Bb2,
    Hold,
    Gmr,
    Cg,
}

impl BranchTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BranchTag::Sd => "sd",
            BranchTag::Y => "y",
            BranchTag::Bb1 => "bb1",
            BranchTag::Bb2 => "bb2",
            BranchTag::Hold => "hold",
            BranchTag::Gmr => "gmr",
            BranchTag::Cg => "cg",
        }
    }
}

impl From<Branch> for BranchTag {
    fn from(b: Branch) -> Self {
        match b {
            Branch::Sd => BranchTag::Sd,
            Branch::Y => BranchTag::Y,
            Branch::Bb1 => BranchTag::Bb1,
            Branch::Bb2 => BranchTag::Bb2,
            Branch::Hold => BranchTag::Hold,
            Branch::Gmr => BranchTag::Gmr,
        }
    }
}

impl std::fmt::Display for BranchTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Partial gradient energy at one probe index: `below` is
/// G(k,µ) = Σ_{i=1..µ} g_i² and `next_sq` is g_{µ+1}².
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartialEnergy {
    pub mu: usize,
    pub below: f64,
    pub next_sq: f64,
}

/// One history row. Rows 0..iterations-1 describe the step taken from x_k
/// (branch and alpha present); the terminal row carries only the state of
/// the final iterate.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub k: usize,
    pub branch: Option<BranchTag>,
    pub alpha: Option<f64>,
    pub grad_norm: f64,
    /// SD quotient of g_k, when the step computed it.
    pub sd_curr: Option<f64>,
    /// SD quotient of g_{k-1}, when available (Yuan steps need both).
    pub sd_prev: Option<f64>,
    pub objective: Option<f64>,
    pub partial_energies: Option<Vec<PartialEnergy>>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceHistory {
    pub records: Vec<IterationRecord>,
    pub status: SolveStatus,
    /// Number of steps taken (the terminal record's k).
    pub iterations: usize,
    pub final_x: Vector,
    pub final_grad_norm: f64,
    /// Denominator used by the stopping rule (1 when the reference norm
    /// was zero, making the tolerance absolute).
    pub ref_norm: f64,
}

impl ConvergenceHistory {
    pub fn grad_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.grad_norm).collect()
    }

    /// CSV rows `k,branch,alpha,grad_norm`; optional fields render empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,branch,alpha,grad_norm")?;
        for r in &self.records {
            let branch = r.branch.map(|b| b.as_str()).unwrap_or("");
            match r.alpha {
                Some(a) => writeln!(w, "{},{},{:e},{:e}", r.k, branch, a, r.grad_norm)?,
                None => writeln!(w, "{},{},,{:e}", r.k, branch, r.grad_norm)?,
            }
        }
        Ok(())
    }

    /// JSON document with a config echo, status, records, and timings.
    pub fn write_json<W: Write>(
        &self,
        w: W,
        config: &SolveConfig,
        elapsed: Option<Duration>,
    ) -> Result<()> {
        #[derive(Serialize)]
        struct ConfigEcho {
            rule: String,
            tol: f64,
            max_iter: usize,
            norm_ref: &'static str,
            gradient_update: &'static str,
        }
        #[derive(Serialize)]
        struct RecordJson<'a> {
            k: usize,
            branch: Option<&'static str>,
            alpha: Option<f64>,
            grad_norm: f64,
            #[serde(skip_serializing_if = "Option::is_none")]
            sd_curr: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            sd_prev: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            objective: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            partial_energies: Option<&'a [PartialEnergy]>,
        }
        #[derive(Serialize)]
        struct HistoryJson<'a> {
            status: &'static str,
            #[serde(skip_serializing_if = "Option::is_none")]
            breakdown_reason: Option<&'a str>,
            iterations: usize,
            final_grad_norm: f64,
            ref_norm: f64,
            config: ConfigEcho,
            #[serde(skip_serializing_if = "Option::is_none")]
            elapsed_seconds: Option<f64>,
            records: Vec<RecordJson<'a>>,
        }
        let reason = match &self.status {
            SolveStatus::NumericalBreakdown { reason } => Some(reason.as_str()),
            _ => None,
        };
        let doc = HistoryJson {
            status: self.status.as_str(),
            breakdown_reason: reason,
            iterations: self.iterations,
            final_grad_norm: self.final_grad_norm,
            ref_norm: self.ref_norm,
            config: ConfigEcho {
                rule: config.rule.to_string(),
                tol: config.tol,
                max_iter: config.max_iter,
                norm_ref: match config.norm_ref {
                    NormRef::InitialGradient => "initial_gradient",
                    NormRef::Rhs => "rhs",
                },
                gradient_update: match config.gradient_update {
                    GradientUpdate::Recompute => "recompute",
                    GradientUpdate::Recurrence => "recurrence",
                },
            },
            elapsed_seconds: elapsed.map(|d| d.as_secs_f64()),
            records: self
                .records
                .iter()
                .map(|r| RecordJson {
                    k: r.k,
                    branch: r.branch.map(|b| b.as_str()),
                    alpha: r.alpha,
                    grad_norm: r.grad_norm,
                    sd_curr: r.sd_curr,
                    sd_prev: r.sd_prev,
                    objective: r.objective,
                    partial_energies: r.partial_energies.as_deref(),
                })
                .collect(),
        };
        serde_json::to_writer_pretty(w, &doc)
            .map_err(|e| Error::Format(format!("serializing history: {e}")))?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub rule: SteplengthRule,
    /// Relative residual threshold, 0 < tol < 1.
    pub tol: f64,
    pub max_iter: usize,
    pub norm_ref: NormRef,
    pub gradient_update: GradientUpdate,
    pub record_history: bool,
    /// Record f(x_k) = x'Ax/2 − b'x per iteration (costs two dots).
    pub record_objective: bool,
    /// When present, per-iteration partial gradient energies are recorded
    /// at the configured probe indices; requires a diagonal operator with
    /// ascending entries.
    pub diagnostics: Option<PropertyACheckConfig>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            rule: SteplengthRule::Sd,
            tol: 1e-8,
            max_iter: 10_000,
            norm_ref: NormRef::InitialGradient,
            gradient_update: GradientUpdate::Recompute,
            record_history: true,
            record_objective: false,
            diagnostics: None,
        }
    }
}

impl SolveConfig {
    pub fn with_rule(rule: SteplengthRule) -> Self {
        SolveConfig {
            rule,
            ..Default::default()
        }
    }

    fn validate(&self, op: &SpdOperator) -> Result<()> {
        self.rule.validate()?;
        if !self.tol.is_finite() || self.tol <= 0.0 || self.tol >= 1.0 {
            return Err(Error::Config(format!(
                "tol must satisfy 0 < tol < 1, got {}",
                self.tol
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if let Some(diag) = &self.diagnostics {
            diag.validate(op.dimension())?;
            if !diag.mu_list.is_empty() {
                match op.diagonal_entries() {
                    Some(d) if d.windows(2).all(|w| w[0] <= w[1]) => {}
                    _ => {
                        return Err(Error::Config(
                            "partial energy diagnostics need a diagonal operator with ascending entries"
                                .into(),
                        ))
                    }
                }
            }
        }
        Ok(())
    }
}

/// Σ_{i=1..mu} g_i², summed left to right. `mu` is 1-based; mu = n gives
/// exactly dot(g, g).
pub fn partial_gradient_energy(g: &Vector, mu: usize) -> Result<f64> {
    if mu < 1 || mu > g.len() {
        return Err(Error::IndexOutOfRange {
            context: "partial energy probe mu",
            index: mu,
            max: g.len(),
        });
    }
    let s = g.as_slice();
    Ok(dot_unchecked(&s[..mu], &s[..mu]))
}

/// A x − b without finiteness checks, so overflow surfaces as a breakdown
/// status at the next loop head instead of a hard error.
fn raw_residual(op: &SpdOperator, x: &[f64], b: &[f64]) -> Vector {
    let n = op.dimension();
    let mut out = vec![0.0; n];
    op.matvec_range(0..n, x, &mut out);
    for (o, bi) in out.iter_mut().zip(b) {
        *o -= *bi;
    }
    Vector::from_raw(out)
}

fn reference_norm(norm_ref: NormRef, g0_norm: f64, b: &Vector) -> f64 {
    let r = match norm_ref {
        NormRef::InitialGradient => g0_norm,
        NormRef::Rhs => dot_unchecked(b.as_slice(), b.as_slice()).sqrt(),
    };
    if r == 0.0 {
        1.0
    } else {
        r
    }
}

fn energies_for(g: &Vector, mus: &[usize]) -> Vec<PartialEnergy> {
    mus.iter()
        .map(|&mu| PartialEnergy {
            mu,
            below: partial_gradient_energy(g, mu).expect("mu validated against n"),
            next_sq: g[mu] * g[mu],
        })
        .collect()
}

/// Solves A x = b with the configured steplength rule.
///
/// The returned history satisfies: grad_norm strictly positive on every
/// stepped record; status Converged implies the terminal grad_norm is at
/// or under tol times the reference norm.
pub fn solve_gradient(
    problem: &ProblemInstance,
    config: &SolveConfig,
) -> Result<ConvergenceHistory> {
    solve_loop(problem, config, &mut CanonicalKernel)
}

/// The driver behind [`solve_gradient`], generic over the quotient kernel
/// so the communication-strategy simulator can reroute every steplength
/// evaluation while sharing the iteration logic.
pub(crate) fn solve_loop<K: QuotientKernel>(
    problem: &ProblemInstance,
    config: &SolveConfig,
    kernel: &mut K,
) -> Result<ConvergenceHistory> {
    let op = &problem.operator;
    let n = op.dimension();
    config.validate(op)?;
    if problem.rhs.len() != n || problem.x0.len() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_gradient problem",
            expected: n,
            got: problem.rhs.len().min(problem.x0.len()),
        });
    }
    let b = &problem.rhs;
    let mus: &[usize] = config
        .diagnostics
        .as_ref()
        .map(|d| d.mu_list.as_slice())
        .unwrap_or(&[]);

    let mut x: Vec<f64> = problem.x0.to_vec();
    let g0 = raw_residual(op, &x, b.as_slice());
    let mut ctx = SolverContext::new(op, g0)?;
    let ref_norm = reference_norm(config.norm_ref, ctx.grad_norm_sq().sqrt(), b);
    let threshold = config.tol * ref_norm;

    let retard = config.rule.retard();
    let mut ring = (retard > 0).then(|| {
        let mut r = GradientRing::new(retard);
        r.push(0, ctx.gradient().clone());
        r
    });

    let mut records: Vec<IterationRecord> = Vec::new();
    let record_state = |records: &mut Vec<IterationRecord>,
                        k: usize,
                        gnorm: f64,
                        branch: Option<BranchTag>,
                        alpha: Option<f64>,
                        sd_curr: Option<f64>,
                        sd_prev: Option<f64>,
                        x: &[f64],
                        g: &Vector| {
        let objective = config
            .record_objective
            .then(|| 0.5 * (dot_unchecked(x, g.as_slice()) - dot_unchecked(x, b.as_slice())));
        let partial_energies = (!mus.is_empty()).then(|| energies_for(g, mus));
        records.push(IterationRecord {
            k,
            branch,
            alpha,
            grad_norm: gnorm,
            sd_curr,
            sd_prev,
            objective,
            partial_energies,
        });
    };

    let status;
    loop {
        let k = ctx.k();
        let gnorm = ctx.grad_norm_sq().sqrt();
        if !gnorm.is_finite() {
            status = SolveStatus::NumericalBreakdown {
                reason: format!("gradient norm is not finite at iteration {k}"),
            };
            if config.record_history {
                record_state(
                    &mut records,
                    k,
                    gnorm,
                    None,
                    None,
                    None,
                    None,
                    &x,
                    ctx.gradient(),
                );
            }
            break;
        }
        if gnorm <= threshold {
            status = SolveStatus::Converged;
            if config.record_history {
                record_state(
                    &mut records,
                    k,
                    gnorm,
                    None,
                    None,
                    None,
                    None,
                    &x,
                    ctx.gradient(),
                );
            }
            break;
        }
        if k >= config.max_iter {
            status = SolveStatus::MaxIterReached;
            if config.record_history {
                record_state(
                    &mut records,
                    k,
                    gnorm,
                    None,
                    None,
                    None,
                    None,
                    &x,
                    ctx.gradient(),
                );
            }
            break;
        }
        let eval = match config.rule.step_internal(&mut ctx, kernel, ring.as_ref()) {
            Ok(e) => e,
            Err(Error::NumericalBreakdown(reason)) => {
                status = SolveStatus::NumericalBreakdown { reason };
                if config.record_history {
                    record_state(
                        &mut records,
                        k,
                        gnorm,
                        None,
                        None,
                        None,
                        None,
                        &x,
                        ctx.gradient(),
                    );
                }
                break;
            }
            Err(other) => return Err(other),
        };
        if config.record_history {
            record_state(
                &mut records,
                k,
                gnorm,
                Some(eval.branch.into()),
                Some(eval.alpha.value),
                ctx.sd_curr_cached(),
                ctx.sd_prev_cached(),
                &x,
                ctx.gradient(),
            );
        }
        let alpha = eval.alpha.value;
        for (xi, gi) in x.iter_mut().zip(ctx.gradient().iter()) {
            *xi -= alpha * gi;
        }
        let g_next = match config.gradient_update {
            GradientUpdate::Recompute => raw_residual(op, &x, b.as_slice()),
            GradientUpdate::Recurrence => {
                let mut w = vec![0.0; n];
                op.matvec_range(0..n, ctx.gradient().as_slice(), &mut w);
                let g = ctx.gradient().as_slice();
                Vector::from_raw((0..n).map(|i| g[i] - alpha * w[i]).collect())
            }
        };
        kernel.end_iteration(k, eval.alpha);
        ctx.advance(eval.alpha, g_next);
        if let Some(r) = &mut ring {
            r.push(ctx.k(), ctx.gradient().clone());
        }
    }

    Ok(ConvergenceHistory {
        records,
        status,
        iterations: ctx.k(),
        final_grad_norm: ctx.grad_norm_sq().sqrt(),
        final_x: Vector::from_raw(x),
        ref_norm,
    })
}

/// Hestenes-Stiefel conjugate gradient with the same termination contract
/// and history schema as [`solve_gradient`]. The `rule` field of the config
/// is ignored; records carry the `cg` branch tag.
pub fn solve_cg(problem: &ProblemInstance, config: &SolveConfig) -> Result<ConvergenceHistory> {
    let op = &problem.operator;
    let n = op.dimension();
    config.validate(op)?;
    if problem.rhs.len() != n || problem.x0.len() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_cg problem",
            expected: n,
            got: problem.rhs.len().min(problem.x0.len()),
        });
    }
    let b = problem.rhs.as_slice();
    let mus: &[usize] = config
        .diagnostics
        .as_ref()
        .map(|d| d.mu_list.as_slice())
        .unwrap_or(&[]);

    let mut x: Vec<f64> = problem.x0.to_vec();
    // r = b − A x = −g; same norm, and squared components match g's
    let mut r: Vec<f64> = {
        let mut ax = vec![0.0; n];
        op.matvec_range(0..n, &x, &mut ax);
        (0..n).map(|i| b[i] - ax[i]).collect()
    };
    let mut rr = dot_unchecked(&r, &r);
    let ref_norm = reference_norm(config.norm_ref, rr.sqrt(), &problem.rhs);
    let threshold = config.tol * ref_norm;

    let mut records: Vec<IterationRecord> = Vec::new();
    let record_state = |records: &mut Vec<IterationRecord>,
                        k: usize,
                        gnorm: f64,
                        alpha: Option<f64>,
                        x: &[f64],
                        r: &[f64]| {
        if !config.record_history {
            return;
        }
        let objective = config
            .record_objective
            .then(|| -0.5 * (dot_unchecked(x, r) + dot_unchecked(x, b)));
        let rv = Vector::from_raw(r.to_vec());
        let partial_energies = (!mus.is_empty()).then(|| energies_for(&rv, mus));
        records.push(IterationRecord {
            k,
            branch: alpha.map(|_| BranchTag::Cg),
            alpha,
            grad_norm: gnorm,
            sd_curr: None,
            sd_prev: None,
            objective,
            partial_energies,
        });
    };

    let mut p = r.clone();
    let mut k = 0usize;
    let status;
    loop {
        let gnorm = rr.sqrt();
        if !gnorm.is_finite() {
            status = SolveStatus::NumericalBreakdown {
                reason: format!("residual norm is not finite at iteration {k}"),
            };
            record_state(&mut records, k, gnorm, None, &x, &r);
            break;
        }
        if gnorm <= threshold {
            status = SolveStatus::Converged;
            record_state(&mut records, k, gnorm, None, &x, &r);
            break;
        }
        if k >= config.max_iter {
            status = SolveStatus::MaxIterReached;
            record_state(&mut records, k, gnorm, None, &x, &r);
            break;
        }
        let mut w = vec![0.0; n];
        op.matvec_range(0..n, &p, &mut w);
        let pap = dot_unchecked(&p, &w);
        if !pap.is_finite() || pap <= 0.0 {
            status = SolveStatus::NumericalBreakdown {
                reason: format!(
                    "curvature p'Ap = {pap} is not positive; the operator is not positive definite"
                ),
            };
            record_state(&mut records, k, gnorm, None, &x, &r);
            break;
        }
        let alpha = rr / pap;
        record_state(&mut records, k, gnorm, Some(alpha), &x, &r);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * w[i];
        }
        let rr_new = dot_unchecked(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        k += 1;
    }

    Ok(ConvergenceHistory {
        records,
        status,
        iterations: k,
        final_grad_norm: rr.sqrt(),
        final_x: Vector::from_raw(x),
        ref_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{generate_diagonal, SpectrumSpec};
    use approx::assert_relative_eq;

    fn diag_problem(values: Vec<f64>) -> ProblemInstance {
        generate_diagonal(&SpectrumSpec::explicit(values)).unwrap()
    }

    #[test]
    fn cy_hand_trace_on_two_by_two() {
        let p = diag_problem(vec![1.0, 2.0]);
        let cfg = SolveConfig {
            rule: "cy:l=1,m=1".parse().unwrap(),
            tol: 1e-10,
            ..Default::default()
        };
        let h = solve_gradient(&p, &cfg).unwrap();
        assert_eq!(h.status, SolveStatus::Converged);
        assert_eq!(h.iterations, 3);
        assert_eq!(h.records[0].alpha, Some(5.0 / 9.0));
        assert_eq!(h.records[0].branch, Some(BranchTag::Sd));
        assert_eq!(h.records[1].branch, Some(BranchTag::Y));
        assert_relative_eq!(h.records[1].alpha.unwrap(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(h.records[2].alpha.unwrap(), 1.0, max_relative = 1e-14);
        assert!(h.final_grad_norm <= 1e-14);
        // Yuan record carries both SD quotients
        assert_eq!(h.records[1].sd_prev, Some(5.0 / 9.0));
        assert_relative_eq!(
            h.records[1].sd_curr.unwrap(),
            5.0 / 6.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn sd_on_identity_converges_in_one_step_with_alpha_one() {
        let spec = SpectrumSpec {
            n: 4,
            distribution: crate::problems::Distribution::Uniform,
            lambda_max: 1.0,
            seed: 0,
        };
        let mut p = generate_diagonal(&spec).unwrap();
        p.rhs = Vector::new(vec![0.3, -0.2, 0.9, 2.0]).unwrap();
        let h = solve_gradient(&p, &SolveConfig::default()).unwrap();
        assert_eq!(h.status, SolveStatus::Converged);
        assert_eq!(h.iterations, 1);
        assert_eq!(h.records[0].alpha, Some(1.0));
    }

    /// DY schedules SD,SD,Y,Y,SD; on diag(1,2) the first Yuan step (k=2)
    /// removes the top eigencomponent, the second holds the bottom one at
    /// half rate, and the SD step at k=4 finishes. Five steps, not three:
    /// only schedules whose Yuan step is followed directly by SD terminate
    /// in three on 2-d problems.
    #[test]
    fn dy_takes_five_steps_on_the_trace_problem() {
        let p = diag_problem(vec![1.0, 2.0]);
        let cfg = SolveConfig {
            rule: SteplengthRule::Dy,
            tol: 1e-12,
            ..Default::default()
        };
        let h = solve_gradient(&p, &cfg).unwrap();
        assert_eq!(h.status, SolveStatus::Converged);
        assert_eq!(h.iterations, 5);
        let alphas: Vec<f64> = h.records[..5].iter().map(|r| r.alpha.unwrap()).collect();
        assert_eq!(alphas[0], 5.0 / 9.0);
        assert_relative_eq!(alphas[1], 5.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(alphas[2], 0.5, max_relative = 1e-13);
        assert_relative_eq!(alphas[3], 0.5, max_relative = 1e-13);
        assert_relative_eq!(alphas[4], 1.0, max_relative = 1e-13);
    }

    #[test]
    fn yb_terminates_in_three_on_two_by_two() {
        let p = diag_problem(vec![1.0, 2.0]);
        let cfg = SolveConfig {
            rule: SteplengthRule::Yb,
            tol: 1e-10,
            ..Default::default()
        };
        let h = solve_gradient(&p, &cfg).unwrap();
        assert_eq!(h.status, SolveStatus::Converged);
        assert!(h.iterations <= 3);
    }

    #[test]
    fn already_solved_start_converges_immediately() {
        let mut p = diag_problem(vec![1.0, 2.0]);
        // b = A x0 so g_0 = 0
        p.rhs = p.operator.matvec(&p.x0).unwrap();
        let h = solve_gradient(&p, &SolveConfig::default()).unwrap();
        assert_eq!(h.status, SolveStatus::Converged);
        assert_eq!(h.iterations, 0);
        assert_eq!(h.records.len(), 1);
        assert_eq!(h.records[0].branch, None);
    }

    #[test]
    fn max_iter_reached_is_reported() {
        let spec = SpectrumSpec {
            n: 50,
            distribution: crate::problems::Distribution::LogUniform,
            lambda_max: 1e6,
            seed: 2,
        };
        let p = generate_diagonal(&spec).unwrap();
        let cfg = SolveConfig {
            tol: 1e-14,
            max_iter: 10,
            ..Default::default()
        };
        let h = solve_gradient(&p, &cfg).unwrap();
        assert_eq!(h.status, SolveStatus::MaxIterReached);
        assert_eq!(h.iterations, 10);
        assert_eq!(h.records.len(), 11);
    }

    #[test]
    fn indefinite_operator_breaks_down_with_status() {
        // diag(1, -1) stored as CSR; with b = (1,1), x0 = 0 the first SD
        // quotient has denominator g'Ag = 0
        let op = SpdOperator::csr(2, vec![0, 1, 2], vec![0, 1], vec![1.0, -1.0]).unwrap();
        let p = ProblemInstance::new(
            op,
            Vector::new(vec![1.0, 1.0]).unwrap(),
            Vector::zeros(2),
            "indefinite",
        )
        .unwrap();
        let h = solve_gradient(&p, &SolveConfig::default()).unwrap();
        assert!(matches!(h.status, SolveStatus::NumericalBreakdown { .. }));
        assert_eq!(h.iterations, 0);
        let h = solve_cg(&p, &SolveConfig::default()).unwrap();
        let SolveStatus::NumericalBreakdown { reason } = &h.status else {
            panic!("expected breakdown, got {:?}", h.status);
        };
        assert!(reason.contains("positive definite"), "{reason}");
    }

    #[test]
    fn cg_on_identity_takes_one_iteration() {
        let spec = SpectrumSpec {
            n: 6,
            distribution: crate::problems::Distribution::Uniform,
            lambda_max: 1.0,
            seed: 0,
        };
        let mut p = generate_diagonal(&spec).unwrap();
        p.rhs = Vector::new(vec![1.0, -1.0, 2.0, 0.5, 0.0, 3.0]).unwrap();
        let h = solve_cg(&p, &SolveConfig::default()).unwrap();
        assert_eq!(h.status, SolveStatus::Converged);
        assert_eq!(h.iterations, 1);
        assert_eq!(h.records[0].branch, Some(BranchTag::Cg));
    }

    #[test]
    fn cg_terminates_by_distinct_eigenvalue_count() {
        let p = diag_problem(vec![1.0, 2.0]);
        let cfg = SolveConfig {
            tol: 1e-12,
            ..Default::default()
        };
        let h = solve_cg(&p, &cfg).unwrap();
        assert_eq!(h.status, SolveStatus::Converged);
        assert!(h.iterations <= 2);
    }

    #[test]
    fn recompute_and_recurrence_agree_early() {
        let spec = SpectrumSpec {
            n: 10,
            distribution: crate::problems::Distribution::LogUniform,
            lambda_max: 100.0,
            seed: 4,
        };
        let p = generate_diagonal(&spec).unwrap();
        let mk = |gu| SolveConfig {
            rule: SteplengthRule::Bb1,
            tol: 1e-10,
            gradient_update: gu,
            ..Default::default()
        };
        let a = solve_gradient(&p, &mk(GradientUpdate::Recompute)).unwrap();
        let b = solve_gradient(&p, &mk(GradientUpdate::Recurrence)).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records).take(20) {
            if let (Some(x), Some(y)) = (ra.alpha, rb.alpha) {
                assert_relative_eq!(x, y, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn rhs_norm_reference_is_selectable() {
        let p = diag_problem(vec![1.0, 2.0]);
        let cfg = SolveConfig {
            norm_ref: NormRef::Rhs,
            ..Default::default()
        };
        // b = 0 makes the rhs reference degenerate; tolerance turns absolute
        let h = solve_gradient(&p, &cfg).unwrap();
        assert_eq!(h.ref_norm, 1.0);
        assert_eq!(h.status, SolveStatus::Converged);
        assert!(h.final_grad_norm <= cfg.tol);
    }

    #[test]
    fn objective_decreases_under_pure_sd() {
        let spec = SpectrumSpec {
            n: 20,
            distribution: crate::problems::Distribution::Uniform,
            lambda_max: 50.0,
            seed: 6,
        };
        let p = generate_diagonal(&spec).unwrap();
        let cfg = SolveConfig {
            record_objective: true,
            tol: 1e-10,
            ..Default::default()
        };
        let h = solve_gradient(&p, &cfg).unwrap();
        let objs: Vec<f64> = h.records.iter().map(|r| r.objective.unwrap()).collect();
        assert!(objs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn partial_energies_are_recorded_and_consistent() {
        let p = diag_problem(vec![1.0, 2.0, 4.0, 8.0]);
        let cfg = SolveConfig {
            rule: "cy:l=1,m=1".parse().unwrap(),
            diagnostics: Some(PropertyACheckConfig {
                mu_list: vec![1, 3],
                ..PropertyACheckConfig::cy_defaults(8.0)
            }),
            tol: 1e-10,
            ..Default::default()
        };
        let h = solve_gradient(&p, &cfg).unwrap();
        let pe = h.records[0].partial_energies.as_ref().unwrap();
        assert_eq!(pe.len(), 2);
        // g_0 = diag * ones = (1,2,4,8)
        assert_eq!(pe[0].mu, 1);
        assert_eq!(pe[0].below, 1.0);
        assert_eq!(pe[0].next_sq, 4.0);
        assert_eq!(pe[1].mu, 3);
        assert_eq!(pe[1].below, 21.0);
        assert_eq!(pe[1].next_sq, 64.0);
    }

    #[test]
    fn partial_energy_bounds_and_full_sum() {
        let g = Vector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(partial_gradient_energy(&g, 2).unwrap(), 5.0);
        assert_eq!(
            partial_gradient_energy(&g, 3).unwrap(),
            dot_unchecked(g.as_slice(), g.as_slice())
        );
        assert!(partial_gradient_energy(&g, 0).is_err());
        assert!(partial_gradient_energy(&g, 4).is_err());
    }

    #[test]
    fn diagnostics_require_ascending_diagonal() {
        let op = SpdOperator::diagonal(vec![2.0, 1.0]).unwrap();
        let p = ProblemInstance::new(op, Vector::zeros(2), Vector::ones(2), "unsorted").unwrap();
        let cfg = SolveConfig {
            diagnostics: Some(PropertyACheckConfig {
                mu_list: vec![1],
                ..PropertyACheckConfig::cy_defaults(2.0)
            }),
            ..Default::default()
        };
        let e = solve_gradient(&p, &cfg).unwrap_err().to_string();
        assert!(e.contains("ascending"), "{e}");
    }

    #[test]
    fn config_validation_errors() {
        let p = diag_problem(vec![1.0, 2.0]);
        let bad_tol = SolveConfig {
            tol: 1.5,
            ..Default::default()
        };
        assert!(solve_gradient(&p, &bad_tol).is_err());
        let bad_iter = SolveConfig {
            max_iter: 0,
            ..Default::default()
        };
        assert!(solve_gradient(&p, &bad_iter).is_err());
        let bad_rule = SolveConfig {
            rule: SteplengthRule::Cy { l: 0, m: 1 },
            ..Default::default()
        };
        assert!(solve_gradient(&p, &bad_rule).is_err());
    }

    #[test]
    fn history_without_recording_still_reports_outcome() {
        let p = diag_problem(vec![1.0, 2.0]);
        let cfg = SolveConfig {
            record_history: false,
            rule: "cy:l=1,m=1".parse().unwrap(),
            tol: 1e-10,
            ..Default::default()
        };
        let h = solve_gradient(&p, &cfg).unwrap();
        assert!(h.records.is_empty());
        assert_eq!(h.status, SolveStatus::Converged);
        assert_eq!(h.iterations, 3);
    }

    #[test]
    fn csv_and_json_serialization_are_well_formed() {
        let p = diag_problem(vec![1.0, 2.0]);
        let cfg = SolveConfig {
            rule: "cy:l=1,m=1".parse().unwrap(),
            tol: 1e-10,
            ..Default::default()
        };
        let h = solve_gradient(&p, &cfg).unwrap();
        let mut csv = Vec::new();
        h.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,branch,alpha,grad_norm");
        assert_eq!(lines.len(), h.records.len() + 1);
        assert!(lines[1].starts_with("0,sd,"));
        // terminal row has an empty alpha column
        assert!(lines.last().unwrap().contains(",,"));

        let mut json = Vec::new();
        h.write_json(&mut json, &cfg, Some(Duration::from_millis(5)))
            .unwrap();
        let doc: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(doc["status"], "converged");
        assert_eq!(doc["config"]["rule"], "cy:l=1,m=1");
        assert_eq!(doc["records"].as_array().unwrap().len(), h.records.len());
        assert!(doc["elapsed_seconds"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn residual_consistency_at_final_record() {
        let spec = SpectrumSpec {
            n: 30,
            distribution: crate::problems::Distribution::LogUniform,
            lambda_max: 1e3,
            seed: 9,
        };
        let p = generate_diagonal(&spec).unwrap();
        for rule in ["sd", "bb1", "cy:l=4,m=3", "yb"] {
            let cfg = SolveConfig {
                rule: rule.parse().unwrap(),
                tol: 1e-9,
                ..Default::default()
            };
            let h = solve_gradient(&p, &cfg).unwrap();
            let g = raw_residual(&p.operator, h.final_x.as_slice(), p.rhs.as_slice());
            let norm = dot_unchecked(g.as_slice(), g.as_slice()).sqrt();
            assert_relative_eq!(norm, h.final_grad_norm, max_relative = 1e-12);
        }
    }
}
