//! Spectral diagnostics for recorded solves.
//!
//! The central check: a steplength sequence has the spectral sweeping
//! property with constants (ξ, M1, M2) when every inverse steplength stays
//! inside [λ1, M1], and whenever the gradient energy below some index µ has
//! been dominated by the component just above it across the entire ξ-step
//! lookback window, the inverse steplength reaches at least two thirds of
//! λ_{µ+1}. Methods with this property sweep the spectrum left to right
//! instead of stalling on low modes, which is what separates the cyclic
//! schedules from plain steepest descent on ill-conditioned problems.
//!
//! The window length matters for schedules that reuse steplengths: a held
//! α is a Rayleigh quotient of an older gradient, so the domination
//! hypothesis must persist back to the step that computed it before the
//! bound can be expected. ξ = 1 suits schedules whose every steplength is
//! fresh; a schedule holding each steplength for up to d extra steps needs
//! ξ = d + 1.
//!
//! Checks run on recorded histories, so the solve must have been run with
//! `diagnostics` set in its config to capture partial gradient energies.

use crate::error::{Error, Result};
use crate::solver::ConvergenceHistory;

/// Constants and probe set for the sweeping-property check.
///
/// For the cyclic SD/Yuan schedules the accompanying constants are
/// M1 = 2λ_max and M2 = 2: the Yuan bracket keeps 1/α between the current
/// SD quotient and the sum of the last two, which pins it inside
/// [λ1, 2λ_max], and the same Rayleigh-quotient argument gives the µ-th
/// lower bound whenever the energy test fires at a step that computes a
/// fresh quotient. ξ = 1 covers exactly those steps; checking a schedule
/// with holds needs ξ = hold length + 1 so the window reaches the step
/// whose gradient produced the reused quotient.
#[derive(Clone, Debug)]
pub struct PropertyACheckConfig {
    /// Lookback window length, ≥ 1. Condition two applies at step k only
    /// when the energy test fires at every one of the min(k, xi) records
    /// ending at k.
    pub xi: usize,
    /// Upper bound on inverse steplengths.
    pub m1: f64,
    /// Domination factor in the energy test.
    pub m2: f64,
    /// Spectrum indices µ to probe, each in 1..=n-1. Empty means condition
    /// one only.
    pub mu_list: Vec<usize>,
    /// Additive slack on every bound comparison, absorbing round-off in
    /// the recorded quotients. Defaults to 1e-9.
    pub slack: f64,
}

impl PropertyACheckConfig {
    pub fn cy_defaults(lambda_max: f64) -> Self {
        PropertyACheckConfig {
            xi: 1,
            m1: 2.0 * lambda_max,
            m2: 2.0,
            mu_list: Vec::new(),
            slack: 1e-9,
        }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if self.xi < 1 {
            return Err(Error::Config(
                "lookback window xi must be at least 1".into(),
            ));
        }
        if !self.m1.is_finite() || self.m1 <= 0.0 {
            return Err(Error::Config(format!(
                "M1 must be positive, got {}",
                self.m1
            )));
        }
        if !self.m2.is_finite() || self.m2 <= 0.0 {
            return Err(Error::Config(format!(
                "M2 must be positive, got {}",
                self.m2
            )));
        }
        if !self.slack.is_finite() || self.slack < 0.0 {
            return Err(Error::Config(format!(
                "slack must be nonnegative, got {}",
                self.slack
            )));
        }
        for &mu in &self.mu_list {
            if mu < 1 || mu >= n {
                return Err(Error::IndexOutOfRange {
                    context: "spectrum probe mu",
                    index: mu,
                    max: n.saturating_sub(1),
                });
            }
        }
        Ok(())
    }
}

/// An inverse steplength outside [λ1 − slack, M1 + slack].
#[derive(Clone, Copy, Debug)]
pub struct Cond1Violation {
    pub k: usize,
    pub alpha: f64,
    pub inv_alpha: f64,
    pub lower: f64,
    pub upper: f64,
}

/// The energy test fired at µ across the whole window ending at k, but
/// 1/α_k missed (2/3)λ_{µ+1}.
#[derive(Clone, Copy, Debug)]
pub struct Cond2Violation {
    pub k: usize,
    pub mu: usize,
    /// Number of consecutive records (ending at k) the test fired on.
    pub window: usize,
    pub inv_alpha: f64,
    pub required: f64,
}

#[derive(Clone, Debug)]
pub struct PropertyAReport {
    pub holds: bool,
    /// Steps whose inverse steplength was bound-checked.
    pub steps_checked: usize,
    /// (k, j, µ) triples where the energy test fired.
    pub cond2_probes: usize,
    pub cond1_violations: Vec<Cond1Violation>,
    pub cond2_violations: Vec<Cond2Violation>,
}

/// Checks the sweeping property on a recorded history against a known
/// spectrum (ascending eigenvalues).
///
/// The history must have been recorded with partial gradient energies at
/// every µ in `cfg.mu_list`; recording happens when the solve config's
/// `diagnostics` field is set. A history without them fails with
/// `MissingDiagnostics` rather than passing vacuously.
pub fn check_property_a(
    history: &ConvergenceHistory,
    eigenvalues: &[f64],
    cfg: &PropertyACheckConfig,
) -> Result<PropertyAReport> {
    if eigenvalues.is_empty() {
        return Err(Error::Config("eigenvalue list is empty".into()));
    }
    if eigenvalues.iter().any(|&l| !l.is_finite() || l <= 0.0) {
        return Err(Error::Config(
            "eigenvalues must be finite and positive".into(),
        ));
    }
    if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("eigenvalues must be sorted ascending".into()));
    }
    cfg.validate(eigenvalues.len())?;
    if history.records.is_empty() {
        return Err(Error::MissingDiagnostics(
            "history has no records; run the solve with record_history".into(),
        ));
    }

    let lambda_min = eigenvalues[0];
    let mut report = PropertyAReport {
        holds: true,
        steps_checked: 0,
        cond2_probes: 0,
        cond1_violations: Vec::new(),
        cond2_violations: Vec::new(),
    };

    for rec in &history.records {
        let Some(alpha) = rec.alpha else { continue };
        let k = rec.k;
        let inv = 1.0 / alpha;
        report.steps_checked += 1;

        if inv < lambda_min - cfg.slack || inv > cfg.m1 + cfg.slack {
            report.cond1_violations.push(Cond1Violation {
                k,
                alpha,
                inv_alpha: inv,
                lower: lambda_min,
                upper: cfg.m1,
            });
        }

        let window = cfg.xi.min(k);
        if window == 0 || cfg.mu_list.is_empty() {
            continue;
        }
        for &mu in &cfg.mu_list {
            // The energy test: everything below µ is within a factor M2 of
            // the component at µ+1 (with that component nonzero). The
            // condition applies only when the test fires on every record
            // of the window, so that a reused quotient is covered by the
            // gradient it was computed from.
            let mut fired = true;
            for j in 0..window {
                let src = &history.records[k - j];
                debug_assert_eq!(src.k, k - j);
                let Some(energies) = &src.partial_energies else {
                    return Err(Error::MissingDiagnostics(format!(
                        "record {} has no partial gradient energies; solve with diagnostics enabled",
                        k - j
                    )));
                };
                let Some(pe) = energies.iter().find(|p| p.mu == mu) else {
                    return Err(Error::MissingDiagnostics(format!(
                        "record {} has no energy probe at mu = {mu}",
                        k - j
                    )));
                };
                if !(pe.next_sq > 0.0 && pe.next_sq >= cfg.m2 * pe.below) {
                    fired = false;
                    break;
                }
            }
            if fired {
                report.cond2_probes += 1;
                let required = (2.0 / 3.0) * eigenvalues[mu];
                if inv < required - cfg.slack {
                    report.cond2_violations.push(Cond2Violation {
                        k,
                        mu,
                        window,
                        inv_alpha: inv,
                        required,
                    });
                }
            }
        }
    }

    report.holds = report.cond1_violations.is_empty() && report.cond2_violations.is_empty();
    Ok(report)
}

/// Least-squares slope of ln(M_k) against k, where M_k is the running
/// maximum of the tail: M_k = max over j ≥ k of norms[j].
///
/// The tail maximum is monotone nonincreasing by construction, so the
/// slope is never positive; it is strictly negative only when the sequence
/// actually decays, which makes it a usable R-linear convergence check for
/// nonmonotone methods whose raw norms oscillate.
pub fn log_running_max_slope(grad_norms: &[f64]) -> Result<f64> {
    if grad_norms.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 gradient norms for a slope fit, got {}",
            grad_norms.len()
        )));
    }
    if grad_norms.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::Config(
            "gradient norms must be finite and nonnegative".into(),
        ));
    }
    let n = grad_norms.len();
    let mut tail_max = vec![0.0f64; n];
    let mut running = f64::MIN_POSITIVE;
    for i in (0..n).rev() {
        running = running.max(grad_norms[i]);
        tail_max[i] = running;
    }
    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let ys: Vec<f64> = tail_max.iter().map(|m| m.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n as f64;
    let y_mean = ys.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let dx = xs[i] - x_mean;
        num += dx * (ys[i] - y_mean);
        den += dx * dx;
    }
    Ok(num / den)
}
