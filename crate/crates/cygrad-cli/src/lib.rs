//! Flag parsing helpers shared by the binary and exercised directly by
//! tests and fuzz targets: the flat key=value config-file format and the
//! small string grammars behind individual flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cygrad::problems::{load_matrix_market, GeneratorSpec, RhsPolicy};
use cygrad::solver::{GradientUpdate, NormRef, SolveStatus};
use cygrad::{Error, ProblemInstance, Result, Vector};

/// Parsed config file: `key = value` lines, `#` comments, blank lines
/// ignored. Keys repeat for list-valued flags; for scalar flags the last
/// occurrence wins. Keys use the long flag names without dashes in front
/// (e.g. `max-iter = 500`).
#[derive(Clone, Debug, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, Vec<String>>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "config line {}: expected `key = value`, got `{line}`",
                    idx + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("config line {}: empty key", idx + 1)));
            }
            if !key
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
            {
                return Err(Error::Config(format!(
                    "config line {}: key `{key}` has characters outside [a-z0-9-]",
                    idx + 1
                )));
            }
            entries
                .entry(key.to_string())
                .or_default()
                .push(value.to_string());
        }
        Ok(ConfigMap { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Removes and returns the last value for a scalar key.
    pub fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).and_then(|mut v| v.pop())
    }

    /// Removes and returns all values for a list key.
    pub fn take_all(&mut self, key: &str) -> Vec<String> {
        self.entries.remove(key).unwrap_or_default()
    }

    /// Keys still waiting to be consumed, in sorted order.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Errors if any keys were never consumed; catches typos instead of
    /// silently ignoring settings.
    pub fn finish(self) -> Result<()> {
        if let Some(key) = self.entries.keys().next() {
            return Err(Error::Config(format!("unknown config key `{key}`")));
        }
        Ok(())
    }
}

pub fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Config(format!(
            "{key}: expected `true` or `false`, got `{other}`"
        ))),
    }
}

/// Comma-separated reals, e.g. `1e-1,1e-2,1e-3`.
pub fn parse_thresholds(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map_err(|_| Error::Config(format!("threshold `{tok}` is not a number")))
        })
        .collect()
}

/// `zero`, `ones`, `random:<seed>`, or `file:<path>`.
pub fn parse_rhs_policy(s: &str) -> Result<RhsPolicy> {
    match s {
        "zero" => Ok(RhsPolicy::Zero),
        "ones" => Ok(RhsPolicy::Ones),
        other => {
            if let Some(seed) = other.strip_prefix("random:") {
                let seed: u64 = seed.parse().map_err(|_| {
                    Error::Config(format!("rhs-policy seed `{seed}` is not an integer"))
                })?;
                Ok(RhsPolicy::Random(seed))
            } else if let Some(path) = other.strip_prefix("file:") {
                Ok(RhsPolicy::FromFile(PathBuf::from(path)))
            } else {
                Err(Error::Config(format!(
                    "unknown rhs-policy `{other}`: expected `zero`, `ones`, `random:<seed>`, or `file:<path>`"
                )))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartPolicy {
    Zeros,
    Ones,
}

pub fn parse_x0_policy(s: &str) -> Result<StartPolicy> {
    match s {
        "zeros" => Ok(StartPolicy::Zeros),
        "ones" => Ok(StartPolicy::Ones),
        other => Err(Error::Config(format!(
            "unknown x0-policy `{other}`: expected `zeros` or `ones`"
        ))),
    }
}

pub fn parse_norm_ref(s: &str) -> Result<NormRef> {
    match s {
        "initial-gradient" => Ok(NormRef::InitialGradient),
        "rhs" => Ok(NormRef::Rhs),
        other => Err(Error::Config(format!(
            "unknown norm-ref `{other}`: expected `initial-gradient` or `rhs`"
        ))),
    }
}

pub fn parse_gradient_update(s: &str) -> Result<GradientUpdate> {
    match s {
        "recompute" => Ok(GradientUpdate::Recompute),
        "recurrence" => Ok(GradientUpdate::Recurrence),
        other => Err(Error::Config(format!(
            "unknown gradient-update `{other}`: expected `recompute` or `recurrence`"
        ))),
    }
}

/// Builds the problem from `--gen` or `--matrix` (exactly one), applying
/// the rhs and start policies.
pub fn build_problem(
    gen: Option<&str>,
    matrix: Option<&Path>,
    rhs_policy: Option<&str>,
    x0_policy: Option<&str>,
) -> Result<ProblemInstance> {
    let mut problem = match (gen, matrix) {
        (Some(spec), None) => {
            if rhs_policy.is_some() {
                return Err(Error::Config(
                    "rhs-policy applies to --matrix problems; generated problems fix their rhs"
                        .into(),
                ));
            }
            spec.parse::<GeneratorSpec>()?.realize()?
        }
        (None, Some(path)) => {
            let policy = match rhs_policy {
                Some(s) => parse_rhs_policy(s)?,
                None => RhsPolicy::Ones,
            };
            load_matrix_market(path, &policy)?
        }
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either --gen or --matrix, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Config(
                "a problem is required: --gen <spec> or --matrix <path>".into(),
            ))
        }
    };
    if let Some(policy) = x0_policy {
        let n = problem.dimension();
        problem.x0 = match parse_x0_policy(policy)? {
            StartPolicy::Zeros => Vector::zeros(n),
            StartPolicy::Ones => Vector::ones(n),
        };
    }
    Ok(problem)
}

/// Exit codes partition outcomes: 0 converged, 2 iteration cap, 3
/// numerical breakdown; 1 is reserved for usage and config errors.
pub fn exit_code_for(status: &SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::MaxIterReached => 2,
        SolveStatus::NumericalBreakdown { .. } => 3,
    }
}
