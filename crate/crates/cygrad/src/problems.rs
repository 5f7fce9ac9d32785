//! Test problem construction: canonical diagonal instances, random 2x2 SPD
//! instances, and Matrix Market ingestion.
//!
//! Diagonal problems follow the normalized form: eigenvalues sorted
//! ascending with lambda_1 = 1 and lambda_n = lambda_max pinned exactly,
//! b = 0, and x0 = all ones so every eigencomponent is excited. All
//! generators are deterministic functions of their seeds.

use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{SpdOperator, SpectrumInfo, Vector};
use crate::matrix_market::{read_symmetric_csr, read_vector};

/// A ready-to-solve instance: operator, right-hand side, starting point.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub operator: SpdOperator,
    pub rhs: Vector,
    pub x0: Vector,
    /// Known spectrum bounds; always present and exact for diagonal
    /// operators.
    pub spectrum: Option<SpectrumInfo>,
    pub label: String,
    /// Non-fatal observations from construction (e.g. a loaded matrix with
    /// a nonpositive diagonal entry cannot be positive definite).
    pub warnings: Vec<String>,
}

impl ProblemInstance {
    /// Builds an instance, checking dimensions and filling `spectrum` from
    /// the operator when it is known exactly.
    pub fn new(
        operator: SpdOperator,
        rhs: Vector,
        x0: Vector,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = operator.dimension();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                context: "ProblemInstance rhs",
                expected: n,
                got: rhs.len(),
            });
        }
        if x0.len() != n {
            return Err(Error::DimensionMismatch {
                context: "ProblemInstance x0",
                expected: n,
                got: x0.len(),
            });
        }
        let spectrum = operator.spectrum();
        Ok(ProblemInstance {
            operator,
            rhs,
            x0,
            spectrum,
            label: label.into(),
            warnings: Vec::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.operator.dimension()
    }
}

/// Eigenvalue layout of a generated diagonal problem.
#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    /// Interior values uniform on [1, lambda_max].
    Uniform,
    /// Interior values with log uniform on [0, ln lambda_max].
    LogUniform,
    /// Two clusters of width 0.05 (lambda_max - 1), one at each end of the
    /// spectrum, half the interior values in each.
    Clustered,
    /// Caller-supplied values; must be sorted ascending and start at
    /// exactly 1.
    Explicit(Vec<f64>),
}

impl Distribution {
    fn name(&self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::LogUniform => "loguniform",
            Distribution::Clustered => "clustered",
            Distribution::Explicit(_) => "explicit",
        }
    }
}

/// Specification of a diagonal problem's spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumSpec {
    pub n: usize,
    pub distribution: Distribution,
    pub lambda_max: f64,
    pub seed: u64,
}

impl SpectrumSpec {
    /// Spec for an explicit list of eigenvalues. The list is validated by
    /// [`generate_diagonal`].
    pub fn explicit(values: Vec<f64>) -> Self {
        let lambda_max = values.last().copied().unwrap_or(1.0);
        SpectrumSpec {
            n: values.len(),
            distribution: Distribution::Explicit(values),
            lambda_max,
            seed: 0,
        }
    }
}

fn validate_explicit(n: usize, values: &[f64]) -> Result<()> {
    if values.len() != n {
        return Err(Error::Config(format!(
            "explicit spectrum has {} values but n={n}",
            values.len()
        )));
    }
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() || *v <= 0.0 {
            return Err(Error::Config(format!(
                "explicit eigenvalue {} is {v}; eigenvalues must be positive",
                i + 1
            )));
        }
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config(
            "explicit eigenvalues must be sorted ascending".into(),
        ));
    }
    if values[0] != 1.0 {
        return Err(Error::Config(format!(
            "explicit spectrum must start at exactly 1, got {}",
            values[0]
        )));
    }
    Ok(())
}

/// Generates the canonical diagonal problem for `spec`: A = diag(lambda),
/// b = 0, x0 = all ones.
pub fn generate_diagonal(spec: &SpectrumSpec) -> Result<ProblemInstance> {
    if spec.n < 2 {
        return Err(Error::Config(format!(
            "diagonal problems need n >= 2, got n={}",
            spec.n
        )));
    }
    let values = match &spec.distribution {
        Distribution::Explicit(values) => {
            validate_explicit(spec.n, values)?;
            values.clone()
        }
        random => {
            let kmax = spec.lambda_max;
            if !kmax.is_finite() || kmax < 1.0 {
                return Err(Error::Config(format!(
                    "lambda_max must be a finite real >= 1, got {kmax}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut values = Vec::with_capacity(spec.n);
            values.push(1.0);
            for i in 1..spec.n - 1 {
                let u: f64 = rng.gen();
                let v = match random {
                    Distribution::Uniform => 1.0 + u * (kmax - 1.0),
                    Distribution::LogUniform => (u * kmax.ln()).exp(),
                    Distribution::Clustered => {
                        let w = 0.05 * (kmax - 1.0);
                        // alternate halves so each cluster gets ~n/2 values
                        if i % 2 == 1 {
                            1.0 + u * w
                        } else {
                            kmax - u * w
                        }
                    }
                    Distribution::Explicit(_) => unreachable!(),
                };
                values.push(v);
            }
            values.push(kmax);
            values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            values
        }
    };
    let operator = SpdOperator::diagonal(values)?;
    let n = operator.dimension();
    let label = GeneratorSpec::Diag(spec.clone()).to_string();
    ProblemInstance::new(operator, Vector::zeros(n), Vector::ones(n), label)
}

/// Generates a random 2x2 SPD problem as a rotation of a random diagonal
/// with condition number at most `cond_max`, with random b and x0.
///
/// The matrix is stored as CSR with bitwise identical off-diagonal entries,
/// so symmetry is exact; the true eigenvalues are known by construction and
/// recorded as non-exact spectrum bounds (the assembled entries round).
pub fn generate_spd_2d(seed: u64, cond_max: f64) -> Result<ProblemInstance> {
    if !cond_max.is_finite() || cond_max < 1.0 {
        return Err(Error::Config(format!(
            "cond_max must be a finite real >= 1, got {cond_max}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // draw order is part of the determinism contract
    let lam1 = 0.5 + 1.5 * rng.gen::<f64>();
    let cond = 1.0 + rng.gen::<f64>() * (cond_max - 1.0);
    let lam2 = lam1 * cond;
    let theta = rng.gen::<f64>() * std::f64::consts::PI;
    let (s, c) = theta.sin_cos();
    let a11 = c * c * lam1 + s * s * lam2;
    let a22 = s * s * lam1 + c * c * lam2;
    let a12 = c * s * (lam1 - lam2);
    let (row_offsets, col_indices, values) = if a12 == 0.0 {
        (vec![0, 1, 2], vec![0, 1], vec![a11, a22])
    } else {
        (vec![0, 2, 4], vec![0, 1, 0, 1], vec![a11, a12, a12, a22])
    };
    let operator = SpdOperator::csr(2, row_offsets, col_indices, values)?;
    let rhs = Vector::new(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])?;
    let x0 = Vector::new(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])?;
    let label = GeneratorSpec::Spd2d { seed, cond_max }.to_string();
    let mut instance = ProblemInstance::new(operator, rhs, x0, label)?;
    instance.spectrum = Some(SpectrumInfo {
        lambda_min: lam1,
        lambda_max: lam2,
        exact: false,
    });
    Ok(instance)
}

/// How to choose b when loading a matrix from a file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RhsPolicy {
    Zero,
    Ones,
    FromFile(PathBuf),
    /// Components uniform on [-1, 1), seeded.
    Random(u64),
}

/// Loads a symmetric Matrix Market file as a CSR problem with x0 = 0.
///
/// A nonpositive diagonal entry does not fail the load (the matrix may
/// still be wanted for matvec probes); it attaches a warning saying the
/// operator cannot be positive definite.
pub fn load_matrix_market(path: &Path, rhs_policy: &RhsPolicy) -> Result<ProblemInstance> {
    let file = File::open(path)?;
    let operator = read_symmetric_csr(BufReader::new(file))?;
    let n = operator.dimension();
    let rhs = match rhs_policy {
        RhsPolicy::Zero => Vector::zeros(n),
        RhsPolicy::Ones => Vector::ones(n),
        RhsPolicy::FromFile(p) => {
            let values = read_vector(BufReader::new(File::open(p)?))?;
            if values.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "rhs file",
                    expected: n,
                    got: values.len(),
                });
            }
            Vector::new(values)?
        }
        RhsPolicy::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Vector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())?
        }
    };
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let mut instance = ProblemInstance::new(operator, rhs, Vector::zeros(n), label)?;
    if let Some(i) = instance.operator.first_nonpositive_diagonal() {
        instance.warnings.push(format!(
            "diagonal entry {} is not positive; the operator is not positive definite",
            i + 1
        ));
    }
    Ok(instance)
}

/// A parsed problem generator reference (`diag:...` or `spd2d:...`).
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    Diag(SpectrumSpec),
    Spd2d { seed: u64, cond_max: f64 },
}

impl GeneratorSpec {
    pub fn realize(&self) -> Result<ProblemInstance> {
        match self {
            GeneratorSpec::Diag(spec) => generate_diagonal(spec),
            GeneratorSpec::Spd2d { seed, cond_max } => generate_spd_2d(*seed, *cond_max),
        }
    }

    /// Same generator with the seed shifted; used for benchmark repetitions.
    pub fn with_seed_offset(&self, offset: u64) -> Self {
        match self {
            GeneratorSpec::Diag(spec) => {
                let mut spec = spec.clone();
                spec.seed = spec.seed.wrapping_add(offset);
                GeneratorSpec::Diag(spec)
            }
            GeneratorSpec::Spd2d { seed, cond_max } => GeneratorSpec::Spd2d {
                seed: seed.wrapping_add(offset),
                cond_max: *cond_max,
            },
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::Diag(spec) => match &spec.distribution {
                Distribution::Explicit(values) => {
                    write!(f, "diag:explicit=")?;
                    for (i, v) in values.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{v}")?;
                    }
                    Ok(())
                }
                dist => write!(
                    f,
                    "diag:n={},{},kmax={},seed={}",
                    spec.n,
                    dist.name(),
                    spec.lambda_max,
                    spec.seed
                ),
            },
            GeneratorSpec::Spd2d { seed, cond_max } => {
                write!(f, "spd2d:seed={seed},cond={cond_max}")
            }
        }
    }
}

fn parse_u64(gen: &str, key: &str, value: &str) -> Result<u64> {
    value.parse::<u64>().map_err(|_| {
        Error::Config(format!(
            "generator `{gen}`: parameter `{key}` must be a nonnegative integer, got `{value}`"
        ))
    })
}

fn parse_real(gen: &str, key: &str, value: &str) -> Result<f64> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Config(format!(
            "generator `{gen}`: parameter `{key}` must be a finite real, got `{value}`"
        ))),
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    /// Grammar: `diag:n=<int>,<dist>,kmax=<real>,seed=<int>` with `<dist>`
    /// one of `uniform`, `loguniform`, `clustered`; or
    /// `diag:explicit=<v1>,<v2>,...`; or `spd2d:seed=<int>,cond=<real>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, r),
            None => (s, ""),
        };
        match kind {
            "diag" => {
                let mut n: Option<usize> = None;
                let mut seed: Option<u64> = None;
                let mut kmax: Option<f64> = None;
                let mut dist: Option<&str> = None;
                let mut explicit: Option<Vec<f64>> = None;
                let mut in_explicit = false;
                for tok in rest.split(',') {
                    if let Some((key, value)) = tok.split_once('=') {
                        in_explicit = false;
                        match key {
                            "n" => {
                                let v = value.parse::<usize>().map_err(|_| {
                                    Error::Config(format!(
                                        "generator `diag`: parameter `n` must be a positive integer, got `{value}`"
                                    ))
                                })?;
                                if n.replace(v).is_some() {
                                    return Err(Error::Config(
                                        "generator `diag`: duplicate parameter `n`".into(),
                                    ));
                                }
                            }
                            "seed" => {
                                let v = parse_u64("diag", "seed", value)?;
                                if seed.replace(v).is_some() {
                                    return Err(Error::Config(
                                        "generator `diag`: duplicate parameter `seed`".into(),
                                    ));
                                }
                            }
                            "kmax" => {
                                let v = parse_real("diag", "kmax", value)?;
                                if kmax.replace(v).is_some() {
                                    return Err(Error::Config(
                                        "generator `diag`: duplicate parameter `kmax`".into(),
                                    ));
                                }
                            }
                            "explicit" => {
                                if explicit.is_some() {
                                    return Err(Error::Config(
                                        "generator `diag`: duplicate parameter `explicit`".into(),
                                    ));
                                }
                                explicit = Some(vec![parse_real("diag", "explicit", value)?]);
                                in_explicit = true;
                            }
                            other => {
                                return Err(Error::Config(format!(
                                    "generator `diag` does not take parameter `{other}`"
                                )))
                            }
                        }
                    } else if matches!(tok, "uniform" | "loguniform" | "clustered") {
                        in_explicit = false;
                        if let Some(prev) = dist.replace(tok) {
                            return Err(Error::Config(format!(
                                "generator `diag`: distribution given twice (`{prev}` and `{tok}`)"
                            )));
                        }
                    } else if in_explicit {
                        explicit
                            .as_mut()
                            .unwrap()
                            .push(parse_real("diag", "explicit", tok)?);
                    } else {
                        return Err(Error::Config(format!(
                            "generator `diag`: unexpected token `{tok}`"
                        )));
                    }
                }
                if let Some(values) = explicit {
                    if dist.is_some() {
                        return Err(Error::Config(
                            "generator `diag`: `explicit` conflicts with a named distribution"
                                .into(),
                        ));
                    }
                    if kmax.is_some() {
                        return Err(Error::Config(
                            "generator `diag`: parameter `kmax` conflicts with `explicit`".into(),
                        ));
                    }
                    if let Some(n) = n {
                        if n != values.len() {
                            return Err(Error::Config(format!(
                                "generator `diag`: n={n} but `explicit` lists {} values",
                                values.len()
                            )));
                        }
                    }
                    Ok(GeneratorSpec::Diag(SpectrumSpec::explicit(values)))
                } else {
                    let dist = dist.ok_or_else(|| {
                        Error::Config(
                            "generator `diag` requires a distribution: uniform, loguniform, clustered, or explicit=..."
                                .into(),
                        )
                    })?;
                    let n = n.ok_or_else(|| {
                        Error::Config("generator `diag` requires parameter `n`".into())
                    })?;
                    let kmax = kmax.ok_or_else(|| {
                        Error::Config("generator `diag` requires parameter `kmax`".into())
                    })?;
                    let distribution = match dist {
                        "uniform" => Distribution::Uniform,
                        "loguniform" => Distribution::LogUniform,
                        _ => Distribution::Clustered,
                    };
                    Ok(GeneratorSpec::Diag(SpectrumSpec {
                        n,
                        distribution,
                        lambda_max: kmax,
                        seed: seed.unwrap_or(0),
                    }))
                }
            }
            "spd2d" => {
                let mut seed: Option<u64> = None;
                let mut cond: Option<f64> = None;
                if !rest.is_empty() {
                    for tok in rest.split(',') {
                        let Some((key, value)) = tok.split_once('=') else {
                            return Err(Error::Config(format!(
                                "generator `spd2d`: expected key=value, got `{tok}`"
                            )));
                        };
                        match key {
                            "seed" => {
                                let v = parse_u64("spd2d", "seed", value)?;
                                if seed.replace(v).is_some() {
                                    return Err(Error::Config(
                                        "generator `spd2d`: duplicate parameter `seed`".into(),
                                    ));
                                }
                            }
                            "cond" => {
                                let v = parse_real("spd2d", "cond", value)?;
                                if cond.replace(v).is_some() {
                                    return Err(Error::Config(
                                        "generator `spd2d`: duplicate parameter `cond`".into(),
                                    ));
                                }
                            }
                            other => {
                                return Err(Error::Config(format!(
                                    "generator `spd2d` does not take parameter `{other}`"
                                )))
                            }
                        }
                    }
                }
                let cond_max = cond.ok_or_else(|| {
                    Error::Config("generator `spd2d` requires parameter `cond`".into())
                })?;
                Ok(GeneratorSpec::Spd2d {
                    seed: seed.unwrap_or(0),
                    cond_max,
                })
            }
            other => Err(Error::Config(format!(
                "unknown generator `{other}` (expected `diag` or `spd2d`)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::io::Write as _;

    #[test]
    fn explicit_two_by_two() {
        let p = generate_diagonal(&SpectrumSpec::explicit(vec![1.0, 2.0])).unwrap();
        assert_eq!(p.operator.diagonal_entries().unwrap(), &[1.0, 2.0]);
        assert_eq!(p.rhs.as_slice(), &[0.0, 0.0]);
        assert_eq!(p.x0.as_slice(), &[1.0, 1.0]);
        assert_eq!(p.label, "diag:explicit=1,2");
        let s = p.spectrum.unwrap();
        assert!(s.exact);
        assert_eq!((s.lambda_min, s.lambda_max), (1.0, 2.0));
    }

    #[test]
    fn uniform_with_kmax_one_is_identity() {
        let spec = SpectrumSpec {
            n: 5,
            distribution: Distribution::Uniform,
            lambda_max: 1.0,
            seed: 3,
        };
        let p = generate_diagonal(&spec).unwrap();
        assert!(p
            .operator
            .diagonal_entries()
            .unwrap()
            .iter()
            .all(|&v| v == 1.0));
    }

    #[test]
    fn loguniform_pins_ends_and_sorts() {
        let spec = SpectrumSpec {
            n: 1000,
            distribution: Distribution::LogUniform,
            lambda_max: 1e4,
            seed: 7,
        };
        let p = generate_diagonal(&spec).unwrap();
        let d = p.operator.diagonal_entries().unwrap();
        assert_eq!(d[0], 1.0);
        assert_eq!(d[999], 1e4);
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
        // deterministic in the seed
        let q = generate_diagonal(&spec).unwrap();
        assert_eq!(q.operator.diagonal_entries().unwrap(), d);
        let other = generate_diagonal(&SpectrumSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(other.operator.diagonal_entries().unwrap(), d);
    }

    #[test]
    fn clustered_values_stay_in_their_clusters() {
        let spec = SpectrumSpec {
            n: 40,
            distribution: Distribution::Clustered,
            lambda_max: 100.0,
            seed: 1,
        };
        let p = generate_diagonal(&spec).unwrap();
        let d = p.operator.diagonal_entries().unwrap();
        let w = 0.05 * 99.0;
        assert_eq!(d[0], 1.0);
        assert_eq!(d[39], 100.0);
        for &v in d {
            assert!(
                (1.0..=1.0 + w).contains(&v) || (100.0 - w..=100.0).contains(&v),
                "{v} outside both clusters"
            );
        }
        let low = d.iter().filter(|&&v| v <= 1.0 + w).count();
        assert!((15..=25).contains(&low), "lopsided clusters: {low} low");
    }

    #[test]
    fn explicit_validation_errors() {
        let bad = SpectrumSpec::explicit(vec![2.0, 3.0]);
        let e = generate_diagonal(&bad).unwrap_err().to_string();
        assert!(e.contains("start at exactly 1"), "{e}");
        let bad = SpectrumSpec::explicit(vec![1.0, 3.0, 2.0]);
        let e = generate_diagonal(&bad).unwrap_err().to_string();
        assert!(e.contains("sorted"), "{e}");
        let bad = SpectrumSpec::explicit(vec![1.0, -2.0]);
        assert!(generate_diagonal(&bad).is_err());
        let mut mismatched = SpectrumSpec::explicit(vec![1.0, 2.0]);
        mismatched.n = 3;
        let e = generate_diagonal(&mismatched).unwrap_err().to_string();
        assert!(e.contains("n=3"), "{e}");
        let too_small = SpectrumSpec::explicit(vec![1.0]);
        assert!(generate_diagonal(&too_small).is_err());
        let bad_kmax = SpectrumSpec {
            n: 4,
            distribution: Distribution::Uniform,
            lambda_max: 0.5,
            seed: 0,
        };
        assert!(generate_diagonal(&bad_kmax).is_err());
    }

    fn eigs_2x2(op: &SpdOperator) -> (f64, f64) {
        let t = op.triplets();
        let get = |i, j| {
            t.iter()
                .find(|(a, b, _)| (*a, *b) == (i, j))
                .map(|(_, _, v)| *v)
                .unwrap_or(0.0)
        };
        let (a, b, d) = (get(0, 0), get(0, 1), get(1, 1));
        let mid = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mid - r, mid + r)
    }

    #[test]
    fn spd_2d_matches_its_recorded_spectrum() {
        for seed in 0..20 {
            let p = generate_spd_2d(seed, 1e3).unwrap();
            let s = p.spectrum.unwrap();
            let (lo, hi) = eigs_2x2(&p.operator);
            assert_relative_eq!(lo, s.lambda_min, max_relative = 1e-12);
            assert_relative_eq!(hi, s.lambda_max, max_relative = 1e-12);
            assert!(lo > 0.0);
            assert!(hi / lo <= 1e3 * (1.0 + 1e-10));
        }
    }

    #[test]
    fn spd_2d_is_deterministic() {
        let p = generate_spd_2d(3, 100.0).unwrap();
        let q = generate_spd_2d(3, 100.0).unwrap();
        assert_eq!(p.operator.triplets(), q.operator.triplets());
        assert_eq!(p.rhs, q.rhs);
        assert_eq!(p.x0, q.x0);
        assert_eq!(p.label, "spd2d:seed=3,cond=100");
    }

    #[test]
    fn spd_2d_condition_one_is_scaled_identity() {
        let p = generate_spd_2d(9, 1.0).unwrap();
        let t = p.operator.triplets();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].2, t[1].2);
    }

    #[test]
    fn generator_specs_round_trip() {
        let cases = [
            "diag:explicit=1,2",
            "diag:explicit=1,1.5,2,50",
            "diag:n=100,loguniform,kmax=10000,seed=1",
            "diag:n=4,uniform,kmax=2,seed=0",
            "diag:n=8,clustered,kmax=100,seed=5",
            "spd2d:seed=3,cond=100",
        ];
        for s in cases {
            let spec: GeneratorSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            spec.realize().unwrap();
        }
    }

    #[test]
    fn generator_parse_errors_name_the_problem() {
        let e = "diag:n=4,uniform"
            .parse::<GeneratorSpec>()
            .unwrap_err()
            .to_string();
        assert!(e.contains("`kmax`"), "{e}");
        let e = "diag:uniform,kmax=10"
            .parse::<GeneratorSpec>()
            .unwrap_err()
            .to_string();
        assert!(e.contains("`n`"), "{e}");
        let e = "diag:n=4,kmax=10"
            .parse::<GeneratorSpec>()
            .unwrap_err()
            .to_string();
        assert!(e.contains("distribution"), "{e}");
        let e = "diag:n=3,explicit=1,2"
            .parse::<GeneratorSpec>()
            .unwrap_err()
            .to_string();
        assert!(e.contains("n=3"), "{e}");
        let e = "diag:kmax=5,explicit=1,2"
            .parse::<GeneratorSpec>()
            .unwrap_err()
            .to_string();
        assert!(e.contains("conflicts"), "{e}");
        let e = "diag:n=4,uniform,clustered,kmax=2"
            .parse::<GeneratorSpec>()
            .unwrap_err()
            .to_string();
        assert!(e.contains("twice"), "{e}");
        let e = "diag:n=2,uniform,kmax=3,rogue"
            .parse::<GeneratorSpec>()
            .unwrap_err()
            .to_string();
        assert!(e.contains("`rogue`"), "{e}");
        let e = "diag:n=two,uniform,kmax=3"
            .parse::<GeneratorSpec>()
            .unwrap_err()
            .to_string();
        assert!(e.contains("`two`"), "{e}");
        let e = "spd2d:seed=1"
            .parse::<GeneratorSpec>()
            .unwrap_err()
            .to_string();
        assert!(e.contains("`cond`"), "{e}");
        let e = "spd2d:seed=1,cond=10,extra=2"
            .parse::<GeneratorSpec>()
            .unwrap_err()
            .to_string();
        assert!(e.contains("`extra`"), "{e}");
        let e = "wheel:n=1"
            .parse::<GeneratorSpec>()
            .unwrap_err()
            .to_string();
        assert!(e.contains("`wheel`"), "{e}");
        let e = "diag:explicit=1,oops"
            .parse::<GeneratorSpec>()
            .unwrap_err()
            .to_string();
        assert!(e.contains("`oops`"), "{e}");
    }

    #[test]
    fn seed_offset_shifts_only_the_seed() {
        let spec: GeneratorSpec = "diag:n=4,uniform,kmax=2,seed=10".parse().unwrap();
        let shifted = spec.with_seed_offset(5);
        assert_eq!(shifted.to_string(), "diag:n=4,uniform,kmax=2,seed=15");
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_matrix_market_policies() {
        let f = write_temp(
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 2 2.0\n",
        );
        let p = load_matrix_market(f.path(), &RhsPolicy::Zero).unwrap();
        assert_eq!(p.rhs.as_slice(), &[0.0, 0.0]);
        assert_eq!(p.x0.as_slice(), &[0.0, 0.0]);
        assert!(p.warnings.is_empty());
        assert!(p.spectrum.is_none());
        let p = load_matrix_market(f.path(), &RhsPolicy::Ones).unwrap();
        assert_eq!(p.rhs.as_slice(), &[1.0, 1.0]);
        let p1 = load_matrix_market(f.path(), &RhsPolicy::Random(9)).unwrap();
        let p2 = load_matrix_market(f.path(), &RhsPolicy::Random(9)).unwrap();
        assert_eq!(p1.rhs, p2.rhs);
        assert!(p1.rhs.iter().all(|v| (-1.0..1.0).contains(v)));

        let rhs_file = write_temp("3.0\n4.0\n");
        let p = load_matrix_market(
            f.path(),
            &RhsPolicy::FromFile(rhs_file.path().to_path_buf()),
        )
        .unwrap();
        assert_eq!(p.rhs.as_slice(), &[3.0, 4.0]);

        let short = write_temp("3.0\n");
        let err = load_matrix_market(f.path(), &RhsPolicy::FromFile(short.path().to_path_buf()));
        assert!(err.is_err());
    }

    #[test]
    fn load_attaches_spd_warning_for_nonpositive_diagonal() {
        let f = write_temp(
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 -1.0\n2 2 2.0\n",
        );
        let p = load_matrix_market(f.path(), &RhsPolicy::Zero).unwrap();
        assert_eq!(p.warnings.len(), 1);
        assert!(
            p.warnings[0].contains("diagonal entry 1"),
            "{}",
            p.warnings[0]
        );
        // missing diagonal entry entirely
        let f = write_temp(
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 1 0.5\n",
        );
        let p = load_matrix_market(f.path(), &RhsPolicy::Zero).unwrap();
        assert!(
            p.warnings[0].contains("diagonal entry 2"),
            "{}",
            p.warnings[0]
        );
    }
}
