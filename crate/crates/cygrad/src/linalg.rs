//! Dense vectors, SPD operators, and the dot/matvec/Rayleigh kernels every
//! steplength rule is built from.
//!
//! Reproducibility contract: `dot` accumulates strictly left to right in
//! index order, and `matvec` accumulates each row strictly in stored column
//! order. Every higher layer (steplengths, solvers, parallel simulation)
//! inherits its determinism from these two loops, so they must not be
//! reordered, unrolled, or compensated.

use std::ops::{Index, Range};

use crate::error::{Error, Result};

/// Relative tolerance for the numerical symmetry check at CSR construction.
pub const SYMMETRY_RTOL: f64 = 1e-12;

/// A fixed-length dense vector with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Wraps `data`, rejecting NaN or infinite entries.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        for (index, &value) in data.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
        }
        Ok(Vector(data))
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn ones(n: usize) -> Self {
        Vector(vec![1.0; n])
    }

    /// Wraps without the finiteness scan. Callers guarantee the invariant.
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        Vector(data)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.clone()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Euclidean norm, accumulated left to right.
    pub fn norm(&self) -> f64 {
        dot_unchecked(&self.0, &self.0).sqrt()
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Extreme eigenvalues of an operator, when known.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumInfo {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// True when the values are read off exactly (diagonal storage);
    /// false when they come from a construction that stores the operator
    /// in another form.
    pub exact: bool,
}

#[derive(Clone, Debug)]
enum Repr {
    Diagonal(Vec<f64>),
    Csr {
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    },
}

/// A symmetric positive definite operator in diagonal or CSR storage.
///
/// Construction validates what is affordable: diagonal entries must be
/// strictly positive and finite; CSR input must be structurally and
/// numerically symmetric (relative tolerance [`SYMMETRY_RTOL`]) with
/// strictly increasing column indices per row. Positive definiteness of a
/// general CSR matrix is *not* verified -- that is the caller's obligation,
/// and the solvers report a numerical breakdown when it is violated.
/// [`SpdOperator::first_nonpositive_diagonal`] offers a cheap necessary
/// check.
#[derive(Clone, Debug)]
pub struct SpdOperator {
    n: usize,
    repr: Repr,
}

impl SpdOperator {
    /// Builds a diagonal operator from strictly positive, finite entries.
    pub fn diagonal(entries: Vec<f64>) -> Result<Self> {
        for (index, &value) in entries.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
            if value <= 0.0 {
                return Err(Error::InvalidOperator(format!(
                    "diagonal entry {index} is {value}, must be positive"
                )));
            }
        }
        Ok(SpdOperator {
            n: entries.len(),
            repr: Repr::Diagonal(entries),
        })
    }

    /// Builds a CSR operator, validating structure and symmetry.
    pub fn csr(
        n: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n + 1 {
            return Err(Error::InvalidOperator(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n + 1
            )));
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(Error::InvalidOperator(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(Error::InvalidOperator(format!(
                "col_indices ({}) and values ({}) lengths differ",
                col_indices.len(),
                values.len()
            )));
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
        }
        for i in 0..n {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(Error::InvalidOperator(format!(
                    "row_offsets decreases at row {i}"
                )));
            }
            let cols = &col_indices[lo..hi];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidOperator(format!(
                        "row {i}: column indices not strictly increasing ({} then {})",
                        w[0], w[1]
                    )));
                }
            }
            if let Some(&last) = cols.last() {
                if last >= n {
                    return Err(Error::InvalidOperator(format!(
                        "row {i}: column index {last} out of bounds for dimension {n}"
                    )));
                }
            }
        }

        let op = SpdOperator {
            n,
            repr: Repr::Csr {
                row_offsets,
                col_indices,
                values,
            },
        };
        op.check_symmetry()?;
        Ok(op)
    }

    fn check_symmetry(&self) -> Result<()> {
        let Repr::Csr {
            row_offsets,
            col_indices,
            values,
        } = &self.repr
        else {
            return Ok(());
        };
        for i in 0..self.n {
            for idx in row_offsets[i]..row_offsets[i + 1] {
                let j = col_indices[idx];
                if j == i {
                    continue;
                }
                let v = values[idx];
                let row_j = &col_indices[row_offsets[j]..row_offsets[j + 1]];
                let Ok(pos) = row_j.binary_search(&i) else {
                    return Err(Error::InvalidOperator(format!(
                        "structural asymmetry: entry ({i},{j}) stored but ({j},{i}) missing"
                    )));
                };
                let vt = values[row_offsets[j] + pos];
                let scale = v.abs().max(vt.abs());
                if (v - vt).abs() > SYMMETRY_RTOL * scale {
                    return Err(Error::InvalidOperator(format!(
                        "numerical asymmetry at ({i},{j}): {v} vs {vt}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal(_))
    }

    /// Stored nonzero count (n for diagonal storage).
    pub fn nnz(&self) -> usize {
        match &self.repr {
            Repr::Diagonal(d) => d.len(),
            Repr::Csr { values, .. } => values.len(),
        }
    }

    /// Diagonal entries when stored diagonally.
    pub fn diagonal_entries(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Diagonal(d) => Some(d),
            Repr::Csr { .. } => None,
        }
    }

    /// Exact extreme eigenvalues for diagonal storage; `None` for CSR.
    pub fn spectrum(&self) -> Option<SpectrumInfo> {
        match &self.repr {
            Repr::Diagonal(d) => {
                let lambda_min = d.iter().cloned().fold(f64::INFINITY, f64::min);
                let lambda_max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Some(SpectrumInfo {
                    lambda_min,
                    lambda_max,
                    exact: true,
                })
            }
            Repr::Csr { .. } => None,
        }
    }

    /// First row whose diagonal entry is missing, zero, or negative.
    /// A cheap necessary condition for positive definiteness.
    pub fn first_nonpositive_diagonal(&self) -> Option<usize> {
        match &self.repr {
            Repr::Diagonal(_) => None, // enforced at construction
            Repr::Csr {
                row_offsets,
                col_indices,
                values,
            } => (0..self.n).find(|&i| {
                let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
                match cols.binary_search(&i) {
                    Ok(pos) => values[row_offsets[i] + pos] <= 0.0,
                    Err(_) => true,
                }
            }),
        }
    }

    /// All stored entries as (row, col, value) triplets in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        match &self.repr {
            Repr::Diagonal(d) => d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect(),
            Repr::Csr {
                row_offsets,
                col_indices,
                values,
            } => (0..self.n)
                .flat_map(|i| (row_offsets[i]..row_offsets[i + 1]).map(move |idx| (i, idx)))
                .map(|(i, idx)| (i, col_indices[idx], values[idx]))
                .collect(),
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: self.n,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.n];
        self.matvec_range(0..self.n, x.as_slice(), &mut out);
        Ok(Vector::from_raw(out))
    }

    /// Computes rows `rows` of A x into `out` (`out.len() == rows.len()`).
    ///
    /// Each row is accumulated independently in stored column order, so the
    /// result for a row does not depend on which block it is computed in.
    /// The parallel simulation relies on this to make block-partitioned
    /// matvecs bit-identical to sequential ones.
    pub(crate) fn matvec_range(&self, rows: Range<usize>, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), rows.len());
        debug_assert_eq!(x.len(), self.n);
        match &self.repr {
            Repr::Diagonal(d) => {
                for (o, i) in out.iter_mut().zip(rows) {
                    *o = d[i] * x[i];
                }
            }
            Repr::Csr {
                row_offsets,
                col_indices,
                values,
            } => {
                for (o, i) in out.iter_mut().zip(rows) {
                    let mut acc = 0.0;
                    for idx in row_offsets[i]..row_offsets[i + 1] {
                        acc += values[idx] * x[col_indices[idx]];
                    }
                    *o = acc;
                }
            }
        }
    }
}

/// Dot product with strict left-to-right accumulation.
pub fn dot(u: &Vector, v: &Vector) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            context: "dot",
            expected: u.len(),
            got: v.len(),
        });
    }
    Ok(dot_unchecked(u.as_slice(), v.as_slice()))
}

pub(crate) fn dot_unchecked(u: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..u.len() {
        acc += u[i] * v[i];
    }
    acc
}

/// A^rho g via `rho` successive matvecs. `rho = 0` returns `g` unchanged.
pub fn power_apply(a: &SpdOperator, g: &Vector, rho: u32) -> Result<Vector> {
    if g.len() != a.dimension() {
        return Err(Error::DimensionMismatch {
            context: "power_apply",
            expected: a.dimension(),
            got: g.len(),
        });
    }
    let mut w = g.clone();
    for _ in 0..rho {
        w = a.matvec(&w)?;
    }
    Ok(w)
}

/// The generalized Rayleigh steplength (g' A^rho g) / (g' A^(rho+1) g).
///
/// For an SPD operator the value lies in [1/lambda_max, 1/lambda_min].
/// A zero gradient is a converged iterate, reported as
/// [`Error::ZeroGradient`]; a non-finite or non-positive quotient (overflow,
/// or an operator that is not positive definite on `g`) is a
/// [`Error::NumericalBreakdown`].
pub fn rayleigh_step(a: &SpdOperator, g: &Vector, rho: u32) -> Result<f64> {
    if g.len() != a.dimension() {
        return Err(Error::DimensionMismatch {
            context: "rayleigh_step",
            expected: a.dimension(),
            got: g.len(),
        });
    }
    if g.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroGradient);
    }
    let w = power_apply(a, g, rho)?;
    let num = dot_unchecked(g.as_slice(), w.as_slice());
    let aw = a.matvec(&w)?;
    let den = dot_unchecked(g.as_slice(), aw.as_slice());
    let alpha = num / den;
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::NumericalBreakdown(format!(
            "Rayleigh quotient is {alpha} (numerator {num}, denominator {den})"
        )));
    }
    Ok(alpha)
}
