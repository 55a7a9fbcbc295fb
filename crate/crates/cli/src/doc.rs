//! JSON documents read and written by the CLI. Indices are 1-based on disk.

use std::collections::BTreeSet;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use positools::curvature::{CurvatureError, CurvatureTensor};
use positools::linalg::CMat;
use positools::multilinear::ExteriorForm;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unreadable file, malformed JSON, failed validation.
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

pub fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

pub fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Complex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub j: usize,
    pub k: usize,
    pub lambda: usize,
    pub mu: usize,
    pub re: f64,
    pub im: f64,
}

/// `{n, r, entries}`: the nonzero coefficients `c_{jkλμ}` of `iR/2π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorDocument {
    pub n: usize,
    pub r: usize,
    pub entries: Vec<Entry>,
}

impl TensorDocument {
    pub fn from_tensor(t: &CurvatureTensor) -> Self {
        let (n, r) = (t.n(), t.r());
        let mut entries = Vec::new();
        for j in 0..n {
            for k in 0..n {
                for l in 0..r {
                    for m in 0..r {
                        let c = t.get(j, k, l, m);
                        if c.re != 0.0 || c.im != 0.0 {
                            entries.push(Entry {
                                j: j + 1,
                                k: k + 1,
                                lambda: l + 1,
                                mu: m + 1,
                                re: c.re,
                                im: c.im,
                            });
                        }
                    }
                }
            }
        }
        Self { n, r, entries }
    }

    pub fn to_tensor(&self) -> Result<CurvatureTensor, CliError> {
        let (n, r) = (self.n, self.r);
        if n == 0 || r == 0 {
            return Err(input(format!("dimensions must be positive (n={n}, r={r})")));
        }
        let mut c = vec![Complex64::new(0.0, 0.0); n * n * r * r];
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            let idx = [e.j, e.k, e.lambda, e.mu];
            let bounds = [n, n, r, r];
            if idx.iter().zip(bounds).any(|(&i, b)| i == 0 || i > b) {
                return Err(input(format!("entry {idx:?} out of range for n={n}, r={r}")));
            }
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(input(format!("entry {idx:?} is not finite")));
            }
            if !seen.insert(idx) {
                return Err(input(format!("duplicate entry {idx:?}")));
            }
            let off = (((e.j - 1) * n + e.k - 1) * r + e.lambda - 1) * r + e.mu - 1;
            c[off] = Complex64::new(e.re, e.im);
        }
        CurvatureTensor::from_components(n, r, c).map_err(|e| match e {
            CurvatureError::SymmetryViolation { .. } => input(e),
            other => internal(other),
        })
    }

    pub fn read(path: &Path) -> Result<CurvatureTensor, CliError> {
        read_json::<TensorDocument>(path)?.to_tensor()
    }
}

/// A monomial `c · dz_I ∧ dz̄_J` with 1-based index lists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub dz: Vec<usize>,
    pub dzbar: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormDocument {
    pub dim: usize,
    pub p: usize,
    pub q: usize,
    pub terms: Vec<Term>,
}

impl From<&ExteriorForm> for FormDocument {
    fn from(f: &ExteriorForm) -> Self {
        let (p, q) = f.bidegree();
        let one = |v: Vec<usize>| v.into_iter().map(|i| i + 1).collect();
        Self {
            dim: f.dim(),
            p,
            q,
            terms: f
                .terms()
                .map(|(i, j, c)| Term {
                    dz: one(i),
                    dzbar: one(j),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }
}

pub fn matrix_rows(m: &CMat) -> Vec<Vec<Complex>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].into()).collect())
        .collect()
}
