//! `classify`, `schur`, `zoo` and `tensor`.

use std::path::Path;

use serde::Serialize;

use positools::charclass::{self, Partition};
use positools::curvature::{self, decomposable_heuristic, Decomposition, PositivityReport, Verdict};
use positools::linalg;
use positools::multilinear::{self, PositivityVerdict};
use positools::opsearch::{self, ZooParam};
use positools::rankmin::Budget;

use crate::doc::{input, internal, matrix_rows, CliError, Complex, FormDocument, TensorDocument};

#[derive(Debug, Serialize)]
pub struct WitnessJson {
    pub value: f64,
    pub rank: usize,
    /// `n × r` coefficient matrix of the tensor `τ`.
    pub tensor: Vec<Vec<Complex>>,
}

#[derive(Debug, Serialize)]
pub struct VerdictJson {
    pub verdict: &'static str,
    pub min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at_budget: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessJson>,
}

impl From<&Verdict> for VerdictJson {
    fn from(v: &Verdict) -> Self {
        let (at_budget, witness) = match v {
            Verdict::Positive { .. } => (None, None),
            Verdict::SemiDefinite { at_budget, .. } => (Some(*at_budget), None),
            Verdict::Indefinite { witness } => (
                None,
                Some(WitnessJson {
                    value: witness.value,
                    rank: witness.rank(),
                    tensor: matrix_rows(&witness.tensor),
                }),
            ),
        };
        Self {
            verdict: v.label(),
            min: v.min(),
            at_budget,
            witness,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ClassifyJson {
    pub n: usize,
    pub r: usize,
    pub griffiths: VerdictJson,
    pub nakano: VerdictJson,
    pub dual_nakano: VerdictJson,
    pub k_nakano: Vec<VerdictJson>,
    pub k_dual_nakano: Vec<VerdictJson>,
}

impl ClassifyJson {
    fn new(n: usize, r: usize, rep: &PositivityReport) -> Self {
        Self {
            n,
            r,
            griffiths: (&rep.griffiths).into(),
            nakano: (&rep.nakano).into(),
            dual_nakano: (&rep.dual_nakano).into(),
            k_nakano: rep.k_nakano.iter().map(Into::into).collect(),
            k_dual_nakano: rep.k_dual_nakano.iter().map(Into::into).collect(),
        }
    }
}

pub fn classify(file: &Path, tol: f64, restarts: usize, seed: u64) -> Result<ClassifyJson, CliError> {
    if !(tol >= 0.0) || restarts == 0 {
        return Err(input("--tol must be non-negative and --budget positive"));
    }
    let t = TensorDocument::read(file)?;
    let budget = Budget {
        restarts,
        seed,
        ..Budget::default()
    };
    let rep = curvature::classify(&t, tol, &budget);
    Ok(ClassifyJson::new(t.n(), t.r(), &rep))
}

#[derive(Debug, Serialize)]
pub struct FormVerdictJson {
    pub verdict: &'static str,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Serialize)]
pub struct SchurJson {
    pub partition: String,
    pub polynomial: String,
    pub form: FormDocument,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positivity: Option<FormVerdictJson>,
}

pub fn parse_partition(s: &str) -> Result<Partition, CliError> {
    let parts: Vec<usize> = s
        .trim_matches(|c| c == '(' || c == ')')
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| input(format!("partition {s:?}: {e}")))?;
    Partition::new(&parts).map_err(input)
}

pub fn schur(file: &Path, partition: &str, test_positivity: bool, tol: f64) -> Result<SchurJson, CliError> {
    let t = TensorDocument::read(file)?;
    let a = parse_partition(partition)?;
    let form = charclass::schur_form(&t, &a).map_err(input)?;
    let polynomial = charclass::schur_polynomial(&a, t.r()).map_err(input)?;
    let positivity = if test_positivity {
        let v = multilinear::is_positive(&form, tol).map_err(internal)?;
        let verdict = match v {
            PositivityVerdict::PositiveDefinite { .. } => "positive-definite",
            PositivityVerdict::PositiveSemidefinite { .. } => "positive-semidefinite",
            PositivityVerdict::Indefinite { .. } => "indefinite",
        };
        Some(FormVerdictJson {
            verdict,
            min_eigenvalue: v.min_eigenvalue(),
        })
    } else {
        None
    };
    Ok(SchurJson {
        partition: a.to_string(),
        polynomial: polynomial.to_string(),
        form: (&form).into(),
        positivity,
    })
}

#[derive(Debug, Serialize)]
pub struct ZooJson {
    pub n: usize,
    pub r: usize,
    pub kind: String,
    /// Choi matrix rows, `[(i,μ)][(j,λ)] = H(E_ij)[μ][λ]`.
    pub payload: Vec<Vec<Complex>>,
    pub profile: Vec<VerdictJson>,
    pub expected_k_positive: Vec<bool>,
    pub expected_decomposable: Option<bool>,
    pub decomposition: &'static str,
}

pub struct ZooArgs {
    pub dim: Option<usize>,
    pub level: Option<usize>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub seed: u64,
    pub restarts: usize,
}

pub fn zoo(name: &str, args: &ZooArgs) -> Result<ZooJson, CliError> {
    if !opsearch::ZOO_NAMES.contains(&name) {
        return Err(input(format!(
            "unknown map {name:?}; available: {}",
            opsearch::ZOO_NAMES.join(", ")
        )));
    }
    let param = match name {
        "choi3" => ZooParam::None,
        "k-positive" => ZooParam::DimLevel(
            args.dim.ok_or_else(|| input("k-positive needs --dim"))?,
            args.level.ok_or_else(|| input("k-positive needs --level"))?,
        ),
        "conjugation" | "schneider-transpose" => {
            let (n, r) = (
                args.rows.ok_or_else(|| input(format!("{name} needs --rows")))?,
                args.cols.ok_or_else(|| input(format!("{name} needs --cols")))?,
            );
            let mut g = linalg::rng(args.seed);
            ZooParam::Matrix(linalg::random_matrix(&mut g, n, r))
        }
        _ => ZooParam::Dim(args.dim.ok_or_else(|| input(format!("{name} needs --dim")))?),
    };
    let h = opsearch::zoo(name, &param).map_err(input)?;
    let expected = opsearch::expected_profile(name, &param).map_err(input)?;
    let budget = Budget {
        restarts: args.restarts,
        seed: args.seed,
        ..Budget::default()
    };
    let profile = opsearch::positivity_profile(&h, 1e-9, &budget);
    let decomposition = match decomposable_heuristic(&h, 300) {
        Decomposition::Witness { .. } => "witness",
        Decomposition::NotFound { .. } => "not-found",
    };
    Ok(ZooJson {
        n: h.n(),
        r: h.r(),
        kind: name.to_string(),
        payload: matrix_rows(opsearch::choi_matrix(&h).matrix()),
        profile: profile.iter().map(Into::into).collect(),
        expected_k_positive: expected.k_positive,
        expected_decomposable: expected.decomposable,
        decomposition,
    })
}

/// Seeded tensor families for fixtures.
pub fn tensor(n: usize, r: usize, family: &str, terms: usize, seed: u64) -> Result<TensorDocument, CliError> {
    if n == 0 || r == 0 {
        return Err(input(format!("dimensions must be positive (n={n}, r={r})")));
    }
    let t = match family {
        "random" => curvature::CurvatureTensor::random(n, r, seed),
        "dual-nakano" => curvature::random_dual_nakano(n, r, terms, seed),
        "nakano" => curvature::random_nakano(n, r, terms, seed),
        other => return Err(input(format!("unknown family {other:?} (random, dual-nakano, nakano)"))),
    };
    Ok(TensorDocument::from_tensor(&t))
}
