//! Choi matrices, a zoo of positive maps, and the double-mixed-discriminant search.
//!
//! Maps are `H: End(C^n) → End(C^r)`. The Choi matrix is
//! `Σ E_ij ⊗ H(E_ij)` with entry `[(i,μ)][(j,λ)] = H(E_ij)[μ][λ]`; it satisfies
//! `⟨H(E_ij) w_1, w_2⟩ = ⟨P̃(e_j ⊗ w_1), e_i ⊗ w_2⟩`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::curvature::{self, choi_of, partial_transpose, MatrixMap, Verdict};
use crate::discriminant;
use crate::linalg::{self, CMat, C64};
use crate::rankmin::{self, Budget};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpError {
    #[error("not completely positive (min Choi eigenvalue {0:e})")]
    NotCompletelyPositive(f64),
    #[error("unknown map {0:?}")]
    UnknownMap(String),
    #[error("map {name:?}: {reason}")]
    InvalidParameters { name: String, reason: String },
    #[error("invalid search configuration: {0}")]
    ConfigInvalid(String),
}

/// Relative tolerance for exact (eigenvalue) positivity decisions.
pub const CHOI_TOL: f64 = 1e-10;

/// Certified values below this are flagged for review.
pub const REVIEW_THRESHOLD: f64 = -1e-6;

// ---------------------------------------------------------------------------
// Choi matrices and k-positivity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    n: usize,
    r: usize,
    matrix: CMat,
}

impl ChoiMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Smallest eigenvalue `≥ −tol·max(1, max |entry|)`.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol * linalg::max_abs(&self.matrix).max(1.0)
    }

    /// Partial transpose on the output factor; PSD exactly for co-CP maps.
    pub fn partial_transpose(&self) -> CMat {
        partial_transpose(&self.matrix, self.n, self.r)
    }
}

pub fn choi_matrix(h: &MatrixMap) -> ChoiMatrix {
    ChoiMatrix {
        n: h.n(),
        r: h.r(),
        matrix: linalg::hermitian_part(&choi_of(h)),
    }
}

/// Verdicts for `k = 1..=min(n,r)`, monotone in `k`; the last one is exact.
pub fn positivity_profile(h: &MatrixMap, tol: f64, budget: &Budget) -> Vec<Verdict> {
    let c = choi_matrix(h);
    let scale = linalg::max_abs(&c.matrix).max(1.0);
    let mut levels = curvature::level_minima(&c.matrix, h.n(), h.r(), budget);
    // Searched levels inherit better witnesses from below; the exact level needs none.
    for k in 1..levels.len().saturating_sub(1) {
        if levels[k - 1].value < levels[k].value {
            levels[k] = levels[k - 1].clone();
        }
    }
    curvature::level_verdicts(levels, tol * scale)
}

/// Level-`k` verdict: exact through Choi eigenvalues at `k = min(n,r)`, searched below.
pub fn k_positive(h: &MatrixMap, k: usize, tol: f64, budget: &Budget) -> Verdict {
    let top = h.n().min(h.r());
    assert!((1..=top).contains(&k), "k must lie in 1..=min(n,r)");
    positivity_profile(h, tol, budget).swap_remove(k - 1)
}

/// `H(X) = Σ G_p* X G_p` with `n × r` matrices `G_p`, from the Choi eigen-decomposition.
pub fn kraus_decompose(h: &MatrixMap) -> Result<Vec<CMat>, OpError> {
    let c = choi_matrix(h);
    if !c.is_psd(CHOI_TOL) {
        return Err(OpError::NotCompletelyPositive(c.min_eigenvalue()));
    }
    let (n, r) = (h.n(), h.r());
    let (vals, vecs) = linalg::hermitian_eigen(&c.matrix);
    let cut = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 1e-15;
    Ok(vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > cut)
        .map(|(i, &v)| {
            let x = vecs.column(i) * C64::from(v.sqrt());
            CMat::from_fn(n, r, |j, l| x[j * r + l].conj())
        })
        .collect())
}

/// `max |H(E_ij) − Σ G_p* E_ij G_p|`.
pub fn kraus_residual(h: &MatrixMap, kraus: &[CMat]) -> f64 {
    let rebuilt = curvature::build_decomposable(h.n(), h.r(), kraus, &[]).expect("n×r Kraus matrices");
    rebuilt.distance(h)
}

/// `(H′, H″)` on `C^n ⊗ C^r`.
///
/// `H″[(j,λ)][(i,μ)] = H(E_ij)[μ][λ]`, i.e. `⟨H(E_ij) w_1, w_2⟩ = ⟨H″(e_i ⊗ w_2*), e_j ⊗ w_1*⟩`
/// in coordinates; it is the transposed Choi matrix. `H′[(j,μ)][(i,λ)] = H(E_ij)[μ][λ]`
/// is the same relation without dualizing `W`.
pub fn h_prime_pair(h: &MatrixMap) -> (CMat, CMat) {
    let (n, r) = (h.n(), h.r());
    let hpp = CMat::from_fn(n * r, n * r, |row, col| {
        let (j, l) = (row / r, row % r);
        let (i, m) = (col / r, col % r);
        h.image(i, j)[(m, l)]
    });
    let hp = CMat::from_fn(n * r, n * r, |row, col| {
        let (j, m) = (row / r, row % r);
        let (i, l) = (col / r, col % r);
        h.image(i, j)[(m, l)]
    });
    (hp, hpp)
}

// ---------------------------------------------------------------------------
// Zoo
// ---------------------------------------------------------------------------

/// Names accepted by [`zoo`].
pub const ZOO_NAMES: &[&str] = &[
    "identity",
    "transpose",
    "zero",
    "conjugation",
    "schneider-transpose",
    "choi3",
    "reduction",
    "k-positive",
];

/// Parameters for [`zoo`].
#[derive(Debug, Clone, PartialEq)]
pub enum ZooParam {
    None,
    /// Square dimension `d`.
    Dim(usize),
    /// `(d, k)` for the `k`-positive family on `M_d`.
    DimLevel(usize, usize),
    /// `n × r` matrix for the conjugation families.
    Matrix(CMat),
}

fn bad(name: &str, reason: &str) -> OpError {
    OpError::InvalidParameters {
        name: name.into(),
        reason: reason.into(),
    }
}

/// Choi's map on `M_3`: positive, not 2-positive, not decomposable.
pub fn choi3() -> MatrixMap {
    let apply = |x: &CMat| -> CMat {
        let mut y = -x.clone();
        y[(0, 0)] = x[(0, 0)] + x[(2, 2)];
        y[(1, 1)] = x[(1, 1)] + x[(0, 0)];
        y[(2, 2)] = x[(2, 2)] + x[(1, 1)];
        y
    };
    MatrixMap::from_fn(3, 3, |j, k| apply(&curvature::unit(3, j, k)))
}

/// `X ↦ Tr(X)·I − X`: positive, not 2-positive, co-completely positive.
pub fn reduction(d: usize) -> MatrixMap {
    k_positive_family(d, 1.0)
}

/// `X ↦ Tr(X)·I − t·X`, which is `k`-positive exactly for `t ≤ 1/k`.
fn k_positive_family(d: usize, t: f64) -> MatrixMap {
    MatrixMap::from_fn(d, d, |j, k| {
        let mut y = curvature::unit(d, j, k) * C64::from(-t);
        if j == k {
            for a in 0..d {
                y[(a, a)] += C64::from(1.0);
            }
        }
        y
    })
}

/// `X ↦ Tr(X)·I − X/(k + ½)` on `M_d`: `k`-positive, not `(k+1)`-positive (`k < d`).
pub fn k_positive_map(d: usize, k: usize) -> MatrixMap {
    k_positive_family(d, 1.0 / (k as f64 + 0.5))
}

pub fn zoo(name: &str, param: &ZooParam) -> Result<MatrixMap, OpError> {
    match (name, param) {
        ("identity", ZooParam::Dim(d)) if *d > 0 => Ok(MatrixMap::identity(*d)),
        ("transpose", ZooParam::Dim(d)) if *d > 0 => Ok(MatrixMap::transpose(*d)),
        ("zero", ZooParam::Dim(d)) if *d > 0 => Ok(MatrixMap::zero(*d, *d)),
        ("conjugation", ZooParam::Matrix(a)) if a.nrows() > 0 && a.ncols() > 0 => {
            Ok(MatrixMap::conjugation(a))
        }
        ("schneider-transpose", ZooParam::Matrix(b)) if b.nrows() > 0 && b.ncols() > 0 => {
            Ok(MatrixMap::transpose_conjugation(b))
        }
        ("choi3", ZooParam::None) => Ok(choi3()),
        ("reduction", ZooParam::Dim(d)) if *d > 0 => Ok(reduction(*d)),
        ("k-positive", ZooParam::DimLevel(d, k)) => {
            if *k == 0 || k >= d {
                return Err(bad(name, "need 1 ≤ k < d"));
            }
            Ok(k_positive_map(*d, *k))
        }
        (n, _) if ZOO_NAMES.contains(&n) => Err(bad(n, "parameters do not match this map")),
        (n, _) => Err(OpError::UnknownMap(n.into())),
    }
}

/// Literature profile of a zoo entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedProfile {
    /// `k_positive[k-1]`: is the map `k`-positive, for `k = 1..=min(n,r)`.
    pub k_positive: Vec<bool>,
    /// `Some(true)`: a decomposition is known; `Some(false)`: known non-decomposable.
    pub decomposable: Option<bool>,
}

/// Expected profile of `zoo(name, param)`; `schneider-transpose` assumes an invertible square matrix.
pub fn expected_profile(name: &str, param: &ZooParam) -> Result<ExpectedProfile, OpError> {
    let h = zoo(name, param)?;
    let top = h.n().min(h.r());
    let upto = |k: usize| (1..=top).map(|i| i <= k).collect::<Vec<_>>();
    Ok(match name {
        "identity" | "zero" | "conjugation" => ExpectedProfile {
            k_positive: upto(top),
            decomposable: Some(true),
        },
        "transpose" | "schneider-transpose" | "reduction" => ExpectedProfile {
            k_positive: upto(1),
            decomposable: Some(true),
        },
        "choi3" => ExpectedProfile {
            k_positive: upto(1),
            decomposable: Some(false),
        },
        "k-positive" => {
            let ZooParam::DimLevel(_, k) = param else { unreachable!("checked by zoo") };
            ExpectedProfile {
                k_positive: upto(*k),
                decomposable: None,
            }
        }
        _ => unreachable!("checked by zoo"),
    })
}

// ---------------------------------------------------------------------------
// Random certified maps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MapKind {
    Cp,
    CoCp,
    Decomposable,
    Conjugation,
    SchneiderTranspose,
    /// Choi's map under random local unitaries (`r = 3`).
    Choi3,
    /// Reduction map under random local unitaries.
    Reduction,
    /// `k`-positive family (random `k < r`) under random local unitaries.
    KPositive,
}

impl MapKind {
    pub const ALL: [MapKind; 8] = [
        MapKind::Cp,
        MapKind::CoCp,
        MapKind::Decomposable,
        MapKind::Conjugation,
        MapKind::SchneiderTranspose,
        MapKind::Choi3,
        MapKind::Reduction,
        MapKind::KPositive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MapKind::Cp => "cp",
            MapKind::CoCp => "cocp",
            MapKind::Decomposable => "decomposable",
            MapKind::Conjugation => "conjugation",
            MapKind::SchneiderTranspose => "schneider-transpose",
            MapKind::Choi3 => "choi3",
            MapKind::Reduction => "reduction",
            MapKind::KPositive => "k-positive",
        }
    }

    /// Whether the kind exists for square maps of size `r`.
    pub fn supports(self, r: usize) -> bool {
        match self {
            MapKind::Choi3 => r == 3,
            MapKind::Reduction | MapKind::KPositive => r >= 2,
            _ => r >= 1,
        }
    }

    /// CP, co-CP or decomposable by construction.
    pub fn is_decomposable_family(self) -> bool {
        matches!(
            self,
            MapKind::Cp
                | MapKind::CoCp
                | MapKind::Decomposable
                | MapKind::Conjugation
                | MapKind::SchneiderTranspose
                | MapKind::Reduction
        )
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MapKind {
    type Err = OpError;
    fn from_str(s: &str) -> Result<Self, OpError> {
        MapKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| OpError::UnknownMap(s.into()))
    }
}

/// How positivity of a map is known.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// Choi matrix PSD (min eigenvalue recorded).
    CompletelyPositive { min_eigenvalue: f64 },
    /// Partially transposed Choi matrix PSD.
    CoCompletelyPositive { min_eigenvalue: f64 },
    /// Explicit CP + co-CP split.
    Decomposable,
    /// Positive by a published theorem, invariant under local unitaries.
    Literature(&'static str),
    /// Rank-one minimization found nothing negative; not a proof.
    SampledNonNegative { min: f64 },
    None,
}

impl Certificate {
    pub fn label(&self) -> String {
        match self {
            Certificate::CompletelyPositive { .. } => "cp".into(),
            Certificate::CoCompletelyPositive { .. } => "cocp".into(),
            Certificate::Decomposable => "decomposable".into(),
            Certificate::Literature(s) => format!("literature:{s}"),
            Certificate::SampledNonNegative { .. } => "sampled-nonnegative".into(),
            Certificate::None => "none".into(),
        }
    }

    /// Positivity is proven (not merely sampled).
    pub fn is_certified(&self) -> bool {
        !matches!(self, Certificate::SampledNonNegative { .. } | Certificate::None)
    }

    /// Positivity follows from CP, co-CP or a decomposition.
    pub fn is_decomposable(&self) -> bool {
        matches!(
            self,
            Certificate::CompletelyPositive { .. }
                | Certificate::CoCompletelyPositive { .. }
                | Certificate::Decomposable
        )
    }
}

/// A generated map with its construction data.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMap {
    pub map: MatrixMap,
    pub kind: MapKind,
    /// Human-readable construction parameters.
    pub params: String,
    pub certificate: Certificate,
}

fn local_unitaries<R: Rng>(g: &mut R, h: &MatrixMap) -> MatrixMap {
    let a = linalg::random_unitary(g, h.n());
    let b = linalg::random_unitary(g, h.r());
    h.conjugate_by(&a, &b)
}

/// A random positive map of the given kind with its certificate.
pub fn random_positive_map(n: usize, r: usize, kind: MapKind, seed: u64) -> Result<SampledMap, OpError> {
    if n == 0 || r == 0 {
        return Err(OpError::ConfigInvalid(format!("dimensions must be positive (n={n}, r={r})")));
    }
    let square = n == r;
    let mut g = linalg::rng(seed);
    let cp_min = |h: &MatrixMap| choi_matrix(h).min_eigenvalue();
    let cocp_min = |h: &MatrixMap| linalg::hermitian_eigenvalues(&choi_matrix(h).partial_transpose())[0];
    let out = match kind {
        MapKind::Cp => {
            let m = g.gen_range(1..=n * r);
            let vs: Vec<CMat> = (0..m).map(|_| linalg::random_matrix(&mut g, n, r)).collect();
            let h = curvature::build_decomposable(n, r, &vs, &[]).expect("shapes");
            SampledMap {
                certificate: Certificate::CompletelyPositive { min_eigenvalue: cp_min(&h) },
                map: h,
                kind,
                params: format!("kraus={m}"),
            }
        }
        MapKind::CoCp => {
            let m = g.gen_range(1..=n * r);
            let ws: Vec<CMat> = (0..m).map(|_| linalg::random_matrix(&mut g, n, r)).collect();
            let h = curvature::build_decomposable(n, r, &[], &ws).expect("shapes");
            SampledMap {
                certificate: Certificate::CoCompletelyPositive { min_eigenvalue: cocp_min(&h) },
                map: h,
                kind,
                params: format!("kraus={m}"),
            }
        }
        MapKind::Decomposable => {
            let a = g.gen_range(1..=n * r);
            let b = g.gen_range(1..=n * r);
            let vs: Vec<CMat> = (0..a).map(|_| linalg::random_matrix(&mut g, n, r)).collect();
            let ws: Vec<CMat> = (0..b).map(|_| linalg::random_matrix(&mut g, n, r)).collect();
            SampledMap {
                map: curvature::build_decomposable(n, r, &vs, &ws).expect("shapes"),
                kind,
                params: format!("cp_kraus={a},cocp_kraus={b}"),
                certificate: Certificate::Decomposable,
            }
        }
        MapKind::Conjugation => {
            let h = MatrixMap::conjugation(&linalg::random_matrix(&mut g, n, r));
            SampledMap {
                certificate: Certificate::CompletelyPositive { min_eigenvalue: cp_min(&h) },
                map: h,
                kind,
                params: "kraus=1".into(),
            }
        }
        MapKind::SchneiderTranspose => {
            let h = MatrixMap::transpose_conjugation(&linalg::random_matrix(&mut g, n, r));
            SampledMap {
                certificate: Certificate::CoCompletelyPositive { min_eigenvalue: cocp_min(&h) },
                map: h,
                kind,
                params: "kraus=1".into(),
            }
        }
        MapKind::Choi3 if square && r == 3 => SampledMap {
            map: local_unitaries(&mut g, &choi3()),
            kind,
            params: "local-unitaries".into(),
            certificate: Certificate::Literature("choi-1975"),
        },
        MapKind::Reduction if square && r >= 2 => {
            let h = local_unitaries(&mut g, &reduction(r));
            SampledMap {
                certificate: Certificate::CoCompletelyPositive { min_eigenvalue: cocp_min(&h) },
                map: h,
                kind,
                params: "local-unitaries".into(),
            }
        }
        MapKind::KPositive if square && r >= 2 => {
            let k = g.gen_range(1..r);
            SampledMap {
                map: local_unitaries(&mut g, &k_positive_map(r, k)),
                kind,
                params: format!("k={k},local-unitaries"),
                certificate: Certificate::Literature("tomiyama-k-positive"),
            }
        }
        _ => {
            return Err(OpError::ConfigInvalid(format!(
                "kind {kind} is not available for n={n}, r={r}"
            )))
        }
    };
    Ok(out)
}

/// Rank-one search for a user-supplied map: sampled, never certified.
pub fn sample_positivity(h: &MatrixMap, budget: &Budget) -> Certificate {
    let w = rankmin::minimize_rank(&choi_matrix(h).matrix, h.n(), h.r(), 1, budget);
    if w.value >= -CHOI_TOL * h.max_abs().max(1.0) {
        Certificate::SampledNonNegative { min: w.value }
    } else {
        Certificate::None
    }
}

// ---------------------------------------------------------------------------
// Search harness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// `dim V = dim W`.
    pub r: usize,
    pub samples: usize,
    /// Cycled round-robin over sample indices.
    pub kinds: Vec<MapKind>,
    pub seed: u64,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), OpError> {
        if self.r == 0 || self.r > discriminant::MAX_RANK {
            return Err(OpError::ConfigInvalid(format!(
                "r must lie in 1..={}",
                discriminant::MAX_RANK
            )));
        }
        if self.samples > 0 && self.kinds.is_empty() {
            return Err(OpError::ConfigInvalid("no map kinds given".into()));
        }
        if let Some(k) = self.kinds.iter().find(|k| !k.supports(self.r)) {
            return Err(OpError::ConfigInvalid(format!("kind {k} is not available for r={}", self.r)));
        }
        Ok(())
    }

    /// Kind and seed of sample `i`.
    pub fn sample(&self, i: usize) -> (MapKind, u64) {
        (self.kinds[i % self.kinds.len()], linalg::derive_seed(self.seed, i as u64))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchRecord {
    /// Index of the sample within its configuration.
    pub index: usize,
    pub seed: u64,
    pub kind: MapKind,
    pub params: String,
    pub certificate: Certificate,
    pub dmd_value: f64,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSummary {
    pub samples: usize,
    pub min_value: f64,
    /// Record index of the minimizer.
    pub argmin: Option<usize>,
    /// Minimum over samples whose certificate is CP, co-CP or decomposable.
    pub decomposable_min: f64,
    /// Indices of records flagged for review.
    pub review: Vec<usize>,
    /// All decomposable-certified samples gave values `≥ −1e−10`.
    pub invariant_holds: bool,
}

/// Evaluates one sample; deterministic in `(config.r, kind, seed)`.
pub fn evaluate_sample(r: usize, index: usize, kind: MapKind, seed: u64) -> Result<SearchRecord, OpError> {
    let s = random_positive_map(r, r, kind, seed)?;
    let value = discriminant::double_mixed_discriminant(&s.map)
        .map_err(|e| OpError::ConfigInvalid(e.to_string()))?;
    let mut flags = Vec::new();
    if s.certificate.is_certified() && value < REVIEW_THRESHOLD {
        flags.push("REVIEW".to_string());
    }
    Ok(SearchRecord {
        index,
        seed,
        kind,
        params: s.params,
        certificate: s.certificate,
        dmd_value: value,
        flags,
    })
}

/// Runs the configured samples, skipping indices in `done`; records come back in index order.
pub fn search_open_problem_resume(
    config: &SearchConfig,
    done: &HashSet<usize>,
) -> Result<Vec<SearchRecord>, OpError> {
    config.validate()?;
    (0..config.samples)
        .into_par_iter()
        .filter(|i| !done.contains(i))
        .map(|i| {
            let (kind, seed) = config.sample(i);
            evaluate_sample(config.r, i, kind, seed)
        })
        .collect()
}

/// Runs the search and summarizes it.
pub fn search_open_problem(config: &SearchConfig) -> Result<(Vec<SearchRecord>, SearchSummary), OpError> {
    let records = search_open_problem_resume(config, &HashSet::new())?;
    let summary = summarize(&records);
    Ok((records, summary))
}

pub fn summarize(records: &[SearchRecord]) -> SearchSummary {
    let mut min_value = f64::INFINITY;
    let mut argmin = None;
    let mut decomposable_min = f64::INFINITY;
    let mut review = Vec::new();
    for rec in records {
        if rec.dmd_value < min_value {
            min_value = rec.dmd_value;
            argmin = Some(rec.index);
        }
        if rec.certificate.is_decomposable() {
            decomposable_min = decomposable_min.min(rec.dmd_value);
        }
        if rec.flags.iter().any(|f| f == "REVIEW") {
            review.push(rec.index);
        }
    }
    SearchSummary {
        samples: records.len(),
        min_value,
        argmin,
        decomposable_min,
        review,
        invariant_holds: !(decomposable_min < -1e-10),
    }
}
