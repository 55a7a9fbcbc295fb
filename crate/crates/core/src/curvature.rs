//! Curvature tensors at a point and their operator avatars.
//!
//! A [`CurvatureTensor`] holds the coefficients of
//! `iR/2π = Σ c_{jkλμ} i dz_j ∧ dz̄_k ⊗ e*_λ ⊗ e_μ` in a unitary frame, so that
//! `(iR/2π) e_λ = Σ_μ (Σ_{jk} c_{jkλμ} i dz_j ∧ dz̄_k) e_μ`. The factor `2π` is
//! absorbed everywhere: "the curvature form" below means `R/2π`.
//!
//! Conventions used throughout the crate:
//!
//! * `C^n ⊗ C^r` is indexed by `(j, λ) ↦ j·r + λ` (0-based).
//! * `pe_matrix[(k,μ)][(j,λ)] = c_{jkλμ}`, `pestar_matrix[(k,μ)][(j,λ)] = c_{jkμλ}`.
//! * A [`MatrixMap`] `H: End(C^n) → End(C^r)` stores the images `H(E_jk)` of
//!   the matrix units; `he_map` satisfies `⟨H(E_jk) e_λ, e_μ⟩ = c_{jkλμ}`.
//! * The Choi matrix of `he_map(R)` is the transpose of `pestar_matrix(R)`;
//!   the Choi matrix of `hestar_map(R)` is the transpose of `pe_matrix(R)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::linalg::{self, CMat, CVec, C64, ONE, ZERO};
use crate::multilinear::{self, ExteriorForm};
use crate::rankmin::{self, Budget, Witness};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error("base dimension and rank must be positive (got n={n}, r={r})")]
    ZeroDimension { n: usize, r: usize },
    #[error("expected {expected} coefficients, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("coefficients violate c_jkλμ = conj(c_kjμλ) (max deviation {max_deviation:e})")]
    SymmetryViolation { max_deviation: f64 },
    #[error("not dual Nakano semi-positive (min Choi eigenvalue {min_eigenvalue:e})")]
    NotDualNakano { min_eigenvalue: f64 },
    #[error("not Nakano semi-positive (min eigenvalue {min_eigenvalue:e})")]
    NotNakano { min_eigenvalue: f64 },
    #[error("map does not preserve adjoints (defect {defect:e})")]
    NotAdjointPreserving { defect: f64 },
}

/// Tolerance for the Hermitian symmetry of coefficients, relative to their size.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Tolerance for factorization preconditions, relative to the operator size.
pub const FACTOR_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// CurvatureTensor
// ---------------------------------------------------------------------------

/// Coefficients `c_{jkλμ}` of `iR/2π` in a unitary frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    n: usize,
    r: usize,
    c: Vec<C64>,
}

fn idx(n: usize, r: usize, j: usize, k: usize, l: usize, m: usize) -> usize {
    ((j * n + k) * r + l) * r + m
}

impl CurvatureTensor {
    /// Validates the symmetry `c_{jkλμ} = conj(c_{kjμλ})` and symmetrizes away rounding.
    ///
    /// `c` is laid out as `c[((j·n + k)·r + λ)·r + μ]`.
    pub fn from_components(n: usize, r: usize, c: Vec<C64>) -> Result<Self, CurvatureError> {
        if n == 0 || r == 0 {
            return Err(CurvatureError::ZeroDimension { n, r });
        }
        let expected = n * n * r * r;
        if c.len() != expected {
            return Err(CurvatureError::ShapeMismatch {
                expected,
                got: c.len(),
            });
        }
        let scale = c.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        let mut dev = 0.0f64;
        let mut sym = c.clone();
        for j in 0..n {
            for k in 0..n {
                for l in 0..r {
                    for m in 0..r {
                        let a = c[idx(n, r, j, k, l, m)];
                        let b = c[idx(n, r, k, j, m, l)].conj();
                        dev = dev.max((a - b).norm());
                        sym[idx(n, r, j, k, l, m)] = (a + b) * 0.5;
                    }
                }
            }
        }
        if dev > SYMMETRY_TOL * scale || dev.is_nan() {
            return Err(CurvatureError::SymmetryViolation { max_deviation: dev });
        }
        Ok(Self { n, r, c: sym })
    }

    pub fn from_fn(
        n: usize,
        r: usize,
        f: impl Fn(usize, usize, usize, usize) -> C64,
    ) -> Result<Self, CurvatureError> {
        let mut c = vec![ZERO; n * n * r * r];
        for j in 0..n {
            for k in 0..n {
                for l in 0..r {
                    for m in 0..r {
                        c[idx(n, r, j, k, l, m)] = f(j, k, l, m);
                    }
                }
            }
        }
        Self::from_components(n, r, c)
    }

    /// Flat curvature.
    pub fn zero(n: usize, r: usize) -> Self {
        Self::from_components(n, r, vec![ZERO; n * n * r * r]).expect("positive dimensions")
    }

    /// The tensor whose Nakano operator is the given Hermitian `nr × nr` matrix.
    pub fn from_pe_matrix(n: usize, r: usize, p: &CMat) -> Result<Self, CurvatureError> {
        Self::from_fn(n, r, |j, k, l, m| p[(k * r + m, j * r + l)])
    }

    /// Generic random tensor (Gaussian Hermitian Nakano operator), no positivity.
    pub fn random(n: usize, r: usize, seed: u64) -> Self {
        let mut g = linalg::rng(seed);
        let a = linalg::random_matrix(&mut g, n * r, n * r);
        Self::from_pe_matrix(n, r, &linalg::hermitian_part(&a)).expect("hermitian by construction")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// `c_{jkλμ}` (0-based indices).
    pub fn get(&self, j: usize, k: usize, l: usize, m: usize) -> C64 {
        self.c[idx(self.n, self.r, j, k, l, m)]
    }

    pub fn components(&self) -> &[C64] {
        &self.c
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!((self.n, self.r), (other.n, other.r));
        self.c
            .iter()
            .zip(&other.c)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            r: self.r,
            c: self.c.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.n, self.r), (other.n, other.r));
        Self {
            n: self.n,
            r: self.r,
            c: self.c.iter().zip(&other.c).map(|(a, b)| a + b).collect(),
        }
    }

    /// The `(1,1)`-form `g_{λμ} = Σ_{jk} c_{jkλμ} i dz_j ∧ dz̄_k`, i.e. `⟨(iR/2π) e_λ, e_μ⟩`.
    pub fn entry_form(&self, l: usize, m: usize) -> ExteriorForm {
        let h = CMat::from_fn(self.n, self.n, |j, k| self.get(j, k, l, m));
        ExteriorForm::from_hermitian_11(&h)
    }

    /// Coefficients in new coordinates `z = A w` and new frame `e'_λ = Σ_ν U_{νλ} e_ν`.
    pub fn change_frame(&self, base: &CMat, fiber: &CMat) -> Self {
        let (n, r) = (self.n, self.r);
        assert_eq!(base.shape(), (n, n), "base change must be n×n");
        assert_eq!(fiber.shape(), (r, r), "frame change must be r×r");
        // fiber indices first
        let mut tmp = vec![ZERO; self.c.len()];
        for j in 0..n {
            for k in 0..n {
                for l in 0..r {
                    for m in 0..r {
                        let mut s = ZERO;
                        for nu in 0..r {
                            for rho in 0..r {
                                s += fiber[(nu, l)] * fiber[(rho, m)].conj() * self.get(j, k, nu, rho);
                            }
                        }
                        tmp[idx(n, r, j, k, l, m)] = s;
                    }
                }
            }
        }
        let mut out = vec![ZERO; self.c.len()];
        for a in 0..n {
            for b in 0..n {
                for l in 0..r {
                    for m in 0..r {
                        let mut s = ZERO;
                        for j in 0..n {
                            for k in 0..n {
                                s += base[(j, a)] * base[(k, b)].conj() * tmp[idx(n, r, j, k, l, m)];
                            }
                        }
                        out[idx(n, r, a, b, l, m)] = s;
                    }
                }
            }
        }
        Self::from_components(n, r, out).expect("frame change preserves symmetry")
    }
}

/// `⟨P^E(∂z_j ⊗ e_λ), ∂z_k ⊗ e_μ⟩ = c_{jkλμ}`.
pub fn pe_matrix(t: &CurvatureTensor) -> CMat {
    let (n, r) = (t.n, t.r);
    CMat::from_fn(n * r, n * r, |row, col| {
        let (k, m) = (row / r, row % r);
        let (j, l) = (col / r, col % r);
        t.get(j, k, l, m)
    })
}

/// The dual Nakano operator: as [`pe_matrix`] with `λ` and `μ` exchanged.
pub fn pestar_matrix(t: &CurvatureTensor) -> CMat {
    let (n, r) = (t.n, t.r);
    CMat::from_fn(n * r, n * r, |row, col| {
        let (k, m) = (row / r, row % r);
        let (j, l) = (col / r, col % r);
        t.get(j, k, m, l)
    })
}

/// Curvature of the dual bundle: `c*_{jkλμ} = −c_{jkμλ}`.
pub fn dual_curvature(t: &CurvatureTensor) -> CurvatureTensor {
    CurvatureTensor::from_fn(t.n, t.r, |j, k, l, m| -t.get(j, k, m, l)).expect("valid input")
}

// ---------------------------------------------------------------------------
// MatrixMap
// ---------------------------------------------------------------------------

/// Linear map `H: End(C^n) → End(C^r)`, stored through the images of matrix units.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMap {
    n: usize,
    r: usize,
    blocks: Vec<CMat>,
}

impl MatrixMap {
    /// `f(j, k)` is the `r × r` image of `E_jk`.
    pub fn from_fn(n: usize, r: usize, f: impl Fn(usize, usize) -> CMat) -> Self {
        let blocks: Vec<CMat> = (0..n * n).map(|x| f(x / n, x % n)).collect();
        assert!(
            blocks.iter().all(|b| b.shape() == (r, r)),
            "images must be r×r"
        );
        Self { n, r, blocks }
    }

    pub fn zero(n: usize, r: usize) -> Self {
        Self::from_fn(n, r, |_, _| CMat::zeros(r, r))
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, d, |j, k| unit(d, j, k))
    }

    pub fn transpose(d: usize) -> Self {
        Self::from_fn(d, d, |j, k| unit(d, k, j))
    }

    /// `X ↦ G* X G` for an `n × r` matrix `G`.
    pub fn conjugation(g: &CMat) -> Self {
        let (n, r) = g.shape();
        Self::from_fn(n, r, |j, k| g.adjoint() * unit(n, j, k) * g)
    }

    /// `X ↦ W* Xᵀ W` for an `n × r` matrix `W`.
    pub fn transpose_conjugation(w: &CMat) -> Self {
        let (n, r) = w.shape();
        Self::from_fn(n, r, |j, k| w.adjoint() * unit(n, k, j) * w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// `H(E_jk)`.
    pub fn image(&self, j: usize, k: usize) -> &CMat {
        &self.blocks[j * self.n + k]
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        assert_eq!(x.shape(), (self.n, self.n), "argument must be n×n");
        let mut out = CMat::zeros(self.r, self.r);
        for j in 0..self.n {
            for k in 0..self.n {
                if x[(j, k)] != ZERO {
                    out += self.image(j, k) * x[(j, k)];
                }
            }
        }
        out
    }

    /// `max |H(E_kj) − H(E_jk)*|`; zero exactly when `H(A*) = H(A)*` for all `A`.
    pub fn adjoint_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for j in 0..self.n {
            for k in 0..self.n {
                d = d.max(linalg::max_abs_diff(self.image(k, j), &self.image(j, k).adjoint()));
            }
        }
        d
    }

    pub fn is_adjoint_preserving(&self, tol: f64) -> bool {
        self.adjoint_defect() <= tol * self.max_abs().max(1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().fold(0.0, |m, b| m.max(linalg::max_abs(b)))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!((self.n, self.r), (other.n, other.r));
        self.blocks
            .iter()
            .zip(&other.blocks)
            .fold(0.0, |m, (a, b)| m.max(linalg::max_abs_diff(a, b)))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.n, self.r), (other.n, other.r));
        Self {
            n: self.n,
            r: self.r,
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            n: self.n,
            r: self.r,
            blocks: self.blocks.iter().map(|b| b * s).collect(),
        }
    }

    /// `X ↦ H(X)ᵀ`.
    pub fn then_transpose(&self) -> Self {
        Self {
            n: self.n,
            r: self.r,
            blocks: self.blocks.iter().map(|b| b.transpose()).collect(),
        }
    }

    /// `X ↦ H(Xᵀ)`.
    pub fn transpose_input(&self) -> Self {
        Self::from_fn(self.n, self.r, |j, k| self.image(k, j).clone())
    }

    /// `X ↦ B* H(A X A*) B` for `A: n×n`, `B: r×r`.
    pub fn conjugate_by(&self, a: &CMat, b: &CMat) -> Self {
        let n = self.n;
        Self::from_fn(n, self.r, |j, k| {
            let x = a * unit(n, j, k) * a.adjoint();
            b.adjoint() * self.apply(&x) * b
        })
    }

    /// Restriction to a subspace of `C^n` spanned by the orthonormal columns of `u`:
    /// `H^L(E_ab) = H(u_a u_b*)`.
    pub fn restrict_domain(&self, u: &CMat) -> Self {
        assert_eq!(u.nrows(), self.n);
        let m = u.ncols();
        Self::from_fn(m, self.r, |a, b| {
            let x = u.column(a) * u.column(b).adjoint();
            self.apply(&x)
        })
    }
}

pub(crate) fn unit(d: usize, j: usize, k: usize) -> CMat {
    let mut e = CMat::zeros(d, d);
    e[(j, k)] = ONE;
    e
}

/// `⟨H(E_jk) e_λ, e_μ⟩ = c_{jkλμ}`.
pub fn he_map(t: &CurvatureTensor) -> MatrixMap {
    MatrixMap::from_fn(t.n, t.r, |j, k| {
        CMat::from_fn(t.r, t.r, |m, l| t.get(j, k, l, m))
    })
}

/// `he_map` followed by transposition `End(E) → End(E*)`.
pub fn hestar_map(t: &CurvatureTensor) -> MatrixMap {
    he_map(t).then_transpose()
}

/// Choi matrix `Σ E_ij ⊗ H(E_ij)`: entry `[(i,μ)][(j,λ)] = H(E_ij)[μ][λ]`.
pub fn choi_of(h: &MatrixMap) -> CMat {
    let (n, r) = (h.n, h.r);
    CMat::from_fn(n * r, n * r, |row, col| {
        let (i, m) = (row / r, row % r);
        let (j, l) = (col / r, col % r);
        h.image(i, j)[(m, l)]
    })
}

/// Inverse of [`choi_of`].
pub fn map_from_choi(n: usize, r: usize, c: &CMat) -> MatrixMap {
    MatrixMap::from_fn(n, r, |i, j| CMat::from_fn(r, r, |m, l| c[(i * r + m, j * r + l)]))
}

/// Partial transpose on the `C^r` factor: `M^Γ[(i,μ)][(j,λ)] = M[(i,λ)][(j,μ)]`.
pub fn partial_transpose(m: &CMat, n: usize, r: usize) -> CMat {
    assert_eq!(m.nrows(), n * r);
    CMat::from_fn(n * r, n * r, |row, col| {
        let (i, mu) = (row / r, row % r);
        let (j, l) = (col / r, col % r);
        m[(i * r + l, j * r + mu)]
    })
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Outcome of one positivity test.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Positive { min: f64 },
    /// Within `±tol` of zero. `at_budget` marks values coming from the randomized
    /// search rather than an exact eigenvalue.
    SemiDefinite { min: f64, at_budget: bool },
    Indefinite { witness: Witness },
}

impl Verdict {
    pub(crate) fn from_exact(w: Witness, tol: f64) -> Self {
        Self::classify(w, tol, false)
    }

    pub(crate) fn from_search(w: Witness, tol: f64) -> Self {
        Self::classify(w, tol, true)
    }

    fn classify(w: Witness, tol: f64, sampled: bool) -> Self {
        if w.value > tol {
            Self::Positive { min: w.value }
        } else if w.value >= -tol {
            Self::SemiDefinite {
                min: w.value,
                at_budget: sampled,
            }
        } else {
            Self::Indefinite { witness: w }
        }
    }

    /// Smallest value found.
    pub fn min(&self) -> f64 {
        match self {
            Self::Positive { min } | Self::SemiDefinite { min, .. } => *min,
            Self::Indefinite { witness } => witness.value,
        }
    }

    /// Positive or semidefinite.
    pub fn is_nonnegative(&self) -> bool {
        !matches!(self, Self::Indefinite { .. })
    }

    pub fn is_positive(&self) -> bool {
        matches!(self, Self::Positive { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Positive { .. } => "positive",
            Self::SemiDefinite { .. } => "semidefinite",
            Self::Indefinite { .. } => "indefinite",
        }
    }
}

/// Positivity profile of a curvature tensor.
///
/// `k_nakano[k-1]` and `k_dual_nakano[k-1]` hold the level-`k` verdicts for
/// `k = 1..=min(n,r)`; the last entries coincide with `nakano` and `dual_nakano`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub griffiths: Verdict,
    pub nakano: Verdict,
    pub dual_nakano: Verdict,
    pub k_nakano: Vec<Verdict>,
    pub k_dual_nakano: Vec<Verdict>,
}

/// For a rank-one `τ = v ξᵀ`, the tensor `v ξ̄ᵀ` carrying the same value for the dual operator.
fn rank_one_partner(w: &Witness) -> Witness {
    let svd = w.tensor.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let s = svd.singular_values[0];
    let tensor = u.column(0) * vt.row(0).conjugate() * C64::from(s);
    Witness {
        tensor,
        value: w.value,
    }
}

/// Rank-level minima of a Hermitian operator on `C^n ⊗ C^r`.
pub(crate) fn level_minima(p: &CMat, n: usize, r: usize, budget: &Budget) -> Vec<Witness> {
    let top = n.min(r);
    (1..=top)
        .map(|k| {
            let b = Budget {
                seed: linalg::derive_seed(budget.seed, k as u64),
                ..*budget
            };
            rankmin::minimize_rank(p, n, r, k, &b)
        })
        .collect()
}

pub(crate) fn level_verdicts(levels: Vec<Witness>, tol: f64) -> Vec<Verdict> {
    let top = levels.len();
    levels
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            if i + 1 == top {
                Verdict::from_exact(w, tol)
            } else {
                Verdict::from_search(w, tol)
            }
        })
        .collect()
}

/// Decides Griffiths, (dual) Nakano and the intermediate `k`-levels.
pub fn classify(t: &CurvatureTensor, tol: f64, budget: &Budget) -> PositivityReport {
    let (n, r) = (t.n, t.r);
    let pe = pe_matrix(t);
    let ps = pestar_matrix(t);
    let mut nak = level_minima(&pe, n, r, budget);
    let dual_budget = Budget {
        seed: linalg::derive_seed(budget.seed, 1 << 32),
        ..*budget
    };
    let mut dual = level_minima(&ps, n, r, &dual_budget);
    // Rank one is Griffiths for both operators; share the better witness.
    if nak[0].value < dual[0].value {
        dual[0] = rank_one_partner(&nak[0]);
    } else {
        nak[0] = rank_one_partner(&dual[0]);
    }
    let top = n.min(r);
    for levels in [&mut nak, &mut dual] {
        for k in 1..top.saturating_sub(1) {
            if levels[k - 1].value < levels[k].value {
                levels[k] = levels[k - 1].clone();
            }
        }
    }
    let griffiths = if top == 1 {
        Verdict::from_exact(nak[0].clone(), tol)
    } else {
        Verdict::from_search(nak[0].clone(), tol)
    };
    let k_nakano = level_verdicts(nak, tol);
    let k_dual_nakano = level_verdicts(dual, tol);
    PositivityReport {
        griffiths,
        nakano: k_nakano[top - 1].clone(),
        dual_nakano: k_dual_nakano[top - 1].clone(),
        k_nakano,
        k_dual_nakano,
    }
}

// ---------------------------------------------------------------------------
// Factorizations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    /// `R = A ∧ Āᵀ`, `he_map(R)(X) = Σ G_p* X G_p`.
    DualNakano,
    /// `R = −B ∧ B̄ᵀ`, `he_map(R)(X) = Σ W_p* Xᵀ W_p`.
    Nakano,
}

/// Certificate of (dual) Nakano semi-positivity.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationResult {
    pub kind: FactorKind,
    /// `n × r` Kraus matrices.
    pub kraus: Vec<CMat>,
    /// `forms[λ][p]`: the `(1,0)`-forms `a_{λp}` or `(0,1)`-forms `b_{λp}`.
    pub forms: Vec<Vec<ExteriorForm>>,
    /// `max |R − A∧Āᵀ|` (or `|R + B∧B̄ᵀ|`) over all coefficients.
    pub residual: f64,
}

/// Rank-one pieces `x_p` with `M = Σ x_p x_p*` for a PSD matrix (negative part clipped).
fn psd_columns(m: &CMat) -> Vec<CVec> {
    let (vals, vecs) = linalg::hermitian_eigen(m);
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    vals.iter()
        .enumerate()
        .filter(|(_, &v)| v > 1e-15 * scale.max(1e-300))
        .map(|(i, &v)| vecs.column(i) * C64::from(v.sqrt()))
        .collect()
}

/// `Σ_{jk} c_{jkλμ} dz_j ∧ dz̄_k`: the `(μ,λ)` entry of the curvature form.
fn target_entry(t: &CurvatureTensor, l: usize, m: usize) -> ExteriorForm {
    let n = t.n;
    let mut f = ExteriorForm::zero(n, 1, 1);
    for j in 0..n {
        for k in 0..n {
            f = &f + &ExteriorForm::monomial(n, &[j], &[k], t.get(j, k, l, m));
        }
    }
    f
}

fn factor_residual(t: &CurvatureTensor, forms: &[Vec<ExteriorForm>], sign: f64) -> f64 {
    let (n, r) = (t.n, t.r);
    let mut res = 0.0f64;
    for l in 0..r {
        for m in 0..r {
            let mut s = ExteriorForm::zero(n, 1, 1);
            for p in 0..forms[m].len() {
                let w = multilinear::wedge(&forms[m][p], &forms[l][p].conj()).expect("degree 2");
                s = &s + &w;
            }
            res = res.max(s.scale(C64::from(sign)).distance(&target_entry(t, l, m)));
        }
    }
    res
}

/// `R = A ∧ Āᵀ` with `a_{λp} = Σ_j l_p^{jλ} dz_j`, read off the Choi matrix of `he_map(R)`.
pub fn factor_dual_nakano(t: &CurvatureTensor) -> Result<FactorizationResult, CurvatureError> {
    let (n, r) = (t.n, t.r);
    let choi = choi_of(&he_map(t));
    let min = linalg::hermitian_eigenvalues(&choi)[0];
    if min < -FACTOR_TOL * linalg::max_abs(&choi).max(1.0) {
        return Err(CurvatureError::NotDualNakano { min_eigenvalue: min });
    }
    let cols = psd_columns(&choi);
    let kraus: Vec<CMat> = cols
        .iter()
        .map(|x| CMat::from_fn(n, r, |j, l| x[j * r + l].conj()))
        .collect();
    let forms: Vec<Vec<ExteriorForm>> = (0..r)
        .map(|l| {
            cols.iter()
                .map(|x| {
                    let mut f = ExteriorForm::zero(n, 1, 0);
                    for j in 0..n {
                        f = &f + &ExteriorForm::dz(n, j).scale(x[j * r + l]);
                    }
                    f
                })
                .collect()
        })
        .collect();
    let residual = factor_residual(t, &forms, 1.0);
    Ok(FactorizationResult {
        kind: FactorKind::DualNakano,
        kraus,
        forms,
        residual,
    })
}

/// `R = −B ∧ B̄ᵀ` with `b_{λp} = Σ_k m_p^{kλ} dz̄_k`, read off the Choi matrix of `hestar_map(R)`.
pub fn factor_nakano(t: &CurvatureTensor) -> Result<FactorizationResult, CurvatureError> {
    let (n, r) = (t.n, t.r);
    let choi = choi_of(&hestar_map(t));
    let min = linalg::hermitian_eigenvalues(&choi)[0];
    if min < -FACTOR_TOL * linalg::max_abs(&choi).max(1.0) {
        return Err(CurvatureError::NotNakano { min_eigenvalue: min });
    }
    let cols = psd_columns(&choi);
    // hestar(X) = Σ G* X G with G = conj(x); then H(X) = Σ W* Xᵀ W with W = conj(G) = x.
    let kraus: Vec<CMat> = cols
        .iter()
        .map(|x| CMat::from_fn(n, r, |j, l| x[j * r + l]))
        .collect();
    let forms: Vec<Vec<ExteriorForm>> = (0..r)
        .map(|l| {
            cols.iter()
                .map(|x| {
                    let mut f = ExteriorForm::zero(n, 0, 1);
                    for k in 0..n {
                        f = &f + &ExteriorForm::dzbar(n, k).scale(x[k * r + l].conj());
                    }
                    f
                })
                .collect()
        })
        .collect();
    let residual = factor_residual(t, &forms, -1.0);
    Ok(FactorizationResult {
        kind: FactorKind::Nakano,
        kraus,
        forms,
        residual,
    })
}

/// `c_{jkλμ} = Σ_p l_p^{jμ} conj(l_p^{kλ})` for Gaussian `l`; dual Nakano semi-positive.
pub fn random_dual_nakano(n: usize, r: usize, big_n: usize, seed: u64) -> CurvatureTensor {
    let mut g = linalg::rng(seed);
    let ls: Vec<CMat> = (0..big_n).map(|_| linalg::random_matrix(&mut g, n, r)).collect();
    CurvatureTensor::from_fn(n, r, |j, k, l, m| {
        ls.iter().map(|x| x[(j, m)] * x[(k, l)].conj()).sum()
    })
    .expect("symmetric by construction")
}

/// `c_{jkλμ} = Σ_p conj(m_p^{jλ}) m_p^{kμ}` for Gaussian `m`; Nakano semi-positive.
pub fn random_nakano(n: usize, r: usize, big_n: usize, seed: u64) -> CurvatureTensor {
    let mut g = linalg::rng(seed);
    let ms: Vec<CMat> = (0..big_n).map(|_| linalg::random_matrix(&mut g, n, r)).collect();
    CurvatureTensor::from_fn(n, r, |j, k, l, m| {
        ms.iter().map(|x| x[(j, l)].conj() * x[(k, m)]).sum()
    })
    .expect("symmetric by construction")
}

// ---------------------------------------------------------------------------
// Decomposable maps
// ---------------------------------------------------------------------------

/// `X ↦ Σ V_p* X V_p + Σ W_p* Xᵀ W_p`, all matrices `n × r`.
pub fn build_decomposable(
    n: usize,
    r: usize,
    vs: &[CMat],
    ws: &[CMat],
) -> Result<MatrixMap, CurvatureError> {
    if n == 0 || r == 0 {
        return Err(CurvatureError::ZeroDimension { n, r });
    }
    if let Some(bad) = vs.iter().chain(ws).find(|m| m.shape() != (n, r)) {
        return Err(CurvatureError::ShapeMismatch {
            expected: n * r,
            got: bad.nrows() * bad.ncols(),
        });
    }
    let mut h = MatrixMap::zero(n, r);
    for v in vs {
        h = h.add(&MatrixMap::conjugation(v));
    }
    for w in ws {
        h = h.add(&MatrixMap::transpose_conjugation(w));
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decomposition {
    /// `H = Σ V_p*·V_p + Σ W_p*(·)ᵀW_p` up to `residual` (max Choi entry deviation).
    Witness {
        vs: Vec<CMat>,
        ws: Vec<CMat>,
        residual: f64,
    },
    /// Nothing found within the budget; says nothing about non-decomposability.
    NotFound { best_residual: f64 },
}

/// Residual required for a [`Decomposition::Witness`].
pub const DECOMPOSITION_TOL: f64 = 1e-8;

fn clip_psd(m: &CMat, floor: f64) -> CMat {
    let (vals, vecs) = linalg::hermitian_eigen(m);
    let d = CVec::from_iterator(vals.len(), vals.iter().map(|&v| C64::from(v.max(floor))));
    &vecs * CMat::from_diagonal(&d) * vecs.adjoint()
}

/// Looks for a split of the Choi matrix into a PSD part and a part with PSD
/// partial transpose, by alternating projections between the two cones.
pub fn decomposable_heuristic(h: &MatrixMap, iterations: usize) -> Decomposition {
    let (n, r) = (h.n, h.r);
    let c = linalg::hermitian_part(&choi_of(h));
    let scale = linalg::max_abs(&c).max(1e-300);
    let attempt = |x: &CMat| -> (f64, Vec<CMat>, Vec<CMat>) {
        let xa = clip_psd(x, 0.0);
        let y = clip_psd(&partial_transpose(&(&c - &xa), n, r), 0.0);
        let vs: Vec<CMat> = psd_columns(&xa)
            .iter()
            .map(|x| CMat::from_fn(n, r, |j, l| x[j * r + l].conj()))
            .collect();
        let ws: Vec<CMat> = psd_columns(&y)
            .iter()
            .map(|x| CMat::from_fn(n, r, |j, l| x[j * r + l]))
            .collect();
        let rebuilt = build_decomposable(n, r, &vs, &ws).expect("shapes fixed");
        let residual = linalg::max_abs_diff(&choi_of(&rebuilt), &c) / scale.max(1.0);
        (residual, vs, ws)
    };
    let mut best = f64::INFINITY;
    for start in [c.clone(), CMat::zeros(n * r, n * r)] {
        let (res, vs, ws) = attempt(&start);
        if res <= DECOMPOSITION_TOL {
            return Decomposition::Witness {
                vs,
                ws,
                residual: res,
            };
        }
        best = best.min(res);
    }
    for floor in [1e-6 * scale, 1e-9 * scale, 0.0] {
        let mut x = &c * C64::from(0.5);
        for it in 0..iterations {
            x = clip_psd(&x, floor);
            let y = clip_psd(&partial_transpose(&(&c - &x), n, r), floor);
            x = &c - partial_transpose(&y, n, r);
            if it % 10 == 9 || it + 1 == iterations {
                let (res, vs, ws) = attempt(&x);
                if res <= DECOMPOSITION_TOL {
                    return Decomposition::Witness {
                        vs,
                        ws,
                        residual: res,
                    };
                }
                best = best.min(res);
            }
        }
    }
    Decomposition::NotFound {
        best_residual: best,
    }
}

// ---------------------------------------------------------------------------
// Metric jets
// ---------------------------------------------------------------------------

/// Second-order jet `h(f_λ, f_μ)(z) = δ_{λμ} + Σ d_{jkλμ} z_j z̄_k` of a metric on a trivial bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricJet {
    n: usize,
    r: usize,
    d: Vec<C64>,
}

impl MetricJet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn get(&self, j: usize, k: usize, l: usize, m: usize) -> C64 {
        self.d[idx(self.n, self.r, j, k, l, m)]
    }

    /// Gram matrix `G[λ][μ] = h(f_λ, f_μ)(z)`.
    pub fn gram(&self, z: &CVec) -> CMat {
        let (n, r) = (self.n, self.r);
        CMat::from_fn(r, r, |l, m| {
            let mut s = if l == m { ONE } else { ZERO };
            for j in 0..n {
                for k in 0..n {
                    s += self.get(j, k, l, m) * z[j] * z[k].conj();
                }
            }
            s
        })
    }
}

/// The jet whose Chern curvature at 0 is the tensor with `he_map = H`.
///
/// With `G(0) = I` and `dG(0) = 0` the Chern curvature at the origin is
/// `R f_λ = −Σ ∂_j∂̄_k G_{λμ} dz_j ∧ dz̄_k f_μ`, hence `d = −2π c`.
pub fn metric_jet(h: &MatrixMap) -> Result<MetricJet, CurvatureError> {
    if !h.is_adjoint_preserving(1e-12) {
        return Err(CurvatureError::NotAdjointPreserving {
            defect: h.adjoint_defect(),
        });
    }
    let (n, r) = (h.n, h.r);
    let mut d = vec![ZERO; n * n * r * r];
    for j in 0..n {
        for k in 0..n {
            for l in 0..r {
                for m in 0..r {
                    d[idx(n, r, j, k, l, m)] = h.image(j, k)[(m, l)] * (-2.0 * PI);
                }
            }
        }
    }
    Ok(MetricJet { n, r, d })
}

/// Chern curvature of the jet at the origin: `c_{jkλμ} = −(1/2π) ∂_j∂̄_k G_{λμ}(0)`.
pub fn curvature_of_jet(jet: &MetricJet) -> CurvatureTensor {
    // ∂_j∂̄_k of Σ d z z̄ at 0 is the coefficient itself.
    CurvatureTensor::from_fn(jet.n, jet.r, |j, k, l, m| jet.get(j, k, l, m) * (-1.0 / (2.0 * PI)))
        .expect("jet coefficients are symmetric")
}

/// Same as [`curvature_of_jet`] composed with [`metric_jet`] and an `he_map` readback.
pub fn tensor_from_map(h: &MatrixMap) -> Result<CurvatureTensor, CurvatureError> {
    Ok(curvature_of_jet(&metric_jet(h)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_examples() {
        assert!(CurvatureTensor::from_components(1, 1, vec![ONE]).is_ok());
        let z = CurvatureTensor::zero(2, 3);
        assert_eq!(z.max_abs(), 0.0);
        let mut c = vec![ZERO; 4];
        c[idx(2, 1, 0, 1, 0, 0)] = ONE;
        assert!(matches!(
            CurvatureTensor::from_components(2, 1, c),
            Err(CurvatureError::SymmetryViolation { .. })
        ));
        assert!(matches!(
            CurvatureTensor::from_components(0, 1, vec![]),
            Err(CurvatureError::ZeroDimension { .. })
        ));
    }

    #[test]
    fn unit_line_bundle() {
        let t = CurvatureTensor::from_components(1, 1, vec![ONE]).unwrap();
        assert_eq!(pe_matrix(&t), CMat::from_element(1, 1, ONE));
        assert_eq!(he_map(&t), MatrixMap::identity(1));
        let rep = classify(&t, 1e-9, &Budget::default());
        assert!(rep.griffiths.is_positive() && rep.nakano.is_positive());
        assert!(rep.dual_nakano.is_positive());
        assert_eq!(dual_curvature(&t).get(0, 0, 0, 0), -ONE);
    }

    #[test]
    fn choi_is_transposed_dual_operator() {
        let t = CurvatureTensor::random(2, 3, 4);
        assert!(linalg::max_abs_diff(&choi_of(&he_map(&t)), &pestar_matrix(&t).transpose()) < 1e-15);
        assert!(linalg::max_abs_diff(&choi_of(&hestar_map(&t)), &pe_matrix(&t).transpose()) < 1e-15);
        assert!(he_map(&t).is_adjoint_preserving(1e-14));
    }

    #[test]
    fn identity_map_jet() {
        let t = tensor_from_map(&MatrixMap::identity(2)).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    for m in 0..2 {
                        let want = if j == m && k == l { 1.0 } else { 0.0 };
                        assert!((t.get(j, k, l, m) - want).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn decomposable_anchors() {
        assert!(matches!(
            decomposable_heuristic(&MatrixMap::identity(2), 100),
            Decomposition::Witness { .. }
        ));
        assert!(matches!(
            decomposable_heuristic(&MatrixMap::transpose(2), 100),
            Decomposition::Witness { .. }
        ));
        let id = build_decomposable(2, 2, &[CMat::identity(2, 2)], &[]).unwrap();
        assert_eq!(id, MatrixMap::identity(2));
        let tr = build_decomposable(2, 2, &[], &[CMat::identity(2, 2)]).unwrap();
        assert_eq!(tr, MatrixMap::transpose(2));
        assert!(matches!(
            build_decomposable(2, 2, &[CMat::identity(3, 3)], &[]),
            Err(CurvatureError::ShapeMismatch { .. })
        ));
    }
}
