//! Exterior algebra of `C^n` at a point.
//!
//! A homogeneous `(p,q)`-form is stored sparsely as a map from pairs of index
//! bitmasks `(I, J)` to the coefficient of `dz_I ∧ dz̄_J`, where
//! `dz_I = dz_{i1} ∧ … ∧ dz_{ip}` with `i1 < … < ip`. All holomorphic factors
//! come first. Indices are 0-based in code (`dz(n, 0)` is `dz_1`).
//!
//! Two notions of positivity for real `(k,k)`-forms are tested here: positivity
//! (the operator [`FormOperator`] is positive semidefinite) and weak positivity
//! (every restriction to a `k`-plane is a non-negative multiple of its volume).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{
    self, det, hermitian_eigen, i_pow, indices_mask, mask_indices, subsets, CMat, CVec, C64, ONE,
    ZERO,
};

/// Largest supported dimension of the ambient space.
pub const MAX_DIM: usize = 8;

/// Default tolerance for the reality check of a form.
pub const REAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("degree ({p},{q}) exceeds dimension {dim}")]
    DegreeOverflow { p: usize, q: usize, dim: usize },
    #[error("cannot contract a {k}-vector into a form of holomorphic degree {p}")]
    DegreeUnderflow { k: usize, p: usize },
    #[error("form is not real (defect {defect:e})")]
    NotRealForm { defect: f64 },
    #[error("expected a (k,k)-form, got bidegree ({p},{q})")]
    NotBalanced { p: usize, q: usize },
    #[error("plane of dimension {plane} cannot carry a form of degree ({k},{k})")]
    PlaneDimensionMismatch { plane: usize, k: usize },
    #[error("restriction has imaginary part {imag:e}")]
    NonRealRestriction { imag: f64 },
    #[error("invalid ambient dimension {0} (supported: 1..={MAX_DIM})")]
    InvalidDimension(usize),
    #[error("plane basis is linearly dependent")]
    DependentBasis,
}

// ---------------------------------------------------------------------------
// Sign bookkeeping
// ---------------------------------------------------------------------------

/// Sign of the shuffle that sorts the concatenation of two disjoint sorted index sets.
fn merge_sign(a: u16, b: u16) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let y = rest.trailing_zeros();
        inversions += (a >> (y + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn parity(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sorts an arbitrary index list, returning its mask and the sign, or `None` on repeats.
fn sort_indices(idx: &[usize]) -> Option<(u16, f64)> {
    let mut mask = 0u16;
    for &i in idx {
        if mask & (1 << i) != 0 {
            return None;
        }
        mask |= 1 << i;
    }
    Some((mask, linalg::permutation_sign(idx) as f64))
}

// ---------------------------------------------------------------------------
// ExteriorForm
// ---------------------------------------------------------------------------

/// Homogeneous `(p,q)`-form on `C^n` with complex coefficients.
#[derive(Clone, PartialEq)]
pub struct ExteriorForm {
    dim: usize,
    p: usize,
    q: usize,
    coeffs: BTreeMap<(u16, u16), C64>,
}

impl ExteriorForm {
    /// The zero form of bidegree `(p,q)`.
    pub fn zero(dim: usize, p: usize, q: usize) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&dim),
            "ambient dimension {dim} outside 1..={MAX_DIM}"
        );
        assert!(p <= dim && q <= dim, "bidegree ({p},{q}) exceeds dimension {dim}");
        Self {
            dim,
            p,
            q,
            coeffs: BTreeMap::new(),
        }
    }

    /// The constant function 1.
    pub fn one(dim: usize) -> Self {
        Self::scalar(dim, ONE)
    }

    pub fn scalar(dim: usize, c: C64) -> Self {
        let mut f = Self::zero(dim, 0, 0);
        f.insert(0, 0, c);
        f
    }

    /// `dz_{i+1}`.
    pub fn dz(dim: usize, i: usize) -> Self {
        Self::monomial(dim, &[i], &[], ONE)
    }

    /// `dz̄_{i+1}`.
    pub fn dzbar(dim: usize, i: usize) -> Self {
        Self::monomial(dim, &[], &[i], ONE)
    }

    /// `c · dz_{i1} ∧ … ∧ dz_{ip} ∧ dz̄_{j1} ∧ … ∧ dz̄_{jq}` for index lists in any order.
    pub fn monomial(dim: usize, holo: &[usize], anti: &[usize], c: C64) -> Self {
        let mut f = Self::zero(dim, holo.len(), anti.len());
        assert!(
            holo.iter().chain(anti).all(|&i| i < dim),
            "index out of range for dimension {dim}"
        );
        if let (Some((mi, si)), Some((mj, sj))) = (sort_indices(holo), sort_indices(anti)) {
            f.insert(mi, mj, c * (si * sj));
        }
        f
    }

    /// `Σ h_{jk} i dz_j ∧ dz̄_k` for an `n × n` coefficient matrix.
    pub fn from_hermitian_11(h: &CMat) -> Self {
        let n = h.nrows();
        let mut f = Self::zero(n, 1, 1);
        for j in 0..n {
            for k in 0..n {
                f.insert(1 << j, 1 << k, linalg::I * h[(j, k)]);
            }
        }
        f
    }

    /// Builds a form from raw `(I, J, coefficient)` entries with sorted index lists.
    pub fn from_terms(
        dim: usize,
        p: usize,
        q: usize,
        terms: impl IntoIterator<Item = (Vec<usize>, Vec<usize>, C64)>,
    ) -> Self {
        let mut f = Self::zero(dim, p, q);
        for (holo, anti, c) in terms {
            assert!(holo.len() == p && anti.len() == q, "term of wrong bidegree");
            f = &f + &Self::monomial(dim, &holo, &anti, c);
        }
        f
    }

    fn insert(&mut self, i: u16, j: u16, c: C64) {
        if c == ZERO {
            return;
        }
        let slot = self.coeffs.entry((i, j)).or_insert(ZERO);
        *slot += c;
        if *slot == ZERO {
            self.coeffs.remove(&(i, j));
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of `dz_I ∧ dz̄_J` for sorted index lists.
    pub fn coeff(&self, holo: &[usize], anti: &[usize]) -> C64 {
        self.coeffs
            .get(&(indices_mask(holo), indices_mask(anti)))
            .copied()
            .unwrap_or(ZERO)
    }

    pub(crate) fn coeff_mask(&self, i: u16, j: u16) -> C64 {
        self.coeffs.get(&(i, j)).copied().unwrap_or(ZERO)
    }

    pub(crate) fn mask_terms(&self) -> impl Iterator<Item = (u16, u16, C64)> + '_ {
        self.coeffs.iter().map(|(&(i, j), &c)| (i, j, c))
    }

    /// Terms as `(I, J, coefficient)` with sorted 0-based index lists.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, Vec<usize>, C64)> + '_ {
        self.coeffs
            .iter()
            .map(|(&(i, j), &c)| (mask_indices(i), mask_indices(j), c))
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest coefficient modulus of `self - other`.
    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut f = Self::zero(self.dim, self.p, self.q);
        for (&(i, j), &v) in &self.coeffs {
            f.insert(i, j, v * c);
        }
        f
    }

    /// Drops coefficients below `eps` in modulus.
    pub fn prune(&self, eps: f64) -> Self {
        let mut f = self.clone();
        f.coeffs.retain(|_, c| c.norm() > eps);
        f
    }

    /// Complex conjugate: `conj(c dz_I ∧ dz̄_J) = c̄ dz̄_I ∧ dz_J`.
    pub fn conj(&self) -> Self {
        let mut f = Self::zero(self.dim, self.q, self.p);
        let sign = parity(self.p * self.q);
        for (&(i, j), &c) in &self.coeffs {
            f.insert(j, i, c.conj() * sign);
        }
        f
    }

    /// Largest coefficient modulus of `self - conj(self)`.
    pub fn reality_defect(&self) -> f64 {
        if self.p != self.q {
            return self.max_abs();
        }
        (self - &self.conj()).max_abs()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.reality_defect() <= tol * self.max_abs().max(1.0)
    }

    /// `(self + conj(self)) / 2`.
    pub fn real_part(&self) -> Self {
        (self + &self.conj()).scale(C64::from(0.5))
    }

    /// Re-embeds the form into `C^m`, `m ≥ n`, along the first `n` coordinates.
    pub fn extend_dim(&self, m: usize) -> Self {
        assert!(m >= self.dim);
        let mut f = Self::zero(m, self.p, self.q);
        f.coeffs = self.coeffs.clone();
        f
    }
}

impl fmt::Debug for ExteriorForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExteriorForm(n={}, ({},{}))", self.dim, self.p, self.q)?;
        for (holo, anti, c) in self.terms() {
            write!(f, " + ({:.6}{:+.6}i)dz{:?}dz̄{:?}", c.re, c.im, holo, anti)?;
        }
        Ok(())
    }
}

impl Add for &ExteriorForm {
    type Output = ExteriorForm;
    fn add(self, rhs: &ExteriorForm) -> ExteriorForm {
        assert_eq!(self.dim, rhs.dim, "adding forms of different dimension");
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        assert_eq!(
            (self.p, self.q),
            (rhs.p, rhs.q),
            "adding forms of different bidegree"
        );
        let mut f = self.clone();
        for (&(i, j), &c) in &rhs.coeffs {
            f.insert(i, j, c);
        }
        f
    }
}

impl Sub for &ExteriorForm {
    type Output = ExteriorForm;
    fn sub(self, rhs: &ExteriorForm) -> ExteriorForm {
        self + &(-rhs)
    }
}

impl Neg for &ExteriorForm {
    type Output = ExteriorForm;
    fn neg(self) -> ExteriorForm {
        self.scale(-ONE)
    }
}

impl Mul<C64> for &ExteriorForm {
    type Output = ExteriorForm;
    fn mul(self, c: C64) -> ExteriorForm {
        self.scale(c)
    }
}

impl Mul<f64> for &ExteriorForm {
    type Output = ExteriorForm;
    fn mul(self, c: f64) -> ExteriorForm {
        self.scale(C64::from(c))
    }
}

// ---------------------------------------------------------------------------
// Products and contractions
// ---------------------------------------------------------------------------

/// Exterior product.
pub fn wedge(a: &ExteriorForm, b: &ExteriorForm) -> Result<ExteriorForm, FormError> {
    if a.dim != b.dim {
        return Err(FormError::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    let (p, q) = (a.p + b.p, a.q + b.q);
    if p > a.dim || q > a.dim {
        return Err(FormError::DegreeOverflow { p, q, dim: a.dim });
    }
    let mut out = ExteriorForm::zero(a.dim, p, q);
    // moving dz̄_{J1} past dz_{I2}
    let cross = parity(a.q * b.p);
    for (&(i1, j1), &c1) in &a.coeffs {
        for (&(i2, j2), &c2) in &b.coeffs {
            if i1 & i2 != 0 || j1 & j2 != 0 {
                continue;
            }
            let s = cross * merge_sign(i1, i2) * merge_sign(j1, j2);
            out.insert(i1 | i2, j1 | j2, c1 * c2 * s);
        }
    }
    Ok(out)
}

/// `a ∧ a ∧ … ∧ a` (`k` factors); `k = 0` gives 1.
pub fn wedge_power(a: &ExteriorForm, k: usize) -> Result<ExteriorForm, FormError> {
    let mut out = ExteriorForm::one(a.dim);
    for _ in 0..k {
        out = wedge(&out, a)?;
    }
    Ok(out)
}

/// Wedge product of a list of forms, left to right.
pub fn wedge_all(dim: usize, forms: &[ExteriorForm]) -> Result<ExteriorForm, FormError> {
    forms
        .iter()
        .try_fold(ExteriorForm::one(dim), |acc, f| wedge(&acc, f))
}

/// Contraction `ι_{v_1 ∧ … ∧ v_k}` of the holomorphic slots.
///
/// Convention: `ι_{∂z_K}(dz_K ∧ dz_{I∖K} ∧ dz̄_J) = dz_{I∖K} ∧ dz̄_J`, the
/// contracted indices being moved to the front with their shuffle sign, and
/// extended to decomposable polyvectors by expanding `v_1 ∧ … ∧ v_k` in the
/// basis `∂z_K`.
pub fn contract(a: &ExteriorForm, v: &[CVec]) -> Result<ExteriorForm, FormError> {
    let k = v.len();
    if k > a.p {
        return Err(FormError::DegreeUnderflow { k, p: a.p });
    }
    if let Some(bad) = v.iter().find(|x| x.len() != a.dim) {
        return Err(FormError::DimensionMismatch {
            left: a.dim,
            right: bad.len(),
        });
    }
    let vm = CMat::from_columns(v);
    let mut out = ExteriorForm::zero(a.dim, a.p - k, a.q);
    for kmask in subsets(a.dim, k) {
        let rows = mask_indices(kmask);
        let coef = det(&CMat::from_fn(k, k, |r, c| vm[(rows[r], c)]));
        if coef == ZERO {
            continue;
        }
        for (&(i, j), &c) in &a.coeffs {
            if i & kmask != kmask {
                continue;
            }
            let rest = i & !kmask;
            out.insert(rest, j, c * coef * merge_sign(kmask, rest));
        }
    }
    Ok(out)
}

/// `(i)^{n²} dz_1 ∧ … ∧ dz_n ∧ dz̄_1 ∧ … ∧ dz̄_n`, the volume with restriction 1 to `C^n`.
pub fn canonical_volume(n: usize) -> ExteriorForm {
    let all: Vec<usize> = (0..n).collect();
    ExteriorForm::monomial(n, &all, &all, i_pow((n * n) as i64))
}

// ---------------------------------------------------------------------------
// Planes
// ---------------------------------------------------------------------------

/// A complex `k`-plane in `C^n` with an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPlane {
    basis: CMat,
}

impl ComplexPlane {
    /// Orthonormalizes the given spanning vectors.
    pub fn new(dim: usize, vectors: &[CVec]) -> Result<Self, FormError> {
        if let Some(bad) = vectors.iter().find(|x| x.len() != dim) {
            return Err(FormError::DimensionMismatch {
                left: dim,
                right: bad.len(),
            });
        }
        if vectors.len() > dim {
            return Err(FormError::DependentBasis);
        }
        if vectors.is_empty() {
            return Ok(Self {
                basis: CMat::zeros(dim, 0),
            });
        }
        let m = CMat::from_columns(vectors);
        linalg::orthonormalize_columns(&m)
            .map(|basis| Self { basis })
            .ok_or(FormError::DependentBasis)
    }

    /// Span of the given coordinate axes.
    pub fn coordinate(dim: usize, axes: &[usize]) -> Self {
        let mut basis = CMat::zeros(dim, axes.len());
        for (c, &a) in axes.iter().enumerate() {
            basis[(a, c)] = ONE;
        }
        Self { basis }
    }

    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize, k: usize) -> Self {
        loop {
            let m = linalg::random_matrix(rng, dim, k);
            if let Some(basis) = linalg::orthonormalize_columns(&m) {
                return Self { basis };
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal basis as the columns of an `n × k` matrix.
    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    /// Plücker coordinates `det(U_I)` in the lexicographic order of [`subsets`].
    pub fn plucker(&self) -> CVec {
        let k = self.rank();
        let idx = subsets(self.dim(), k);
        CVec::from_iterator(
            idx.len(),
            idx.iter().map(|&m| {
                let rows = mask_indices(m);
                det(&CMat::from_fn(k, k, |r, c| self.basis[(rows[r], c)]))
            }),
        )
    }
}

/// Value `s` with `a|_L = s · dv_L`, computed by pulling `a` back along an
/// orthonormal basis of `L`.
pub fn restrict(a: &ExteriorForm, plane: &ComplexPlane) -> Result<f64, FormError> {
    let k = require_balanced(a)?;
    if plane.rank() != k {
        return Err(FormError::PlaneDimensionMismatch {
            plane: plane.rank(),
            k,
        });
    }
    if plane.dim() != a.dim {
        return Err(FormError::DimensionMismatch {
            left: a.dim,
            right: plane.dim(),
        });
    }
    let u = plane.basis();
    let minor = |mask: u16| {
        let rows = mask_indices(mask);
        det(&CMat::from_fn(k, k, |r, c| u[(rows[r], c)]))
    };
    let mut minors: BTreeMap<u16, C64> = BTreeMap::new();
    let mut s = ZERO;
    for (&(i, j), &c) in &a.coeffs {
        let di = *minors.entry(i).or_insert_with(|| minor(i));
        let dj = *minors.entry(j).or_insert_with(|| minor(j));
        s += c * di * dj.conj();
    }
    // dv_L = i^{k²} dw_1…dw_k dw̄_1…dw̄_k
    let s = s * i_pow(-((k * k) as i64));
    let scale = a.max_abs().max(1.0);
    if s.im.abs() > 1e-10 * scale {
        return Err(FormError::NonRealRestriction { imag: s.im });
    }
    Ok(s.re)
}

fn require_balanced(a: &ExteriorForm) -> Result<usize, FormError> {
    if a.p != a.q {
        return Err(FormError::NotBalanced { p: a.p, q: a.q });
    }
    Ok(a.p)
}

fn require_real(a: &ExteriorForm) -> Result<usize, FormError> {
    let k = require_balanced(a)?;
    if !a.is_real(REAL_TOL) {
        return Err(FormError::NotRealForm {
            defect: a.reality_defect(),
        });
    }
    Ok(k)
}

// ---------------------------------------------------------------------------
// Operators and positivity
// ---------------------------------------------------------------------------

/// Hermitian operator on `Λ^k C^n` attached to a real `(k,k)`-form.
///
/// For `a = Σ a_{JK} dz_J ∧ dz̄_K` the operator sends `e_J ↦ Σ_K i^{-k²} a_{JK} e_K`,
/// so that `i dz_1 ∧ dz̄_1 ↦ [1]` and `restrict(a, L) = ⟨β p, p⟩` for the
/// Plücker vector `p` of `L`. Rows and columns follow [`subsets`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct FormOperator {
    n: usize,
    k: usize,
    basis: Vec<u16>,
    matrix: CMat,
}

impl FormOperator {
    pub fn new(n: usize, k: usize, matrix: CMat) -> Self {
        let basis = subsets(n, k);
        assert_eq!(matrix.nrows(), basis.len(), "operator size vs C(n,k)");
        assert_eq!(matrix.ncols(), basis.len(), "operator size vs C(n,k)");
        Self {
            n,
            k,
            basis,
            matrix,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Multi-indices labelling rows/columns, 0-based.
    pub fn basis(&self) -> Vec<Vec<usize>> {
        self.basis.iter().map(|&m| mask_indices(m)).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(&self.matrix, &other.matrix)
    }
}

/// The operator `β` of a real `(k,k)`-form.
pub fn form_operator(a: &ExteriorForm) -> Result<FormOperator, FormError> {
    let k = require_real(a)?;
    Ok(form_operator_unchecked(a, k))
}

pub(crate) fn form_operator_unchecked(a: &ExteriorForm, k: usize) -> FormOperator {
    let basis = subsets(a.dim, k);
    let pos: BTreeMap<u16, usize> = basis.iter().enumerate().map(|(x, &m)| (m, x)).collect();
    let factor = i_pow(-((k * k) as i64));
    let mut m = CMat::zeros(basis.len(), basis.len());
    for (&(j, kk), &c) in &a.coeffs {
        m[(pos[&kk], pos[&j])] += c * factor;
    }
    FormOperator {
        n: a.dim,
        k,
        basis,
        matrix: m,
    }
}

/// Inverse of [`form_operator`].
pub fn form_from_operator(op: &FormOperator) -> ExteriorForm {
    let k = op.k;
    let factor = i_pow((k * k) as i64);
    let mut f = ExteriorForm::zero(op.n, k, k);
    for (r, &row) in op.basis.iter().enumerate() {
        for (c, &col) in op.basis.iter().enumerate() {
            f.insert(col, row, op.matrix[(r, c)] * factor);
        }
    }
    f
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PositivityVerdict {
    PositiveDefinite { min_eigenvalue: f64 },
    PositiveSemidefinite { min_eigenvalue: f64 },
    Indefinite { min_eigenvalue: f64 },
}

impl PositivityVerdict {
    pub fn min_eigenvalue(&self) -> f64 {
        match *self {
            Self::PositiveDefinite { min_eigenvalue }
            | Self::PositiveSemidefinite { min_eigenvalue }
            | Self::Indefinite { min_eigenvalue } => min_eigenvalue,
        }
    }

    /// Positive definite or semidefinite.
    pub fn is_positive(&self) -> bool {
        !matches!(self, Self::Indefinite { .. })
    }
}

/// Positivity of a real `(k,k)`-form through the eigenvalues of its operator.
pub fn is_positive(a: &ExteriorForm, tol: f64) -> Result<PositivityVerdict, FormError> {
    let min = form_operator(a)?.min_eigenvalue();
    Ok(if min > tol {
        PositivityVerdict::PositiveDefinite {
            min_eigenvalue: min,
        }
    } else if min >= -tol {
        PositivityVerdict::PositiveSemidefinite {
            min_eigenvalue: min,
        }
    } else {
        PositivityVerdict::Indefinite {
            min_eigenvalue: min,
        }
    })
}

/// Search effort for [`is_weakly_positive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakBudget {
    pub starts: usize,
    pub sweeps: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for WeakBudget {
    fn default() -> Self {
        Self {
            starts: 512,
            sweeps: 200,
            tol: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeakVerdict {
    /// No sampled plane went below `-tol`; `min` is the smallest value seen.
    NonNegativeOnSamples { min: f64 },
    /// A plane on which the restriction is negative.
    Refuted { plane: ComplexPlane, value: f64 },
    Inconclusive,
}

/// Samples restrictions to `k`-planes, descending from random starts.
///
/// Each start runs block-coordinate descent: one basis vector at a time is
/// replaced by the minimizer of the (Hermitian quadratic) restriction over the
/// unit vectors orthogonal to the others.
pub fn is_weakly_positive(a: &ExteriorForm, budget: &WeakBudget) -> Result<WeakVerdict, FormError> {
    let k = require_real(a)?;
    let n = a.dim;
    if k == 0 {
        let v = a.coeff_mask(0, 0).re;
        return Ok(if v < -budget.tol {
            WeakVerdict::Refuted {
                plane: ComplexPlane::coordinate(n, &[]),
                value: v,
            }
        } else {
            WeakVerdict::NonNegativeOnSamples { min: v }
        });
    }
    if budget.starts == 0 {
        return Ok(WeakVerdict::Inconclusive);
    }
    let op = form_operator_unchecked(a, k);
    let runs: Vec<(f64, CMat)> = (0..budget.starts)
        .into_par_iter()
        .map(|s| {
            let mut g = linalg::rng(linalg::derive_seed(budget.seed, s as u64));
            descend_plane(&op, n, k, budget.sweeps, &mut g)
        })
        .collect();
    let (best_val, best_u) = runs
        .into_iter()
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .expect("at least one start");
    if best_val.is_nan() {
        return Ok(WeakVerdict::Inconclusive);
    }
    if best_val < -budget.tol {
        let plane = ComplexPlane { basis: best_u };
        let value = restrict(a, &plane)?;
        if value < -budget.tol {
            return Ok(WeakVerdict::Refuted { plane, value });
        }
        return Ok(WeakVerdict::Inconclusive);
    }
    Ok(WeakVerdict::NonNegativeOnSamples { min: best_val })
}

fn plane_value(op: &FormOperator, u: &CMat) -> f64 {
    let p = ComplexPlane { basis: u.clone() }.plucker();
    (p.adjoint() * op.matrix() * &p)[(0, 0)].re
}

fn descend_plane<R: rand::Rng>(
    op: &FormOperator,
    n: usize,
    k: usize,
    sweeps: usize,
    rng: &mut R,
) -> (f64, CMat) {
    let mut u = ComplexPlane::random(rng, n, k).basis;
    let idx = subsets(n, k);
    let mut value = plane_value(op, &u);
    for _ in 0..sweeps {
        let before = value;
        for col in 0..k {
            // p(u_col) = A u_col, with A[I][i] = det(U_I with column `col` set to e_i)
            let mut amat = CMat::zeros(idx.len(), n);
            for (r, &mask) in idx.iter().enumerate() {
                let rows = mask_indices(mask);
                for (t, &i) in rows.iter().enumerate() {
                    let m = CMat::from_fn(k, k, |a, b| {
                        if b == col {
                            if a == t {
                                ONE
                            } else {
                                ZERO
                            }
                        } else {
                            u[(rows[a], b)]
                        }
                    });
                    amat[(r, i)] = det(&m);
                }
            }
            let q = amat.adjoint() * op.matrix() * &amat;
            let others: Vec<CVec> = (0..k)
                .filter(|&c| c != col)
                .map(|c| u.column(c).into_owned())
                .collect();
            let z = if others.is_empty() {
                CMat::identity(n, n)
            } else {
                linalg::orthogonal_complement(&CMat::from_columns(&others))
            };
            let (_, y) = linalg::min_eigenpair(&(z.adjoint() * &q * &z));
            let w = &z * y;
            u.set_column(col, &(&w / C64::from(w.norm())));
        }
        value = plane_value(op, &u);
        if (before - value).abs() <= 1e-14 * (1.0 + value.abs()) {
            break;
        }
    }
    (value, u)
}

/// Eigen-decomposition of an operator given as a form, handy for diagnostics.
pub fn operator_spectrum(a: &ExteriorForm) -> Result<(Vec<f64>, CMat), FormError> {
    let op = form_operator(a)?;
    Ok(hermitian_eigen(op.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rng, I};

    fn kahler(n: usize) -> ExteriorForm {
        ExteriorForm::from_hermitian_11(&CMat::identity(n, n))
    }

    #[test]
    fn unit_and_antisymmetry() {
        let f = &ExteriorForm::dz(3, 0) + &ExteriorForm::dz(3, 2);
        assert_eq!(wedge(&ExteriorForm::one(3), &f).unwrap(), f);
        let a = wedge(&ExteriorForm::dz(2, 0), &ExteriorForm::dz(2, 1)).unwrap();
        let b = wedge(&ExteriorForm::dz(2, 1), &ExteriorForm::dz(2, 0)).unwrap();
        assert_eq!(a, -&b);
    }

    #[test]
    fn square_of_kahler_form() {
        let w = kahler(2);
        let sq = wedge(&w, &w).unwrap();
        let a = ExteriorForm::monomial(2, &[0], &[0], I);
        let b = ExteriorForm::monomial(2, &[1], &[1], I);
        assert_eq!(sq, wedge(&a, &b).unwrap().scale(C64::from(2.0)));
    }

    #[test]
    fn wedge_errors() {
        let err = wedge(&ExteriorForm::dz(2, 0), &ExteriorForm::dz(3, 0)).unwrap_err();
        assert_eq!(err, FormError::DimensionMismatch { left: 2, right: 3 });
        let a = wedge(&ExteriorForm::dz(2, 0), &ExteriorForm::dz(2, 1)).unwrap();
        assert!(matches!(
            wedge(&a, &ExteriorForm::dz(2, 0)),
            Err(FormError::DegreeOverflow { .. })
        ));
    }

    #[test]
    fn contraction_examples() {
        let e = |n: usize, i: usize| {
            let mut v = CVec::zeros(n);
            v[i] = ONE;
            v
        };
        let f = ExteriorForm::monomial(2, &[0], &[0], ONE);
        assert_eq!(contract(&f, &[e(2, 0)]).unwrap(), ExteriorForm::dzbar(2, 0));
        assert!(contract(&f, &[e(2, 1)]).unwrap().is_zero());
        let g = ExteriorForm::monomial(2, &[0, 1], &[0, 1], ONE);
        let got = contract(&g, &[e(2, 0), e(2, 1)]).unwrap();
        assert_eq!(got, ExteriorForm::monomial(2, &[], &[0, 1], ONE));
        // opposite order of the polyvector flips the sign
        let swapped = contract(&g, &[e(2, 1), e(2, 0)]).unwrap();
        assert_eq!(swapped, -&got);
        assert!(matches!(
            contract(&f, &[e(2, 0), e(2, 1)]),
            Err(FormError::DegreeUnderflow { .. })
        ));
    }

    #[test]
    fn operator_anchors() {
        let f = ExteriorForm::monomial(1, &[0], &[0], I);
        assert_eq!(form_operator(&f).unwrap().matrix()[(0, 0)], ONE);
        let z = ExteriorForm::zero(3, 2, 2);
        assert_eq!(form_operator(&z).unwrap().matrix(), &CMat::zeros(3, 3));
        // i^{k²}·(dz1∧dz2)∧conj(dz1∧dz2) with k = 2
        let d = wedge(&ExteriorForm::dz(2, 0), &ExteriorForm::dz(2, 1)).unwrap();
        let f = wedge(&d, &d.conj()).unwrap().scale(i_pow(4));
        let op = form_operator(&f).unwrap();
        assert_eq!(op.matrix(), &CMat::from_element(1, 1, ONE));
        assert!(matches!(
            form_operator(&ExteriorForm::monomial(1, &[0], &[0], ONE)),
            Err(FormError::NotRealForm { .. })
        ));
    }

    #[test]
    fn positivity_examples() {
        assert!(matches!(
            is_positive(&kahler(2), 1e-12).unwrap(),
            PositivityVerdict::PositiveDefinite { .. }
        ));
        let d12 = wedge(&ExteriorForm::dz(4, 0), &ExteriorForm::dz(4, 1)).unwrap();
        let d34 = wedge(&ExteriorForm::dz(4, 2), &ExteriorForm::dz(4, 3)).unwrap();
        let half = wedge(&d12, &d34.conj()).unwrap();
        let f = &half + &half.conj();
        assert!(f.is_real(1e-12));
        let v = is_positive(&f, 1e-12).unwrap();
        assert!(matches!(v, PositivityVerdict::Indefinite { .. }));
        assert!((v.min_eigenvalue() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn restriction_examples() {
        let f = ExteriorForm::monomial(2, &[0], &[0], I);
        assert!((restrict(&f, &ComplexPlane::coordinate(2, &[0])).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(restrict(&f, &ComplexPlane::coordinate(2, &[1])).unwrap(), 0.0);
        let diag = CVec::from_vec(vec![ONE, ONE]);
        let l = ComplexPlane::new(2, &[diag]).unwrap();
        assert!((restrict(&kahler(2), &l).unwrap() - 1.0).abs() < 1e-14);
        for n in 1..=4 {
            let full: Vec<usize> = (0..n).collect();
            let v = restrict(&canonical_volume(n), &ComplexPlane::coordinate(n, &full)).unwrap();
            assert!((v - 1.0).abs() < 1e-14);
        }
        let two = wedge(
            &ExteriorForm::monomial(2, &[0], &[0], I),
            &ExteriorForm::monomial(2, &[1], &[1], I),
        )
        .unwrap();
        assert_eq!(canonical_volume(2), two);
    }

    #[test]
    fn weak_positivity_examples() {
        let budget = WeakBudget {
            starts: 16,
            ..WeakBudget::default()
        };
        let f = ExteriorForm::monomial(2, &[0], &[0], I);
        match is_weakly_positive(&f, &budget).unwrap() {
            WeakVerdict::NonNegativeOnSamples { min } => assert!(min.abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        match is_weakly_positive(&(-&f), &budget).unwrap() {
            WeakVerdict::Refuted { plane, value } => {
                assert!((value + 1.0).abs() < 1e-9);
                assert!((plane.basis()[(0, 0)].norm() - 1.0).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn restriction_equals_plucker_quadratic_form() {
        let mut g = rng(11);
        let h = linalg::random_psd(&mut g, 4, 2) - CMat::identity(4, 4) * C64::from(0.5);
        let w = ExteriorForm::from_hermitian_11(&h);
        let f = wedge(&w, &kahler(4)).unwrap();
        let op = form_operator(&f).unwrap();
        for _ in 0..5 {
            let l = ComplexPlane::random(&mut g, 4, 2);
            let p = l.plucker();
            let q = (p.adjoint() * op.matrix() * &p)[(0, 0)].re;
            assert!((restrict(&f, &l).unwrap() - q).abs() < 1e-12);
        }
        assert_eq!(form_from_operator(&op), f);
    }
}
