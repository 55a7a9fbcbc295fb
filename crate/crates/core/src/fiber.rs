//! Fiber integration over projectivized bundles at a point.
//!
//! The total space near a fiber point is modelled on `C^{n+f}`: base
//! coordinates `z_1 … z_n` come first, the fiber chart coordinates
//! `b_1 … b_f` occupy indices `n … n+f−1`. Curvature formulas that are known
//! only at the center `[1:0:…:0]` of the chart are applied at an arbitrary
//! point `[a]` by first rotating the frame with a unitary whose first column
//! is `a`.
//!
//! Only `P^1` fibers (rank 2) are integrated; the Nakano pushforward identity
//! is pointwise and works for any rank.

use rayon::prelude::*;
use thiserror::Error;

use crate::charclass::{self, form_determinant, CharClassError, Partition};
use crate::curvature::{dual_curvature, pe_matrix, CurvatureTensor};
use crate::linalg::{self, CMat, CVec, C64, I, ONE, ZERO};
use crate::multilinear::{form_operator, wedge_all, wedge_power, ExteriorForm, FormError, FormOperator};
use crate::psi::{self, PsiError};

/// Default number of polar bands of the `P^1` rule. The midpoint error is
/// `O(bands⁻²)`; at 256 bands a few percent of random rank-2 tensors with a
/// nearly cancelling `s_2` exceed `1e−4` relative deviation in [`verify_segre`].
pub const DEFAULT_BANDS: usize = 1024;
/// Default number of azimuthal nodes of the `P^1` rule.
pub const DEFAULT_AZIMUTHS: usize = 32;
/// Tolerance on `|a|` below which a fiber point is rejected.
const POINT_TOL: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FiberError {
    #[error("rank {r} is not supported here (supported: {supported})")]
    UnsupportedRank { r: usize, supported: &'static str },
    #[error("integrand of degree ({m},{m}) has no component of fiber degree ({f},{f})")]
    DegreeMismatch { m: usize, f: usize },
    #[error("integrand lives on C^{got}, expected C^{expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("fiber point must be a nonzero vector of length {0}")]
    InvalidPoint(usize),
    #[error("invalid coordinate subspace {axes:?} of C^{r}")]
    InvalidSubspace { axes: Vec<usize>, r: usize },
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    CharClass(#[from] CharClassError),
    #[error(transparent)]
    Psi(#[from] PsiError),
}

// ---------------------------------------------------------------------------
// Charts and quadrature
// ---------------------------------------------------------------------------

/// The chart `(z, [a]) ↦ [Σ a_i e_i]`, recentred so that the chosen point is `[1:0:…:0]`.
#[derive(Debug, Clone)]
pub struct FiberChart {
    point: CVec,
    frame: CMat,
    tensor: CurvatureTensor,
}

impl FiberChart {
    /// Chart centred at `[a]`; the frame is rotated by a unitary with first column `a/|a|`.
    pub fn new(g: &CurvatureTensor, a: &CVec) -> Result<Self, FiberError> {
        let norm = a.norm();
        if a.len() != g.r() || !(norm > POINT_TOL) || !norm.is_finite() {
            return Err(FiberError::InvalidPoint(g.r()));
        }
        let point = a / C64::from(norm);
        let frame = linalg::unitary_with_first_column(&point);
        Ok(Self::with_frame(g, point, frame))
    }

    fn with_frame(g: &CurvatureTensor, point: CVec, frame: CMat) -> Self {
        let tensor = g.change_frame(&CMat::identity(g.n(), g.n()), &frame);
        Self { point, frame, tensor }
    }

    /// Unit representative of the center.
    pub fn point(&self) -> &CVec {
        &self.point
    }

    /// Unitary `U` with `e'_λ = Σ_ν U_{νλ} e_ν`.
    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    /// Curvature coefficients in the rotated frame.
    pub fn tensor(&self) -> &CurvatureTensor {
        &self.tensor
    }

    /// Chart coordinates `b` of `[x]`, or `None` on the hyperplane `a_1 = 0`.
    pub fn coordinates(&self, x: &CVec) -> Option<CVec> {
        let y = self.frame.adjoint() * x;
        if y[0].norm() <= 1e-14 * y.norm() {
            return None;
        }
        Some(CVec::from_fn(y.len() - 1, |i, _| y[i + 1] / y[0]))
    }

    /// Dimension `n + r − 1` of the total space.
    pub fn total_dim(&self) -> usize {
        self.tensor.n() + self.tensor.r() - 1
    }
}

/// Points and weights on `P^1` for the Fubini-Study measure of total mass 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    bands: usize,
    azimuths: usize,
    points: Vec<CVec>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Midpoint rule in `cos θ` (equal-area bands) times the trapezoid rule in `φ`.
    ///
    /// The point at `(θ, φ)` is `(cos(θ/2), sin(θ/2) e^{iφ})`, so the rule is
    /// uniform on the sphere, which is the normalized Fubini-Study measure.
    pub fn p1(bands: usize, azimuths: usize) -> Self {
        assert!(bands > 0 && azimuths > 0, "empty quadrature rule");
        let w = 1.0 / (bands * azimuths) as f64;
        let mut points = Vec::with_capacity(bands * azimuths);
        for b in 0..bands {
            let z = 1.0 - (2 * b + 1) as f64 / bands as f64;
            let (c, s) = (((1.0 + z) / 2.0).sqrt(), ((1.0 - z) / 2.0).sqrt());
            for k in 0..azimuths {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / azimuths as f64;
                points.push(CVec::from_vec(vec![C64::from(c), C64::from_polar(s, phi)]));
            }
        }
        Self {
            bands,
            azimuths,
            weights: vec![w; points.len()],
            points,
        }
    }

    /// Resolution parameter (number of polar bands).
    pub fn resolution(&self) -> usize {
        self.bands
    }

    pub fn azimuths(&self) -> usize {
        self.azimuths
    }

    /// Complex dimension of the fiber.
    pub fn fiber_dim(&self) -> usize {
        1
    }

    pub fn points(&self) -> &[CVec] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of the constant function 1.
    pub fn total_mass(&self) -> f64 {
        linalg::pairwise_sum(&self.weights, &|a, b| a + b, &0.0)
    }

    /// The same rule with twice as many bands.
    pub fn refined(&self) -> Self {
        Self::p1(2 * self.bands, self.azimuths)
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::p1(DEFAULT_BANDS, DEFAULT_AZIMUTHS)
    }
}

// ---------------------------------------------------------------------------
// Curvature on the total space
// ---------------------------------------------------------------------------

/// `(i/2π) db_j ∧ db̄_k` on `C^{n+f}`, `j, k` counted from 0 within the fiber block.
fn vertical_11(n: usize, f: usize, j: usize, k: usize) -> ExteriorForm {
    ExteriorForm::monomial(n + f, &[n + j], &[n + k], I / (2.0 * std::f64::consts::PI))
}

/// Fubini-Study form `(i/2π) Σ db_j ∧ db̄_j` at the chart center.
pub fn fubini_study(n: usize, f: usize) -> ExteriorForm {
    (0..f).fold(ExteriorForm::zero(n + f, 1, 1), |acc, j| &acc + &vertical_11(n, f, j, j))
}

/// `iR^{Q′}/2π` at the chart center, as an `(r−1) × (r−1)` matrix of `(1,1)`-forms on `C^{n+r−1}`.
///
/// Entry `[j][k]` is `g_{jk} + (i/2π) db_j ∧ db̄_k` with `g` the rotated curvature,
/// `j, k ≥ 1` in frame indices.
pub fn mourougane_curvature(chart: &FiberChart) -> Vec<Vec<ExteriorForm>> {
    let t = chart.tensor();
    let (n, f) = (t.n(), t.r() - 1);
    (0..f)
        .map(|j| {
            (0..f)
                .map(|k| &t.entry_form(j + 1, k + 1).extend_dim(n + f) + &vertical_11(n, f, j, k))
                .collect()
        })
        .collect()
}

/// `c_1(Q′)` at the chart center: the trace of [`mourougane_curvature`].
pub fn quotient_first_chern(chart: &FiberChart) -> ExteriorForm {
    let m = mourougane_curvature(chart);
    let dim = chart.total_dim();
    m.iter()
        .enumerate()
        .fold(ExteriorForm::zero(dim, 1, 1), |acc, (j, row)| &acc + &row[j])
}

/// `π^* c_1(F)` on the total space.
pub fn pullback_first_chern(chart: &FiberChart) -> ExteriorForm {
    let t = chart.tensor();
    (0..t.r()).fold(ExteriorForm::zero(chart.total_dim(), 1, 1), |acc, l| {
        &acc + &t.entry_form(l, l).extend_dim(chart.total_dim())
    })
}

/// `c_1(O_{P(F)}(1)) = c_1(Q′) − π^*c_1(F)` at the chart center.
///
/// This is the Fubini-Study form minus `⟨(iR/2π) a, a⟩`.
pub fn o1_curvature(chart: &FiberChart) -> ExteriorForm {
    &quotient_first_chern(chart) - &pullback_first_chern(chart)
}

/// `[c_1(Q_1), c_1(Q_2)]` on the flag manifold of a rank-2 bundle, at the flag `C^2 ⊃ [v] ⊃ 0`.
///
/// The frame is rotated so that `e_2 = v/|v|`; the chart coordinate is `z_{12}`
/// with `ξ_2 = e_2 + z_{12} e_1`.
pub fn demailly_flag_curvature(g: &CurvatureTensor, v: &CVec) -> Result<Vec<ExteriorForm>, FiberError> {
    if g.r() != 2 {
        return Err(FiberError::UnsupportedRank {
            r: g.r(),
            supported: "2",
        });
    }
    let norm = v.norm();
    if v.len() != 2 || !(norm > POINT_TOL) || !norm.is_finite() {
        return Err(FiberError::InvalidPoint(2));
    }
    let v = v / C64::from(norm);
    let perp = CVec::from_vec(vec![-v[1].conj(), v[0].conj()]);
    let chart = FiberChart::with_frame(g, v.clone(), CMat::from_columns(&[perp, v]));
    let n = g.n();
    let fs = vertical_11(n, 1, 0, 0);
    let q1 = &chart.tensor().entry_form(0, 0).extend_dim(n + 1) + &fs;
    let q2 = &chart.tensor().entry_form(1, 1).extend_dim(n + 1) - &fs;
    Ok(vec![q1, q2])
}

// ---------------------------------------------------------------------------
// Fiber integration
// ---------------------------------------------------------------------------

/// The base form `β` with `η = β ∧ dz_V ∧ dz̄_V + …`, where `V` are vertical
/// indices of `η`'s ambient space and other fiber indices in `others` must not occur.
fn vertical_coefficient(eta: &ExteriorForm, n: usize, vertical: &[usize], others: &[usize]) -> ExteriorForm {
    let f = vertical.len();
    let vmask = linalg::indices_mask(vertical);
    let omask = linalg::indices_mask(others);
    let (p, q) = eta.bidegree();
    let terms: Vec<(Vec<usize>, Vec<usize>, C64)> = eta
        .mask_terms()
        .filter(|&(i, j, _)| i & vmask == vmask && j & vmask == vmask && (i | j) & omask == 0)
        .map(|(i, j, c)| {
            let (ib, jb) = (i & !vmask, j & !vmask);
            // dz_{I_b} dz_V dz̄_{J_b} dz̄_V → dz_{I_b} dz̄_{J_b} dz_V dz̄_V
            let sign = if (f * jb.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
            (linalg::mask_indices(ib), linalg::mask_indices(jb), c * sign)
        })
        .collect();
    ExteriorForm::from_terms(n, p - f, q - f, terms)
}

fn sign_of(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `π_* η` for an integrand given in the recentred chart at each point of `rule`.
///
/// At a point the integrand is divided by the Fubini-Study volume
/// `ω^f = f! (i/2π)^f (−1)^{f(f−1)/2} dz_V ∧ dz̄_V`, and the resulting base
/// forms are averaged with the rule's weights (pairwise, in point order).
pub fn fiber_pushforward<F>(integrand: F, rule: &QuadratureRule, n: usize) -> Result<ExteriorForm, FiberError>
where
    F: Fn(&CVec) -> Result<ExteriorForm, FiberError> + Sync,
{
    let f = rule.fiber_dim();
    let vertical: Vec<usize> = (n..n + f).collect();
    let unit = linalg::factorial(f)
        * sign_of(f * (f.saturating_sub(1)) / 2)
        * (I / (2.0 * std::f64::consts::PI)).powi(f as i32);
    let parts: Vec<ExteriorForm> = rule
        .points()
        .par_iter()
        .zip(rule.weights().par_iter())
        .map(|(a, &w)| {
            let eta = integrand(a)?;
            if eta.dim() != n + f {
                return Err(FiberError::DimensionMismatch {
                    expected: n + f,
                    got: eta.dim(),
                });
            }
            let (m, mq) = eta.bidegree();
            if m != mq || m < f {
                return Err(FiberError::DegreeMismatch { m, f });
            }
            Ok(vertical_coefficient(&eta, n, &vertical, &[]).scale(C64::from(w) / unit))
        })
        .collect::<Result<_, _>>()?;
    if parts.is_empty() {
        return Err(FiberError::DimensionMismatch { expected: n + f, got: 0 });
    }
    let (p, _) = parts[0].bidegree();
    let zero = ExteriorForm::zero(n, p, p);
    Ok(linalg::pairwise_sum(&parts, &|a, b| a + b, &zero))
}

/// Lhs, rhs and their deviation for a pushforward identity.
#[derive(Debug, Clone)]
pub struct PushforwardReport {
    pub lhs: ExteriorForm,
    pub rhs: ExteriorForm,
    /// Largest coefficient of `lhs − rhs`.
    pub abs_deviation: f64,
    /// `abs_deviation` divided by the largest coefficient of either side (0 if both vanish).
    pub rel_deviation: f64,
}

impl PushforwardReport {
    fn new(lhs: ExteriorForm, rhs: ExteriorForm) -> Self {
        let abs_deviation = lhs.distance(&rhs);
        let scale = lhs.max_abs().max(rhs.max_abs());
        let rel_deviation = if scale > 0.0 { abs_deviation / scale } else { abs_deviation };
        Self {
            lhs,
            rhs,
            abs_deviation,
            rel_deviation,
        }
    }
}

fn require_rank_two(g: &CurvatureTensor) -> Result<(), FiberError> {
    if g.r() != 2 {
        return Err(FiberError::UnsupportedRank {
            r: g.r(),
            supported: "2",
        });
    }
    Ok(())
}

fn require_degree(k: usize, n: usize) -> Result<(), FiberError> {
    if k > n {
        return Err(CharClassError::WeightExceedsDimension { weight: k, dim: n }.into());
    }
    Ok(())
}

/// `s_k(E)` against `π_*[c_1(O_{P(E*)}(1))^{k+r−1}]`.
pub fn verify_segre(g: &CurvatureTensor, k: usize, rule: &QuadratureRule) -> Result<PushforwardReport, FiberError> {
    require_rank_two(g)?;
    let n = g.n();
    require_degree(k, n)?;
    let lhs = charclass::segre_forms(g, k)?.pop().expect("s_0 … s_k");
    let dual = dual_curvature(g);
    let rhs = fiber_pushforward(
        |a| {
            let chart = FiberChart::new(&dual, a)?;
            Ok(wedge_power(&o1_curvature(&chart), k + 1)?)
        },
        rule,
        n,
    )?;
    Ok(PushforwardReport::new(lhs, rhs))
}

/// `P_a(c(E))` against `π_*[c_1(Q_1)^{b_1+1} ∧ c_1(Q_2)^{b_2}]`, `b = aᵀ`, on the flag manifold of a rank-2 bundle.
pub fn verify_jacobi_trudi(
    g: &CurvatureTensor,
    a: &Partition,
    rule: &QuadratureRule,
) -> Result<PushforwardReport, FiberError> {
    require_rank_two(g)?;
    let n = g.n();
    require_degree(a.weight(), n)?;
    let lhs = charclass::schur_form(g, a)?;
    let b = a.transpose();
    let exps = [b.parts().first().copied().unwrap_or(0) + 1, b.parts().get(1).copied().unwrap_or(0)];
    let rhs = fiber_pushforward(
        |v| {
            let q = demailly_flag_curvature(g, v)?;
            let factors = [wedge_power(&q[0], exps[0])?, wedge_power(&q[1], exps[1])?];
            Ok(wedge_all(n + 1, &factors)?)
        },
        rule,
        n,
    )?;
    Ok(PushforwardReport::new(lhs, rhs))
}

/// Outcome of [`verify_nakano_pushforward`].
#[derive(Debug, Clone)]
pub struct NakanoPushReport {
    /// Codimension `l = r − dim F′` of the horizontal block.
    pub degree: usize,
    pub samples: usize,
    /// Right-hand side; it does not depend on the fiber point.
    pub rhs: FormOperator,
    /// Left-hand side at the last sampled point.
    pub lhs: FormOperator,
    /// Largest entry of `lhs − rhs` over the samples, relative to the largest entry of `rhs` (absolute if that is 0).
    pub max_deviation: f64,
    /// Smallest eigenvalue of the compressed Nakano operator `P^H_0`.
    pub p0h_min_eigenvalue: f64,
}

/// The horizontal top-Chern operator of `Q′` along `Y = P(F′)` versus the Ψ-conjugated power of `P^H_0`.
///
/// `F′` is spanned by the coordinate axes `axes` (0-based). At each of `samples`
/// random points `y ∈ P(F′)` the frame is rotated to `(y, F′ ⊖ y, F′^⊥)`, the
/// determinant of [`mourougane_curvature`] is restricted to `Y`, contracted with
/// `dv_Y = Π_j i db_j ∧ db̄_j` and its horizontal part turned into an operator on
/// `Λ^l C^n`. The right-hand side is `(p−1)!/(2π)^{p−1}` times
/// [`psi::horizontal_pushforward_operator`] of `P^F` compressed to `C^n ⊗ F′^⊥`.
pub fn verify_nakano_pushforward(
    g: &CurvatureTensor,
    axes: &[usize],
    samples: usize,
    seed: u64,
) -> Result<NakanoPushReport, FiberError> {
    let (n, r) = (g.n(), g.r());
    let mut sorted = axes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() || sorted.len() != axes.len() || sorted.iter().any(|&x| x >= r) {
        return Err(FiberError::InvalidSubspace { axes: axes.to_vec(), r });
    }
    let p = sorted.len();
    let l = r - p;
    let complement: Vec<usize> = (0..r).filter(|x| !sorted.contains(x)).collect();
    let two_pi = 2.0 * std::f64::consts::PI;
    let prefactor = linalg::factorial(p - 1) / two_pi.powi((p - 1) as i32);

    let pe = pe_matrix(g);
    let idx: Vec<usize> = (0..n)
        .flat_map(|j| complement.iter().map(move |&lam| j * r + lam))
        .collect();
    let p0h = CMat::from_fn(n * l, n * l, |a, b| pe[(idx[a], idx[b])]);
    let p0h_min_eigenvalue = if l == 0 {
        f64::INFINITY
    } else {
        linalg::hermitian_eigenvalues(&p0h)[0]
    };
    let rhs_matrix = if l == 0 {
        CMat::identity(1, 1)
    } else {
        psi::horizontal_pushforward_operator(&p0h, n, l)?.matrix().clone()
    };
    let rhs = FormOperator::new(n, l, rhs_matrix * C64::from(prefactor));

    let mut rng = linalg::rng(seed);
    let mut lhs = None;
    let mut max_diff: f64 = 0.0;
    for _ in 0..samples {
        let w = linalg::random_unit_vector(&mut rng, p);
        // frame: y, an orthonormal basis of F′ ⊖ y, then the complementary axes
        let local = linalg::unitary_with_first_column(&w);
        let frame = CMat::from_fn(r, r, |row, col| {
            if col < p {
                match sorted.iter().position(|&x| x == row) {
                    Some(pos) => local[(pos, col)],
                    None => ZERO,
                }
            } else if row == complement[col - p] {
                ONE
            } else {
                ZERO
            }
        });
        let chart = FiberChart::with_frame(g, frame.column(0).into_owned(), frame);
        let op = restricted_top_chern_operator(&chart, p - 1)?;
        max_diff = max_diff.max(op.distance(&rhs));
        lhs = Some(op);
    }
    let scale = linalg::max_abs(rhs.matrix());
    let max_deviation = if scale > 0.0 { max_diff / scale } else { max_diff };
    Ok(NakanoPushReport {
        degree: l,
        samples,
        lhs: lhs.unwrap_or_else(|| rhs.clone()),
        rhs,
        max_deviation,
        p0h_min_eigenvalue,
    })
}

/// `Λ_Y[c_{r−1}(Q′)]` restricted to the first `f` fiber directions, as an operator on the base.
fn restricted_top_chern_operator(chart: &FiberChart, f: usize) -> Result<FormOperator, FiberError> {
    let t = chart.tensor();
    let (n, r) = (t.n(), t.r());
    let dim = n + r - 1;
    let det = form_determinant(dim, &mourougane_curvature(chart));
    let vertical: Vec<usize> = (n..n + f).collect();
    let others: Vec<usize> = (n + f..dim).collect();
    let base = vertical_coefficient(&det, n, &vertical, &others);
    // dv_Y = i^f (−1)^{f(f−1)/2} dz_V ∧ dz̄_V
    let unit = linalg::i_pow(f as i64) * sign_of(f * f.saturating_sub(1) / 2);
    let base = base.scale(ONE / unit);
    Ok(form_operator(&base.real_part())?)
}

/// Convenience: `π_*[ω^f]` with `ω` the Fubini-Study form, which is 1.
pub fn fubini_study_volume(rule: &QuadratureRule, n: usize) -> Result<ExteriorForm, FiberError> {
    let f = rule.fiber_dim();
    fiber_pushforward(|_| Ok(wedge_power(&fubini_study(n, f), f)?), rule, n)
}
