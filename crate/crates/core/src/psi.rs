//! The maps `Φ`, `Φ^{-1}` and `Ψ`, and the top-Chern operator identities.
//!
//! `Φ^l: Λ^l V ⊗ Λ^l W → Sym^l(V ⊗ W)` sends
//! `(v_1∧…∧v_l) ⊗ (w_1∧…∧w_l)` to `(1/l!) Σ_σ sgn(σ) ⊙_i (v_i ⊗ w_{σ(i)})`, and the
//! partial inverse sends `⊙_i (v_i ⊗ w_i)` to `(v_1∧…∧v_l) ⊗ (w_1∧…∧w_l)`.
//! With `l = r = dim W` the line `Λ^r W` is spanned by `f_1 ∧ … ∧ f_r`, and
//! `Ψ(x) = Φ(x ⊗ f_1∧…∧f_r)` identifies `Λ^r V` with a subspace of `Sym^r(V ⊗ W)`.
//!
//! Elements of `Λ^l V ⊗ Λ^l W` are matrices indexed by `l`-subsets (lexicographic,
//! as in [`crate::linalg::subsets`]); elements of `Sym^l(V ⊗ W)` are polynomials in
//! the variables `x_{(j,λ)}`, `(j,λ) ↦ j·r + λ`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::curvature::{he_map, pe_matrix, pestar_matrix, CurvatureTensor};
use crate::discriminant::{self, DiscriminantError};
use crate::linalg::{self, CMat, C64, ONE, ZERO};
use crate::multilinear::{ComplexPlane, FormOperator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsiError {
    #[error("degree {l} exceeds a factor dimension (n={n}, r={r})")]
    DegreeTooLarge { l: usize, n: usize, r: usize },
    #[error("operator of size {got} does not act on C^{n} ⊗ C^{r}")]
    ShapeMismatch { n: usize, r: usize, got: usize },
    #[error("rank {r} exceeds base dimension {n}")]
    RankExceedsDimension { n: usize, r: usize },
    #[error("plane of dimension {plane} given, rank is {r}")]
    PlaneDimensionMismatch { plane: usize, r: usize },
    #[error(transparent)]
    Discriminant(#[from] DiscriminantError),
}

/// Homogeneous element of `Sym^l(V ⊗ W)`: sorted variable multisets → coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorSpaceElement {
    n: usize,
    r: usize,
    degree: usize,
    terms: BTreeMap<Vec<usize>, C64>,
}

impl SymTensorSpaceElement {
    pub fn zero(n: usize, r: usize, degree: usize) -> Self {
        Self {
            n,
            r,
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient of `⊙ x_{p_1} … x_{p_l}` (any order).
    pub fn coeff(&self, vars: &[usize]) -> C64 {
        let mut k = vars.to_vec();
        k.sort_unstable();
        self.terms.get(&k).copied().unwrap_or(ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], C64)> {
        self.terms.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    fn add_term(&mut self, mut vars: Vec<usize>, c: C64) {
        vars.sort_unstable();
        *self.terms.entry(vars).or_insert(ZERO) += c;
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d = 0.0f64;
        for (k, &c) in &self.terms {
            d = d.max((c - other.coeff(k)).norm());
        }
        for (k, &c) in &other.terms {
            d = d.max((c - self.coeff(k)).norm());
        }
        d
    }
}

fn check_degree(l: usize, n: usize, r: usize) -> Result<(), PsiError> {
    if l > n || l > r {
        return Err(PsiError::DegreeTooLarge { l, n, r });
    }
    Ok(())
}

/// `Φ^l` on an element `x[I][J]` of `Λ^l C^n ⊗ Λ^l C^r`.
pub fn phi(l: usize, n: usize, r: usize, x: &CMat) -> Result<SymTensorSpaceElement, PsiError> {
    check_degree(l, n, r)?;
    let vs = linalg::subsets(n, l);
    let ws = linalg::subsets(r, l);
    assert_eq!(x.shape(), (vs.len(), ws.len()), "coefficient matrix shape");
    let perms = linalg::permutations(l);
    let w = ONE / linalg::factorial(l);
    let mut out = SymTensorSpaceElement::zero(n, r, l);
    for (a, &im) in vs.iter().enumerate() {
        let is = linalg::mask_indices(im);
        for (b, &jm) in ws.iter().enumerate() {
            let c = x[(a, b)];
            if c == ZERO {
                continue;
            }
            let js = linalg::mask_indices(jm);
            for (sigma, s) in &perms {
                let vars: Vec<usize> = (0..l).map(|i| is[i] * r + js[sigma[i]]).collect();
                out.add_term(vars, c * w * *s as f64);
            }
        }
    }
    Ok(out)
}

/// The partial inverse `⊙(v_i ⊗ w_i) ↦ (v_1∧…∧v_l) ⊗ (w_1∧…∧w_l)`.
pub fn phi_inverse(s: &SymTensorSpaceElement) -> CMat {
    let (n, r, l) = (s.n, s.r, s.degree);
    let vs = linalg::subsets(n, l);
    let ws = linalg::subsets(r, l);
    let mut out = CMat::zeros(vs.len(), ws.len());
    for (vars, &c) in &s.terms {
        let js: Vec<usize> = vars.iter().map(|p| p / r).collect();
        let ls: Vec<usize> = vars.iter().map(|p| p % r).collect();
        let (jm, lm) = (linalg::indices_mask(&js), linalg::indices_mask(&ls));
        if jm.count_ones() as usize != l || lm.count_ones() as usize != l {
            continue;
        }
        let sign = (linalg::permutation_sign(&js) * linalg::permutation_sign(&ls)) as f64;
        let a = vs.iter().position(|&m| m == jm).expect("l-subset");
        let b = ws.iter().position(|&m| m == lm).expect("l-subset");
        out[(a, b)] += c * sign;
    }
    out
}

/// `P^{⊗l}` acting on `Sym^l(V ⊗ W)`: each variable `x_p ↦ Σ_q P[q][p] x_q`.
pub fn sym_power_apply(p: &CMat, s: &SymTensorSpaceElement) -> SymTensorSpaceElement {
    let d = s.n * s.r;
    assert_eq!(p.shape(), (d, d));
    let mut out = SymTensorSpaceElement::zero(s.n, s.r, s.degree);
    let columns: Vec<Vec<(usize, C64)>> = (0..d)
        .map(|c| (0..d).filter(|&q| p[(q, c)] != ZERO).map(|q| (q, p[(q, c)])).collect())
        .collect();
    for (vars, &c) in &s.terms {
        let mut partial: Vec<(Vec<usize>, C64)> = vec![(Vec::new(), c)];
        for &v in vars {
            let mut next = Vec::with_capacity(partial.len() * columns[v].len());
            for (pre, pc) in &partial {
                for &(q, pq) in &columns[v] {
                    let mut k = pre.clone();
                    k.push(q);
                    next.push((k, pc * pq));
                }
            }
            partial = next;
        }
        for (k, v) in partial {
            out.add_term(k, v);
        }
    }
    out
}

/// `Ψ^{-1} ∘ P^{⊗r} ∘ Ψ` on `Λ^r C^n`, `r = dim W`; `matrix[I'][I]` is the `e_{I'}` coefficient of the image of `e_I`.
pub fn psi_conjugate(p: &CMat, n: usize, r: usize) -> Result<CMat, PsiError> {
    if p.nrows() != n * r || p.ncols() != n * r {
        return Err(PsiError::ShapeMismatch {
            n,
            r,
            got: p.nrows(),
        });
    }
    check_degree(r, n, r)?;
    let basis = linalg::subsets(n, r);
    let m = basis.len();
    let mut out = CMat::zeros(m, m);
    for col in 0..m {
        let mut x = CMat::zeros(m, 1);
        x[(col, 0)] = ONE;
        let image = phi_inverse(&sym_power_apply(p, &phi(r, n, r, &x)?));
        for row in 0..m {
            out[(row, col)] = image[(row, 0)];
        }
    }
    Ok(out)
}

/// The operator of `c_r` on `Λ^r C^n`, computed as `r! · Ψ^{-1} ∘ (P^{E*})^{⊗r} ∘ Ψ`.
///
/// [`crate::multilinear::form_operator`] absorbs `(i)^{-r²}` and sends
/// `i dz_1 ∧ dz̄_1` to `[1]`; under that normalization the identification of
/// `(r,r)`-forms with `End(Λ^r C^n)` carries an extra `r!` relative to `Ψ`.
pub fn tilde_top_chern(t: &CurvatureTensor) -> Result<FormOperator, PsiError> {
    top_chern_via(t, &pestar_matrix(t))
}

/// Same operator through the Nakano operator `P^E` instead of `P^{E*}`.
pub fn tilde_top_chern_nakano(t: &CurvatureTensor) -> Result<FormOperator, PsiError> {
    top_chern_via(t, &pe_matrix(t))
}

fn top_chern_via(t: &CurvatureTensor, p: &CMat) -> Result<FormOperator, PsiError> {
    let (n, r) = (t.n(), t.r());
    if r > n {
        return Err(PsiError::RankExceedsDimension { n, r });
    }
    let m = psi_conjugate(p, n, r)? * C64::from(linalg::factorial(r));
    Ok(FormOperator::new(n, r, m))
}

/// `c_r|_L / dv_L` computed as `r! · D ∘ (H^L)^{⊗r} ∘ D*`.
pub fn top_chern_on_plane(t: &CurvatureTensor, plane: &ComplexPlane) -> Result<f64, PsiError> {
    let (n, r) = (t.n(), t.r());
    if plane.rank() != r {
        return Err(PsiError::PlaneDimensionMismatch {
            plane: plane.rank(),
            r,
        });
    }
    if r > n {
        return Err(PsiError::RankExceedsDimension { n, r });
    }
    let hl = he_map(t).restrict_domain(plane.basis());
    Ok(linalg::factorial(r) * discriminant::double_mixed_discriminant(&hl)?)
}

/// `h! · Ψ^{-1} ∘ P^{⊗h} ∘ Ψ` for an operator on `C^n ⊗ C^h`, normalized as [`tilde_top_chern`].
pub fn horizontal_pushforward_operator(p0h: &CMat, n: usize, h: usize) -> Result<FormOperator, PsiError> {
    if h > n {
        return Err(PsiError::RankExceedsDimension { n, r: h });
    }
    let m = psi_conjugate(p0h, n, h)? * C64::from(linalg::factorial(h));
    Ok(FormOperator::new(n, h, m))
}
