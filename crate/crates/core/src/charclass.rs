//! Chern, Segre and Schur forms, and exact Schur-polynomial algebra.
//!
//! Forms are computed from `det(Id + t·iR/2π) = Σ c_i t^i` with the
//! curvature matrix entries `g_{λμ} = Σ c_{jkλμ} i dz_j ∧ dz̄_k`. Since even
//! forms commute, the coefficient of `t^i` is the sum of the principal `i×i`
//! minors, each expanded by the Leibniz formula under the wedge product.
//!
//! Polynomials in `c_1, …, c_r` use exact rationals.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::curvature::CurvatureTensor;
use crate::linalg::{self, C64};
use crate::multilinear::{wedge, ExteriorForm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CharClassError {
    #[error("parts must be non-increasing: {0:?}")]
    NotPartition(Vec<usize>),
    #[error("partition weight {weight} exceeds base dimension {dim}")]
    WeightExceedsDimension { weight: usize, dim: usize },
    #[error("largest part {part} exceeds rank {rank}")]
    PartExceedsRank { part: usize, rank: usize },
    #[error("polynomial is not homogeneous of weighted degree {expected}")]
    NotHomogeneous { expected: usize },
    #[error("polynomial rank {got} differs from requested rank {expected}")]
    RankMismatch { expected: usize, got: usize },
    #[error("Fulton's bundle needs m ≥ 1")]
    InvalidTwist,
}

// ---------------------------------------------------------------------------
// Partitions
// ---------------------------------------------------------------------------

/// A partition `a_1 ≥ a_2 ≥ … > 0`; trailing zeros are dropped.
///
/// The bound `r` of `Λ(k, r)` is not stored: it is supplied where needed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: &[usize]) -> Result<Self, CharClassError> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(CharClassError::NotPartition(parts.to_vec()));
        }
        let parts: Vec<usize> = parts.iter().copied().filter(|&p| p > 0).collect();
        Ok(Self { parts })
    }

    /// `(1, …, 1)` with `k` ones.
    pub fn column(k: usize) -> Self {
        Self { parts: vec![1; k] }
    }

    /// `(k)`.
    pub fn row(k: usize) -> Self {
        Self::new(&[k]).expect("single part")
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn weight(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of nonzero parts.
    pub fn length(&self) -> usize {
        self.parts.len()
    }

    pub fn largest(&self) -> usize {
        self.parts.first().copied().unwrap_or(0)
    }

    /// Conjugate partition (transposed Young diagram).
    pub fn transpose(&self) -> Self {
        let parts = (1..=self.largest())
            .map(|i| self.parts.iter().filter(|&&p| p >= i).count())
            .collect();
        Self { parts }
    }

    /// `Λ(k, r)`: partitions of `k` with all parts `≤ r`, in decreasing lexicographic order.
    pub fn all(k: usize, r: usize) -> Vec<Self> {
        fn rec(rest: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if rest == 0 {
                out.push(Partition { parts: cur.clone() });
                return;
            }
            for p in (1..=cap.min(rest)).rev() {
                cur.push(p);
                rec(rest - p, p, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(k, r, &mut Vec::new(), &mut out);
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

// ---------------------------------------------------------------------------
// Chern polynomials
// ---------------------------------------------------------------------------

/// Polynomial in `c_1, …, c_r` with rational coefficients.
///
/// Monomials are keyed by exponent vectors `(m_1, …, m_r)`; the weighted degree
/// of `Π c_i^{m_i}` is `Σ i·m_i` (real degree twice that).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChernPolynomial {
    rank: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl ChernPolynomial {
    pub fn zero(rank: usize) -> Self {
        Self {
            rank,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(rank: usize) -> Self {
        Self::constant(rank, BigRational::one())
    }

    pub fn constant(rank: usize, c: BigRational) -> Self {
        let mut p = Self::zero(rank);
        p.insert(vec![0; rank], c);
        p
    }

    /// `c_i`, with `c_0 = 1` and `c_i = 0` outside `0..=r`.
    pub fn c(rank: usize, i: i64) -> Self {
        if i == 0 {
            return Self::one(rank);
        }
        if i < 0 || i as usize > rank {
            return Self::zero(rank);
        }
        let mut e = vec![0; rank];
        e[i as usize - 1] = 1;
        let mut p = Self::zero(rank);
        p.insert(e, BigRational::one());
        p
    }

    /// Monomial `Π c_i^{m_i}` with coefficient `coef`.
    pub fn monomial(exponents: &[u32], coef: BigRational) -> Self {
        let mut p = Self::zero(exponents.len());
        p.insert(exponents.to_vec(), coef);
        p
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigRational)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn coeff(&self, exponents: &[u32]) -> BigRational {
        self.terms.get(exponents).cloned().unwrap_or_else(BigRational::zero)
    }

    fn insert(&mut self, e: Vec<u32>, c: BigRational) {
        let entry = self.terms.entry(e).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    fn weight(e: &[u32]) -> usize {
        e.iter().enumerate().map(|(i, &m)| (i + 1) * m as usize).sum()
    }

    /// `Some(k)` when every monomial has weighted degree `k` (`Some(0)` for zero).
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut degs = self.terms.keys().map(|e| Self::weight(e));
        let first = degs.next().unwrap_or(0);
        degs.all(|d| d == first).then_some(first)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let mut out = Self::zero(self.rank);
        for (e, c) in &self.terms {
            out.insert(e.clone(), c * s);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank);
        let mut out = Self::zero(self.rank);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.insert(e, c1 * c2);
            }
        }
        out
    }

    /// Substitutes forms for `c_1, …, c_r` (`classes[i]` is `c_i`, `classes[0] = 1`).
    ///
    /// Classes missing from the list (degree above the base dimension) are zero.
    pub fn evaluate(&self, dim: usize, classes: &[ExteriorForm]) -> ExteriorForm {
        let deg = self.homogeneous_degree().unwrap_or(0);
        let mut acc = ExteriorForm::zero(dim, deg.min(dim), deg.min(dim));
        for (e, c) in &self.terms {
            let mut term = ExteriorForm::one(dim);
            let mut vanishes = false;
            for (i, &m) in e.iter().enumerate() {
                for _ in 0..m {
                    match classes.get(i + 1) {
                        Some(f) if !f.is_zero() => match wedge(&term, f) {
                            Ok(w) => term = w,
                            Err(_) => vanishes = true,
                        },
                        _ => vanishes = true,
                    }
                    if vanishes {
                        break;
                    }
                }
                if vanishes {
                    break;
                }
            }
            if !vanishes {
                let cf = c.to_f64().expect("finite rational");
                acc = &acc + &term.scale(C64::from(cf));
            }
        }
        acc
    }
}

impl fmt::Display for ChernPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &m)| m > 0)
                .map(|(i, &m)| {
                    if m == 1 {
                        format!("c{}", i + 1)
                    } else {
                        format!("c{}^{}", i + 1, m)
                    }
                })
                .collect();
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", mono.join(" "))?;
            } else {
                write!(f, "{mag} {}", mono.join(" "))?;
            }
        }
        Ok(())
    }
}

fn poly_det(m: &[Vec<ChernPolynomial>], rank: usize) -> ChernPolynomial {
    let k = m.len();
    if k == 0 {
        return ChernPolynomial::one(rank);
    }
    if k == 1 {
        return m[0][0].clone();
    }
    let mut acc = ChernPolynomial::zero(rank);
    for col in 0..k {
        if m[0][col].is_zero() {
            continue;
        }
        let minor: Vec<Vec<ChernPolynomial>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != col)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let term = m[0][col].mul(&poly_det(&minor, rank));
        acc = if col % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

/// `P_a = det(c_{a_i − i + j})` over the nonzero parts of `a`.
pub fn schur_polynomial(a: &Partition, rank: usize) -> Result<ChernPolynomial, CharClassError> {
    if a.largest() > rank {
        return Err(CharClassError::PartExceedsRank {
            part: a.largest(),
            rank,
        });
    }
    let l = a.length();
    let m: Vec<Vec<ChernPolynomial>> = (0..l)
        .map(|i| {
            (0..l)
                .map(|j| ChernPolynomial::c(rank, a.parts[i] as i64 - i as i64 + j as i64))
                .collect()
        })
        .collect();
    Ok(poly_det(&m, rank))
}

/// Coordinates of a homogeneous polynomial of weighted degree `k` in the Schur basis of `Λ(k, r)`.
pub fn schur_basis_decompose(
    p: &ChernPolynomial,
    k: usize,
    rank: usize,
) -> Result<BTreeMap<Partition, BigRational>, CharClassError> {
    if p.rank != rank {
        return Err(CharClassError::RankMismatch {
            expected: rank,
            got: p.rank,
        });
    }
    if !p.is_zero() && p.homogeneous_degree() != Some(k) {
        return Err(CharClassError::NotHomogeneous { expected: k });
    }
    let basis = Partition::all(k, rank);
    // monomials of weight k ↔ partitions of k with parts ≤ r
    let monos: Vec<Vec<u32>> = basis
        .iter()
        .map(|a| {
            let mut e = vec![0u32; rank];
            for &part in a.parts() {
                e[part - 1] += 1;
            }
            e
        })
        .collect();
    let polys: Vec<ChernPolynomial> = basis
        .iter()
        .map(|a| schur_polynomial(a, rank).expect("parts bounded by rank"))
        .collect();
    let m = basis.len();
    // Columns are Schur polynomials, rows monomials; augmented with p.
    let mut a: Vec<Vec<BigRational>> = monos
        .iter()
        .map(|e| {
            let mut row: Vec<BigRational> = polys.iter().map(|q| q.coeff(e)).collect();
            row.push(p.coeff(e));
            row
        })
        .collect();
    for col in 0..m {
        let piv = (col..m)
            .find(|&r| !a[r][col].is_zero())
            .expect("Schur polynomials form a basis");
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..m {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=m {
                    let sub = &a[col][c] * &f;
                    a[r][c] -= sub;
                }
            }
        }
    }
    Ok(basis
        .into_iter()
        .zip(a)
        .filter(|(_, row)| !row[m].is_zero())
        .map(|(b, row)| (b, row[m].clone()))
        .collect())
}

/// Membership in the cone spanned by Schur polynomials: all coordinates non-negative.
pub fn in_schur_cone(coords: &BTreeMap<Partition, BigRational>) -> bool {
    coords.values().all(|c| !c.is_negative())
}

// ---------------------------------------------------------------------------
// Forms
// ---------------------------------------------------------------------------

/// Determinant of a square matrix of even forms (which commute), by Leibniz expansion.
pub fn form_determinant(dim: usize, m: &[Vec<ExteriorForm>]) -> ExteriorForm {
    let k = m.len();
    let mut acc: Option<ExteriorForm> = None;
    for (perm, sign) in linalg::permutations(k) {
        let mut term = ExteriorForm::one(dim);
        let mut zero = false;
        for (i, &j) in perm.iter().enumerate() {
            if m[i][j].is_zero() {
                zero = true;
                break;
            }
            match wedge(&term, &m[i][j]) {
                Ok(w) => term = w,
                Err(_) => {
                    zero = true;
                    break;
                }
            }
        }
        if zero {
            continue;
        }
        let term = term.scale(C64::from(sign as f64));
        acc = Some(match acc {
            None => term,
            Some(a) => &a + &term,
        });
    }
    acc.unwrap_or_else(|| ExteriorForm::zero(dim, k.min(dim), k.min(dim)))
}

/// Matrix of `(1,1)`-forms `g_{λμ}` of `iR/2π`.
pub fn curvature_forms(t: &CurvatureTensor) -> Vec<Vec<ExteriorForm>> {
    (0..t.r())
        .map(|l| (0..t.r()).map(|m| t.entry_form(l, m)).collect())
        .collect()
}

/// `[c_0, …, c_m]` with `m = min(r, n)`; higher Chern forms vanish for degree reasons.
pub fn chern_forms(t: &CurvatureTensor) -> Vec<ExteriorForm> {
    chern_forms_of_matrix(t.n(), &curvature_forms(t))
}

/// Chern forms of a matrix of `(1,1)`-forms on `C^dim`.
pub fn chern_forms_of_matrix(dim: usize, g: &[Vec<ExteriorForm>]) -> Vec<ExteriorForm> {
    let r = g.len();
    let top = r.min(dim);
    let mut out = vec![ExteriorForm::one(dim)];
    for i in 1..=top {
        let mut ci = ExteriorForm::zero(dim, i, i);
        for mask in linalg::subsets(r, i) {
            let idx = linalg::mask_indices(mask);
            let minor: Vec<Vec<ExteriorForm>> = idx
                .iter()
                .map(|&a| idx.iter().map(|&b| g[a][b].clone()).collect())
                .collect();
            ci = &ci + &form_determinant(dim, &minor);
        }
        out.push(ci);
    }
    out
}

/// `P_a(c(E, h))`: the Schur polynomial evaluated on Chern forms.
pub fn schur_form(t: &CurvatureTensor, a: &Partition) -> Result<ExteriorForm, CharClassError> {
    if a.weight() > t.n() {
        return Err(CharClassError::WeightExceedsDimension {
            weight: a.weight(),
            dim: t.n(),
        });
    }
    let p = schur_polynomial(a, t.r())?;
    Ok(p.evaluate(t.n(), &chern_forms(t)))
}

/// `[s_0, …, s_kmax]`, `s_k` the Schur form of `(1, …, 1)`.
pub fn segre_forms(t: &CurvatureTensor, kmax: usize) -> Result<Vec<ExteriorForm>, CharClassError> {
    if kmax > t.n() {
        return Err(CharClassError::WeightExceedsDimension {
            weight: kmax,
            dim: t.n(),
        });
    }
    let c = chern_forms(t);
    (0..=kmax)
        .map(|k| {
            let p = schur_polynomial(&Partition::column(k), t.r())?;
            Ok(p.evaluate(t.n(), &c))
        })
        .collect()
}

/// `s_k = (−1)^k [c(E)^{-1}]_k`, via `s_m = Σ_{i≥1} (−1)^{i+1} c_i ∧ s_{m−i}`.
pub fn segre_forms_by_inversion(t: &CurvatureTensor, kmax: usize) -> Vec<ExteriorForm> {
    let n = t.n();
    assert!(kmax <= n, "Segre degree {kmax} exceeds dimension {n}");
    let c = chern_forms(t);
    let mut s = vec![ExteriorForm::one(n)];
    for m in 1..=kmax {
        let mut acc = ExteriorForm::zero(n, m, m);
        for i in 1..=m.min(c.len() - 1) {
            let w = wedge(&c[i], &s[m - i]).expect("degree ≤ n");
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc = &acc + &w.scale(C64::from(sign));
        }
        s.push(acc);
    }
    s
}

// ---------------------------------------------------------------------------
// Fulton's bundle on P²
// ---------------------------------------------------------------------------

/// Element `x_0 + x_1 a + x_2 a²` of `H^•(P², Z) = Z[a]/(a³)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CohomologyElement {
    pub coeffs: [i64; 3],
}

impl CohomologyElement {
    pub fn new(x0: i64, x1: i64, x2: i64) -> Self {
        Self {
            coeffs: [x0, x1, x2],
        }
    }

    /// Total Chern class `1 + d a` of `O(d)`.
    pub fn line_bundle(d: i64) -> Self {
        Self::new(1, d, 0)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (x, y) = (self.coeffs, o.coeffs);
        Self::new(x[0] * y[0], x[0] * y[1] + x[1] * y[0], x[0] * y[2] + x[1] * y[1] + x[2] * y[0])
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::new(1, 0, 0), |acc, _| acc.mul(self))
    }

    /// Inverse of a class with constant term 1.
    pub fn inverse_unit(&self) -> Self {
        assert_eq!(self.coeffs[0], 1, "constant term must be 1");
        let (a1, a2) = (self.coeffs[1], self.coeffs[2]);
        Self::new(1, -a1, a1 * a1 - a2)
    }

    pub fn degree_part(&self, d: usize) -> i64 {
        self.coeffs[d]
    }
}

/// `(c_1, c_2)` of `E` in `0 → O(−3)² → O(−1)² ⊕ O(m)² → E → 0`.
pub fn fulton_bundle_classes(
    m: i64,
) -> Result<(CohomologyElement, CohomologyElement), CharClassError> {
    if m < 1 {
        return Err(CharClassError::InvalidTwist);
    }
    let ca = CohomologyElement::line_bundle(-3).pow(2);
    let cb = CohomologyElement::line_bundle(-1).pow(2);
    let cc = CohomologyElement::line_bundle(m).pow(2);
    let ce = cb.mul(&cc).mul(&ca.inverse_unit());
    Ok((
        CohomologyElement::new(0, ce.coeffs[1], 0),
        CohomologyElement::new(0, 0, ce.coeffs[2]),
    ))
}

/// Integer as an exact rational.
pub fn rational(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}
