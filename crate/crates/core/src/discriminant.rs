//! Mixed discriminants and the double mixed discriminant of a map.
//!
//! `D(A_1, …, A_r)` is the polarization of `det`: symmetric, multilinear and
//! `D(A, …, A) = det A`. Its dual tensor
//! `D* = (1/r!) Σ_{σ,τ} sgn(σ) sgn(τ) E_{σ(1)τ(1)} ⊗ … ⊗ E_{σ(r)τ(r)}`
//! pairs with `(A_1, …, A_r)` entrywise to give `D(A_1, …, A_r)`.

use rayon::prelude::*;
use thiserror::Error;

use crate::curvature::MatrixMap;
use crate::linalg::{self, CMat, C64, ONE, ZERO};

/// Largest rank for which the dense dual tensor is built.
pub const MAX_RANK: usize = 4;

/// Imaginary part tolerated in the double mixed discriminant of an adjoint-preserving map.
pub const IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscriminantError {
    #[error("expected {expected} square matrices of size {expected}, got {got:?}")]
    ShapeMismatch {
        expected: usize,
        got: Vec<(usize, usize)>,
    },
    #[error("rank {0} exceeds the supported maximum {MAX_RANK}")]
    RankTooLarge(usize),
    #[error("map must be square (dim V = {n}, dim W = {r})")]
    NotSquare { n: usize, r: usize },
    #[error("map does not preserve adjoints (defect {0:e})")]
    NotAdjointPreserving(f64),
    #[error("imaginary residue {0:e} in a quantity that should be real")]
    ImaginaryResidue(f64),
}

fn check_shapes(mats: &[CMat]) -> Result<usize, DiscriminantError> {
    let r = mats.len();
    if r == 0 || mats.iter().any(|m| m.shape() != (r, r)) {
        return Err(DiscriminantError::ShapeMismatch {
            expected: r,
            got: mats.iter().map(|m| m.shape()).collect(),
        });
    }
    Ok(r)
}

/// `(1/r!) Σ_σ det(a^{σ(i)}_{ik})`: row `i` of the `σ`-th determinant comes from `A_{σ(i)}`.
pub fn mixed_discriminant(mats: &[CMat]) -> Result<C64, DiscriminantError> {
    let r = check_shapes(mats)?;
    let mut s = ZERO;
    for (sigma, _) in linalg::permutations(r) {
        let m = CMat::from_fn(r, r, |i, k| mats[sigma[i]][(i, k)]);
        s += linalg::det(&m);
    }
    Ok(s / linalg::factorial(r))
}

/// `(1/r!) Σ_{σ,τ} sgn(σ) sgn(τ) Π_i a^i_{σ(i)τ(i)}`.
pub fn mixed_discriminant_expanded(mats: &[CMat]) -> Result<C64, DiscriminantError> {
    let r = check_shapes(mats)?;
    let perms = linalg::permutations(r);
    let mut s = ZERO;
    for (sigma, ss) in &perms {
        for (tau, st) in &perms {
            let mut p = C64::from((ss * st) as f64);
            for i in 0..r {
                p *= mats[i][(sigma[i], tau[i])];
            }
            s += p;
        }
    }
    Ok(s / linalg::factorial(r))
}

/// Dense `D* ∈ End(C^r)^{⊗r}`, stored over slot indices `(a_1, b_1, …, a_r, b_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDiscriminantTensor {
    r: usize,
    entries: Vec<C64>,
}

impl MixedDiscriminantTensor {
    pub fn rank(&self) -> usize {
        self.r
    }

    fn offset(&self, slots: &[(usize, usize)]) -> usize {
        slots
            .iter()
            .fold(0, |acc, &(a, b)| (acc * self.r + a) * self.r + b)
    }

    /// Coefficient of `E_{a_1 b_1} ⊗ … ⊗ E_{a_r b_r}`.
    pub fn get(&self, slots: &[(usize, usize)]) -> C64 {
        assert_eq!(slots.len(), self.r);
        self.entries[self.offset(slots)]
    }

    /// Nonzero entries with their slot indices, in storage order.
    pub fn support(&self) -> Vec<(Vec<(usize, usize)>, C64)> {
        let r = self.r;
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(|(mut off, &c)| {
                let mut slots = vec![(0, 0); r];
                for s in (0..r).rev() {
                    let b = off % r;
                    off /= r;
                    let a = off % r;
                    off /= r;
                    slots[s] = (a, b);
                }
                (slots, c)
            })
            .collect()
    }

    /// Entrywise pairing with `A_1 ⊗ … ⊗ A_r`.
    pub fn contract(&self, mats: &[CMat]) -> Result<C64, DiscriminantError> {
        let r = check_shapes(mats)?;
        if r != self.r {
            return Err(DiscriminantError::ShapeMismatch {
                expected: self.r,
                got: mats.iter().map(|m| m.shape()).collect(),
            });
        }
        Ok(self
            .support()
            .iter()
            .map(|(slots, c)| {
                slots
                    .iter()
                    .enumerate()
                    .fold(*c, |acc, (i, &(a, b))| acc * mats[i][(a, b)])
            })
            .sum())
    }
}

/// `D*` for `End(C^r)`, built from the signed sum over `S_r × S_r`.
pub fn dual_tensor(r: usize) -> Result<MixedDiscriminantTensor, DiscriminantError> {
    if r > MAX_RANK {
        return Err(DiscriminantError::RankTooLarge(r));
    }
    if r == 0 {
        return Err(DiscriminantError::ShapeMismatch {
            expected: 0,
            got: vec![],
        });
    }
    let mut t = MixedDiscriminantTensor {
        r,
        entries: vec![ZERO; r.pow(2 * r as u32)],
    };
    let w = ONE / linalg::factorial(r);
    let perms = linalg::permutations(r);
    for (sigma, ss) in &perms {
        for (tau, st) in &perms {
            let slots: Vec<(usize, usize)> = (0..r).map(|i| (sigma[i], tau[i])).collect();
            let off = t.offset(&slots);
            t.entries[off] += w * (ss * st) as f64;
        }
    }
    Ok(t)
}

/// `D_W ∘ H^{⊗r} ∘ D*_V` for a map `H: End(C^r) → End(C^r)`.
pub fn double_mixed_discriminant(h: &MatrixMap) -> Result<f64, DiscriminantError> {
    let z = double_mixed_discriminant_complex(h)?;
    let scale = h.max_abs().powi(h.r() as i32).max(1.0);
    if z.im.abs() > IMAG_TOL * scale {
        return Err(DiscriminantError::ImaginaryResidue(z.im));
    }
    Ok(z.re)
}

/// As [`double_mixed_discriminant`], without the reality check.
pub fn double_mixed_discriminant_complex(h: &MatrixMap) -> Result<C64, DiscriminantError> {
    let (n, r) = (h.n(), h.r());
    if n != r {
        return Err(DiscriminantError::NotSquare { n, r });
    }
    if !h.is_adjoint_preserving(1e-12) {
        return Err(DiscriminantError::NotAdjointPreserving(h.adjoint_defect()));
    }
    let dual = dual_tensor(r)?;
    let mut sum = ZERO;
    for (slots, c) in dual.support() {
        let images: Vec<CMat> = slots.iter().map(|&(a, b)| h.image(a, b).clone()).collect();
        sum += c * mixed_discriminant(&images)?;
    }
    Ok(sum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlexandroffReport {
    pub samples: usize,
    pub rank: usize,
    /// Smallest real part observed (`+∞` when `samples == 0`).
    pub min: f64,
    /// Largest imaginary part observed.
    pub max_imag: f64,
}

/// Mixed discriminants of random PSD tuples (random ranks) in dimension `r`.
pub fn alexandroff_check(r: usize, samples: usize, seed: u64) -> AlexandroffReport {
    let vals: Vec<C64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut g = linalg::rng(linalg::derive_seed(seed, s as u64));
            let mats: Vec<CMat> = (0..r)
                .map(|_| {
                    let k = rand::Rng::gen_range(&mut g, 1..=r);
                    linalg::random_psd(&mut g, r, k)
                })
                .collect();
            mixed_discriminant(&mats).expect("square tuple")
        })
        .collect();
    AlexandroffReport {
        samples,
        rank: r,
        min: vals.iter().map(|z| z.re).fold(f64::INFINITY, f64::min),
        max_imag: vals.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[f64]) -> CMat {
        CMat::from_fn(d.len(), d.len(), |i, j| {
            if i == j {
                C64::from(d[i])
            } else {
                ZERO
            }
        })
    }

    #[test]
    fn anchors() {
        let i2 = CMat::identity(2, 2);
        assert_eq!(mixed_discriminant(&[i2.clone(), i2.clone()]).unwrap(), ONE);
        let v = mixed_discriminant(&[diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap();
        assert_eq!(v, C64::from(0.5));
        let a = CMat::from_fn(2, 2, |i, j| C64::from([[2.0, 1.0], [1.0, 1.0]][i][j]));
        assert!((mixed_discriminant(&[a.clone(), a]).unwrap() - ONE).norm() < 1e-15);
        assert!(mixed_discriminant(&[i2]).is_err());
    }

    #[test]
    fn dual_tensor_small() {
        let t = dual_tensor(1).unwrap();
        assert_eq!(t.get(&[(0, 0)]), ONE);
        let t = dual_tensor(2).unwrap();
        assert_eq!(t.support().len(), 4);
        assert_eq!(t.get(&[(0, 0), (1, 1)]), C64::from(0.5));
        assert_eq!(t.get(&[(0, 1), (1, 0)]), C64::from(-0.5));
        assert_eq!(t.get(&[(1, 0), (0, 1)]), C64::from(-0.5));
        assert_eq!(t.get(&[(1, 1), (0, 0)]), C64::from(0.5));
        assert!(matches!(dual_tensor(5), Err(DiscriminantError::RankTooLarge(5))));
    }

    #[test]
    fn double_anchors() {
        let v = double_mixed_discriminant(&MatrixMap::identity(2)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = double_mixed_discriminant(&MatrixMap::transpose(2)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = double_mixed_discriminant(&MatrixMap::conjugation(&diag(&[1.0, 2.0]))).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        assert!(matches!(
            double_mixed_discriminant(&MatrixMap::zero(2, 3)),
            Err(DiscriminantError::NotSquare { .. })
        ));
    }

    #[test]
    fn alexandroff_small() {
        let rep = alexandroff_check(2, 200, 1);
        assert!(rep.min >= -1e-12);
        let z = CMat::zeros(2, 2);
        let v = mixed_discriminant(&[z, CMat::identity(2, 2)]).unwrap();
        assert_eq!(v, ZERO);
    }
}
