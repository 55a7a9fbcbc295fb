//! Minimization of a Hermitian form over unit tensors of bounded rank.
//!
//! Tensors `τ ∈ C^n ⊗ C^r` use the basis index `(j, λ) ↦ j·r + λ`. A rank-`k`
//! tensor is written `τ = V Ξᵀ` with `V: n×k`, `Ξ: r×k`. Keeping one factor
//! orthonormal turns the problem for the other factor into a plain Hermitian
//! eigenproblem, so each half-step is an exact minimization and the objective
//! never increases.

use rayon::prelude::*;

use crate::linalg::{self, CMat, CVec, C64};

/// Effort and seeding for the randomized searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once one sweep improves the objective by less than this.
    pub convergence: f64,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iters: 500,
            convergence: 1e-11,
            seed: 0,
        }
    }
}

impl Budget {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// A unit tensor in `C^n ⊗ C^r` stored as an `n × r` matrix, with its value.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub tensor: CMat,
    pub value: f64,
}

impl Witness {
    /// Numerical rank of the tensor (singular values above `1e-10`).
    pub fn rank(&self) -> usize {
        self.tensor
            .clone()
            .singular_values()
            .iter()
            .filter(|&&s| s > 1e-10)
            .count()
    }
}

/// `⟨P τ, τ⟩` for `τ` given as an `n × r` matrix.
pub fn quadratic_value(p: &CMat, tau: &CMat) -> f64 {
    let v = vectorize(tau);
    (v.adjoint() * p * &v)[(0, 0)].re
}

pub fn vectorize(tau: &CMat) -> CVec {
    let (n, r) = tau.shape();
    CVec::from_fn(n * r, |i, _| tau[(i / r, i % r)])
}

pub fn unvectorize(v: &CVec, n: usize, r: usize) -> CMat {
    CMat::from_fn(n, r, |j, l| v[j * r + l])
}

/// Exact minimum over all unit tensors: the smallest eigenvalue.
pub fn minimize_full(p: &CMat, n: usize, r: usize) -> Witness {
    let (value, v) = linalg::min_eigenpair(p);
    Witness {
        tensor: unvectorize(&v, n, r),
        value,
    }
}

/// Smallest value of `⟨P τ, τ⟩` found over unit tensors of rank `≤ k`.
///
/// For `k ≥ min(n, r)` the answer is exact; otherwise it is an upper bound on
/// the true minimum obtained from `budget.restarts` random starts.
pub fn minimize_rank(p: &CMat, n: usize, r: usize, k: usize, budget: &Budget) -> Witness {
    assert_eq!(p.nrows(), n * r, "operator size vs n·r");
    assert!(k >= 1, "rank bound must be positive");
    if k >= n.min(r) {
        return minimize_full(p, n, r);
    }
    let runs: Vec<Witness> = (0..budget.restarts.max(1))
        .into_par_iter()
        .map(|s| {
            let mut g = linalg::rng(linalg::derive_seed(budget.seed, s as u64));
            let v0 = linalg::random_matrix(&mut g, n, k);
            let x0 = linalg::random_matrix(&mut g, r, k);
            alternate(p, n, r, v0, x0, budget)
        })
        .collect();
    runs.into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one restart")
}

fn orthonormal(m: &CMat) -> CMat {
    let k = m.ncols();
    m.clone().qr().q().columns(0, k).into_owned()
}

fn alternate(p: &CMat, n: usize, r: usize, v0: CMat, x0: CMat, budget: &Budget) -> Witness {
    let k = v0.ncols();
    let mut v = v0;
    let mut xi = orthonormal(&x0);
    let mut value = f64::INFINITY;
    for _ in 0..budget.max_iters.max(1) {
        let before = value;
        // V-step, Ξ orthonormal: vec τ = T_Ξ vec V, ‖τ‖ = ‖V‖.
        let t = CMat::from_fn(n * r, n * k, |row, col| {
            let (j, l) = (row / r, row % r);
            let (jj, m) = (col / k, col % k);
            if j == jj {
                xi[(l, m)]
            } else {
                C64::from(0.0)
            }
        });
        let (_, y) = linalg::min_eigenpair(&(t.adjoint() * p * &t));
        v = CMat::from_fn(n, k, |j, m| y[j * k + m]);
        // Ξ-step with V orthonormalized; the Ξ solve absorbs its triangular factor.
        v = orthonormal(&v);
        let t = CMat::from_fn(n * r, r * k, |row, col| {
            let (j, l) = (row / r, row % r);
            let (ll, m) = (col / k, col % k);
            if l == ll {
                v[(j, m)]
            } else {
                C64::from(0.0)
            }
        });
        let (val, y) = linalg::min_eigenpair(&(t.adjoint() * p * &t));
        xi = CMat::from_fn(r, k, |l, m| y[l * k + m]);
        value = val;
        let qr = xi.clone().qr();
        let q = qr.q().columns(0, k).into_owned();
        v = &v * qr.r().transpose();
        xi = q;
        if before - value < budget.convergence {
            break;
        }
    }
    let tensor = &v * xi.transpose();
    let norm = tensor.norm();
    let tensor = tensor / C64::from(norm);
    let value = quadratic_value(p, &tensor);
    Witness { tensor, value }
}
