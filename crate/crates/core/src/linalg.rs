//! Small dense helpers shared by the numeric modules.
//!
//! Everything here works on `nalgebra::DMatrix<Complex64>`; the sizes involved
//! (at most a few hundred rows) never justify anything fancier.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Powers of `i`, exact.
pub fn i_pow(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

/// Seeded generator used everywhere; ChaCha8 gives the same stream on every platform.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-task seed derived from a base seed and an index (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard complex Gaussian (E|z|² = 1).
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    // Column-major fill order is part of the reproducibility contract.
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVec {
    loop {
        let v = CVec::from_fn(dim, |_, _| gaussian(rng));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / C64::from(norm);
        }
    }
}

/// Haar-ish random unitary: QR of a Gaussian matrix with the phase fix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let g = random_matrix(rng, dim, dim);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random positive semidefinite matrix `G G*` with `G` of size `dim × rank`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMat {
    let g = random_matrix(rng, dim, rank);
    &g * g.adjoint()
}

/// Eigenvalues (ascending) and matching unit eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let h = hermitian_part(m);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Smallest eigenvalue with its eigenvector.
pub fn min_eigenpair(m: &CMat) -> (f64, CVec) {
    let (vals, vecs) = hermitian_eigen(m);
    (vals[0], vecs.column(0).into_owned())
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::from(0.5)
}

/// Largest entry modulus of `a - a*`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &CMat) -> C64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "determinant of a non-square matrix");
    match n {
        0 => ONE,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => m.clone().lu().determinant(),
    }
}

/// Orthonormal basis of the orthogonal complement of the column span of `a`
/// (columns of `a` assumed orthonormal).
pub fn orthogonal_complement(a: &CMat) -> CMat {
    let n = a.nrows();
    let k = a.ncols();
    let mut basis: Vec<CVec> = (0..k).map(|j| a.column(j).into_owned()).collect();
    let mut out = Vec::with_capacity(n - k);
    for e in 0..n {
        let mut v = CVec::zeros(n);
        v[e] = ONE;
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            let v = v / C64::from(norm);
            basis.push(v.clone());
            out.push(v);
            if out.len() == n - k {
                break;
            }
        }
    }
    if out.is_empty() {
        return CMat::zeros(n, 0);
    }
    CMat::from_columns(&out)
}

/// Gram–Schmidt on columns; `None` when they are numerically dependent.
pub fn orthonormalize_columns(a: &CMat) -> Option<CMat> {
    let mut cols: Vec<CVec> = Vec::with_capacity(a.ncols());
    for j in 0..a.ncols() {
        let mut v = a.column(j).into_owned();
        for _ in 0..2 {
            for b in &cols {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        let scale = a.column(j).norm().max(1.0);
        if norm <= 1e-10 * scale {
            return None;
        }
        cols.push(v / C64::from(norm));
    }
    Some(CMat::from_columns(&cols))
}

/// Unitary whose first column is the unit vector `a`.
pub fn unitary_with_first_column(a: &CVec) -> CMat {
    let first = CMat::from_columns(std::slice::from_ref(a));
    let rest = orthogonal_complement(&first);
    let mut cols = vec![a.clone()];
    cols.extend(rest.column_iter().map(|c| c.into_owned()));
    CMat::from_columns(&cols)
}

/// Strictly increasing `k`-subsets of `0..n` as bitmasks, lexicographic in their index lists.
pub fn subsets(n: usize, k: usize) -> Vec<u16> {
    fn rec(start: usize, n: usize, k: usize, mask: u16, out: &mut Vec<u16>) {
        if k == 0 {
            out.push(mask);
            return;
        }
        for i in start..n {
            if n - i < k {
                break;
            }
            rec(i + 1, n, k - 1, mask | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, 0, &mut out);
    }
    out
}

pub fn mask_indices(mask: u16) -> Vec<usize> {
    (0..16).filter(|&i| mask & (1 << i) != 0).collect()
}

pub fn indices_mask(idx: &[usize]) -> u16 {
    idx.iter().fold(0u16, |m, &i| m | (1 << i))
}

/// All permutations of `0..n` (lexicographic) with their signs.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut perms = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut perms);
    perms
        .into_iter()
        .map(|p| {
            let s = permutation_sign(&p);
            (p, s)
        })
        .collect()
}

/// Sign of a sequence of distinct integers relative to its sorted order.
pub fn permutation_sign(p: &[usize]) -> i32 {
    let mut inversions = 0;
    for a in 0..p.len() {
        for b in a + 1..p.len() {
            if p[a] > p[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Deterministic pairwise sum of a slice of values.
pub fn pairwise_sum<T: Clone>(items: &[T], add: &impl Fn(&T, &T) -> T, zero: &T) -> T {
    match items.len() {
        0 => zero.clone(),
        1 => items[0].clone(),
        len => {
            let (a, b) = items.split_at(len / 2);
            add(&pairwise_sum(a, add, zero), &pairwise_sum(b, add, zero))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_lexicographic() {
        let s: Vec<Vec<usize>> = subsets(4, 2).into_iter().map(mask_indices).collect();
        assert_eq!(
            s,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(subsets(3, 0), vec![0]);
        assert!(subsets(2, 3).is_empty());
    }

    #[test]
    fn permutation_signs() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p.iter().map(|(_, s)| s).sum::<i32>(), 0);
        assert_eq!(permutation_sign(&[2, 0, 1]), 1);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1);
    }

    #[test]
    fn det_matches_lu() {
        let mut g = rng(3);
        for n in 1..6 {
            let m = random_matrix(&mut g, n, n);
            let lu = m.clone().lu().determinant();
            assert!((det(&m) - lu).norm() < 1e-12 * (1.0 + lu.norm()));
        }
    }

    #[test]
    fn unitary_first_column() {
        let mut g = rng(5);
        let a = random_unit_vector(&mut g, 4);
        let u = unitary_with_first_column(&a);
        assert!(max_abs_diff(&(u.adjoint() * &u), &CMat::identity(4, 4)) < 1e-12);
        assert!((u.column(0) - &a).norm() < 1e-14);
    }

    #[test]
    fn eigen_sorted() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![
            C64::from(3.0),
            C64::from(-1.0),
            C64::from(2.0),
        ]));
        let (v, _) = hermitian_eigen(&m);
        assert_eq!(v, vec![-1.0, 2.0, 3.0]);
    }
}
