//! Curvature operators, classification and the local metric construction.

use std::f64::consts::PI;

use proptest::prelude::*;

use positools::curvature::*;
use positools::linalg::{self, CMat, CVec, C64, I, ONE};
use positools::opsearch;
use positools::rankmin::Budget;

/// Hermiticity-preserving map with a random Hermitian Choi matrix.
fn random_adjoint_preserving(seed: u64, n: usize, r: usize) -> MatrixMap {
    let mut g = linalg::rng(seed);
    let c = linalg::hermitian_part(&linalg::random_matrix(&mut g, n * r, n * r));
    map_from_choi(n, r, &c)
}

fn eigen_label(m: &CMat, tol: f64) -> &'static str {
    let min = linalg::hermitian_eigenvalues(m)[0];
    if min > tol {
        "positive"
    } else if min >= -tol {
        "semidefinite"
    } else {
        "indefinite"
    }
}

fn quick() -> Budget {
    Budget {
        restarts: 16,
        ..Budget::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_levels_follow_operator_eigenvalues(seed in any::<u64>(), n in 1usize..=3, r in 1usize..=3, mix in 0usize..3) {
        let t = match mix {
            0 => CurvatureTensor::random(n, r, seed),
            1 => random_dual_nakano(n, r, 2, seed),
            _ => random_nakano(n, r, n * r, seed),
        };
        let tol = 1e-9;
        let rep = classify(&t, tol, &quick());
        prop_assert_eq!(rep.nakano.label(), eigen_label(&pe_matrix(&t), tol));
        prop_assert_eq!(rep.dual_nakano.label(), eigen_label(&pestar_matrix(&t), tol));
    }

    #[test]
    fn level_minima_are_monotone(seed in any::<u64>(), n in 2usize..=3, r in 2usize..=3) {
        let t = CurvatureTensor::random(n, r, seed);
        let rep = classify(&t, 1e-9, &quick());
        for levels in [&rep.k_nakano, &rep.k_dual_nakano] {
            for w in levels.windows(2) {
                prop_assert!(w[1].min() <= w[0].min() + 1e-12);
                prop_assert!(w[0].is_nonnegative() || !w[1].is_nonnegative());
            }
        }
        prop_assert_eq!(&rep.griffiths, &rep.k_nakano[0]);
    }

    #[test]
    fn dual_nakano_implies_griffiths(seed in any::<u64>(), n in 1usize..=3, r in 1usize..=3, big_n in 1usize..=4) {
        let t = random_dual_nakano(n, r, big_n, seed);
        let rep = classify(&t, 1e-9, &quick());
        prop_assert!(rep.dual_nakano.is_nonnegative());
        prop_assert!(rep.griffiths.is_nonnegative());
    }

    #[test]
    fn dual_map_is_negative_transpose(seed in any::<u64>(), n in 1usize..=3, r in 1usize..=3) {
        let t = CurvatureTensor::random(n, r, seed);
        let (h, hd) = (he_map(&t), he_map(&dual_curvature(&t)));
        for j in 0..n {
            for k in 0..n {
                prop_assert!(linalg::max_abs_diff(hd.image(j, k), &-h.image(j, k).transpose()) < 1e-15);
            }
        }
        prop_assert_eq!(dual_curvature(&dual_curvature(&t)), t);
    }

    #[test]
    fn factor_residuals_are_small(seed in any::<u64>(), n in 1usize..=3, r in 1usize..=3, big_n in 1usize..=5) {
        let d = factor_dual_nakano(&random_dual_nakano(n, r, big_n, seed)).unwrap();
        prop_assert!(d.residual <= 1e-10);
        prop_assert!(d.kraus.len() <= n * r);
        let k = factor_nakano(&random_nakano(n, r, big_n, seed)).unwrap();
        prop_assert!(k.residual <= 1e-10);
        prop_assert!(k.kraus.len() <= n * r);
    }

    #[test]
    fn verdicts_survive_frame_changes(seed in any::<u64>(), n in 2usize..=3, r in 2usize..=3) {
        let mut g = linalg::rng(seed);
        let t = random_dual_nakano(n, r, 3, seed).add(&CurvatureTensor::random(n, r, seed ^ 1).scale(0.4));
        let (u, v) = (linalg::random_unitary(&mut g, n), linalg::random_unitary(&mut g, r));
        let moved = t.change_frame(&u, &v);
        let a = classify(&t, 1e-9, &Budget::default());
        let b = classify(&moved, 1e-9, &Budget::default());
        prop_assert!((a.nakano.min() - b.nakano.min()).abs() < 1e-10);
        prop_assert!((a.dual_nakano.min() - b.dual_nakano.min()).abs() < 1e-10);
        for (x, y) in a.k_nakano.iter().zip(&b.k_nakano).chain(a.k_dual_nakano.iter().zip(&b.k_dual_nakano)) {
            prop_assert_eq!(x.label(), y.label());
        }
    }

    #[test]
    fn jet_roundtrip_reproduces_map(seed in any::<u64>(), n in 1usize..=3, r in 1usize..=3) {
        let h = random_adjoint_preserving(seed, n, r);
        let t = tensor_from_map(&h).unwrap();
        prop_assert!(he_map(&t).distance(&h) < 1e-14 * (1.0 + h.max_abs()));
    }
}

/// `∂_j ∂̄_k f(0)` by central differences in real coordinates; exact for quadratics up to rounding.
fn wirtinger(f: &dyn Fn(&CVec) -> C64, n: usize, j: usize, k: usize, h: f64) -> C64 {
    let dir = |idx: usize, imag: bool| {
        let mut v = CVec::zeros(n);
        v[idx] = if imag { I } else { ONE } * h;
        v
    };
    let mixed = |a: &CVec, b: &CVec| (f(&(a + b)) - f(&(a - b)) - f(&(b - a)) + f(&(-a - b))) / (4.0 * h * h);
    let (xj, yj, xk, yk) = (dir(j, false), dir(j, true), dir(k, false), dir(k, true));
    (mixed(&xj, &xk) + mixed(&yj, &yk) + I * (mixed(&xj, &yk) - mixed(&yj, &xk))) / 4.0
}

#[test]
fn jet_curvature_matches_finite_differences() {
    for s in 0..50u64 {
        let (n, r) = (1 + (s % 3) as usize, 1 + (s / 3 % 3) as usize);
        let h = random_adjoint_preserving(s, n, r);
        let jet = metric_jet(&h).unwrap();
        for l in 0..r {
            for m in 0..r {
                let f = |z: &CVec| jet.gram(z)[(l, m)];
                for j in 0..n {
                    for k in 0..n {
                        let c = wirtinger(&f, n, j, k, 1e-3) * (-1.0 / (2.0 * PI));
                        let want = h.image(j, k)[(m, l)];
                        assert!((c - want).norm() < 1e-6, "seed {s}: ({j},{k},{l},{m}) {c} vs {want}");
                    }
                }
            }
        }
    }
}

#[test]
fn flat_and_unit_examples() {
    let flat = CurvatureTensor::zero(2, 2);
    assert_eq!(linalg::max_abs(&pe_matrix(&flat)), 0.0);
    assert_eq!(he_map(&flat), MatrixMap::zero(2, 2));
    assert_eq!(tensor_from_map(&MatrixMap::zero(2, 3)).unwrap(), CurvatureTensor::zero(2, 3));
    assert_eq!(random_dual_nakano(2, 2, 0, 1), CurvatureTensor::zero(2, 2));
    assert_eq!(random_nakano(3, 2, 4, 9), random_nakano(3, 2, 4, 9));
    let f = factor_dual_nakano(&flat).unwrap();
    assert!(f.kraus.is_empty() && f.residual == 0.0);
}

#[test]
fn pe_matrix_matches_index_expansion() {
    let mut g = linalg::rng(3);
    let (n, r) = (3, 2);
    let l0 = linalg::random_matrix(&mut g, n, r);
    // single Kraus column: c_{jkλμ} = l^{jμ} conj(l^{kλ})
    let t = CurvatureTensor::from_fn(n, r, |j, k, a, b| l0[(j, b)] * l0[(k, a)].conj()).unwrap();
    let (pe, ps) = (pe_matrix(&t), pestar_matrix(&t));
    for j in 0..n {
        for k in 0..n {
            for a in 0..r {
                for b in 0..r {
                    let c = l0[(j, b)] * l0[(k, a)].conj();
                    assert!((pe[(k * r + b, j * r + a)] - c).norm() < 1e-15);
                    assert!((ps[(k * r + a, j * r + b)] - c).norm() < 1e-15);
                    assert!((he_map(&t).image(j, k)[(b, a)] - c).norm() < 1e-15);
                }
            }
        }
    }
    let f = factor_dual_nakano(&t).unwrap();
    assert_eq!(f.kraus.len(), 1);
    assert!(f.residual <= 1e-10);
}

#[test]
fn factorization_preconditions() {
    // one Nakano column with r ≥ 2 is not dual Nakano
    let t = random_nakano(2, 2, 1, 5);
    assert!(linalg::hermitian_eigenvalues(&pestar_matrix(&t))[0] < -1e-6);
    assert!(matches!(factor_dual_nakano(&t), Err(CurvatureError::NotDualNakano { .. })));
    let t = random_dual_nakano(2, 2, 1, 5);
    assert!(matches!(factor_nakano(&t), Err(CurvatureError::NotNakano { .. })));
}

#[test]
fn duality_swaps_nakano_signs() {
    for s in 0..20 {
        let t = random_nakano(3, 2, 3, s);
        let d = dual_curvature(&t);
        assert!(linalg::max_abs_diff(&pestar_matrix(&d), &-pe_matrix(&t)) < 1e-15);
        assert!(linalg::hermitian_eigenvalues(&pestar_matrix(&d)).iter().all(|&v| v <= 1e-12));
    }
}

#[test]
fn k_positive_family_separates_levels() {
    let budget = Budget::default();
    for k in 1..=2 {
        let h = opsearch::k_positive_map(3, k);
        let dual = classify(&tensor_from_map(&h).unwrap(), 1e-9, &budget);
        assert!(dual.k_dual_nakano[k - 1].is_positive(), "k={k}: {:?}", dual.k_dual_nakano);
        assert!(matches!(dual.k_dual_nakano[k], Verdict::Indefinite { .. }));
        let nak = classify(&tensor_from_map(&h.then_transpose()).unwrap(), 1e-9, &budget);
        assert!(nak.k_nakano[k - 1].is_positive(), "k={k}: {:?}", nak.k_nakano);
        assert!(matches!(nak.k_nakano[k], Verdict::Indefinite { .. }));
    }
}

#[test]
fn decomposable_heuristic_examples() {
    assert!(matches!(
        decomposable_heuristic(&MatrixMap::identity(3), 200),
        Decomposition::Witness { .. }
    ));
    assert!(matches!(
        decomposable_heuristic(&MatrixMap::transpose(3), 200),
        Decomposition::Witness { .. }
    ));
    assert!(matches!(
        decomposable_heuristic(&opsearch::choi3(), 500),
        Decomposition::NotFound { .. }
    ));
}

#[test]
fn built_decomposable_parts_are_certified() {
    let mut g = linalg::rng(21);
    let vs: Vec<CMat> = (0..2).map(|_| linalg::random_matrix(&mut g, 2, 3)).collect();
    let ws: Vec<CMat> = (0..2).map(|_| linalg::random_matrix(&mut g, 2, 3)).collect();
    let cp = build_decomposable(2, 3, &vs, &[]).unwrap();
    let cocp = build_decomposable(2, 3, &[], &ws).unwrap();
    assert!(linalg::hermitian_eigenvalues(&choi_of(&cp))[0] >= -1e-12);
    assert!(linalg::hermitian_eigenvalues(&partial_transpose(&choi_of(&cocp), 2, 3))[0] >= -1e-12);
    let both = build_decomposable(2, 3, &vs, &ws).unwrap();
    assert!(both.distance(&cp.add(&cocp)) < 1e-14);
    assert!(both.is_adjoint_preserving(1e-13));
}
