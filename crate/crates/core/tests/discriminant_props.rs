//! Mixed discriminants, the dual tensor and the double mixed discriminant.

use proptest::prelude::*;

use positools::charclass::chern_forms;
use positools::curvature::{build_decomposable, he_map, random_dual_nakano, MatrixMap};
use positools::discriminant::*;
use positools::linalg::{self, CMat, C64, ONE, ZERO};
use positools::multilinear::{restrict, ComplexPlane};

fn random_mats(seed: u64, r: usize) -> Vec<CMat> {
    let mut g = linalg::rng(seed);
    (0..r).map(|_| linalg::random_matrix(&mut g, r, r)).collect()
}

/// `r!·D(A_1..A_r) = Σ_{S ⊆ [r]} (−1)^{r−|S|} det(Σ_{i∈S} A_i)`.
fn polarization(mats: &[CMat]) -> C64 {
    let r = mats.len();
    let mut acc = ZERO;
    for mask in 0u32..(1 << r) {
        let mut s = CMat::zeros(r, r);
        for (i, m) in mats.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s += m;
            }
        }
        let sign = if (r - mask.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
        acc += linalg::det(&s) * sign;
    }
    acc / linalg::factorial(r)
}

fn random_cp(seed: u64, r: usize, kraus: usize) -> MatrixMap {
    let mut g = linalg::rng(seed);
    let vs: Vec<CMat> = (0..kraus).map(|_| linalg::random_matrix(&mut g, r, r)).collect();
    build_decomposable(r, r, &vs, &[]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn formulas_agree_with_polarization(seed in any::<u64>(), r in 1usize..=4) {
        let mats = random_mats(seed, r);
        let a = mixed_discriminant(&mats).unwrap();
        let b = mixed_discriminant_expanded(&mats).unwrap();
        let c = polarization(&mats);
        let scale = mats.iter().map(linalg::max_abs).product::<f64>().max(1.0);
        prop_assert!((a - b).norm() < 1e-12 * scale);
        prop_assert!((a - c).norm() < 1e-11 * scale);
    }

    #[test]
    fn diagonal_tuple_gives_determinant(seed in any::<u64>(), r in 1usize..=4) {
        let a = random_mats(seed, r).remove(0);
        let d = mixed_discriminant(&vec![a.clone(); r]).unwrap();
        prop_assert!((d - linalg::det(&a)).norm() < 1e-11 * (1.0 + linalg::det(&a).norm()));
        let t = dual_tensor(r).unwrap();
        prop_assert!((t.contract(&vec![a.clone(); r]).unwrap() - linalg::det(&a)).norm() < 1e-10 * (1.0 + linalg::det(&a).norm()));
    }

    #[test]
    fn dual_tensor_pairs_to_mixed_discriminant(seed in any::<u64>(), r in 1usize..=4) {
        let mats = random_mats(seed, r);
        let t = dual_tensor(r).unwrap();
        let a = t.contract(&mats).unwrap();
        let b = mixed_discriminant(&mats).unwrap();
        prop_assert!((a - b).norm() < 1e-11 * (1.0 + b.norm()));
    }

    #[test]
    fn symmetric_in_arguments(seed in any::<u64>(), r in 2usize..=4, swap in 0usize..3) {
        let mut mats = random_mats(seed, r);
        let a = mixed_discriminant(&mats).unwrap();
        mats.swap(swap % r, (swap + 1) % r);
        prop_assert!((a - mixed_discriminant(&mats).unwrap()).norm() < 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn homogeneous_of_degree_r(seed in any::<u64>(), r in 1usize..=3, c in 0.1f64..3.0) {
        let h = random_cp(seed, r, 2);
        let base = double_mixed_discriminant(&h).unwrap();
        let scaled = double_mixed_discriminant(&h.scale(C64::from(c))).unwrap();
        prop_assert!((scaled - c.powi(r as i32) * base).abs() < 1e-10 * (1.0 + base.abs()) * c.powi(r as i32).max(1.0));
    }

    #[test]
    fn unitary_invariant_and_det_covariant(seed in any::<u64>(), r in 1usize..=3) {
        let h = random_cp(seed, r, 3);
        let mut g = linalg::rng(seed ^ 0x99);
        let (u, v) = (linalg::random_unitary(&mut g, r), linalg::random_unitary(&mut g, r));
        let base = double_mixed_discriminant(&h).unwrap();
        let moved = double_mixed_discriminant(&h.conjugate_by(&u, &v)).unwrap();
        prop_assert!((moved - base).abs() < 1e-10 * (1.0 + base.abs()));
        let (a, b) = (linalg::random_matrix(&mut g, r, r), linalg::random_matrix(&mut g, r, r));
        let factor = (linalg::det(&a).norm() * linalg::det(&b).norm()).powi(2);
        let general = double_mixed_discriminant(&h.conjugate_by(&a, &b)).unwrap();
        prop_assert!((general - factor * base).abs() < 1e-9 * (1.0 + factor * base.abs()));
    }

    #[test]
    fn completely_positive_maps_are_nonnegative(seed in any::<u64>(), r in 1usize..=4, kraus in 1usize..=3) {
        let h = random_cp(seed, r, kraus);
        prop_assert!(double_mixed_discriminant(&h).unwrap() >= -1e-10);
    }
}

#[test]
fn dual_tensor_expansions() {
    let t = dual_tensor(1).unwrap();
    assert_eq!(t.support(), vec![(vec![(0, 0)], ONE)]);
    let t = dual_tensor(2).unwrap();
    // ½[E11⊗E22 − E12⊗E21 − E21⊗E12 + E22⊗E11] by enumeration of S_2 × S_2
    let mut want = vec![
        (vec![(0, 0), (1, 1)], 0.5),
        (vec![(0, 1), (1, 0)], -0.5),
        (vec![(1, 0), (0, 1)], -0.5),
        (vec![(1, 1), (0, 0)], 0.5),
    ];
    want.sort_by(|a, b| a.0.cmp(&b.0));
    let got: Vec<(Vec<(usize, usize)>, f64)> = t.support().into_iter().map(|(s, c)| (s, c.re)).collect();
    assert_eq!(got, want);
    let t3 = dual_tensor(3).unwrap();
    for (slots, c) in t3.support() {
        for p in linalg::permutations(3) {
            let moved: Vec<(usize, usize)> = p.0.iter().map(|&i| slots[i]).collect();
            assert_eq!(t3.get(&moved), c);
        }
    }
    assert!(matches!(dual_tensor(5), Err(DiscriminantError::RankTooLarge(5))));
}

#[test]
fn double_mixed_discriminant_anchors() {
    assert!((double_mixed_discriminant(&MatrixMap::identity(2)).unwrap() - 1.0).abs() < 1e-12);
    assert!((double_mixed_discriminant(&MatrixMap::transpose(2)).unwrap() - 1.0).abs() < 1e-12);
    let g = CMat::from_diagonal(&linalg::CVec::from_vec(vec![ONE, C64::from(2.0)]));
    assert!((double_mixed_discriminant(&MatrixMap::conjugation(&g)).unwrap() - 4.0).abs() < 1e-12);
    assert!(matches!(
        double_mixed_discriminant(&MatrixMap::zero(2, 3)),
        Err(DiscriminantError::NotSquare { .. })
    ));
    let skew = MatrixMap::identity(2).scale(linalg::I);
    assert!(matches!(
        double_mixed_discriminant(&skew),
        Err(DiscriminantError::NotAdjointPreserving(_))
    ));
}

#[test]
fn plane_value_matches_restricted_top_chern_form() {
    for s in 0..20u64 {
        for (n, r) in [(2, 2), (3, 2), (3, 3)] {
            let t = random_dual_nakano(n, r, 3, s);
            let mut g = linalg::rng(s + 1000);
            let plane = ComplexPlane::random(&mut g, n, r);
            let via_forms = restrict(&chern_forms(&t)[r], &plane).unwrap();
            let dmd = double_mixed_discriminant(&he_map(&t).restrict_domain(plane.basis())).unwrap();
            let via_dmd = linalg::factorial(r) * dmd;
            assert!((via_forms - via_dmd).abs() < 1e-9 * (1.0 + via_forms.abs()), "s={s} n={n} r={r}");
            assert!(dmd >= -1e-10);
        }
    }
}

#[test]
fn alexandroff_minima() {
    for r in 1..=3 {
        let rep = alexandroff_check(r, 2000, 42 + r as u64);
        assert!(rep.min >= -1e-12, "r={r}: {}", rep.min);
        assert!(rep.max_imag < 1e-12);
    }
    let i2 = CMat::identity(2, 2);
    let zero = CMat::zeros(2, 2);
    // D(0, I) = ½(tr 0 · tr I − tr 0) = 0; D(diag(1,0), I) = ½(1·2 − 1) = ½
    assert_eq!(mixed_discriminant(&[zero, i2.clone()]).unwrap(), ZERO);
    let e11 = CMat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { ONE } else { ZERO });
    assert!((mixed_discriminant(&[e11, i2]).unwrap() - 0.5).norm() < 1e-15);
}
