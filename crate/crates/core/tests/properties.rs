mod common;

use proptest::prelude::*;
use twotime::qcore::{inner_product, matexp_hermitian, validate, MatrixKind, StateVector, C64};
use twotime::random::{random_hermitian, random_scenario, random_state, RandomScenarioSpec};
use twotime::twostate::{weak_value_between, ProjectiveDecomposition, TwoTimeState};

fn small_config() -> ProptestConfig {
    ProptestConfig {
        cases: 128,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(small_config())]

    #[test]
    fn matexp_is_unitary(seed in any::<u64>(), dim in 2usize..7, theta in -6.0f64..6.0) {
        let mut rng = common::rng(seed);
        let h = random_hermitian(&mut rng, dim, 1.0).unwrap();
        let u = matexp_hermitian(&h, theta).unwrap();
        prop_assert!(validate(u.matrix(), MatrixKind::Unitary, 1e-10));
    }

    #[test]
    fn matexp_group_law(seed in any::<u64>(), dim in 2usize..7, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = common::rng(seed);
        let h = random_hermitian(&mut rng, dim, 1.0).unwrap();
        let joint = matexp_hermitian(&h, a + b).unwrap();
        let split = matexp_hermitian(&h, a).unwrap().then(&matexp_hermitian(&h, b).unwrap()).unwrap();
        prop_assert!(joint.matrix().max_abs_diff(split.matrix()) < 1e-10);
    }

    #[test]
    fn evolution_preserves_norm(seed in any::<u64>(), dim in 2usize..7, theta in -6.0f64..6.0) {
        let mut rng = common::rng(seed);
        let h = random_hermitian(&mut rng, dim, 2.0).unwrap();
        let psi = random_state(&mut rng, dim).unwrap();
        let out = matexp_hermitian(&h, theta).unwrap().apply(&psi).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_product_is_sesquilinear(seed in any::<u64>(), dim in 2usize..7, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let mut rng = common::rng(seed);
        let a = random_state(&mut rng, dim).unwrap();
        let b = random_state(&mut rng, dim).unwrap();
        let c = C64::new(re, im);
        let ab = inner_product(&a, &b).unwrap();
        prop_assert!((ab - inner_product(&b, &a).unwrap().conj()).norm() < 1e-15);
        prop_assert!((inner_product(&a, &b.scale(c).unwrap()).unwrap() - c * ab).norm() < 1e-14);
        prop_assert!((inner_product(&a.scale(c).unwrap(), &b).unwrap() - c.conj() * ab).norm() < 1e-14);
    }

    #[test]
    fn weak_values_of_a_decomposition_sum_to_one(seed in any::<u64>(), frac in 0.0f64..1.0) {
        let mut rng = common::rng(seed);
        let s = random_scenario(&mut rng, RandomScenarioSpec::default()).unwrap();
        let tt = TwoTimeState::new(&s);
        let t = s.t_i() + frac * (s.t_f() - s.t_i());
        prop_assume!(tt.overlap(t).unwrap().norm() > 1e-2);
        let a = random_hermitian(&mut rng, s.dim(), 1.0).unwrap();
        let dec = ProjectiveDecomposition::spectral(&a).unwrap();
        let sum: C64 = dec.projectors().iter().map(|p| tt.weak_value(p, t).unwrap().value).sum();
        prop_assert!((sum - C64::new(1.0, 0.0)).norm() < 1e-10);
        let abl: f64 = tt.abl_probabilities(&dec, t).unwrap().iter().sum();
        prop_assert!((abl - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weak_value_ignores_scalars(seed in any::<u64>(), r1 in 0.1f64..10.0, p1 in 0.0f64..6.3, r2 in 0.1f64..10.0, p2 in 0.0f64..6.3) {
        let mut rng = common::rng(seed);
        let dim = 4;
        let pre = random_state(&mut rng, dim).unwrap();
        let post = random_state(&mut rng, dim).unwrap();
        prop_assume!(inner_product(&post, &pre).unwrap().norm() > 1e-2);
        let a = random_hermitian(&mut rng, dim, 1.0).unwrap();
        let base = weak_value_between(&post, a.matrix(), &pre, 0.0).unwrap();
        let pre2: StateVector = pre.scale(C64::from_polar(r1, p1)).unwrap();
        let post2: StateVector = post.scale(C64::from_polar(r2, p2)).unwrap();
        let scaled = weak_value_between(&post2, a.matrix(), &pre2, 0.0).unwrap();
        prop_assert!((scaled - base).norm() <= 1e-12 * base.norm().max(1.0));
    }

    #[test]
    fn constructed_certainty_satisfies_both_rules(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let case = common::certainty_case(&mut rng);
        let tt = TwoTimeState::new(&case.scenario);
        prop_assert!(tt.reductio_check(&case.projector, case.t).unwrap());
        let dec = ProjectiveDecomposition::binary(case.projector.clone()).unwrap();
        let abl = tt.abl_probabilities(&dec, case.t).unwrap();
        prop_assert!((abl[0] - 1.0).abs() < 1e-10);
        let w = tt.weak_value(&case.observable, case.t).unwrap().value;
        prop_assert!((w - C64::from(case.a)).norm() < 1e-9);
        let report = tt.theorem_crosscheck(&case.observable, case.t).unwrap();
        prop_assert!(!report.violation);
        prop_assert_eq!(report.certain_eigenvalue.map(|e| (e - case.a).abs() < 1e-9), Some(true));
    }

    #[test]
    fn reductio_implies_abl_certainty(seed in any::<u64>(), frac in 0.0f64..1.0) {
        let mut rng = common::rng(seed);
        let s = random_scenario(&mut rng, RandomScenarioSpec::default()).unwrap();
        let tt = TwoTimeState::new(&s);
        let t = s.t_i() + frac * (s.t_f() - s.t_i());
        for k in 0..s.dim() {
            let p = twotime::qcore::make_projector(s.dim(), k).unwrap();
            if tt.reductio_check(&p, t).unwrap() {
                let abl = tt.abl_probabilities(&ProjectiveDecomposition::binary(p).unwrap(), t).unwrap();
                prop_assert!((abl[0] - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn generic_selections_have_no_certainty(seed in any::<u64>(), frac in 0.0f64..1.0) {
        let mut rng = common::rng(seed);
        let s = random_scenario(&mut rng, RandomScenarioSpec::default()).unwrap();
        let tt = TwoTimeState::new(&s);
        let t = s.t_i() + frac * (s.t_f() - s.t_i());
        prop_assume!(tt.overlap(t).unwrap().norm() > 1e-2);
        let p = twotime::random::random_projector(&mut rng, s.dim(), 1).unwrap();
        let a = p.combine(2.0, &p.complement("I-P"), -1.0, "A").unwrap();
        let report = tt.theorem_crosscheck(&a, t).unwrap();
        prop_assert!(!report.violation);
    }
}

proptest! {
    #![proptest_config(small_config())]

    #[test]
    fn collapse_lands_in_the_projector_image(seed in any::<u64>(), u in 0.0f64..1.0, dim in 2usize..7) {
        let mut rng = common::rng(seed);
        let psi = random_state(&mut rng, dim).unwrap();
        let dec = ProjectiveDecomposition::spectral(&random_hermitian(&mut rng, dim, 1.0).unwrap()).unwrap();
        let (k, collapsed) = twotime::mc::born_sample(&psi, &dec, u).unwrap();
        prop_assert!((collapsed.norm_sqr() - 1.0).abs() <= 1e-12);
        let projected = twotime::qcore::apply(dec.projectors()[k].matrix(), &collapsed).unwrap();
        prop_assert!(projected.max_abs_diff(&collapsed) <= 1e-12);
    }
}
