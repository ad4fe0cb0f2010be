mod common;

use std::f64::consts::PI;

use rand::Rng;
use twotime::pointer::{
    chained_weak_measurement, estimate_weak_value, g_scaling_study, prepare_pointer, weak_couple,
    CouplingConfig, PointerGrid, DEFAULT_G, DEFAULT_SIGMA,
};
use twotime::qcore::{make_projector, C64};
use twotime::random::{random_hermitian, random_state};
use twotime::scenario::{solenoid_event, three_boxes_preset};
use twotime::twostate::TwoTimeState;

#[test]
fn coupling_preserves_joint_norm() {
    let mut rng = common::rng(31);
    let ptr = prepare_pointer(PointerGrid::default(), DEFAULT_SIGMA).unwrap();
    for _ in 0..20 {
        let dim = rng.random_range(2..=6);
        let sys = random_state(&mut rng, dim).unwrap();
        let a = random_hermitian(&mut rng, dim, 1.0).unwrap();
        let cfg = CouplingConfig {
            g: rng.random_range(-0.5..0.5),
            observable: a,
            time: 0.0,
        };
        let joint = weak_couple(&sys, &ptr, &cfg).unwrap();
        assert!((joint.norm() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn back_action_is_second_order() {
    let mut rng = common::rng(32);
    let ptr = prepare_pointer(PointerGrid::default(), DEFAULT_SIGMA).unwrap();
    for g in [0.01, 0.03, 0.1] {
        for _ in 0..10 {
            let dim = rng.random_range(2..=6);
            let sys = random_state(&mut rng, dim).unwrap();
            let a = random_hermitian(&mut rng, dim, 1.0).unwrap();
            let r = a.spectrum().unwrap().radius();
            let cfg = CouplingConfig {
                g,
                observable: a,
                time: 0.0,
            };
            let fidelity = weak_couple(&sys, &ptr, &cfg)
                .unwrap()
                .system_fidelity(&sys)
                .unwrap();
            let bound = 1.0 - 4.0 * (g * r / DEFAULT_SIGMA).powi(2);
            assert!(fidelity >= bound, "g={g} fidelity {fidelity} < {bound}");
            assert!(fidelity <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn grid_doubling_leaves_estimates_unchanged() {
    let s = three_boxes_preset(1.0).unwrap();
    let t2 = PI / 4.0;
    let coarse = PointerGrid::default();
    let fine = PointerGrid::new(2 * coarse.points(), coarse.length()).unwrap();
    for a in common::preset_observables() {
        let e1 = estimate_weak_value(&s, &a, t2, DEFAULT_G, coarse, DEFAULT_SIGMA).unwrap();
        let e2 = estimate_weak_value(&s, &a, t2, DEFAULT_G, fine, DEFAULT_SIGMA).unwrap();
        assert!((e1.estimate - e2.estimate).norm() <= 1e-6, "{}", a.label());
    }
}

#[test]
fn box_readouts() {
    let s = three_boxes_preset(1.0).unwrap();
    let p2 = make_projector(3, 1).unwrap();
    let p3 = make_projector(3, 2).unwrap();
    for g in [0.01, 0.005] {
        let e =
            estimate_weak_value(&s, &p2, 0.0, g, PointerGrid::default(), DEFAULT_SIGMA).unwrap();
        assert!((e.estimate - C64::new(-1.0, 0.0)).norm() <= 5.0 * g);
        assert!(e.weak_regime);
    }
    for t in [0.0, 0.3, PI / 4.0, 2.0, PI] {
        let e = estimate_weak_value(&s, &p3, t, DEFAULT_G, PointerGrid::default(), DEFAULT_SIGMA)
            .unwrap();
        assert!((e.estimate - C64::new(1.0, 0.0)).norm() <= 5.0 * DEFAULT_G);
    }
}

#[test]
fn flipped_modular_momentum_reads_plus_two() {
    let s = three_boxes_preset(1.0).unwrap();
    let t2 = PI / 4.0;
    let flipped = s.with_event(solenoid_event(3, 0, t2).unwrap()).unwrap();
    let sy = &common::preset_observables()[4];
    let e = estimate_weak_value(
        &flipped,
        sy,
        t2,
        DEFAULT_G,
        PointerGrid::default(),
        DEFAULT_SIGMA,
    )
    .unwrap();
    assert!((e.estimate - C64::new(2.0, 0.0)).norm() <= 5.0 * DEFAULT_G);
    assert!((e.richardson - C64::new(2.0, 0.0)).norm() <= 1e-3);
}

#[test]
fn error_shrinks_with_coupling() {
    let s = three_boxes_preset(1.0).unwrap();
    let gs = [1e-2, 5e-3, 2.5e-3];
    for (a, t) in [(4usize, PI / 4.0), (3, 0.0), (1, 0.0)] {
        let obs = &common::preset_observables()[a];
        let study =
            g_scaling_study(&s, obs, t, &gs, PointerGrid::default(), DEFAULT_SIGMA).unwrap();
        assert!(study.monotone, "{study:?}");
        for (g, e) in gs.iter().zip(&study.errors) {
            assert!(*e <= study.fitted_c * g + 1e-15);
        }
        assert!(study.fitted_c < 1.0);
    }
}

#[test]
fn chained_pointers_track_each_time() {
    let s = three_boxes_preset(1.0).unwrap();
    let tt = TwoTimeState::new(&s);
    let sched = *s.schedule().unwrap();
    let obs = common::preset_observables();
    for a in &obs {
        let couplings: Vec<CouplingConfig> = [sched.t1, sched.t2, sched.t3]
            .iter()
            .map(|&t| CouplingConfig {
                g: DEFAULT_G,
                observable: a.clone(),
                time: t,
            })
            .collect();
        let out = chained_weak_measurement(&s, &couplings, PointerGrid::default(), DEFAULT_SIGMA)
            .unwrap();
        for r in out {
            let w = tt.weak_value(a, r.t).unwrap().value;
            assert!(
                (r.estimate - w).norm() <= 10.0 * DEFAULT_G,
                "{} at {}",
                r.observable,
                r.t
            );
        }
    }
}
