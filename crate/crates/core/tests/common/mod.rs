#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twotime::qcore::{inner_product, make_projector, HermitianOperator, StateVector, C64};
use twotime::random::{random_projector, random_scenario, random_state, RandomScenarioSpec};
use twotime::scenario::{pauli_embed, PauliAxis, Scenario};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Observables of the three-boxes preset, in a fixed order.
pub fn preset_observables() -> Vec<HermitianOperator> {
    vec![
        make_projector(3, 0).unwrap(),
        make_projector(3, 1).unwrap(),
        make_projector(3, 2).unwrap(),
        pauli_embed(PauliAxis::X, 3, (0, 1)).unwrap(),
        pauli_embed(PauliAxis::Y, 3, (0, 1)).unwrap(),
        pauli_embed(PauliAxis::Z, 3, (0, 1)).unwrap(),
        pauli_embed(PauliAxis::Identity, 3, (0, 1)).unwrap(),
    ]
}

/// Removes the component of `v` along `chi` and normalizes.
pub fn orthogonalize(v: &StateVector, chi: &StateVector) -> Option<StateVector> {
    let cc = chi.norm_sqr();
    let coeff = if cc > 0.0 {
        inner_product(chi, v).unwrap() / cc
    } else {
        C64::new(0.0, 0.0)
    };
    let amps: Vec<C64> = v
        .amps()
        .iter()
        .zip(chi.amps())
        .map(|(a, c)| a - coeff * c)
        .collect();
    let out = StateVector::new(amps).ok()?;
    (out.norm() > 1e-6).then(|| out.normalize().unwrap())
}

/// A scenario whose post-selection kills the complementary branch of `p` at
/// `t`, so that `p` is found with certainty there.
pub struct CertaintyCase {
    pub scenario: Scenario,
    pub projector: HermitianOperator,
    /// Dichotomic observable `a·P + b·(I − P)`.
    pub observable: HermitianOperator,
    pub a: f64,
    pub b: f64,
    pub t: f64,
}

pub fn certainty_case<R: Rng>(rng: &mut R) -> CertaintyCase {
    loop {
        let s = random_scenario(rng, RandomScenarioSpec::default()).unwrap();
        let dim = s.dim();
        let rank = rng.random_range(1..dim);
        let p = random_projector(rng, dim, rank).unwrap();
        let t = rng.random_range(s.t_i()..=s.t_f());
        let psi = s.forward_propagator(t).unwrap().apply(s.pre()).unwrap();
        let complement = twotime::qcore::apply(p.complement("I-P").matrix(), &psi).unwrap();
        let chi = s
            .propagator(t, s.t_f())
            .unwrap()
            .apply(&complement)
            .unwrap();
        let Some(post) = orthogonalize(&random_state(rng, dim).unwrap(), &chi) else {
            continue;
        };
        let Ok(s) = s.with_selections(s.pre().clone(), post) else {
            continue;
        };
        let overlap = inner_product(
            s.post(),
            &s.propagator(s.t_i(), s.t_f())
                .unwrap()
                .apply(s.pre())
                .unwrap(),
        )
        .unwrap();
        if overlap.norm() < 1e-3 {
            continue;
        }
        let a: f64 = rng.random_range(-3.0..3.0);
        let mut b: f64 = rng.random_range(-3.0..3.0);
        if (a - b).abs() < 0.1 {
            b = a + 1.0;
        }
        let observable = p.combine(a, &p.complement("I-P"), b, "A").unwrap();
        return CertaintyCase {
            scenario: s,
            projector: p,
            observable,
            a,
            b,
            t,
        };
    }
}
