//! Random states, operators and scenarios for stress tests and property runs.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::qcore::{
    matexp_hermitian, HermitianOperator, SquareMatrix, StateVector, UnitaryOperator, C64,
};
use crate::scenario::{HamiltonianSegment, Scenario, UnitaryEvent};

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Normalized state with i.i.d. complex Gaussian components (Haar-distributed).
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<StateVector> {
    StateVector::normalized((0..dim).map(|_| gaussian_c64(rng)).collect())
}

/// Hermitian matrix `(G + G†)/2` with `G` complex Gaussian, times `scale`.
pub fn random_hermitian<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    scale: f64,
) -> Result<HermitianOperator> {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    let h = (&g + g.adjoint()) * C64::from(0.5 * scale);
    HermitianOperator::new(SquareMatrix::from_matrix(h)?, "H")
}

/// Random unitary `exp(−iH)` with `H` from [`random_hermitian`].
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<UnitaryOperator> {
    let h = random_hermitian(rng, dim, 2.0)?;
    matexp_hermitian(&h, 1.0)
}

/// Orthogonal projector of the given rank onto a random subspace.
pub fn random_projector<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    rank: usize,
) -> Result<HermitianOperator> {
    let u = random_unitary(rng, dim)?;
    let cols = u.matrix().as_matrix().columns(0, rank).into_owned();
    let p = &cols * cols.adjoint();
    // Symmetrize away rounding so the result passes the Hermiticity check.
    let p = (&p + p.adjoint()) * C64::from(0.5);
    HermitianOperator::new(SquareMatrix::from_matrix(p)?, "P")
}

/// Shape of a random scenario.
#[derive(Clone, Copy, Debug)]
pub struct RandomScenarioSpec {
    pub min_dim: usize,
    pub max_dim: usize,
    pub max_segments: usize,
    pub max_events: usize,
}

impl Default for RandomScenarioSpec {
    fn default() -> Self {
        RandomScenarioSpec {
            min_dim: 2,
            max_dim: 6,
            max_segments: 3,
            max_events: 2,
        }
    }
}

/// Random piecewise-constant timeline on `[0, t_f]` with `t_f ∈ [0.5, 3]`,
/// random events and Haar-random selections.
pub fn random_scenario<R: Rng + ?Sized>(rng: &mut R, spec: RandomScenarioSpec) -> Result<Scenario> {
    let dim = rng.random_range(spec.min_dim..=spec.max_dim);
    let t_f: f64 = rng.random_range(0.5..3.0);
    let n_seg = rng.random_range(1..=spec.max_segments.max(1));
    let mut cuts: Vec<f64> = (1..n_seg).map(|_| rng.random_range(0.0..t_f)).collect();
    cuts.sort_by(f64::total_cmp);
    let mut bounds = vec![0.0];
    bounds.extend(cuts.into_iter().filter(|&c| c > 0.0));
    bounds.push(t_f);
    bounds.dedup();

    let mut b = Scenario::builder(dim, 0.0, t_f);
    for w in bounds.windows(2) {
        if w[1] > w[0] {
            b = b.segment(HamiltonianSegment::new(
                w[0],
                w[1],
                random_hermitian(rng, dim, 1.0)?,
            )?);
        }
    }
    let n_ev = rng.random_range(0..=spec.max_events);
    for k in 0..n_ev {
        b = b.event(UnitaryEvent {
            time: rng.random_range(0.0..=t_f),
            unitary: random_unitary(rng, dim)?,
            label: format!("event{k}"),
        });
    }
    b.pre(random_state(rng, dim)?)
        .post(random_state(rng, dim)?)
        .build()
}
