//! Two-time states: a pre-selected ket propagated forward from `t_i` and a
//! post-selected state propagated backward from `t_f`.
//!
//! Between the boundaries the pair determines weak values
//! `A_w(t) = ⟨φ(t)|A|ψ(t)⟩ / ⟨φ(t)|ψ(t)⟩` and the ABL conditional
//! probabilities of an intermediate projective measurement,
//! `P(k) = |⟨φ(t)|Π_k|ψ(t)⟩|² / Σ_j |⟨φ(t)|Π_j|ψ(t)⟩|²`, where the sum runs
//! over the decomposition actually measured.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qcore::{
    inner_product, HermitianOperator, SquareMatrix, StateVector, ALGEBRAIC_TOL, C64,
    EIGEN_CLUSTER_TOL,
};
use crate::scenario::Scenario;

/// Below this `|⟨φ|ψ⟩|/(‖φ‖‖ψ‖)` the weak value is reported as undefined.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// ABL numerators below this are treated as structurally zero.
pub const ABL_FLOOR: f64 = 1e-24;
/// Tolerance for "weak value equals an eigenvalue" and "ABL probability is 1".
pub const CERTAINTY_TOL: f64 = 1e-9;
/// Largest surviving complement amplitude accepted by [`TwoTimeState::reductio_check`].
pub const REDUCTIO_TOL: f64 = 1e-10;

/// Weak value of one observable at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakValueSample {
    pub t: f64,
    pub observable_label: String,
    pub value: C64,
}

/// Complete set of mutually orthogonal projectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveDecomposition {
    projectors: Vec<HermitianOperator>,
}

impl ProjectiveDecomposition {
    /// Validates idempotence, mutual orthogonality and completeness within
    /// `1e-12`. Labels are taken from the projectors.
    pub fn new(projectors: Vec<HermitianOperator>) -> Result<Self> {
        let dim = projectors
            .first()
            .ok_or_else(|| Error::Validation("empty decomposition".into()))?
            .dim();
        let mut sum = SquareMatrix::zeros(dim);
        for (k, p) in projectors.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::Dimension(format!(
                    "projector '{}' has dimension {}, expected {dim}",
                    p.label(),
                    p.dim()
                )));
            }
            if !p.is_projector(ALGEBRAIC_TOL) {
                return Err(Error::Validation(format!(
                    "'{}' is not idempotent",
                    p.label()
                )));
            }
            for q in &projectors[k + 1..] {
                let prod = p.matrix().mul(q.matrix())?;
                if prod.max_abs() > ALGEBRAIC_TOL {
                    return Err(Error::Validation(format!(
                        "'{}' and '{}' are not orthogonal",
                        p.label(),
                        q.label()
                    )));
                }
            }
            sum = sum.add(p.matrix())?;
        }
        if sum.max_abs_diff(&SquareMatrix::identity(dim)) > ALGEBRAIC_TOL {
            return Err(Error::Validation(
                "projectors do not sum to the identity".into(),
            ));
        }
        Ok(ProjectiveDecomposition { projectors })
    }

    /// One projector per basis state: `{P1, …, Pd}`.
    pub fn boxes(dim: usize) -> Result<Self> {
        Self::new(
            (0..dim)
                .map(|k| crate::qcore::make_projector(dim, k))
                .collect::<Result<_>>()?,
        )
    }

    /// `{P, I − P}`; the complement is labelled `not <label>`.
    pub fn binary(p: HermitianOperator) -> Result<Self> {
        let rest = p.complement(format!("not {}", p.label()));
        Self::new(vec![p, rest])
    }

    /// The given projectors plus `I − Σ P` (labelled `rest`) when they are not
    /// already complete.
    pub fn with_rest(projectors: Vec<HermitianOperator>) -> Result<Self> {
        let dim = projectors
            .first()
            .ok_or_else(|| Error::Validation("empty decomposition".into()))?
            .dim();
        let mut sum = SquareMatrix::zeros(dim);
        for p in &projectors {
            sum = sum.add(p.matrix())?;
        }
        let rest = SquareMatrix::identity(dim).sub(&sum)?;
        let mut all = projectors;
        if rest.max_abs() > ALGEBRAIC_TOL {
            all.push(HermitianOperator::new(rest, "rest")?);
        }
        Self::new(all)
    }

    /// Spectral projectors of `a`, labelled `<label>=<eigenvalue>`.
    pub fn spectral(a: &HermitianOperator) -> Result<Self> {
        let spaces = a.spectrum()?.eigenspaces(EIGEN_CLUSTER_TOL);
        let projectors = spaces
            .into_iter()
            .map(|(value, p)| {
                // Symmetrize away rounding from V·V†.
                let p = p.add(&p.adjoint())?.scale(C64::from(0.5))?;
                HermitianOperator::new(p, format!("{}={}", a.label(), clean_zero(value)))
            })
            .collect::<Result<_>>()?;
        Self::new(projectors)
    }

    pub fn projectors(&self) -> &[HermitianOperator] {
        &self.projectors
    }

    pub fn labels(&self) -> Vec<String> {
        self.projectors
            .iter()
            .map(|p| p.label().to_string())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }
}

fn clean_zero(x: f64) -> f64 {
    if x.abs() < EIGEN_CLUSTER_TOL {
        0.0
    } else {
        x
    }
}

/// `⟨post|A|pre⟩ / ⟨post|pre⟩`; `t` only labels the error.
pub fn weak_value_between(
    post: &StateVector,
    a: &SquareMatrix,
    pre: &StateVector,
    t: f64,
) -> Result<C64> {
    let overlap = inner_product(post, pre)?;
    let scale = post.norm() * pre.norm();
    if overlap.norm().is_nan() || overlap.norm() < DEGENERACY_TOL * scale {
        return Err(Error::OrthogonalSelection {
            t,
            overlap: overlap.norm() / scale,
        });
    }
    let a_pre = crate::qcore::apply(a, pre)?;
    Ok(inner_product(post, &a_pre)? / overlap)
}

/// Classification of an observable at one time.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorClass {
    /// The weak value is an eigenvalue whose ABL probability is 1.
    Deterministic {
        eigenvalue: f64,
    },
    /// The weak value lies outside the spectrum (complex or out of range).
    Anomalous,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub label: String,
    pub weak_value: C64,
    pub class: OperatorClass,
}

/// Both directions of the weak/strong equivalence for a dichotomic operator.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoremReport {
    pub label: String,
    pub t: f64,
    /// The two distinct eigenvalues, ascending.
    pub eigenvalues: [f64; 2],
    /// ABL probabilities of the two eigenvalues.
    pub abl: [f64; 2],
    /// Eigenvalue with ABL probability 1, if any.
    pub certain_eigenvalue: Option<f64>,
    pub weak_value: C64,
    /// Eigenvalue equal to the weak value, if any.
    pub matched_eigenvalue: Option<f64>,
    /// `|A_w − λ|` for the eigenvalue closest to the weak value.
    pub residual: f64,
    /// Set when certainty and weak-value agreement disagree.
    pub violation: bool,
}

/// Pre-selected ket at `t_i` and post-selected state at `t_f`, bound to a
/// scenario timeline.
#[derive(Clone, Debug)]
pub struct TwoTimeState<'s> {
    scenario: &'s Scenario,
    pre: StateVector,
    post: StateVector,
}

impl<'s> TwoTimeState<'s> {
    /// Uses the scenario's own selections.
    pub fn new(scenario: &'s Scenario) -> Self {
        TwoTimeState {
            scenario,
            pre: scenario.pre().clone(),
            post: scenario.post().clone(),
        }
    }

    /// Overrides the selections; both must be normalized within `1e-12`.
    pub fn with_states(
        scenario: &'s Scenario,
        pre: StateVector,
        post: StateVector,
    ) -> Result<Self> {
        for (name, s) in [("pre", &pre), ("post", &post)] {
            if s.dim() != scenario.dim() {
                return Err(Error::Dimension(format!(
                    "{name} state has dimension {}, scenario has {}",
                    s.dim(),
                    scenario.dim()
                )));
            }
            if !s.is_normalized(ALGEBRAIC_TOL) {
                return Err(Error::Validation(format!("{name} state is not normalized")));
            }
        }
        Ok(TwoTimeState {
            scenario,
            pre,
            post,
        })
    }

    pub fn scenario(&self) -> &'s Scenario {
        self.scenario
    }

    pub fn pre(&self) -> &StateVector {
        &self.pre
    }

    pub fn post(&self) -> &StateVector {
        &self.post
    }

    pub fn t_i(&self) -> f64 {
        self.scenario.t_i()
    }

    pub fn t_f(&self) -> f64 {
        self.scenario.t_f()
    }

    /// `|ψ(t)⟩`, including every event at or before `t`.
    pub fn forward_state(&self, t: f64) -> Result<StateVector> {
        self.scenario.forward_propagator(t)?.apply(&self.pre)
    }

    /// Ket `|φ(t)⟩ = U(t_f ← t)†|φ⟩`; its conjugate transpose is the bra
    /// `⟨φ(t)|`. Events after `t` are undone.
    pub fn backward_state(&self, t: f64) -> Result<StateVector> {
        self.scenario
            .propagator(t, self.scenario.t_f())?
            .adjoint()
            .apply(&self.post)
    }

    fn pair(&self, t: f64) -> Result<(StateVector, StateVector)> {
        Ok((self.backward_state(t)?, self.forward_state(t)?))
    }

    /// `⟨φ(t)|ψ(t)⟩`; `|overlap|²` is the post-selection probability.
    pub fn overlap(&self, t: f64) -> Result<C64> {
        let (post, pre) = self.pair(t)?;
        inner_product(&post, &pre)
    }

    pub fn weak_value(&self, a: &HermitianOperator, t: f64) -> Result<WeakValueSample> {
        if a.dim() != self.scenario.dim() {
            return Err(Error::Dimension(format!(
                "observable '{}' has dimension {}, scenario has {}",
                a.label(),
                a.dim(),
                self.scenario.dim()
            )));
        }
        let (post, pre) = self.pair(t)?;
        Ok(WeakValueSample {
            t,
            observable_label: a.label().to_string(),
            value: weak_value_between(&post, a.matrix(), &pre, t)?,
        })
    }

    /// Weak values on a time grid, ordered by (time, observable).
    pub fn weak_value_sweep(
        &self,
        observables: &[HermitianOperator],
        times: &[f64],
    ) -> Result<Vec<WeakValueSample>> {
        let rows: Vec<Vec<WeakValueSample>> = times
            .par_iter()
            .map(|&t| observables.iter().map(|a| self.weak_value(a, t)).collect())
            .collect::<Result<_>>()?;
        Ok(rows.into_iter().flatten().collect())
    }

    /// ABL probabilities of each outcome of `dec` measured at `t`.
    pub fn abl_probabilities(&self, dec: &ProjectiveDecomposition, t: f64) -> Result<Vec<f64>> {
        if dec.dim() != self.scenario.dim() {
            return Err(Error::Dimension(
                "decomposition dimension differs from scenario".into(),
            ));
        }
        let (post, pre) = self.pair(t)?;
        let numerators = dec
            .projectors()
            .iter()
            .map(|p| {
                let v = crate::qcore::apply(p.matrix(), &pre)?;
                Ok(inner_product(&post, &v)?.norm_sqr())
            })
            .collect::<Result<Vec<f64>>>()?;
        if numerators.iter().all(|&n| n < ABL_FLOOR) {
            return Err(Error::ImpossibleHistory { t });
        }
        let total: f64 = numerators.iter().sum();
        Ok(numerators.into_iter().map(|n| n / total).collect())
    }

    /// Certifies that `p` is found with certainty at `t` by checking that the
    /// complementary branch `(I − P)|ψ(t)⟩`, evolved to `t_f`, is orthogonal to
    /// the post-selected state.
    pub fn reductio_check(&self, p: &HermitianOperator, t: f64) -> Result<bool> {
        if !p.is_projector(ALGEBRAIC_TOL) {
            return Err(Error::Validation(format!(
                "'{}' is not a projector",
                p.label()
            )));
        }
        let t = self.scenario.check_time(t)?;
        let psi = self.forward_state(t)?;
        let branch = crate::qcore::apply(p.complement("I-P").matrix(), &psi)?;
        let at_final = self
            .scenario
            .propagator(t, self.scenario.t_f())?
            .apply(&branch)?;
        Ok(inner_product(&self.post, &at_final)?.norm() <= REDUCTIO_TOL)
    }

    /// Classifies each observable as deterministic (weak value is an eigenvalue
    /// with ABL certainty), anomalous (weak value outside the spectrum) or
    /// indeterminate.
    pub fn deterministic_set(
        &self,
        observables: &[HermitianOperator],
        t: f64,
    ) -> Result<Vec<Classification>> {
        observables.iter().map(|a| self.classify(a, t)).collect()
    }

    fn classify(&self, a: &HermitianOperator, t: f64) -> Result<Classification> {
        let weak = self.weak_value(a, t)?.value;
        let dec = ProjectiveDecomposition::spectral(a)?;
        let eigenvalues: Vec<f64> = a
            .spectrum()?
            .eigenspaces(EIGEN_CLUSTER_TOL)
            .into_iter()
            .map(|(v, _)| v)
            .collect();
        let matched = eigenvalues
            .iter()
            .position(|&l| (weak - C64::from(l)).norm() <= CERTAINTY_TOL);
        let class = match matched {
            Some(k) => {
                let probs = self.abl_probabilities(&dec, t)?;
                if (probs[k] - 1.0).abs() <= CERTAINTY_TOL {
                    OperatorClass::Deterministic {
                        eigenvalue: eigenvalues[k],
                    }
                } else {
                    OperatorClass::Indeterminate
                }
            }
            None => {
                let lo = eigenvalues[0] - CERTAINTY_TOL;
                let hi = eigenvalues[eigenvalues.len() - 1] + CERTAINTY_TOL;
                if weak.im.abs() > CERTAINTY_TOL || weak.re < lo || weak.re > hi {
                    OperatorClass::Anomalous
                } else {
                    OperatorClass::Indeterminate
                }
            }
        };
        Ok(Classification {
            label: a.label().to_string(),
            weak_value: weak,
            class,
        })
    }

    /// Checks both directions of the weak/strong equivalence for a dichotomic
    /// operator: ABL certainty of `λ` implies `A_w = λ`, and `A_w = λ` implies
    /// ABL certainty of `λ`.
    pub fn theorem_crosscheck(&self, a: &HermitianOperator, t: f64) -> Result<TheoremReport> {
        let spaces = a.spectrum()?.eigenspaces(EIGEN_CLUSTER_TOL);
        if spaces.len() != 2 {
            return Err(Error::Spectrum(format!(
                "'{}' has {} distinct eigenvalues, expected 2",
                a.label(),
                spaces.len()
            )));
        }
        let eigenvalues = [spaces[0].0, spaces[1].0];
        let dec = ProjectiveDecomposition::spectral(a)?;
        let probs = self.abl_probabilities(&dec, t)?;
        let abl = [probs[0], probs[1]];
        let weak = self.weak_value(a, t)?.value;

        let certain_eigenvalue = (0..2)
            .find(|&k| (abl[k] - 1.0).abs() <= CERTAINTY_TOL)
            .map(|k| eigenvalues[k]);
        let distances = eigenvalues.map(|l| (weak - C64::from(l)).norm());
        let nearest = if distances[0] <= distances[1] { 0 } else { 1 };
        let residual = distances[nearest];
        let matched_eigenvalue = (residual <= CERTAINTY_TOL).then_some(eigenvalues[nearest]);

        let violation = match (certain_eigenvalue, matched_eigenvalue) {
            (Some(c), Some(m)) => c != m,
            (None, None) => false,
            _ => true,
        };
        Ok(TheoremReport {
            label: a.label().to_string(),
            t,
            eigenvalues,
            abl,
            certain_eigenvalue,
            weak_value: weak,
            matched_eigenvalue,
            residual,
            violation,
        })
    }
}

/// `n` evenly spaced times from `t_i` to `t_f` inclusive.
pub fn time_grid(t_i: f64, t_f: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t_i],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    t_f
                } else {
                    t_i + (t_f - t_i) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
