//! Forward-only Monte Carlo of prepare → evolve → collapse → evolve →
//! post-select trajectories.
//!
//! Nothing here uses the backward state: every trial starts from the
//! pre-selected ket, samples projective outcomes with the Born rule, and keeps
//! the trial only if a final projective test `{|φ⟩⟨φ|, I − |φ⟩⟨φ|}` succeeds.
//! The conditional outcome frequencies are therefore an independent check on
//! [`TwoTimeState::abl_probabilities`](crate::twostate::TwoTimeState::abl_probabilities).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qcore::{apply, inner_product, StateVector, UnitaryOperator};
use crate::rng::CounterRng;
use crate::scenario::Scenario;
use crate::twostate::{ProjectiveDecomposition, TwoTimeState, ABL_FLOOR};

/// z-scores beyond this are flagged by [`compare_to_abl`].
pub const Z_FLAG: f64 = 4.0;
/// Fewer post-selected trials than this trigger a low-statistics warning.
pub const LOW_STATISTICS: u64 = 100;

/// The single intermediate measurement of a run. A sequential plan measures
/// several decompositions back to back at the same time; its outcomes are the
/// joint outcomes.
#[derive(Clone, Debug)]
pub struct MeasurementPlan {
    time: f64,
    steps: Vec<ProjectiveDecomposition>,
    label: String,
}

impl MeasurementPlan {
    pub fn new(
        time: f64,
        decomposition: ProjectiveDecomposition,
        label: impl Into<String>,
    ) -> Self {
        MeasurementPlan {
            time,
            steps: vec![decomposition],
            label: label.into(),
        }
    }

    pub fn sequential(
        time: f64,
        steps: Vec<ProjectiveDecomposition>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let first = steps
            .first()
            .ok_or_else(|| Error::Validation("sequential plan needs at least one step".into()))?;
        if steps.iter().any(|d| d.dim() != first.dim()) {
            return Err(Error::Dimension("sequential plan mixes dimensions".into()));
        }
        Ok(MeasurementPlan {
            time,
            steps,
            label: label.into(),
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn steps(&self) -> &[ProjectiveDecomposition] {
        &self.steps
    }

    /// Joint outcome labels, first step most significant.
    pub fn outcome_labels(&self) -> Vec<String> {
        self.steps.iter().fold(vec![String::new()], |acc, dec| {
            acc.iter()
                .flat_map(|prefix| {
                    dec.labels().into_iter().map(move |l| {
                        if prefix.is_empty() {
                            l
                        } else {
                            format!("{prefix} & {l}")
                        }
                    })
                })
                .collect()
        })
    }

    pub fn outcome_count(&self) -> usize {
        self.steps.iter().map(|d| d.len()).product()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Clone, Debug)]
pub struct RunConfig<'a> {
    pub trials: u64,
    pub seed: u64,
    pub scenario: &'a Scenario,
    pub plan: Option<MeasurementPlan>,
    pub execution: Execution,
}

impl<'a> RunConfig<'a> {
    pub fn new(scenario: &'a Scenario, trials: u64, seed: u64) -> Self {
        RunConfig {
            trials,
            seed,
            scenario,
            plan: None,
            execution: Execution::default(),
        }
    }

    pub fn with_plan(mut self, plan: MeasurementPlan) -> Self {
        self.plan = Some(plan);
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Validation("trials must be at least 1".into()));
        }
        if let Some(plan) = &self.plan {
            self.scenario.check_time(plan.time)?;
            if plan.steps.iter().any(|d| d.dim() != self.scenario.dim()) {
                return Err(Error::Dimension(
                    "plan dimension differs from scenario".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeStat {
    pub label: String,
    /// Post-selected trials with this outcome.
    pub count: u64,
    /// Conditional probability among post-selected trials.
    pub probability: f64,
    /// `sqrt(p(1 − p)/postselected)`.
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalStats {
    pub total_trials: u64,
    pub postselected: u64,
    /// Empty for runs without an intermediate measurement.
    pub outcomes: Vec<OutcomeStat>,
}

impl ConditionalStats {
    pub fn postselection_rate(&self) -> f64 {
        self.postselected as f64 / self.total_trials as f64
    }

    /// Binomial standard error of the post-selection rate.
    pub fn postselection_std_error(&self) -> f64 {
        let p = self.postselection_rate();
        (p * (1.0 - p) / self.total_trials as f64).sqrt()
    }

    pub fn conditional_probs(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.probability).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.outcomes.iter().map(|o| o.label.as_str()).collect()
    }
}

/// Samples an outcome of `dec` with probability `‖Π_k|state⟩‖²` by inverting
/// the cumulative distribution at `random01`, and returns the renormalized
/// collapsed state.
pub fn born_sample(
    state: &StateVector,
    dec: &ProjectiveDecomposition,
    random01: f64,
) -> Result<(usize, StateVector)> {
    if dec.dim() != state.dim() {
        return Err(Error::Dimension(
            "decomposition dimension differs from state".into(),
        ));
    }
    if !state.is_normalized(1e-10) {
        return Err(Error::Validation(format!(
            "Born sampling needs a normalized state (norm² = {})",
            state.norm_sqr()
        )));
    }
    let branches = dec
        .projectors()
        .iter()
        .map(|p| apply(p.matrix(), state))
        .collect::<Result<Vec<_>>>()?;
    let probs: Vec<f64> = branches.iter().map(|b| b.norm_sqr()).collect();
    let total: f64 = probs.iter().sum();
    let target = random01.clamp(0.0, 1.0) * total;

    let mut acc = 0.0;
    let mut chosen = None;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if target < acc {
            chosen = Some(k);
            break;
        }
    }
    // Rounding can leave `target` at the very top of the cumulative sum.
    let k = chosen
        .or_else(|| probs.iter().rposition(|&p| p > 0.0))
        .ok_or_else(|| Error::Numerical("all outcome probabilities vanish".into()))?;
    let collapsed = branches[k].normalize()?;
    Ok((k, collapsed))
}

struct Propagators {
    before: UnitaryOperator,
    after: UnitaryOperator,
}

#[derive(Clone)]
struct Tally {
    postselected: u64,
    counts: Vec<u64>,
}

impl Tally {
    fn new(n: usize) -> Self {
        Tally {
            postselected: 0,
            counts: vec![0; n],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.postselected += other.postselected;
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }
}

/// One trajectory; `Some(outcome)` when post-selection succeeds (outcome 0 for
/// runs without a plan).
fn run_one(cfg: &RunConfig<'_>, props: &Propagators, trial: u64) -> Result<Option<usize>> {
    let mut rng = CounterRng::for_trial(cfg.seed, trial);
    let mut psi = props.before.apply(cfg.scenario.pre())?;
    let mut outcome = 0;
    if let Some(plan) = &cfg.plan {
        for dec in &plan.steps {
            let (k, collapsed) = born_sample(&psi, dec, rng.next_f64())?;
            outcome = outcome * dec.len() + k;
            psi = collapsed;
        }
    }
    psi = props.after.apply(&psi)?;
    let success = inner_product(cfg.scenario.post(), &psi)?.norm_sqr();
    Ok((rng.next_f64() < success).then_some(outcome))
}

/// Runs `cfg.trials` independent trajectories. Trial `k` draws its random
/// numbers from the stream keyed by `(seed, k)`; counts are integers, so the
/// result does not depend on execution order or thread count.
pub fn run_trials(cfg: &RunConfig<'_>) -> Result<ConditionalStats> {
    cfg.validate()?;
    let s = cfg.scenario;
    let props = match &cfg.plan {
        Some(plan) => Propagators {
            before: s.forward_propagator(plan.time)?,
            after: s.propagator(plan.time, s.t_f())?,
        },
        None => Propagators {
            before: s.forward_propagator(s.t_f())?,
            after: UnitaryOperator::identity(s.dim()),
        },
    };
    let n_outcomes = cfg.plan.as_ref().map_or(1, |p| p.outcome_count());

    let step = |mut tally: Tally, trial: u64| -> Result<Tally> {
        if let Some(k) = run_one(cfg, &props, trial)? {
            tally.postselected += 1;
            tally.counts[k] += 1;
        }
        Ok(tally)
    };
    let tally = match cfg.execution {
        Execution::Sequential => (0..cfg.trials).try_fold(Tally::new(n_outcomes), step)?,
        Execution::Parallel => (0..cfg.trials)
            .into_par_iter()
            .try_fold(|| Tally::new(n_outcomes), step)
            .try_reduce(|| Tally::new(n_outcomes), |a, b| Ok(a.merge(b)))?,
    };

    if tally.postselected == 0 {
        return Err(Error::EmptyEnsemble {
            total_trials: cfg.trials,
        });
    }
    let n = tally.postselected as f64;
    let outcomes = match &cfg.plan {
        Some(plan) => plan
            .outcome_labels()
            .into_iter()
            .zip(tally.counts)
            .map(|(label, count)| {
                let p = count as f64 / n;
                OutcomeStat {
                    label,
                    count,
                    probability: p,
                    std_error: (p * (1.0 - p) / n).sqrt(),
                }
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(ConditionalStats {
        total_trials: cfg.trials,
        postselected: tally.postselected,
        outcomes,
    })
}

/// ABL probabilities of the joint outcomes of `plan`, in the order of
/// [`MeasurementPlan::outcome_labels`]. Joint outcome `(a, b, …)` has weight
/// `|⟨φ(t)|…Π_b·Π_a|ψ(t)⟩|²`; for a single step this is the usual rule.
pub fn plan_abl(scenario: &Scenario, plan: &MeasurementPlan) -> Result<Vec<f64>> {
    let tt = TwoTimeState::new(scenario);
    let post = tt.backward_state(plan.time)?;
    let mut branches = vec![tt.forward_state(plan.time)?];
    for dec in &plan.steps {
        branches = branches
            .iter()
            .flat_map(|b| dec.projectors().iter().map(move |p| apply(p.matrix(), b)))
            .collect::<Result<_>>()?;
    }
    let weights = branches
        .iter()
        .map(|b| Ok(inner_product(&post, b)?.norm_sqr()))
        .collect::<Result<Vec<f64>>>()?;
    if weights.iter().all(|&w| w < ABL_FLOOR) {
        return Err(Error::ImpossibleHistory { t: plan.time });
    }
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZScore {
    pub label: String,
    pub empirical: f64,
    pub expected: f64,
    /// Normal-approximation standard error under the expected probability,
    /// `sqrt(q(1 − q)/postselected)`.
    pub std_error: f64,
    pub z: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblComparison {
    pub postselected: u64,
    pub entries: Vec<ZScore>,
    pub warnings: Vec<String>,
}

impl AblComparison {
    pub fn any_flagged(&self) -> bool {
        self.entries.iter().any(|e| e.flagged)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max)
    }
}

/// Per-outcome z-scores of the empirical conditional probabilities against
/// `abl`. When the expected probability is exactly 0 or 1 the standard error
/// vanishes: matching frequencies score 0, anything else scores infinity.
pub fn compare_to_abl(stats: &ConditionalStats, abl: &[f64]) -> Result<AblComparison> {
    if abl.len() != stats.outcomes.len() {
        return Err(Error::Dimension(format!(
            "{} empirical outcomes vs {} ABL probabilities",
            stats.outcomes.len(),
            abl.len()
        )));
    }
    let n = stats.postselected as f64;
    let entries = stats
        .outcomes
        .iter()
        .zip(abl)
        .map(|(o, &q)| {
            let std_error = (q * (1.0 - q) / n).max(0.0).sqrt();
            let diff = o.probability - q;
            let z = if std_error > 0.0 {
                diff / std_error
            } else if diff.abs() <= 1e-12 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            };
            ZScore {
                label: o.label.clone(),
                empirical: o.probability,
                expected: q,
                std_error,
                z,
                flagged: z.abs() > Z_FLAG,
            }
        })
        .collect();
    let mut warnings = Vec::new();
    if stats.postselected < LOW_STATISTICS {
        warnings.push(format!(
            "LowStatisticsWarning: only {} post-selected trials",
            stats.postselected
        ));
    }
    Ok(AblComparison {
        postselected: stats.postselected,
        entries,
        warnings,
    })
}
