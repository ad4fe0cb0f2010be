//! Piecewise-constant Hamiltonian timelines with instantaneous unitary events,
//! embedded Pauli operators, and the three-boxes preset.
//!
//! Event semantics: an event at time `τ` is seen by every query at `t ≥ τ`.
//! [`Scenario::propagator`] over `(from, to]` therefore includes events at
//! exactly `to` and excludes events at exactly `from`, and the forward state at
//! `t_i` already includes events placed at `t_i`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qcore::{
    HermitianOperator, Spectrum, SquareMatrix, StateVector, UnitaryOperator, ALGEBRAIC_TOL, C64,
};

/// Largest gap or overlap tolerated between consecutive segments.
pub const TILING_TOL: f64 = 1e-12;

/// Constant Hamiltonian acting on `[t_start, t_end]`.
#[derive(Clone, Debug)]
pub struct HamiltonianSegment {
    t_start: f64,
    t_end: f64,
    hamiltonian: HermitianOperator,
    spectrum: Spectrum,
}

impl HamiltonianSegment {
    pub fn new(t_start: f64, t_end: f64, hamiltonian: HermitianOperator) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
            return Err(Error::Validation(format!(
                "segment [{t_start}, {t_end}] must satisfy t_start < t_end"
            )));
        }
        let spectrum = hamiltonian.spectrum()?;
        Ok(HamiltonianSegment {
            t_start,
            t_end,
            hamiltonian,
            spectrum,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    /// `exp(−i·dt·H)`.
    pub fn evolution(&self, dt: f64) -> UnitaryOperator {
        self.spectrum.evolution(dt)
    }
}

/// Instantaneous unitary applied at `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryEvent {
    pub time: f64,
    pub unitary: UnitaryOperator,
    pub label: String,
}

/// Named intermediate measurement times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl Schedule {
    pub fn shifted(&self, dt: f64) -> Schedule {
        Schedule {
            t1: self.t1 + dt,
            t2: self.t2 + dt,
            t3: self.t3 + dt,
        }
    }
}

/// A validated pre/post-selected timeline.
#[derive(Clone, Debug)]
pub struct Scenario {
    dim: usize,
    epsilon: f64,
    t_i: f64,
    t_f: f64,
    segments: Vec<HamiltonianSegment>,
    events: Vec<UnitaryEvent>,
    schedule: Option<Schedule>,
    pre: StateVector,
    post: StateVector,
}

/// Incremental constructor for [`Scenario`]; all checks run in [`build`](Self::build).
#[derive(Clone, Debug)]
pub struct ScenarioBuilder {
    dim: usize,
    t_i: f64,
    t_f: f64,
    epsilon: f64,
    segments: Vec<HamiltonianSegment>,
    events: Vec<UnitaryEvent>,
    schedule: Option<Schedule>,
    pre: Option<StateVector>,
    post: Option<StateVector>,
}

impl ScenarioBuilder {
    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn segment(mut self, segment: HamiltonianSegment) -> Self {
        self.segments.push(segment);
        self
    }

    pub fn event(mut self, event: UnitaryEvent) -> Self {
        self.events.push(event);
        self
    }

    pub fn schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    pub fn pre(mut self, pre: StateVector) -> Self {
        self.pre = Some(pre);
        self
    }

    pub fn post(mut self, post: StateVector) -> Self {
        self.post = Some(post);
        self
    }

    pub fn build(self) -> Result<Scenario> {
        let ScenarioBuilder {
            dim,
            t_i,
            t_f,
            epsilon,
            mut segments,
            mut events,
            schedule,
            pre,
            post,
        } = self;

        if dim < 2 {
            return Err(Error::Dimension(format!("scenario dimension {dim} < 2")));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Validation(format!(
                "epsilon must be finite and positive, got {epsilon}"
            )));
        }
        if !(t_i.is_finite() && t_f.is_finite() && t_i < t_f) {
            return Err(Error::Validation(format!(
                "need t_i < t_f, got [{t_i}, {t_f}]"
            )));
        }

        let pre = pre.ok_or_else(|| Error::Validation("missing pre-selected state".into()))?;
        let post = post.ok_or_else(|| Error::Validation("missing post-selected state".into()))?;
        for (name, s) in [("pre", &pre), ("post", &post)] {
            if s.dim() != dim {
                return Err(Error::Dimension(format!(
                    "{name} state has dimension {}, scenario has {dim}",
                    s.dim()
                )));
            }
            if !s.is_normalized(ALGEBRAIC_TOL) {
                return Err(Error::Validation(format!(
                    "{name} state is not normalized (norm² = {})",
                    s.norm_sqr()
                )));
            }
        }

        if segments.is_empty() {
            return Err(Error::Validation(
                "scenario needs at least one segment".into(),
            ));
        }
        segments.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        for (k, seg) in segments.iter().enumerate() {
            if seg.hamiltonian.dim() != dim {
                return Err(Error::Dimension(format!(
                    "segments[{k}] Hamiltonian has dimension {}, scenario has {dim}",
                    seg.hamiltonian.dim()
                )));
            }
        }
        if (segments[0].t_start - t_i).abs() > TILING_TOL {
            return Err(Error::Validation(format!(
                "segments start at {} but t_i = {t_i}",
                segments[0].t_start
            )));
        }
        if (segments[segments.len() - 1].t_end - t_f).abs() > TILING_TOL {
            return Err(Error::Validation(format!(
                "segments end at {} but t_f = {t_f}",
                segments[segments.len() - 1].t_end
            )));
        }
        for (k, pair) in segments.windows(2).enumerate() {
            if (pair[0].t_end - pair[1].t_start).abs() > TILING_TOL {
                return Err(Error::Validation(format!(
                    "segments[{k}] ends at {} but segments[{}] starts at {}",
                    pair[0].t_end,
                    k + 1,
                    pair[1].t_start
                )));
            }
        }

        // Stable: equal times keep declaration order.
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        for ev in &events {
            if ev.unitary.dim() != dim {
                return Err(Error::Dimension(format!(
                    "event '{}' has dimension {}, scenario has {dim}",
                    ev.label,
                    ev.unitary.dim()
                )));
            }
            if !(ev.time >= t_i && ev.time <= t_f) {
                return Err(Error::Validation(format!(
                    "event '{}' at {} lies outside [{t_i}, {t_f}]",
                    ev.label, ev.time
                )));
            }
        }

        if let Some(s) = &schedule {
            for (name, t) in [("t1", s.t1), ("t2", s.t2), ("t3", s.t3)] {
                if !(t >= t_i && t <= t_f) {
                    return Err(Error::Validation(format!(
                        "schedule time {name} = {t} lies outside [{t_i}, {t_f}]"
                    )));
                }
            }
        }

        Ok(Scenario {
            dim,
            epsilon,
            t_i,
            t_f,
            segments,
            events,
            schedule,
            pre,
            post,
        })
    }
}

impl Scenario {
    pub fn builder(dim: usize, t_i: f64, t_f: f64) -> ScenarioBuilder {
        ScenarioBuilder {
            dim,
            t_i,
            t_f,
            epsilon: 1.0,
            segments: Vec::new(),
            events: Vec::new(),
            schedule: None,
            pre: None,
            post: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn t_i(&self) -> f64 {
        self.t_i
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn segments(&self) -> &[HamiltonianSegment] {
        &self.segments
    }

    pub fn events(&self) -> &[UnitaryEvent] {
        &self.events
    }

    pub fn schedule(&self) -> Option<&Schedule> {
        self.schedule.as_ref()
    }

    pub fn pre(&self) -> &StateVector {
        &self.pre
    }

    pub fn post(&self) -> &StateVector {
        &self.post
    }

    /// Copy of the scenario with `event` inserted after any existing events at
    /// the same time.
    pub fn with_event(&self, event: UnitaryEvent) -> Result<Scenario> {
        self.rebuild(|b| b.event(event))
    }

    /// Copy with replaced selections.
    pub fn with_selections(&self, pre: StateVector, post: StateVector) -> Result<Scenario> {
        self.rebuild(|b| b.pre(pre).post(post))
    }

    fn rebuild(&self, f: impl FnOnce(ScenarioBuilder) -> ScenarioBuilder) -> Result<Scenario> {
        let b = ScenarioBuilder {
            dim: self.dim,
            t_i: self.t_i,
            t_f: self.t_f,
            epsilon: self.epsilon,
            segments: self.segments.clone(),
            events: self.events.clone(),
            schedule: self.schedule,
            pre: Some(self.pre.clone()),
            post: Some(self.post.clone()),
        };
        f(b).build()
    }

    /// Resolves `ti`, `t1`, `t2`, `t3`, `tf`.
    pub fn named_time(&self, name: &str) -> Option<f64> {
        match name {
            "ti" => Some(self.t_i),
            "tf" => Some(self.t_f),
            "t1" => self.schedule.map(|s| s.t1),
            "t2" => self.schedule.map(|s| s.t2),
            "t3" => self.schedule.map(|s| s.t3),
            _ => None,
        }
    }

    /// Returns `t` clamped onto `[t_i, t_f]` when it lies within rounding
    /// distance of the interval, or a [`Error::TimeRange`].
    pub fn check_time(&self, t: f64) -> Result<f64> {
        let slack = TILING_TOL * (self.t_f - self.t_i).abs().max(1.0);
        if t.is_finite() && t >= self.t_i - slack && t <= self.t_f + slack {
            Ok(t.clamp(self.t_i, self.t_f))
        } else {
            Err(Error::TimeRange {
                t,
                t_i: self.t_i,
                t_f: self.t_f,
            })
        }
    }

    /// Continuous evolution over `[from, to]`, no events.
    fn continuous(&self, from: f64, to: f64) -> Result<UnitaryOperator> {
        let mut u = UnitaryOperator::identity(self.dim);
        if to <= from {
            return Ok(u);
        }
        for seg in &self.segments {
            let a = from.max(seg.t_start);
            let b = to.min(seg.t_end);
            if b > a {
                u = u.then(&seg.evolution(b - a))?;
            }
        }
        Ok(u)
    }

    fn evolve(&self, from: f64, to: f64, include_from_events: bool) -> Result<UnitaryOperator> {
        let mut u = UnitaryOperator::identity(self.dim);
        let mut current = from;
        for ev in &self.events {
            let inside = if include_from_events {
                ev.time >= from && ev.time <= to
            } else {
                ev.time > from && ev.time <= to
            };
            if !inside {
                continue;
            }
            u = u.then(&self.continuous(current, ev.time)?)?;
            u = u.then(&ev.unitary)?;
            current = ev.time;
        }
        u.then(&self.continuous(current, to)?)
    }

    /// `U(t_to ← t_from)`: segment exponentials and events with time in
    /// `(t_from, t_to]`, ordered in time.
    pub fn propagator(&self, t_from: f64, t_to: f64) -> Result<UnitaryOperator> {
        let from = self.check_time(t_from)?;
        let to = self.check_time(t_to)?;
        if from > to {
            return Err(Error::TimeRange {
                t: t_from,
                t_i: self.t_i,
                t_f: t_to,
            });
        }
        self.evolve(from, to, false)
    }

    /// Evolution applied to the pre-selected state to reach `t`, including
    /// events at exactly `t_i`.
    pub fn forward_propagator(&self, t: f64) -> Result<UnitaryOperator> {
        let t = self.check_time(t)?;
        self.evolve(self.t_i, t, true)
    }
}

/// Axis of an embedded two-level operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
    Identity,
}

impl PauliAxis {
    pub fn label(self) -> &'static str {
        match self {
            PauliAxis::X => "SX",
            PauliAxis::Y => "SY",
            PauliAxis::Z => "SZ",
            PauliAxis::Identity => "IB",
        }
    }
}

/// Pauli operator acting on the two coupled boxes `block`, zero elsewhere.
pub fn pauli_embed(
    axis: PauliAxis,
    dim: usize,
    block: (usize, usize),
) -> Result<HermitianOperator> {
    let (a, b) = block;
    if a == b || a >= dim || b >= dim {
        return Err(Error::Dimension(format!(
            "block ({a}, {b}) invalid for dimension {dim}"
        )));
    }
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
    let mut set = |r: usize, c: usize, v: C64| entries[r * dim + c] = v;
    match axis {
        PauliAxis::X => {
            set(a, b, one);
            set(b, a, one);
        }
        PauliAxis::Y => {
            set(a, b, -i);
            set(b, a, i);
        }
        PauliAxis::Z => {
            set(a, a, one);
            set(b, b, -one);
        }
        PauliAxis::Identity => {
            set(a, a, one);
            set(b, b, one);
        }
    }
    HermitianOperator::new(SquareMatrix::new(dim, entries)?, axis.label())
}

/// Phase flip `−1` on box `index`, `+1` elsewhere.
pub fn solenoid_flip(dim: usize, index: usize) -> Result<UnitaryOperator> {
    if index >= dim {
        return Err(Error::Dimension(format!(
            "flip index {index} out of range for dimension {dim}"
        )));
    }
    let diag: Vec<C64> = (0..dim)
        .map(|k| C64::new(if k == index { -1.0 } else { 1.0 }, 0.0))
        .collect();
    UnitaryOperator::new(SquareMatrix::from_diagonal(&diag)?)
}

/// Solenoid event flipping box `index` at `time`.
pub fn solenoid_event(dim: usize, index: usize, time: f64) -> Result<UnitaryEvent> {
    Ok(UnitaryEvent {
        time,
        unitary: solenoid_flip(dim, index)?,
        label: format!("solenoid@box{}", index + 1),
    })
}

fn three_boxes_states() -> Result<(StateVector, StateVector)> {
    let s = 1.0 / 3f64.sqrt();
    let pre = StateVector::new(vec![C64::new(s, 0.0), C64::new(0.0, s), C64::new(s, 0.0)])?;
    let post = StateVector::new(vec![C64::new(-s, 0.0), C64::new(0.0, s), C64::new(s, 0.0)])?;
    Ok((pre, post))
}

/// Three boxes, tunnelling `H = ε·σ_x` between boxes 1 and 2 over `[0, π/ε]`,
/// pre-selection `(1, i, 1)/√3`, post-selection `(−1, i, 1)/√3`, schedule
/// `t1 = 0`, `t2 = π/4ε`, `t3 = π/2ε`.
pub fn three_boxes_preset(epsilon: f64) -> Result<Scenario> {
    three_boxes_extended(epsilon, 0)
}

/// Three-boxes preset with the post-selection delayed to `t_f = (1 + 2k)·π/ε`.
/// Further measurement triplets are given by [`three_boxes_triplet`].
pub fn three_boxes_extended(epsilon: f64, cycles: u32) -> Result<Scenario> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Validation(format!(
            "epsilon must be finite and positive, got {epsilon}"
        )));
    }
    let t_f = (1.0 + 2.0 * f64::from(cycles)) * PI / epsilon;
    let h = pauli_embed(PauliAxis::X, 3, (0, 1))?.scaled(epsilon, "H");
    let (pre, post) = three_boxes_states()?;
    Scenario::builder(3, 0.0, t_f)
        .epsilon(epsilon)
        .segment(HamiltonianSegment::new(0.0, t_f, h)?)
        .schedule(three_boxes_triplet(epsilon, 0))
        .pre(pre)
        .post(post)
        .build()
}

/// The `n`-th measurement triplet, shifted by `n·π/ε` from the first one. The
/// preset's two-time state repeats with period `π/ε`.
pub fn three_boxes_triplet(epsilon: f64, n: u32) -> Schedule {
    Schedule {
        t1: 0.0,
        t2: PI / (4.0 * epsilon),
        t3: PI / (2.0 * epsilon),
    }
    .shifted(f64::from(n) * PI / epsilon)
}
