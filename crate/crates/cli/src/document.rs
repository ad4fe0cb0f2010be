//! JSON scenario documents.
//!
//! Complex numbers are `[re, im]` pairs, matrices are row-major nested arrays:
//!
//! ```json
//! {
//!   "dim": 3, "epsilon": 1.0, "t_i": 0.0, "t_f": 3.14159,
//!   "pre":  [[0.577, 0.0], [0.0, 0.577], [0.577, 0.0]],
//!   "post": [[-0.577, 0.0], [0.0, 0.577], [0.577, 0.0]],
//!   "segments": [{"t_start": 0.0, "t_end": 3.14159, "H": [[[0,0],[1,0],[0,0]], ...]}],
//!   "events": [{"time": 0.785, "U": [...], "label": "solenoid@box1"}],
//!   "schedule": {"t1": 0.0, "t2": 0.785, "t3": 1.571}
//! }
//! ```

use serde::{Deserialize, Serialize};
use twotime::qcore::{HermitianOperator, SquareMatrix, StateVector, UnitaryOperator, C64};
use twotime::scenario::{HamiltonianSegment, Schedule, UnitaryEvent};
use twotime::Scenario;

use crate::CliError;

/// Selections whose norm is off by more than this are rejected; closer ones
/// are renormalized.
pub const NORM_SLACK: f64 = 1e-6;

pub type Complex = [f64; 2];
pub type Matrix = Vec<Vec<Complex>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub dim: usize,
    pub epsilon: f64,
    pub t_i: f64,
    pub t_f: f64,
    pub pre: Vec<Complex>,
    pub post: Vec<Complex>,
    pub segments: Vec<SegmentDocument>,
    #[serde(default)]
    pub events: Vec<EventDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDocument {
    pub t_start: f64,
    pub t_end: f64,
    #[serde(rename = "H")]
    pub h: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDocument {
    pub time: f64,
    #[serde(rename = "U")]
    pub u: Matrix,
    pub label: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDocument {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

fn to_c64(z: &Complex) -> C64 {
    C64::new(z[0], z[1])
}

fn from_c64(z: C64) -> Complex {
    [z.re, z.im]
}

fn validation(msg: String) -> CliError {
    CliError::Domain(twotime::Error::Validation(msg))
}

fn matrix(dim: usize, rows: &Matrix, what: &str) -> Result<SquareMatrix, CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Domain(twotime::Error::Dimension(format!(
            "{what}: expected a {dim}×{dim} matrix"
        ))));
    }
    let entries = rows.iter().flatten().map(to_c64).collect();
    SquareMatrix::new(dim, entries).map_err(|e| validation(format!("{what}: {e}")))
}

fn selection(dim: usize, amps: &[Complex], what: &str) -> Result<StateVector, CliError> {
    if amps.len() != dim {
        return Err(CliError::Domain(twotime::Error::Dimension(format!(
            "{what}: expected {dim} amplitudes, got {}",
            amps.len()
        ))));
    }
    let v = StateVector::new(amps.iter().map(to_c64).collect())
        .map_err(|e| validation(format!("{what}: {e}")))?;
    let norm = v.norm();
    if (norm - 1.0).abs() > NORM_SLACK {
        return Err(validation(format!("{what}: norm {norm} is not 1")));
    }
    v.normalize()
        .map_err(|e| validation(format!("{what}: {e}")))
}

impl ScenarioDocument {
    pub fn from_scenario(s: &Scenario) -> Self {
        let rows = |m: &SquareMatrix| -> Matrix {
            (0..m.dim())
                .map(|r| (0..m.dim()).map(|c| from_c64(m.entry(r, c))).collect())
                .collect()
        };
        ScenarioDocument {
            dim: s.dim(),
            epsilon: s.epsilon(),
            t_i: s.t_i(),
            t_f: s.t_f(),
            pre: s.pre().amps().iter().copied().map(from_c64).collect(),
            post: s.post().amps().iter().copied().map(from_c64).collect(),
            segments: s
                .segments()
                .iter()
                .map(|seg| SegmentDocument {
                    t_start: seg.t_start(),
                    t_end: seg.t_end(),
                    h: rows(seg.hamiltonian().matrix()),
                })
                .collect(),
            events: s
                .events()
                .iter()
                .map(|ev| EventDocument {
                    time: ev.time,
                    u: rows(ev.unitary.matrix()),
                    label: ev.label.clone(),
                })
                .collect(),
            schedule: s.schedule().map(|sch| ScheduleDocument {
                t1: sch.t1,
                t2: sch.t2,
                t3: sch.t3,
            }),
        }
    }

    /// Builds the scenario, validating every invariant.
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        let dim = self.dim;
        let mut b = Scenario::builder(dim, self.t_i, self.t_f).epsilon(self.epsilon);
        for (k, seg) in self.segments.iter().enumerate() {
            let what = format!("segments[{k}].H");
            let h = HermitianOperator::new(matrix(dim, &seg.h, &what)?, "H")
                .map_err(|e| validation(format!("{what}: {e}")))?;
            let seg = HamiltonianSegment::new(seg.t_start, seg.t_end, h)
                .map_err(|e| validation(format!("segments[{k}]: {e}")))?;
            b = b.segment(seg);
        }
        for (k, ev) in self.events.iter().enumerate() {
            let what = format!("events[{k}].U");
            let u = UnitaryOperator::new(matrix(dim, &ev.u, &what)?)
                .map_err(|e| validation(format!("{what}: {e}")))?;
            b = b.event(UnitaryEvent {
                time: ev.time,
                unitary: u,
                label: ev.label.clone(),
            });
        }
        if let Some(sch) = self.schedule {
            b = b.schedule(Schedule {
                t1: sch.t1,
                t2: sch.t2,
                t3: sch.t3,
            });
        }
        b.pre(selection(dim, &self.pre, "pre")?)
            .post(selection(dim, &self.post, "post")?)
            .build()
            .map_err(CliError::Domain)
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ScenarioDocument =
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Parse {
            path: e.path().to_string(),
            reason: e.inner().to_string(),
        })?;
    doc.to_scenario()
}
