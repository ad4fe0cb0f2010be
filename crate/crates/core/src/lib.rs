//! Simulation of pre- and post-selected quantum systems in finite dimension.
//!
//! * [`qcore`]: dense complex linear algebra, matrix exponentials.
//! * [`scenario`]: Hamiltonian timelines, unitary events, the three-boxes preset.
//! * [`twostate`]: two-time states, weak values, ABL probabilities.
//! * [`mc`]: forward-only Monte Carlo with projective collapse and post-selection.
//! * [`pointer`]: von Neumann pointer readout of weak values.

pub mod error;
pub mod mc;
pub mod pointer;
pub mod qcore;
pub mod random;
pub mod rng;
pub mod scenario;
pub mod twostate;

pub use error::{Error, Result};
pub use qcore::{HermitianOperator, SquareMatrix, StateVector, UnitaryOperator, C64};
pub use scenario::{three_boxes_preset, Scenario};
pub use twostate::TwoTimeState;
