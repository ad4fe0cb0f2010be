//! Discretized von Neumann pointer.
//!
//! A Gaussian pointer on a periodic grid is coupled impulsively to a system
//! observable, `exp(−i·g·A ⊗ p̂)`: the eigencomponent of `A` with eigenvalue
//! `λ` translates the pointer by `g·λ`. Translations are exact spectral
//! shifts (a phase `e^{−i p g λ}` in momentum space). After the remaining
//! evolution the system is projected onto the post-selected state and the
//! conditional pointer is read out:
//!
//! ```text
//! ⟨x⟩ ≈ g·Re(A_w)        ⟨p⟩ ≈ 2g·Var(p)·Im(A_w)
//! ```
//!
//! to first order in `g`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::qcore::{HermitianOperator, StateVector, UnitaryOperator, C64, EIGEN_CLUSTER_TOL};
use crate::scenario::Scenario;
use crate::twostate::TwoTimeState;

pub const DEFAULT_POINTS: usize = 1024;
pub const DEFAULT_LENGTH: f64 = 40.0;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_G: f64 = 0.01;

/// Post-selection probabilities below this are treated as failure.
pub const MIN_SUCCESS_PROB: f64 = 1e-18;

/// Periodic grid of `points` samples over `[−L/2, L/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointerGrid {
    points: usize,
    length: f64,
}

impl PointerGrid {
    pub fn new(points: usize, length: f64) -> Result<Self> {
        if points < 64 || !points.is_power_of_two() {
            return Err(Error::Grid(format!(
                "points must be a power of two ≥ 64, got {points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Grid(format!(
                "length must be positive, got {length}"
            )));
        }
        Ok(PointerGrid { points, length })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        let dx = self.spacing();
        let half = (self.points / 2) as f64;
        (0..self.points).map(|k| (k as f64 - half) * dx).collect()
    }

    /// Wave numbers in FFT order, Nyquist mode negative.
    pub fn momenta(&self) -> Vec<f64> {
        let n = self.points as i64;
        (0..n)
            .map(|j| {
                let f = if j < n / 2 { j } else { j - n };
                2.0 * PI * f as f64 / self.length
            })
            .collect()
    }
}

impl Default for PointerGrid {
    fn default() -> Self {
        PointerGrid {
            points: DEFAULT_POINTS,
            length: DEFAULT_LENGTH,
        }
    }
}

/// FFT helpers bound to one grid.
struct Spectral {
    grid: PointerGrid,
    momenta: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral {
    fn new(grid: PointerGrid) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            grid,
            momenta: grid.momenta(),
            forward: planner.plan_fft_forward(grid.points),
            inverse: planner.plan_fft_inverse(grid.points),
        }
    }

    /// `f(x − shift)`.
    fn translate(&self, f: &[C64], shift: f64) -> Vec<C64> {
        if shift == 0.0 {
            return f.to_vec();
        }
        let mut buf = f.to_vec();
        self.forward.process(&mut buf);
        for (z, &p) in buf.iter_mut().zip(&self.momenta) {
            *z *= C64::from_polar(1.0, -p * shift);
        }
        self.inverse.process(&mut buf);
        let n = self.grid.points as f64;
        buf.iter_mut().for_each(|z| *z /= n);
        buf
    }

    /// `p̂ f = −i f'`, Nyquist mode dropped.
    fn momentum(&self, f: &[C64]) -> Vec<C64> {
        let mut buf = f.to_vec();
        self.forward.process(&mut buf);
        let nyquist = self.grid.points / 2;
        for (j, (z, &p)) in buf.iter_mut().zip(&self.momenta).enumerate() {
            *z *= if j == nyquist { 0.0 } else { p };
        }
        self.inverse.process(&mut buf);
        let n = self.grid.points as f64;
        buf.iter_mut().for_each(|z| *z /= n);
        buf
    }

    /// `⟨a|b⟩ = dx Σ conj(a)·b`.
    fn dot(&self, a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() * self.grid.spacing()
    }

    fn moments(&self, f: &[C64]) -> Moments {
        let xs = self.grid.positions();
        let norm = self.dot(f, f).re;
        let dx = self.grid.spacing();
        let mean_x = f
            .iter()
            .zip(&xs)
            .map(|(z, x)| z.norm_sqr() * x)
            .sum::<f64>()
            * dx
            / norm;
        let var_x = f
            .iter()
            .zip(&xs)
            .map(|(z, x)| z.norm_sqr() * (x - mean_x).powi(2))
            .sum::<f64>()
            * dx
            / norm;
        let pf = self.momentum(f);
        let mean_p = self.dot(f, &pf).re / norm;
        let var_p = self.dot(&pf, &pf).re / norm - mean_p * mean_p;
        Moments {
            norm,
            mean_x,
            var_x,
            mean_p,
            var_p,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Moments {
    norm: f64,
    mean_x: f64,
    var_x: f64,
    mean_p: f64,
    var_p: f64,
}

/// Pointer wavefunction, normalized so that `dx·Σ|ψ|² = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointerState {
    grid: PointerGrid,
    sigma: f64,
    amplitudes: Vec<C64>,
}

/// Centered Gaussian `∝ exp(−x²/4σ²)`, so that `Var(x) = σ²`.
pub fn prepare_pointer(grid: PointerGrid, sigma: f64) -> Result<PointerState> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Grid(format!("sigma must be positive, got {sigma}")));
    }
    if grid.length < 16.0 * sigma {
        return Err(Error::Grid(format!(
            "grid length {} does not hold a pointer of width {sigma} (need ≥ {})",
            grid.length,
            16.0 * sigma
        )));
    }
    let raw: Vec<C64> = grid
        .positions()
        .into_iter()
        .map(|x| C64::from((-x * x / (4.0 * sigma * sigma)).exp()))
        .collect();
    let norm = (raw.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing()).sqrt();
    Ok(PointerState {
        grid,
        sigma,
        amplitudes: raw.into_iter().map(|z| z / norm).collect(),
    })
}

impl PointerState {
    pub fn grid(&self) -> PointerGrid {
        self.grid
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn mean_x(&self) -> f64 {
        Spectral::new(self.grid).moments(&self.amplitudes).mean_x
    }

    pub fn var_x(&self) -> f64 {
        Spectral::new(self.grid).moments(&self.amplitudes).var_x
    }

    pub fn mean_p(&self) -> f64 {
        Spectral::new(self.grid).moments(&self.amplitudes).mean_p
    }

    /// Momentum variance by spectral differentiation.
    pub fn var_p(&self) -> f64 {
        Spectral::new(self.grid).moments(&self.amplitudes).var_p
    }
}

/// System ⊗ pointer amplitudes, one pointer row per system basis state.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    system_dim: usize,
    grid: PointerGrid,
    time: f64,
    amplitudes: Vec<Vec<C64>>,
}

impl JointState {
    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn grid(&self) -> PointerGrid {
        self.grid
    }

    pub fn amplitudes(&self) -> &[Vec<C64>] {
        &self.amplitudes
    }

    /// `dx·Σ_{s,x} |Ψ(s, x)|²`.
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .flat_map(|row| row.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            * self.grid.spacing()
    }

    /// `⟨ψ|ρ_sys|ψ⟩` with `ρ_sys` the reduced system state.
    pub fn system_fidelity(&self, reference: &StateVector) -> Result<f64> {
        if reference.dim() != self.system_dim {
            return Err(Error::Dimension("reference state dimension differs".into()));
        }
        let r = reference.amps();
        let projected: Vec<C64> = (0..self.grid.points)
            .map(|x| {
                (0..self.system_dim)
                    .map(|s| r[s].conj() * self.amplitudes[s][x])
                    .sum()
            })
            .collect();
        Ok(projected.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing())
    }
}

/// Impulsive coupling `exp(−i·g·A ⊗ p̂)` applied at `time`.
#[derive(Clone, Debug)]
pub struct CouplingConfig {
    pub g: f64,
    pub observable: HermitianOperator,
    pub time: f64,
}

impl CouplingConfig {
    /// `|g|·r ≤ σ/10`, `r` the spectral radius of the observable.
    pub fn is_weak(&self, sigma: f64) -> Result<bool> {
        Ok(self.g.abs() * self.observable.spectrum()?.radius() <= sigma / 10.0)
    }
}

/// Couples `sys` to `ptr`; each eigenbranch of the observable translates the
/// pointer by `g·λ`.
pub fn weak_couple(
    sys: &StateVector,
    ptr: &PointerState,
    cfg: &CouplingConfig,
) -> Result<JointState> {
    if sys.dim() != cfg.observable.dim() {
        return Err(Error::Dimension(format!(
            "system dimension {} vs observable dimension {}",
            sys.dim(),
            cfg.observable.dim()
        )));
    }
    if !cfg.g.is_finite() {
        return Err(Error::Validation(format!(
            "coupling g must be finite, got {}",
            cfg.g
        )));
    }
    let spectrum = cfg
        .observable
        .spectrum()
        .map_err(|e| Error::Spectrum(format!("'{}': {e}", cfg.observable.label())))?;
    let spectral = Spectral::new(ptr.grid);
    let dim = sys.dim();
    let mut amplitudes = vec![vec![C64::new(0.0, 0.0); ptr.grid.points]; dim];
    for (lambda, projector) in spectrum.eigenspaces(EIGEN_CLUSTER_TOL) {
        let branch = crate::qcore::apply(&projector, sys)?;
        if branch.norm_sqr() == 0.0 {
            continue;
        }
        let shifted = spectral.translate(&ptr.amplitudes, cfg.g * lambda);
        for (row, &b) in amplitudes.iter_mut().zip(branch.amps()) {
            if b == C64::new(0.0, 0.0) {
                continue;
            }
            for (z, &f) in row.iter_mut().zip(&shifted) {
                *z += b * f;
            }
        }
    }
    Ok(JointState {
        system_dim: dim,
        grid: ptr.grid,
        time: cfg.time,
        amplitudes,
    })
}

/// Conditional pointer moments after post-selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Readout {
    pub mean_x: f64,
    pub mean_p: f64,
    pub success_prob: f64,
}

/// Applies `evolve_to_final` to the system, projects it onto `post`, and reads
/// out the renormalized conditional pointer.
pub fn postselect_readout(
    joint: &JointState,
    post: &StateVector,
    evolve_to_final: &UnitaryOperator,
) -> Result<Readout> {
    if post.dim() != joint.system_dim || evolve_to_final.dim() != joint.system_dim {
        return Err(Error::Dimension(
            "post-selection dimension differs from joint state".into(),
        ));
    }
    // ⟨φ|U|s⟩ for each system basis state s.
    let row = evolve_to_final.adjoint().apply(post)?;
    let weights: Vec<C64> = row.amps().iter().map(|z| z.conj()).collect();
    let chi: Vec<C64> = (0..joint.grid.points)
        .map(|x| {
            weights
                .iter()
                .zip(&joint.amplitudes)
                .map(|(w, r)| w * r[x])
                .sum()
        })
        .collect();
    let m = Spectral::new(joint.grid).moments(&chi);
    if m.norm.is_nan() || m.norm < MIN_SUCCESS_PROB {
        return Err(Error::OrthogonalSelection {
            t: joint.time,
            overlap: m.norm.max(0.0).sqrt(),
        });
    }
    Ok(Readout {
        mean_x: m.mean_x,
        mean_p: m.mean_p,
        success_prob: m.norm,
    })
}

/// `mean_x/g + i·mean_p/(2g·Var(p))`.
pub fn weak_value_from_readout(r: &Readout, g: f64, var_p: f64) -> C64 {
    C64::new(r.mean_x / g, r.mean_p / (2.0 * g * var_p))
}

/// Pointer estimate of a weak value with diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakEstimate {
    pub observable: String,
    pub t: f64,
    pub g: f64,
    pub sigma: f64,
    pub grid_points: usize,
    /// Readout at coupling `g`.
    pub readout: Readout,
    /// Estimate at `g`.
    pub estimate: C64,
    /// Estimate at `g/2`.
    pub estimate_half: C64,
    /// `2·E(g/2) − E(g)`, cancelling the first-order bias.
    pub richardson: C64,
    /// Initial pointer momentum variance used for the imaginary part.
    pub var_p: f64,
    pub weak_regime: bool,
}

fn single_readout(
    sys: &StateVector,
    ptr: &PointerState,
    observable: &HermitianOperator,
    g: f64,
    t: f64,
    post: &StateVector,
    rest: &UnitaryOperator,
) -> Result<Readout> {
    let cfg = CouplingConfig {
        g,
        observable: observable.clone(),
        time: t,
    };
    let joint = weak_couple(sys, ptr, &cfg)?;
    postselect_readout(&joint, post, rest)
}

/// Couples the scenario's forward state at `t` to a fresh pointer, evolves to
/// `t_f`, post-selects, and converts the conditional pointer moments into a
/// weak-value estimate at `g` and `g/2`.
pub fn estimate_weak_value(
    s: &Scenario,
    a: &HermitianOperator,
    t: f64,
    g: f64,
    grid: PointerGrid,
    sigma: f64,
) -> Result<WeakEstimate> {
    if !(g.is_finite() && g != 0.0) {
        return Err(Error::Validation(format!(
            "coupling g must be finite and nonzero, got {g}"
        )));
    }
    let tt = TwoTimeState::new(s);
    let sys = tt.forward_state(t)?;
    let rest = s.propagator(t, s.t_f())?;
    let ptr = prepare_pointer(grid, sigma)?;
    let var_p = ptr.var_p();

    let readout = single_readout(&sys, &ptr, a, g, t, s.post(), &rest)?;
    let half = single_readout(&sys, &ptr, a, g / 2.0, t, s.post(), &rest)?;
    let estimate = weak_value_from_readout(&readout, g, var_p);
    let estimate_half = weak_value_from_readout(&half, g / 2.0, var_p);
    let weak_regime = CouplingConfig {
        g,
        observable: a.clone(),
        time: t,
    }
    .is_weak(sigma)?;
    Ok(WeakEstimate {
        observable: a.label().to_string(),
        t,
        g,
        sigma,
        grid_points: grid.points,
        readout,
        estimate,
        estimate_half,
        richardson: estimate_half * 2.0 - estimate,
        var_p,
        weak_regime,
    })
}

/// Estimate error against the two-time weak value for a sequence of couplings.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingStudy {
    pub weak_value: C64,
    pub gs: Vec<f64>,
    pub errors: Vec<f64>,
    /// `max_k error_k / g_k`.
    pub fitted_c: f64,
    /// Errors strictly decrease as `g` decreases.
    pub monotone: bool,
}

/// Runs [`estimate_weak_value`] for each `g` (given in decreasing order) and
/// compares with the exact weak value.
pub fn g_scaling_study(
    s: &Scenario,
    a: &HermitianOperator,
    t: f64,
    gs: &[f64],
    grid: PointerGrid,
    sigma: f64,
) -> Result<ScalingStudy> {
    let weak_value = TwoTimeState::new(s).weak_value(a, t)?.value;
    let errors = gs
        .iter()
        .map(|&g| Ok((estimate_weak_value(s, a, t, g, grid, sigma)?.estimate - weak_value).norm()))
        .collect::<Result<Vec<f64>>>()?;
    let fitted_c = gs
        .iter()
        .zip(&errors)
        .map(|(g, e)| e / g.abs())
        .fold(0.0, f64::max);
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    Ok(ScalingStudy {
        weak_value,
        gs: gs.to_vec(),
        errors,
        fitted_c,
        monotone,
    })
}

/// Result of one pointer in a chained run.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainedReadout {
    pub observable: String,
    pub t: f64,
    pub readout: Readout,
    pub estimate: C64,
}

/// Several weak couplings on one trajectory, each to its own pointer, followed
/// by a single post-selection.
///
/// The joint state is kept as a sum over eigenbranch paths,
/// `Σ_J |s_J⟩ ⊗ T(a_J1)χ ⊗ … ⊗ T(a_Jn)χ`, so the cost grows with the number of
/// paths rather than with `points^n`. Pointer moments are then contracted from
/// single-pointer matrix elements on the grid.
pub fn chained_weak_measurement(
    s: &Scenario,
    couplings: &[CouplingConfig],
    grid: PointerGrid,
    sigma: f64,
) -> Result<Vec<ChainedReadout>> {
    if couplings.is_empty() {
        return Ok(Vec::new());
    }
    if couplings.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::Validation(
            "couplings must be ordered in time".into(),
        ));
    }
    let ptr = prepare_pointer(grid, sigma)?;
    let var_p = ptr.var_p();
    let spectral = Spectral::new(grid);

    // Each path: (eigenvalue index per pointer, system vector).
    let mut eigen: Vec<Vec<f64>> = Vec::with_capacity(couplings.len());
    let mut paths: Vec<(Vec<usize>, StateVector)> = vec![(
        Vec::new(),
        s.forward_propagator(couplings[0].time)?.apply(s.pre())?,
    )];
    for (m, cfg) in couplings.iter().enumerate() {
        if cfg.observable.dim() != s.dim() {
            return Err(Error::Dimension(format!(
                "observable '{}' dimension differs",
                cfg.observable.label()
            )));
        }
        if m > 0 {
            let u = s.propagator(couplings[m - 1].time, cfg.time)?;
            paths = paths
                .into_iter()
                .map(|(idx, v)| Ok((idx, u.apply(&v)?)))
                .collect::<Result<_>>()?;
        }
        let spaces = cfg.observable.spectrum()?.eigenspaces(EIGEN_CLUSTER_TOL);
        eigen.push(spaces.iter().map(|(l, _)| *l).collect());
        let mut next = Vec::with_capacity(paths.len() * spaces.len());
        for (idx, v) in &paths {
            for (k, (_, p)) in spaces.iter().enumerate() {
                let branch = crate::qcore::apply(p, v)?;
                if branch.norm_sqr() > 0.0 {
                    let mut j = idx.clone();
                    j.push(k);
                    next.push((j, branch));
                }
            }
        }
        paths = next;
    }
    let last = couplings[couplings.len() - 1].time;
    let rest = s.propagator(last, s.t_f())?;
    let amps: Vec<C64> = paths
        .iter()
        .map(|(_, v)| crate::qcore::inner_product(s.post(), &rest.apply(v)?))
        .collect::<Result<_>>()?;

    // Single-pointer matrix elements between shifted copies, per pointer.
    struct Elements {
        overlap: Vec<Vec<C64>>,
        x: Vec<Vec<C64>>,
        p: Vec<Vec<C64>>,
    }
    let xs = grid.positions();
    let elements: Vec<Elements> = couplings
        .iter()
        .zip(&eigen)
        .map(|(cfg, lambdas)| {
            let shifted: Vec<Vec<C64>> = lambdas
                .iter()
                .map(|l| spectral.translate(&ptr.amplitudes, cfg.g * l))
                .collect();
            let x_shifted: Vec<Vec<C64>> = shifted
                .iter()
                .map(|f| f.iter().zip(&xs).map(|(z, x)| z * x).collect())
                .collect();
            let p_shifted: Vec<Vec<C64>> = shifted.iter().map(|f| spectral.momentum(f)).collect();
            let table = |rhs: &Vec<Vec<C64>>| -> Vec<Vec<C64>> {
                shifted
                    .iter()
                    .map(|a| rhs.iter().map(|b| spectral.dot(a, b)).collect())
                    .collect()
            };
            Elements {
                overlap: table(&shifted),
                x: table(&x_shifted),
                p: table(&p_shifted),
            }
        })
        .collect();

    let n = couplings.len();
    let mut success = C64::new(0.0, 0.0);
    let mut mean_x = vec![C64::new(0.0, 0.0); n];
    let mut mean_p = vec![C64::new(0.0, 0.0); n];
    for (a, (ja, _)) in paths.iter().enumerate() {
        for (b, (jb, _)) in paths.iter().enumerate() {
            let weight = amps[a].conj() * amps[b];
            let overlaps: Vec<C64> = (0..n).map(|m| elements[m].overlap[ja[m]][jb[m]]).collect();
            success += weight * overlaps.iter().product::<C64>();
            for m in 0..n {
                let others: C64 = (0..n).filter(|&k| k != m).map(|k| overlaps[k]).product();
                mean_x[m] += weight * elements[m].x[ja[m]][jb[m]] * others;
                mean_p[m] += weight * elements[m].p[ja[m]][jb[m]] * others;
            }
        }
    }
    let success = success.re;
    if success.is_nan() || success < MIN_SUCCESS_PROB {
        return Err(Error::OrthogonalSelection {
            t: last,
            overlap: success.max(0.0).sqrt(),
        });
    }
    Ok(couplings
        .iter()
        .enumerate()
        .map(|(m, cfg)| {
            let readout = Readout {
                mean_x: mean_x[m].re / success,
                mean_p: mean_p[m].re / success,
                success_prob: success,
            };
            ChainedReadout {
                observable: cfg.observable.label().to_string(),
                t: cfg.time,
                readout,
                estimate: weak_value_from_readout(&readout, cfg.g, var_p),
            }
        })
        .collect())
}
