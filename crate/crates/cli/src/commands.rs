//! Subcommands and their reports.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use twotime::mc::{self, compare_to_abl, run_trials, MeasurementPlan, RunConfig};
use twotime::pointer::{self, PointerGrid};
use twotime::qcore::{make_projector, HermitianOperator};
use twotime::scenario::{pauli_embed, solenoid_event, three_boxes_extended, PauliAxis};
use twotime::twostate::{time_grid, OperatorClass, ProjectiveDecomposition, TwoTimeState};
use twotime::Scenario;

use crate::document::{parse_scenario, ScenarioDocument};
use crate::format::{float, to_json, write_atomic};
use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "twotime",
    version,
    about = "Pre- and post-selected quantum dynamics: weak values, ABL tables, Monte Carlo and pointer readouts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a built-in scenario as a JSON document.
    Preset(PresetArgs),
    /// Weak values of observables on a time grid (CSV `t,observable,re,im`).
    WeakSweep(SweepArgs),
    /// ABL probabilities of a projective measurement at one time.
    Abl(AblArgs),
    /// Forward Monte Carlo with optional intermediate measurement and post-selection.
    Mc(McArgs),
    /// Weak-value estimate from a simulated von Neumann pointer.
    Pointer(PointerArgs),
    /// Check the weak/strong equivalence for a dichotomic observable.
    TheoremCheck(TheoremArgs),
    /// Classify observables as deterministic, anomalous or indeterminate.
    DeterministicSet(DeterministicArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PresetName {
    ThreeBoxes,
}

#[derive(Args, Debug)]
pub struct PresetArgs {
    #[arg(value_enum)]
    pub name: PresetName,
    #[command(flatten)]
    pub shape: PresetShape,
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PresetShape {
    /// Tunnelling strength.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Extra cycles: t_f = (1 + 2k)·π/ε.
    #[arg(long, default_value_t = 0)]
    pub cycles: u32,
    /// Phase flip, `solenoid@<time>` (box 1) or `solenoid:<box>@<time>`. Repeatable.
    #[arg(long = "event", value_name = "SPEC")]
    pub events: Vec<String>,
}

#[derive(Args, Debug)]
pub struct Source {
    /// Built-in scenario.
    #[arg(
        long,
        value_enum,
        conflicts_with = "scenario",
        required_unless_present = "scenario"
    )]
    pub preset: Option<PresetName>,
    /// Scenario document (JSON).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[command(flatten)]
    pub shape: PresetShape,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: Source,
    /// Comma-separated observables: P1..Pd, SX, SY, SZ, IB, I.
    #[arg(long, default_value = "P1,P2,P3")]
    pub observables: String,
    /// Number of grid points, both ends included.
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    /// Grid start (time token, default ti).
    #[arg(long)]
    pub from: Option<String>,
    /// Grid end (time token, default tf).
    #[arg(long)]
    pub to: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AblArgs {
    #[command(flatten)]
    pub source: Source,
    /// Time token: ti, t1, t2, t3, tf or a number.
    #[arg(long)]
    pub time: String,
    /// `boxes`, `spectral:<OBS>`, or comma-separated projectors (a `rest`
    /// outcome completes the set).
    #[arg(long, default_value = "boxes")]
    pub projectors: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Time of the intermediate measurement; without it only post-selection is simulated.
    #[arg(long)]
    pub time: Option<String>,
    /// Measurement at `--time`, as for `abl`. Repeat for back-to-back measurements.
    #[arg(long)]
    pub projectors: Vec<String>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    pub threads: Option<usize>,
    /// JSON report (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Additional CSV `label,count,p,stderr`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PointerArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub observable: String,
    #[arg(long)]
    pub time: String,
    #[arg(long, default_value_t = pointer::DEFAULT_G)]
    pub g: f64,
    #[arg(long, default_value_t = pointer::DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = pointer::DEFAULT_POINTS)]
    pub points: usize,
    #[arg(long, default_value_t = pointer::DEFAULT_LENGTH)]
    pub length: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TheoremArgs {
    #[command(flatten)]
    pub source: Source,
    /// Dichotomic observable (two distinct eigenvalues).
    #[arg(long)]
    pub observable: String,
    #[arg(long)]
    pub time: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DeterministicArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value = "P1,P2,P3,SX,SY,SZ,IB,I")]
    pub observables: String,
    #[arg(long)]
    pub time: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit status and the files a command wrote.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
}

/// Parses `args` (program name first), runs the command, and reports errors
/// on `stderr` as `error: <ErrorName>: <message>`.
pub fn run_command<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    2
                }
            };
            return CommandResult {
                exit_code: code,
                artifacts: Vec::new(),
            };
        }
    };
    let mut ctx = Context {
        stdout,
        stderr,
        artifacts: Vec::new(),
    };
    match dispatch(&cli.command, &mut ctx) {
        Ok(()) => CommandResult {
            exit_code: 0,
            artifacts: ctx.artifacts,
        },
        Err(e) => {
            let _ = writeln!(ctx.stderr, "error: {}: {e}", e.name());
            CommandResult {
                exit_code: e.exit_code(),
                artifacts: Vec::new(),
            }
        }
    }
}

struct Context<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
    artifacts: Vec<PathBuf>,
}

impl Context<'_> {
    fn emit(&mut self, out: Option<&Path>, text: &str) -> Result<(), CliError> {
        match out {
            Some(path) => {
                write_atomic(path, text.as_bytes())?;
                self.artifacts.push(path.to_path_buf());
            }
            None => self.stdout.write_all(text.as_bytes())?,
        }
        Ok(())
    }

    fn warn(&mut self, msg: &str) {
        let _ = writeln!(self.stderr, "warning: {msg}");
    }
}

fn dispatch(command: &Command, ctx: &mut Context<'_>) -> Result<(), CliError> {
    match command {
        Command::Preset(a) => {
            let s = with_events(preset(a.name, &a.shape)?, &a.shape.events)?;
            ctx.emit(
                a.out.as_deref(),
                &to_json(&ScenarioDocument::from_scenario(&s)).map_err(json_error)?,
            )
        }
        Command::WeakSweep(a) => weak_sweep(a, ctx),
        Command::Abl(a) => abl(a, ctx),
        Command::Mc(a) => monte_carlo(a, ctx),
        Command::Pointer(a) => pointer_readout(a, ctx),
        Command::TheoremCheck(a) => theorem_check(a, ctx),
        Command::DeterministicSet(a) => deterministic_set(a, ctx),
    }
}

fn json_error(e: serde_json::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

fn preset(name: PresetName, shape: &PresetShape) -> Result<Scenario, CliError> {
    match name {
        PresetName::ThreeBoxes => Ok(three_boxes_extended(shape.epsilon, shape.cycles)?),
    }
}

fn load(source: &Source) -> Result<Scenario, CliError> {
    let base = match (&source.preset, &source.scenario) {
        (Some(name), _) => preset(*name, &source.shape)?,
        (None, Some(path)) => parse_scenario(&std::fs::read_to_string(path)?)?,
        (None, None) => {
            return Err(CliError::Usage(
                "one of --preset or --scenario is required".into(),
            ))
        }
    };
    with_events(base, &source.shape.events)
}

/// Applies `solenoid@<time>` / `solenoid:<box>@<time>` flags.
fn with_events(mut s: Scenario, specs: &[String]) -> Result<Scenario, CliError> {
    for spec in specs {
        let (kind, time) = spec.split_once('@').ok_or_else(|| {
            CliError::Usage(format!("event '{spec}' must look like solenoid@<time>"))
        })?;
        let index = match kind.split_once(':') {
            None if kind == "solenoid" => 0,
            Some(("solenoid", b)) => match b.parse::<usize>() {
                Ok(k) if k >= 1 => k - 1,
                _ => {
                    return Err(CliError::Usage(format!(
                        "bad box '{b}' in event '{spec}' (1-based)"
                    )))
                }
            },
            _ => return Err(CliError::Usage(format!("unknown event kind '{kind}'"))),
        };
        let t = resolve_time(&s, time)?;
        s = s.with_event(solenoid_event(s.dim(), index, t)?)?;
    }
    Ok(s)
}

/// `ti`, `t1`, `t2`, `t3`, `tf` or a number; checked against the scenario interval.
pub fn resolve_time(s: &Scenario, token: &str) -> Result<f64, CliError> {
    let t = match token {
        "ti" | "tf" | "t1" | "t2" | "t3" => s.named_time(token).ok_or_else(|| {
            CliError::Domain(twotime::Error::Validation(format!(
                "scenario has no schedule for '{token}'"
            )))
        })?,
        _ => token.parse::<f64>().map_err(|_| {
            CliError::Usage(format!(
                "bad time '{token}' (ti, t1, t2, t3, tf or a number)"
            ))
        })?,
    };
    Ok(s.check_time(t)?)
}

/// `P1..Pd`, `SX`, `SY`, `SZ`, `IB` (Pauli operators on boxes 1 and 2), `I`.
pub fn observable(dim: usize, token: &str) -> Result<HermitianOperator, CliError> {
    let axis = match token {
        "SX" => Some(PauliAxis::X),
        "SY" => Some(PauliAxis::Y),
        "SZ" => Some(PauliAxis::Z),
        "IB" => Some(PauliAxis::Identity),
        _ => None,
    };
    if let Some(axis) = axis {
        return Ok(pauli_embed(axis, dim, (0, 1))?);
    }
    if token == "I" {
        return Ok(HermitianOperator::identity(dim));
    }
    match token.strip_prefix('P').map(str::parse::<usize>) {
        Some(Ok(k)) if (1..=dim).contains(&k) => Ok(make_projector(dim, k - 1)?),
        _ => Err(CliError::Usage(format!(
            "unknown observable '{token}' (P1..P{dim}, SX, SY, SZ, IB, I)"
        ))),
    }
}

fn observables(dim: usize, list: &str) -> Result<Vec<HermitianOperator>, CliError> {
    list.split(',').map(|t| observable(dim, t.trim())).collect()
}

fn decomposition(dim: usize, token: &str) -> Result<ProjectiveDecomposition, CliError> {
    if token == "boxes" {
        return Ok(ProjectiveDecomposition::boxes(dim)?);
    }
    if let Some(obs) = token.strip_prefix("spectral:") {
        return Ok(ProjectiveDecomposition::spectral(&observable(dim, obs)?)?);
    }
    let mut ps = observables(dim, token)?;
    if ps.len() == 1 {
        Ok(ProjectiveDecomposition::binary(ps.remove(0))?)
    } else {
        Ok(ProjectiveDecomposition::with_rest(ps)?)
    }
}

fn weak_sweep(a: &SweepArgs, ctx: &mut Context<'_>) -> Result<(), CliError> {
    let s = load(&a.source)?;
    let obs = observables(s.dim(), &a.observables)?;
    if a.steps < 2 {
        return Err(CliError::Usage("--steps must be at least 2".into()));
    }
    let from = resolve_time(&s, a.from.as_deref().unwrap_or("ti"))?;
    let to = resolve_time(&s, a.to.as_deref().unwrap_or("tf"))?;
    if from > to {
        return Err(CliError::Usage(format!("--from {from} is after --to {to}")));
    }
    let samples = TwoTimeState::new(&s).weak_value_sweep(&obs, &time_grid(from, to, a.steps))?;
    let mut text = String::from("t,observable,re,im\n");
    for w in samples {
        text.push_str(&format!(
            "{},{},{},{}\n",
            float(w.t),
            w.observable_label,
            float(w.value.re),
            float(w.value.im)
        ));
    }
    ctx.emit(a.out.as_deref(), &text)
}

#[derive(Serialize)]
struct AblReport {
    t: f64,
    outcomes: Vec<AblEntry>,
}

#[derive(Serialize)]
struct AblEntry {
    label: String,
    p: f64,
}

fn abl(a: &AblArgs, ctx: &mut Context<'_>) -> Result<(), CliError> {
    let s = load(&a.source)?;
    let t = resolve_time(&s, &a.time)?;
    let dec = decomposition(s.dim(), &a.projectors)?;
    let probs = TwoTimeState::new(&s).abl_probabilities(&dec, t)?;
    let report = AblReport {
        t,
        outcomes: dec
            .labels()
            .into_iter()
            .zip(probs)
            .map(|(label, p)| AblEntry { label, p })
            .collect(),
    };
    ctx.emit(a.out.as_deref(), &to_json(&report).map_err(json_error)?)
}

#[derive(Serialize)]
struct McReport {
    total_trials: u64,
    postselected: u64,
    outcomes: Vec<McEntry>,
}

#[derive(Serialize)]
struct McEntry {
    label: String,
    count: u64,
    p: f64,
    stderr: f64,
    z: f64,
}

fn monte_carlo(a: &McArgs, ctx: &mut Context<'_>) -> Result<(), CliError> {
    let s = load(&a.source)?;
    let plan = match (&a.time, a.projectors.is_empty()) {
        (None, true) => None,
        (None, false) => return Err(CliError::Usage("--projectors needs --time".into())),
        (Some(time), _) => {
            let t = resolve_time(&s, time)?;
            let tokens: Vec<&str> = if a.projectors.is_empty() {
                vec!["boxes"]
            } else {
                a.projectors.iter().map(String::as_str).collect()
            };
            let steps = tokens
                .iter()
                .map(|tok| decomposition(s.dim(), tok))
                .collect::<Result<Vec<_>, _>>()?;
            Some(MeasurementPlan::sequential(
                t,
                steps,
                tokens.join(" then "),
            )?)
        }
    };
    let mut cfg = RunConfig::new(&s, a.trials, a.seed);
    if let Some(plan) = plan.clone() {
        cfg = cfg.with_plan(plan);
    }
    let stats = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?
            .install(|| run_trials(&cfg))?,
        None => run_trials(&cfg)?,
    };

    let zs = match &plan {
        Some(plan) => {
            let cmp = compare_to_abl(&stats, &mc::plan_abl(&s, plan)?)?;
            for w in &cmp.warnings {
                ctx.warn(w);
            }
            for e in cmp.entries.iter().filter(|e| e.flagged) {
                ctx.warn(&format!(
                    "outcome '{}' deviates from ABL by z = {:.2}",
                    e.label, e.z
                ));
            }
            cmp.entries.iter().map(|e| e.z).collect()
        }
        None => Vec::new(),
    };
    let report = McReport {
        total_trials: stats.total_trials,
        postselected: stats.postselected,
        outcomes: stats
            .outcomes
            .iter()
            .zip(zs)
            .map(|(o, z)| McEntry {
                label: o.label.clone(),
                count: o.count,
                p: o.probability,
                stderr: o.std_error,
                z,
            })
            .collect(),
    };
    let json = to_json(&report).map_err(json_error)?;
    if let Some(path) = &a.csv {
        let mut text = String::from("label,count,p,stderr\n");
        for o in &stats.outcomes {
            text.push_str(&format!(
                "{},{},{},{}\n",
                o.label,
                o.count,
                float(o.probability),
                float(o.std_error)
            ));
        }
        write_atomic(path, text.as_bytes())?;
        ctx.artifacts.push(path.clone());
    }
    ctx.emit(a.out.as_deref(), &json)
}

#[derive(Serialize)]
struct PointerReport {
    observable: String,
    t: f64,
    g: f64,
    sigma: f64,
    grid_points: usize,
    mean_x: f64,
    mean_p: f64,
    success_prob: f64,
    estimate_re: f64,
    estimate_im: f64,
}

fn pointer_readout(a: &PointerArgs, ctx: &mut Context<'_>) -> Result<(), CliError> {
    let s = load(&a.source)?;
    let obs = observable(s.dim(), &a.observable)?;
    let t = resolve_time(&s, &a.time)?;
    let grid = PointerGrid::new(a.points, a.length)?;
    let est = pointer::estimate_weak_value(&s, &obs, t, a.g, grid, a.sigma)?;
    if !est.weak_regime {
        ctx.warn(&format!(
            "|g|·r exceeds sigma/10 for '{}'; first-order readout may be biased",
            obs.label()
        ));
    }
    let report = PointerReport {
        observable: est.observable,
        t,
        g: a.g,
        sigma: a.sigma,
        grid_points: a.points,
        mean_x: est.readout.mean_x,
        mean_p: est.readout.mean_p,
        success_prob: est.readout.success_prob,
        estimate_re: est.estimate.re,
        estimate_im: est.estimate.im,
    };
    ctx.emit(a.out.as_deref(), &to_json(&report).map_err(json_error)?)
}

#[derive(Serialize)]
struct TheoremOutput {
    label: String,
    t: f64,
    eigenvalues: [f64; 2],
    abl: [f64; 2],
    certain_eigenvalue: Option<f64>,
    weak_re: f64,
    weak_im: f64,
    matched_eigenvalue: Option<f64>,
    residual: f64,
    violation: bool,
}

fn theorem_check(a: &TheoremArgs, ctx: &mut Context<'_>) -> Result<(), CliError> {
    let s = load(&a.source)?;
    let obs = observable(s.dim(), &a.observable)?;
    let t = resolve_time(&s, &a.time)?;
    let r = TwoTimeState::new(&s).theorem_crosscheck(&obs, t)?;
    let out = TheoremOutput {
        label: r.label,
        t: r.t,
        eigenvalues: r.eigenvalues,
        abl: r.abl,
        certain_eigenvalue: r.certain_eigenvalue,
        weak_re: r.weak_value.re,
        weak_im: r.weak_value.im,
        matched_eigenvalue: r.matched_eigenvalue,
        residual: r.residual,
        violation: r.violation,
    };
    ctx.emit(a.out.as_deref(), &to_json(&out).map_err(json_error)?)
}

#[derive(Serialize)]
struct ClassEntry {
    label: String,
    weak_re: f64,
    weak_im: f64,
    class: &'static str,
    eigenvalue: Option<f64>,
}

#[derive(Serialize)]
struct ClassReport {
    t: f64,
    observables: Vec<ClassEntry>,
}

fn deterministic_set(a: &DeterministicArgs, ctx: &mut Context<'_>) -> Result<(), CliError> {
    let s = load(&a.source)?;
    let obs = observables(s.dim(), &a.observables)?;
    let t = resolve_time(&s, &a.time)?;
    let classes = TwoTimeState::new(&s).deterministic_set(&obs, t)?;
    let report = ClassReport {
        t,
        observables: classes
            .into_iter()
            .map(|c| {
                let (class, eigenvalue) = match c.class {
                    OperatorClass::Deterministic { eigenvalue } => {
                        ("deterministic", Some(eigenvalue))
                    }
                    OperatorClass::Anomalous => ("anomalous", None),
                    OperatorClass::Indeterminate => ("indeterminate", None),
                };
                ClassEntry {
                    label: c.label,
                    weak_re: c.weak_value.re,
                    weak_im: c.weak_value.im,
                    class,
                    eigenvalue,
                }
            })
            .collect(),
    };
    ctx.emit(a.out.as_deref(), &to_json(&report).map_err(json_error)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use twotime::three_boxes_preset;

    #[test]
    fn time_tokens() {
        let s = three_boxes_preset(1.0).unwrap();
        assert_eq!(resolve_time(&s, "t2").unwrap(), std::f64::consts::PI / 4.0);
        assert_eq!(resolve_time(&s, "0.5").unwrap(), 0.5);
        assert!(matches!(resolve_time(&s, "later"), Err(CliError::Usage(_))));
        assert!(matches!(
            resolve_time(&s, "9"),
            Err(CliError::Domain(twotime::Error::TimeRange { .. }))
        ));
    }

    #[test]
    fn observable_tokens() {
        assert_eq!(observable(3, "P2").unwrap().label(), "P2");
        assert_eq!(observable(3, "SY").unwrap().label(), "SY");
        assert!(observable(3, "P4").is_err());
        assert!(observable(3, "Q").is_err());
    }

    #[test]
    fn decomposition_tokens() {
        assert_eq!(
            decomposition(3, "boxes").unwrap().labels(),
            ["P1", "P2", "P3"]
        );
        assert_eq!(decomposition(3, "P1").unwrap().labels(), ["P1", "not P1"]);
        assert_eq!(
            decomposition(3, "P1,P2").unwrap().labels(),
            ["P1", "P2", "rest"]
        );
        assert_eq!(decomposition(3, "spectral:SZ").unwrap().len(), 3);
    }

    #[test]
    fn event_specs() {
        let s = three_boxes_preset(1.0).unwrap();
        let e = with_events(s.clone(), &["solenoid@t2".into(), "solenoid:3@0.1".into()]).unwrap();
        assert_eq!(e.events().len(), 2);
        assert_eq!(e.events()[1].label, "solenoid@box1");
        assert!(matches!(
            with_events(s.clone(), &["laser@t2".into()]),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            with_events(s, &["solenoid:0@t2".into()]),
            Err(CliError::Usage(_))
        ));
    }
}
