//! Run configuration, mode execution, CSV output and checkpoints.
//!
//! Config files are flat `key = value` lines with `#` comments:
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `mode` | required | `simulate`, `bd-oracle`, `validate-inequalities`, `diagnose` |
//! | `k`, `nu`, `a` | 1, 1, 8 | spring exponent, viscosity, `N2` shift |
//! | `nr`, `ntheta` | 64, 64 | configuration grid |
//! | `nx`, `ny` | 16, 16 | spatial grid (coupled runs) |
//! | `dt`, `t_end`, `record_every` | 1e-3, 1, 1 | time stepping and record cadence in steps |
//! | `flow`, `rate`, `frequency` | rest, 0, 1 | `rest`, `shear`, `extension`, `oscillatory`, `coupled` |
//! | `hyper_strength`, `hyper_exponent` | 0, 1 | hyperviscosity `(1/n) Delta^(2 k_h)`, off when 0 |
//! | `initial`, `perturbation` | equilibrium, 0.5 | `equilibrium` or seeded `perturbed` start |
//! | `paths`, `scheme` | 10000, semi-implicit | Brownian dynamics ensemble size and scheme |
//! | `inequality`, `beta`, `gamma`, `p`, `levels`, `allow_outside` | all, 0, 0, 3, 4, false | inequality lab |
//! | `seed`, `output`, `checkpoint` | 0, none, none | RNG seed, CSV path, checkpoint path |
//!
//! For coupled runs `rate` is the amplitude of the initial Taylor–Green velocity.

mod checkpoint;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use checkpoint::{checkpoint_read, checkpoint_read_expecting, checkpoint_write, Checkpoint, Dims, MAGIC};
pub use output::{
    bd_csv, inequality_csv, timeseries_csv, write_text, write_timeseries, BD_HEADER, INEQUALITY_HEADER,
    TIMESERIES_HEADER,
};

use crate::density::PhaseDensity;
use crate::diagnostics::{self, DiagnosticsLedger};
use crate::error::{Error, Result};
use crate::fokker_planck::{FokkerPlanck, VelocityGradient};
use crate::grid::ConfigGrid;
use crate::inequality::{empirical_constant, ConstantReport, FamilySpec, InequalityKind};
use crate::macro_flow::{
    protocol_kappa, CoupledSolver, CoupledState, FlowKind, FlowProtocol, Hyperviscosity, MacroState, SpectralGrid,
};
use crate::model::PotentialParams;
use crate::stochastic::{bd_run, BdScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    BdOracle,
    ValidateInequalities,
    Diagnose,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::BdOracle => "bd-oracle",
            Self::ValidateInequalities => "validate-inequalities",
            Self::Diagnose => "diagnose",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "simulate" => Self::Simulate,
            "bd-oracle" => Self::BdOracle,
            "validate-inequalities" => Self::ValidateInequalities,
            "diagnose" => Self::Diagnose,
            other => return Err(Error::Config(format!("unknown mode `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initial {
    Equilibrium,
    Perturbed,
}

/// Inequality kinds accepted by the `inequality` key besides `all`.
pub const INEQUALITY_NAMES: [&str; 6] = ["hardy1", "hardy_inter", "hardy_inter2", "hardy_inter_log", "stress_corollary", "wsi"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub mode: Mode,
    pub k: f64,
    pub nu: f64,
    pub a: f64,
    pub nr: usize,
    pub ntheta: usize,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub flow: String,
    pub rate: f64,
    pub frequency: f64,
    pub hyper_strength: f64,
    pub hyper_exponent: u32,
    pub initial: Initial,
    pub perturbation: f64,
    pub paths: usize,
    pub scheme: BdScheme,
    pub inequality: String,
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
    pub levels: u32,
    pub allow_outside: bool,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

impl RunSpec {
    /// All defaults with the given mode.
    pub fn with_mode(mode: Mode) -> Self {
        Self {
            mode,
            k: 1.0,
            nu: 1.0,
            a: diagnostics::DEFAULT_SHIFT,
            nr: 64,
            ntheta: 64,
            nx: 16,
            ny: 16,
            dt: 1e-3,
            t_end: 1.0,
            record_every: 1,
            flow: "rest".into(),
            rate: 0.0,
            frequency: 1.0,
            hyper_strength: 0.0,
            hyper_exponent: 1,
            initial: Initial::Equilibrium,
            perturbation: 0.5,
            paths: 10_000,
            scheme: BdScheme::SemiImplicit,
            inequality: "all".into(),
            beta: 0.0,
            gamma: 0.0,
            p: 3.0,
            levels: 4,
            allow_outside: false,
            seed: 0,
            output: None,
            checkpoint: None,
        }
    }

    pub fn params(&self) -> Result<PotentialParams> {
        PotentialParams::new(self.k, self.nu)
    }

    pub fn flow_kind(&self) -> Result<FlowKind> {
        FlowKind::from_name(&self.flow, self.rate, self.frequency)
    }

    pub fn protocol(&self) -> Result<FlowProtocol> {
        Ok(FlowProtocol { kind: self.flow_kind()?, hyperviscosity: self.hyperviscosity()? })
    }

    pub fn hyperviscosity(&self) -> Result<Option<Hyperviscosity>> {
        if self.hyper_strength == 0.0 {
            Ok(None)
        } else {
            Hyperviscosity::new(self.hyper_strength, self.hyper_exponent).map(Some)
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn is_coupled(&self) -> bool {
        self.flow == "coupled"
    }

    /// Checkpoint dimensions `(nr, ntheta, nx, ny)` this spec produces.
    pub fn dims(&self) -> Dims {
        let (nx, ny) = if self.is_coupled() { (self.nx, self.ny) } else { (1, 1) };
        [self.nr, self.ntheta, nx, ny].map(|d| d as u32)
    }

    /// Checks every field against the window of the module it feeds.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.k > 0.0 && self.k.is_finite()) {
            return fail(format!("k = {} violates k > 0", self.k));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return fail(format!("nu = {} violates nu > 0", self.nu));
        }
        if !diagnostics::shift_is_admissible(self.a) {
            return fail(format!("shift a = {} is not admissible for the log^2 functional (try a >= 8)", self.a));
        }
        if self.nr < 4 || self.ntheta < 4 {
            return fail(format!("nr = {}, ntheta = {} violate nr, ntheta >= 4", self.nr, self.ntheta));
        }
        if self.nx < 4 || self.ny < 4 || self.nx % 2 != 0 || self.ny % 2 != 0 {
            return fail(format!("nx = {}, ny = {} must be even and at least 4", self.nx, self.ny));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail(format!("dt = {} violates dt > 0", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return fail(format!("t_end = {} violates T > 0", self.t_end));
        }
        if self.record_every == 0 {
            return fail("record_every must be at least 1".into());
        }
        self.flow_kind()?;
        self.hyperviscosity()?;
        if !(0.0..1.0).contains(&self.perturbation) {
            return fail(format!("perturbation = {} must lie in [0, 1)", self.perturbation));
        }
        if self.paths < 2 {
            return fail(format!("paths = {} violates M >= 2", self.paths));
        }
        if self.inequality != "all" && !INEQUALITY_NAMES.contains(&self.inequality.as_str()) {
            return fail(format!("unknown inequality `{}`", self.inequality));
        }
        if self.levels < 2 {
            return fail(format!("levels = {} violates levels >= 2", self.levels));
        }
        if self.inequality != "all" {
            self.inequality_kind()?.validate(self.allow_outside)?;
        }
        if self.mode == Mode::BdOracle && self.is_coupled() {
            return fail("bd-oracle needs a prescribed flow, not `coupled`".into());
        }
        if self.mode == Mode::Diagnose && self.checkpoint.is_none() {
            return fail("diagnose needs a `checkpoint` path to read".into());
        }
        Ok(())
    }

    /// The single inequality selected by `inequality`, `k`, `beta`, `gamma`, `p`.
    pub fn inequality_kind(&self) -> Result<InequalityKind> {
        let (k, beta, gamma, p) = (self.k, self.beta, self.gamma, self.p);
        Ok(match self.inequality.as_str() {
            "hardy1" => InequalityKind::Hardy1 { k },
            "hardy_inter" => InequalityKind::HardyInter { k },
            "hardy_inter2" => InequalityKind::HardyInter2 { k, beta },
            "hardy_inter_log" => InequalityKind::HardyInterLog { k, beta, gamma },
            "stress_corollary" => InequalityKind::StressCorollary { k },
            "wsi" => InequalityKind::Wsi { k, p },
            other => return Err(Error::Config(format!("`{other}` does not name a single inequality"))),
        })
    }

    /// Renders the spec as config text that [`parse_config`] maps back to `self`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("writing to a String");
        kv("mode", self.mode.name().into());
        kv("k", format!("{:?}", self.k));
        kv("nu", format!("{:?}", self.nu));
        kv("a", format!("{:?}", self.a));
        kv("nr", self.nr.to_string());
        kv("ntheta", self.ntheta.to_string());
        kv("nx", self.nx.to_string());
        kv("ny", self.ny.to_string());
        kv("dt", format!("{:?}", self.dt));
        kv("t_end", format!("{:?}", self.t_end));
        kv("record_every", self.record_every.to_string());
        kv("flow", self.flow.clone());
        kv("rate", format!("{:?}", self.rate));
        kv("frequency", format!("{:?}", self.frequency));
        kv("hyper_strength", format!("{:?}", self.hyper_strength));
        kv("hyper_exponent", self.hyper_exponent.to_string());
        kv("initial", match self.initial {
            Initial::Equilibrium => "equilibrium".into(),
            Initial::Perturbed => "perturbed".into(),
        });
        kv("perturbation", format!("{:?}", self.perturbation));
        kv("paths", self.paths.to_string());
        kv("scheme", match self.scheme {
            BdScheme::EulerMaruyama => "euler".into(),
            BdScheme::SemiImplicit => "semi-implicit".into(),
        });
        kv("inequality", self.inequality.clone());
        kv("beta", format!("{:?}", self.beta));
        kv("gamma", format!("{:?}", self.gamma));
        kv("p", format!("{:?}", self.p));
        kv("levels", self.levels.to_string());
        kv("allow_outside", self.allow_outside.to_string());
        kv("seed", self.seed.to_string());
        if let Some(p) = &self.output {
            kv("output", p.display().to_string());
        }
        if let Some(p) = &self.checkpoint {
            kv("checkpoint", p.display().to_string());
        }
        s
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("line {line}: cannot parse `{value}` as a value for `{key}`")))
}

/// Parses and validates a config. `mode_hint` supplies the mode when the text
/// has none; if both are present they must agree.
pub fn parse_config_with_mode(text: &str, mode_hint: Option<Mode>) -> Result<RunSpec> {
    let mut mode = None;
    let mut spec = RunSpec::with_mode(Mode::Simulate);
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::Config(format!("line {line}: duplicate key `{key}`")));
        }
        match key {
            "mode" => mode = Some(value.parse::<Mode>().map_err(|e| Error::Config(format!("line {line}: {e}")))?),
            "k" => spec.k = parse_value(line, key, value)?,
            "nu" => spec.nu = parse_value(line, key, value)?,
            "a" => spec.a = parse_value(line, key, value)?,
            "nr" => spec.nr = parse_value(line, key, value)?,
            "ntheta" => spec.ntheta = parse_value(line, key, value)?,
            "nx" => spec.nx = parse_value(line, key, value)?,
            "ny" => spec.ny = parse_value(line, key, value)?,
            "dt" => spec.dt = parse_value(line, key, value)?,
            "t_end" => spec.t_end = parse_value(line, key, value)?,
            "record_every" => spec.record_every = parse_value(line, key, value)?,
            "flow" => spec.flow = value.to_string(),
            "rate" => spec.rate = parse_value(line, key, value)?,
            "frequency" => spec.frequency = parse_value(line, key, value)?,
            "hyper_strength" => spec.hyper_strength = parse_value(line, key, value)?,
            "hyper_exponent" => spec.hyper_exponent = parse_value(line, key, value)?,
            "initial" => {
                spec.initial = match value {
                    "equilibrium" => Initial::Equilibrium,
                    "perturbed" => Initial::Perturbed,
                    _ => return Err(Error::Config(format!("line {line}: unknown initial state `{value}`"))),
                }
            }
            "perturbation" => spec.perturbation = parse_value(line, key, value)?,
            "paths" => spec.paths = parse_value(line, key, value)?,
            "scheme" => {
                spec.scheme = BdScheme::from_name(value).map_err(|e| Error::Config(format!("line {line}: {e}")))?
            }
            "inequality" => spec.inequality = value.to_string(),
            "beta" => spec.beta = parse_value(line, key, value)?,
            "gamma" => spec.gamma = parse_value(line, key, value)?,
            "p" => spec.p = parse_value(line, key, value)?,
            "levels" => spec.levels = parse_value(line, key, value)?,
            "allow_outside" => spec.allow_outside = parse_value(line, key, value)?,
            "seed" => spec.seed = parse_value(line, key, value)?,
            "output" => spec.output = Some(PathBuf::from(value)),
            "checkpoint" => spec.checkpoint = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("line {line}: unknown key `{other}`"))),
        }
    }
    spec.mode = match (mode, mode_hint) {
        (Some(m), Some(h)) if m != h => {
            return Err(Error::Config(format!(
                "config says mode = {} but the command line asked for {}",
                m.name(),
                h.name()
            )))
        }
        (Some(m), _) | (None, Some(m)) => m,
        (None, None) => return Err(Error::Config("missing required key `mode`".into())),
    };
    spec.validate()?;
    Ok(spec)
}

/// Parses and validates a config; `mode` is required.
pub fn parse_config(text: &str) -> Result<RunSpec> {
    parse_config_with_mode(text, None)
}

/// Outcome of [`execute`]: the main CSV text and a one-line summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    pub summary: String,
}

/// Homogeneous Fokker–Planck run under the spec's protocol.
pub fn run_homogeneous(spec: &RunSpec) -> Result<(PhaseDensity, DiagnosticsLedger)> {
    let params = spec.params()?;
    let grid = ConfigGrid::new(spec.nr, spec.ntheta)?;
    let fp = FokkerPlanck::new(grid, params, spec.dt)?;
    let protocol = spec.protocol()?;
    let (grid, eq) = (fp.grid(), fp.equilibrium());
    let mut psi = match spec.initial {
        Initial::Equilibrium => eq.density(1.0, grid),
        Initial::Perturbed => eq.perturbed(spec.perturbation, spec.seed, grid),
    };
    let mut ledger = DiagnosticsLedger::new();
    ledger.push(diagnostics::homogeneous_record(0.0, &psi, &protocol_kappa(&protocol, 0.0)?, &fp, spec.a)?);
    let steps = spec.steps();
    for s in 1..=steps {
        let t0 = (s - 1) as f64 * spec.dt;
        psi = fp.step(&psi, &protocol_kappa(&protocol, t0)?)?;
        if s % spec.record_every == 0 || s == steps {
            let t = s as f64 * spec.dt;
            ledger.push(diagnostics::homogeneous_record(t, &psi, &protocol_kappa(&protocol, t)?, &fp, spec.a)?);
        }
    }
    Ok((psi, ledger))
}

/// Coupled solver and initial state for the spec.
pub fn coupled_setup(spec: &RunSpec) -> Result<(CoupledSolver, CoupledState)> {
    let params = spec.params()?;
    let spatial = SpectralGrid::new(spec.nx, spec.ny)?;
    let grid = ConfigGrid::new(spec.nr, spec.ntheta)?;
    let mut solver = CoupledSolver::new(spatial, grid, params, spec.dt, spec.hyperviscosity()?)?;
    solver.shift = spec.a;
    let mut state = solver.equilibrium_state(1.0);
    if spec.initial == Initial::Perturbed {
        let (g, eq) = (solver.fp.grid(), solver.fp.equilibrium());
        state.field = (0..state.field.len())
            .map(|p| eq.perturbed(spec.perturbation, spec.seed.wrapping_add(p as u64), g))
            .collect();
    }
    if spec.rate != 0.0 {
        state.flow = MacroState::taylor_green(&solver.ns.grid, spec.rate);
    }
    Ok((solver, state))
}

fn write_outputs(spec: &RunSpec, out: &RunOutput) -> Result<()> {
    if let Some(path) = &spec.output {
        write_text(&out.csv, path)?;
    }
    Ok(())
}

/// Runs the spec's mode, writes the CSV (when `output` is set) and any checkpoint.
pub fn execute(spec: &RunSpec) -> Result<RunOutput> {
    spec.validate()?;
    let out = match spec.mode {
        Mode::Simulate => simulate(spec)?,
        Mode::BdOracle => {
            let params = spec.params()?;
            let protocol = spec.protocol()?;
            let (_, records) =
                bd_run(&protocol, &params, spec.paths, spec.t_end, spec.dt, spec.record_every, spec.seed, spec.scheme)?;
            let last = records.last().expect("bd_run records t = 0");
            RunOutput {
                csv: bd_csv(&records),
                summary: format!(
                    "bd-oracle: M = {}, t = {}, tau = {:?}, stderr = {:?}",
                    spec.paths, last.t, last.tau.tau, last.stderr.tau
                ),
            }
        }
        Mode::ValidateInequalities => {
            let reports = inequality_reports(spec)?;
            let summary = reports
                .iter()
                .map(|r| format!("{} k={} sup={:.6e} change={:.3e}", r.kind.name(), r.kind.k(), r.sup_ratio.last().unwrap_or(&0.0), r.relative_change))
                .collect::<Vec<_>>()
                .join("; ");
            RunOutput { csv: inequality_csv(&reports), summary }
        }
        Mode::Diagnose => diagnose(spec)?,
    };
    write_outputs(spec, &out)?;
    Ok(out)
}

fn simulate(spec: &RunSpec) -> Result<RunOutput> {
    if spec.is_coupled() {
        let (solver, state) = coupled_setup(spec)?;
        let (end, ledger) = solver.run(&state, spec.steps(), spec.record_every)?;
        if let Some(path) = &spec.checkpoint {
            checkpoint_write(&end.field, &end.flow, solver.fp.grid(), path)?;
        }
        let last = ledger.last().expect("initial record");
        Ok(RunOutput {
            csv: timeseries_csv(&ledger),
            summary: format!("simulate (coupled): t = {}, F = {:.6e}, kinetic = {:.6e}", last.t, last.free_energy, last.kinetic),
        })
    } else {
        let (psi, ledger) = run_homogeneous(spec)?;
        if let Some(path) = &spec.checkpoint {
            let grid = ConfigGrid::new(spec.nr, spec.ntheta)?;
            let mut flow = MacroState::at_rest(1, 1);
            flow.time = ledger.last().map_or(0.0, |r| r.t);
            checkpoint_write(std::slice::from_ref(&psi), &flow, &grid, path)?;
        }
        let last = ledger.last().expect("initial record");
        Ok(RunOutput {
            csv: timeseries_csv(&ledger),
            summary: format!("simulate ({}): t = {}, F = {:.6e}, N2 = {:.6e}", spec.flow, last.t, last.free_energy, last.n2),
        })
    }
}

fn diagnose(spec: &RunSpec) -> Result<RunOutput> {
    let path = spec.checkpoint.as_deref().expect("validated");
    let ck = checkpoint_read_expecting(path, spec.dims())?;
    let mut ledger = DiagnosticsLedger::new();
    if spec.is_coupled() {
        let (solver, _) = coupled_setup(spec)?;
        let field = ck.field(solver.fp.grid())?;
        ledger.push(solver.record(&CoupledState { flow: ck.flow.clone(), field })?);
    } else {
        let grid = ConfigGrid::new(spec.nr, spec.ntheta)?;
        let fp = FokkerPlanck::new(grid, spec.params()?, spec.dt)?;
        let psi = ck.field(fp.grid())?.remove(0);
        ledger.push(diagnostics::homogeneous_record(ck.flow.time, &psi, &VelocityGradient::ZERO, &fp, spec.a)?);
    }
    let r = ledger.last().expect("one record");
    Ok(RunOutput {
        csv: timeseries_csv(&ledger),
        summary: format!("diagnose {}: t = {}, F = {:.6e}, D_psi = {:.6e}, N2 = {:.6e}", path.display(), r.t, r.free_energy, r.diss_psi, r.n2),
    })
}

/// The inequality sweep used when `inequality = all`.
pub fn standard_inequality_suite() -> Vec<InequalityKind> {
    vec![
        InequalityKind::Hardy1 { k: 1.5 },
        InequalityKind::Hardy1 { k: 2.0 },
        InequalityKind::HardyInter { k: 0.5 },
        InequalityKind::HardyInter { k: 1.0 },
        InequalityKind::HardyInter { k: 2.0 },
        InequalityKind::HardyInter2 { k: 1.0, beta: 0.5 },
        InequalityKind::HardyInter2 { k: 0.8, beta: 0.3 },
        InequalityKind::HardyInterLog { k: 1.0, beta: 0.5, gamma: 0.5 },
        InequalityKind::HardyInterLog { k: 1.0, beta: 0.5, gamma: 1.0 },
        InequalityKind::StressCorollary { k: 1.0 },
        InequalityKind::Wsi { k: 1.0, p: 3.0 },
    ]
}

fn inequality_reports(spec: &RunSpec) -> Result<Vec<ConstantReport>> {
    let family = FamilySpec::default();
    if spec.inequality == "all" {
        standard_inequality_suite().iter().map(|k| empirical_constant(k, &family, spec.levels, false)).collect()
    } else {
        Ok(vec![empirical_constant(&spec.inequality_kind()?, &family, spec.levels, spec.allow_outside)?])
    }
}

/// Reads a config file, applying a command-line mode and seed.
pub fn load_config(path: &Path, mode: Mode, seed: Option<u64>, out: Option<PathBuf>) -> Result<RunSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut spec = parse_config_with_mode(&text, Some(mode))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    if out.is_some() {
        spec.output = out;
    }
    Ok(spec)
}
