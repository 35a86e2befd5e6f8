//! Macroscopic flow: prescribed homogeneous protocols and the coupled
//! Navier–Stokes / Fokker–Planck system on the periodic box.

mod spectral;
mod transport;

use rayon::prelude::*;

pub use spectral::{Hyperviscosity, MacroState, NavierStokes, SpectralGrid};
pub use transport::{advect_field, FaceVelocities};

use crate::density::PhaseDensity;
use crate::diagnostics::{self, DiagnosticsLedger, LedgerRecord};
use crate::error::{Error, Result};
use crate::fokker_planck::{FokkerPlanck, VelocityGradient};
use crate::grid::ConfigGrid;
use crate::model::PotentialParams;
use crate::stress::{kramers_stress, StressTensor};

/// Flow imposed on the dumbbells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowKind {
    Rest,
    /// `kappa = [[0, rate], [0, 0]]`.
    SteadyShear { rate: f64 },
    /// `kappa = diag(rate, -rate)`.
    PlanarExtension { rate: f64 },
    /// Shear with rate `amplitude * cos(frequency * t)`.
    OscillatoryShear { amplitude: f64, frequency: f64 },
    /// Velocity gradient taken from the resolved Navier–Stokes field.
    Coupled,
}

impl FlowKind {
    /// Parses the kind name used in config files; `rate` and `frequency`
    /// fill the parameters of the parametrised kinds.
    pub fn from_name(name: &str, rate: f64, frequency: f64) -> Result<Self> {
        Ok(match name {
            "rest" => Self::Rest,
            "shear" => Self::SteadyShear { rate },
            "extension" => Self::PlanarExtension { rate },
            "oscillatory" => Self::OscillatoryShear { amplitude: rate, frequency },
            "coupled" => Self::Coupled,
            other => return Err(Error::Config(format!("unknown flow kind `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rest => "rest",
            Self::SteadyShear { .. } => "shear",
            Self::PlanarExtension { .. } => "extension",
            Self::OscillatoryShear { .. } => "oscillatory",
            Self::Coupled => "coupled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowProtocol {
    pub kind: FlowKind,
    pub hyperviscosity: Option<Hyperviscosity>,
}

impl FlowProtocol {
    pub fn new(kind: FlowKind) -> Self {
        Self { kind, hyperviscosity: None }
    }
}

/// Velocity gradient of a prescribed protocol at time `t`.
pub fn protocol_kappa(protocol: &FlowProtocol, t: f64) -> Result<VelocityGradient> {
    Ok(match protocol.kind {
        FlowKind::Rest => VelocityGradient::ZERO,
        FlowKind::SteadyShear { rate } => VelocityGradient::shear(rate),
        FlowKind::PlanarExtension { rate } => VelocityGradient::extension(rate),
        FlowKind::OscillatoryShear { amplitude, frequency } => VelocityGradient::shear(amplitude * (frequency * t).cos()),
        FlowKind::Coupled => {
            return Err(Error::Config("a coupled protocol has no prescribed velocity gradient".into()))
        }
    })
}

/// Velocity field plus one configuration density per spatial grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub flow: MacroState,
    pub field: Vec<PhaseDensity>,
}

impl CoupledState {
    pub fn time(&self) -> f64 {
        self.flow.time
    }

    /// `int int psi dR dx`.
    pub fn total_mass(&self) -> f64 {
        self.field.iter().map(|p| p.mass()).sum::<f64>() * self.flow.cell_volume()
    }
}

/// Splitting integrator for the coupled system.
///
/// Each step computes the stress from the current micro field, advances the
/// velocity, transports the field with the new velocity and finally applies
/// one Fokker–Planck step per spatial point with the new velocity gradient.
#[derive(Debug, Clone)]
pub struct CoupledSolver {
    pub ns: NavierStokes,
    pub fp: FokkerPlanck,
    /// Shift `a` used for the `N1`/`N2` diagnostics.
    pub shift: f64,
}

impl CoupledSolver {
    pub fn new(
        spatial: SpectralGrid,
        config: ConfigGrid,
        params: PotentialParams,
        dt: f64,
        hyper: Option<Hyperviscosity>,
    ) -> Result<Self> {
        let ns = NavierStokes::new(spatial, params.nu, hyper)?;
        let fp = FokkerPlanck::new(config, params, dt)?;
        Ok(Self { ns, fp, shift: diagnostics::DEFAULT_SHIFT })
    }

    pub fn dt(&self) -> f64 {
        self.fp.dt()
    }

    /// Zero velocity and `mass * psi_inf` at every point.
    pub fn equilibrium_state(&self, mass: f64) -> CoupledState {
        let psi = self.fp.equilibrium().density(mass, self.fp.grid());
        CoupledState { flow: MacroState::zeros(&self.ns.grid), field: vec![psi; self.ns.grid.len()] }
    }

    pub fn stress_field(&self, field: &[PhaseDensity]) -> Result<Vec<StressTensor>> {
        let (grid, params) = (self.fp.grid(), self.fp.params());
        field.par_iter().map(|p| kramers_stress(p, grid, params)).collect()
    }

    /// Trace-free velocity gradient at every spatial point.
    pub fn kappa_field(&self, flow: &MacroState) -> Vec<VelocityGradient> {
        let g = flow.velocity_gradient(&self.ns.grid);
        (0..self.ns.grid.len())
            .map(|p| VelocityGradient::trace_free_part([[g[0][0][p], g[0][1][p]], [g[1][0][p], g[1][1][p]]]))
            .collect()
    }

    pub fn step(&self, state: &CoupledState) -> Result<CoupledState> {
        let n = self.ns.grid.len();
        if state.field.len() != n {
            return Err(Error::Shape { expected: n, got: state.field.len() });
        }
        let dt = self.dt();
        let tau = self.stress_field(&state.field)?;
        let flow = self.ns.step(&state.flow, &tau, dt)?;
        let faces = FaceVelocities::new(&flow, &self.ns.grid);
        let moved = advect_field(&state.field, &faces, &self.ns.grid, self.fp.grid(), dt)?;
        let kappa = self.kappa_field(&flow);
        let field = moved
            .par_iter()
            .zip(kappa.par_iter())
            .map(|(p, k)| self.fp.step(p, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoupledState { flow, field })
    }

    /// Spatially integrated diagnostics of `state`.
    pub fn record(&self, state: &CoupledState) -> Result<LedgerRecord> {
        let (grid, eq) = (self.fp.grid(), self.fp.equilibrium());
        let a = self.shift;
        let per_point = state
            .field
            .par_iter()
            .map(|p| {
                Ok([
                    diagnostics::relative_entropy(p.values(), 1.0, grid, eq),
                    diagnostics::fisher_information(p.values(), grid, eq).0,
                    diagnostics::n1_norm(p, a, grid, eq)?,
                    diagnostics::n2_norm(p, a, grid, eq)?,
                    diagnostics::log_weighted_dissipation(p, a, grid, eq)?,
                ])
            })
            .collect::<Result<Vec<[f64; 5]>>>()?;
        let vol = state.flow.cell_volume();
        let sum = |i: usize| per_point.iter().map(|v| v[i]).sum::<f64>() * vol;
        let kinetic = state.flow.kinetic_energy();
        let rel_entropy = sum(0);
        Ok(LedgerRecord {
            t: state.time(),
            free_energy: kinetic + rel_entropy,
            kinetic,
            rel_entropy,
            diss_u: state.flow.viscous_dissipation(&self.ns.grid, self.ns.nu, self.ns.hyper.as_ref()),
            diss_psi: sum(1),
            n1: sum(2),
            n2: sum(3),
            residual: 0.0,
            work: 0.0,
            log2_diss: sum(4),
            grad_u_sq: state.flow.gradient_norm2(&self.ns.grid),
        })
    }

    /// Runs `steps` steps, recording diagnostics every `every` steps (and at both ends).
    pub fn run(&self, state: &CoupledState, steps: usize, every: usize) -> Result<(CoupledState, DiagnosticsLedger)> {
        let every = every.max(1);
        let mut ledger = DiagnosticsLedger::new();
        ledger.push(self.record(state)?);
        let mut cur = state.clone();
        for s in 1..=steps {
            cur = self.step(&cur)?;
            if s % every == 0 || s == steps {
                ledger.push(self.record(&cur)?);
            }
        }
        Ok((cur, ledger))
    }
}

/// One coupled step.
pub fn couple_step(state: &CoupledState, solver: &CoupledSolver) -> Result<CoupledState> {
    solver.step(state)
}

/// One Navier–Stokes step with a frozen stress field.
pub fn ns_step(state: &MacroState, tau: &[StressTensor], dt: f64, ns: &NavierStokes) -> Result<MacroState> {
    ns.step(state, tau, dt)
}
