//! A-priori functionals along trajectories: free energy, entropy dissipation,
//! the shifted `log^2` functional `N2`, and the residuals of their balance laws.
//!
//! Gradients of `sqrt(psi / psi_inf)` are taken across cell faces, i.e. centered
//! at each face, with the same `psi_inf` face weights the Fokker–Planck solver
//! uses. The boundary circle has zero weight, which closes the stencil there.

use crate::density::{DiscreteEquilibrium, PhaseDensity};
use crate::error::{Error, Result};
use crate::fokker_planck::{FokkerPlanck, VelocityGradient};
use crate::grid::ConfigGrid;
use crate::macro_flow::MacroState;

/// Densities below this are treated as exact zeros in `x log x`.
pub const ZERO_DENSITY: f64 = 1e-300;

/// Default shift `a` in `psi~ = psi + a psi_inf`.
pub const DEFAULT_SHIFT: f64 = 8.0;

/// `p log(p / q) - p + q`, nonnegative and zero iff `p == q`.
#[inline]
pub fn entropy_density(p: f64, q: f64) -> f64 {
    if p < ZERO_DENSITY {
        q
    } else {
        p * (p / q).ln() - p + q
    }
}

/// `int psi log(psi / (rho psi_inf)) - psi + rho psi_inf dR` for a given `rho`.
pub fn relative_entropy(psi: &[f64], rho: f64, grid: &ConfigGrid, eq: &DiscreteEquilibrium) -> f64 {
    psi.iter()
        .zip(&eq.values)
        .zip(&grid.cell_areas)
        .map(|((&p, &e), &a)| a * entropy_density(p, rho * e))
        .sum()
}

/// Free energy of a density field.
///
/// With `macro_state == None` the field must hold a single homogeneous density and
/// the result is its relative entropy against `rho psi_inf`. Otherwise `field`
/// holds one density per spatial grid point of `macro_state` and the kinetic
/// energy is added.
pub fn free_energy(
    field: &[PhaseDensity],
    macro_state: Option<&MacroState>,
    grid: &ConfigGrid,
    eq: &DiscreteEquilibrium,
) -> Result<f64> {
    match macro_state {
        None => {
            if field.len() != 1 {
                return Err(Error::Shape { expected: 1, got: field.len() });
            }
            let psi = &field[0];
            Ok(relative_entropy(psi.values(), psi.mass(), grid, eq))
        }
        Some(m) => {
            if field.len() != m.points() {
                return Err(Error::Shape { expected: m.points(), got: field.len() });
            }
            let entropy: f64 = field.iter().map(|p| relative_entropy(p.values(), p.mass(), grid, eq)).sum();
            Ok(entropy * m.cell_volume() + m.kinetic_energy())
        }
    }
}

/// `4 int psi_inf |grad sqrt(psi / psi_inf)|^2 dR` and whether zero cells were present.
pub fn fisher_information(psi: &[f64], grid: &ConfigGrid, eq: &DiscreteEquilibrium) -> (f64, bool) {
    let root: Vec<f64> = psi.iter().zip(&eq.values).map(|(p, e)| (p.max(0.0) / e).sqrt()).collect();
    let reduced = psi.iter().any(|&p| p < ZERO_DENSITY);
    let sum: f64 = grid
        .faces
        .iter()
        .zip(&eq.face_weights)
        .filter_map(|(f, &w)| f.outer.map(|b| w * (root[b] - root[f.inner]).powi(2)))
        .sum();
    (4.0 * sum, reduced)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dissipation {
    pub value: f64,
    /// Set when `psi` had zero cells, where `sqrt(psi / psi_inf)` is not differentiable.
    pub reduced_accuracy: bool,
}

/// Entropy dissipation `4 int psi_inf |grad sqrt(psi / psi_inf)|^2` of one density.
pub fn entropy_dissipation(psi: &PhaseDensity, grid: &ConfigGrid, eq: &DiscreteEquilibrium) -> Result<Dissipation> {
    grid.check_len(psi.len())?;
    let (value, reduced_accuracy) = fisher_information(psi.values(), grid, eq);
    Ok(Dissipation { value, reduced_accuracy })
}

/// Entropy production of the solver's upwind drift, `sum_f q_f (log g_b - log g_a)`.
///
/// It converges to `kappa : tau` under refinement and is the work term that
/// closes the discrete free-energy balance of the homogeneous scheme.
pub fn drift_work(psi: &PhaseDensity, kappa: &VelocityGradient, solver: &FokkerPlanck) -> f64 {
    if kappa.is_zero() {
        return 0.0;
    }
    let eq = solver.equilibrium();
    let logg: Vec<f64> = psi
        .values()
        .iter()
        .zip(&eq.values)
        .map(|(&p, &e)| if p < ZERO_DENSITY { f64::NAN } else { (p / e).ln() })
        .collect();
    let flux = solver.drift_fluxes(psi.values(), kappa);
    solver
        .grid()
        .faces
        .iter()
        .zip(&flux.fluxes)
        .filter_map(|(f, &q)| {
            let b = f.outer?;
            if q == 0.0 {
                return Some(0.0);
            }
            let d = logg[b] - logg[f.inner];
            Some(if d.is_nan() { 0.0 } else { q * d })
        })
        .sum()
}

/// `F(x) = x (log^2 x - 2 log x + 2)`, the integrand of `N2^2` per unit `psi_inf`.
#[inline]
pub fn log2_integrand(x: f64) -> f64 {
    let l = x.ln();
    x * (l * l - 2.0 * l + 2.0)
}

fn shifted_ratio(psi: &[f64], eq: &DiscreteEquilibrium, a: f64) -> Vec<f64> {
    psi.iter().zip(&eq.values).map(|(p, e)| p / e + a).collect()
}

/// The shifted density `psi + a psi_inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedDensity {
    pub a: f64,
    pub values: Vec<f64>,
}

impl ShiftedDensity {
    pub fn new(psi: &PhaseDensity, a: f64, eq: &DiscreteEquilibrium) -> Result<Self> {
        if !(a > 1.0) {
            return Err(Error::Config(format!("shift must satisfy a > 1, got {a}")));
        }
        let values = psi.values().iter().zip(&eq.values).map(|(p, e)| p + a * e).collect();
        Ok(Self { a, values })
    }
}

/// `N1 = int psi~ log(psi~ / psi_inf) dR`.
pub fn n1_norm(psi: &PhaseDensity, a: f64, grid: &ConfigGrid, eq: &DiscreteEquilibrium) -> Result<f64> {
    check_shift_value(a)?;
    grid.check_len(psi.len())?;
    let x = shifted_ratio(psi.values(), eq, a);
    Ok(x.iter().zip(&eq.values).zip(&grid.cell_areas).map(|((x, e), w)| w * e * x * x.ln()).sum())
}

/// `N2 = (int psi~ [log^2(psi~/psi_inf) - 2 log(psi~/psi_inf) + 2] dR)^(1/2)`.
pub fn n2_norm(psi: &PhaseDensity, a: f64, grid: &ConfigGrid, eq: &DiscreteEquilibrium) -> Result<f64> {
    check_shift_value(a)?;
    grid.check_len(psi.len())?;
    Ok(n2_from_ratio(&shifted_ratio(psi.values(), eq, a), grid, eq))
}

fn n2_from_ratio(x: &[f64], grid: &ConfigGrid, eq: &DiscreteEquilibrium) -> f64 {
    x.iter()
        .zip(&eq.values)
        .zip(&grid.cell_areas)
        .map(|((&x, e), w)| w * e * log2_integrand(x))
        .sum::<f64>()
        .sqrt()
}

/// `int psi_inf |grad sqrt(psi~/psi_inf)|^2 log(psi~/psi_inf) dR / N2`, the
/// dissipation term carried by the `log^2` bound.
pub fn log_weighted_dissipation(psi: &PhaseDensity, a: f64, grid: &ConfigGrid, eq: &DiscreteEquilibrium) -> Result<f64> {
    check_shift_value(a)?;
    grid.check_len(psi.len())?;
    let x = shifted_ratio(psi.values(), eq, a);
    let n2 = n2_from_ratio(&x, grid, eq);
    let num: f64 = grid
        .faces
        .iter()
        .zip(&eq.face_weights)
        .filter_map(|(f, &w)| {
            let b = f.outer?;
            let (xa, xb) = (x[f.inner], x[b]);
            let log_face = 0.5 * (xa.ln() + xb.ln());
            Some(w * (xb.sqrt() - xa.sqrt()).powi(2) * log_face)
        })
        .sum();
    Ok(num / n2)
}

fn check_shift_value(a: f64) -> Result<()> {
    if a > 1.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("shift must satisfy a > 1, got {a}")))
    }
}

/// Checks numerically that the shift `a` is large enough for the two
/// log-ratio brackets of the defect-positivity argument to be nonnegative for
/// all `lambda >= sqrt(a)` and `lambda' = lambda (1 + eps)`, `eps >= 0`.
pub fn shift_is_admissible(a: f64) -> bool {
    if !(a > 1.0) {
        return false;
    }
    let lam0 = a.sqrt();
    let mut ok = true;
    for i in 0..=120 {
        let lam = lam0 * 10f64.powf(i as f64 * 0.05);
        for j in 0..=160 {
            let eps = 1e-6 * 10f64.powf(j as f64 * 0.075);
            let lam2 = lam * (1.0 + eps);
            let (l1, l2) = ((lam * lam).ln(), (lam2 * lam2).ln());
            let s = (l1 / l2).sqrt();
            let first = lam / lam2 + lam2 / lam + 2.0 - 2.0 * s - 2.0 / s;
            let u = lam * l1 / (lam2 * l2);
            let third = u + 1.0 / u + 2.0 - 2.0 * s - 2.0 / s;
            // Round-off floor relative to the O(1) terms being cancelled.
            if first < -1e-12 || third < -1e-12 {
                ok = false;
            }
        }
    }
    ok
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LedgerRecord {
    pub t: f64,
    pub free_energy: f64,
    pub kinetic: f64,
    pub rel_entropy: f64,
    /// `nu int |grad u|^2`.
    pub diss_u: f64,
    /// `4 int int psi_inf |grad sqrt(psi / psi_inf)|^2`.
    pub diss_psi: f64,
    pub n1: f64,
    pub n2: f64,
    /// Balance residual of the step ending at this record (zero for the first).
    pub residual: f64,
    /// External work `kappa : tau` for driven homogeneous runs, zero for closed runs.
    pub work: f64,
    /// Log-weighted dissipation of the `log^2` bound.
    pub log2_diss: f64,
    /// `|kappa|^2` for homogeneous runs, `int |grad u|^2` for coupled runs.
    pub grad_u_sq: f64,
}

/// `|F(t_{n+1}) - F(t_n) + dt (D_u + D_psi - W)|` with the rates averaged over
/// the two records (trapezoidal rule).
pub fn balance_residual(prev: &LedgerRecord, next: &LedgerRecord) -> f64 {
    let dt = next.t - prev.t;
    let rate = |r: &LedgerRecord| r.diss_u + r.diss_psi - r.work;
    (next.free_energy - prev.free_energy + 0.5 * dt * (rate(prev) + rate(next))).abs()
}

/// Time series of [`LedgerRecord`]s. Residuals are filled in on push.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsLedger {
    records: Vec<LedgerRecord>,
}

impl DiagnosticsLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, mut record: LedgerRecord) {
        record.residual = self.records.last().map_or(0.0, |prev| balance_residual(prev, &record));
        self.records.push(record);
    }

    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&LedgerRecord> {
        self.records.last()
    }

    /// Whether the free energy never rises by more than `1e-10 (1 + |F|)` between records.
    pub fn free_energy_non_increasing(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].free_energy <= w[0].free_energy + 1e-10 * (1.0 + w[0].free_energy.abs()))
    }

    /// Builds the `log^2` series from the stored `n2`, `log2_diss` and `grad_u_sq`.
    pub fn log2_samples(&self) -> Vec<Log2Sample> {
        self.records
            .iter()
            .map(|r| Log2Sample { t: r.t, n2: r.n2, log_dissipation: r.log2_diss, grad_u_sq: r.grad_u_sq })
            .collect()
    }
}

/// Record for a homogeneous run at one instant.
pub fn homogeneous_record(
    t: f64,
    psi: &PhaseDensity,
    kappa: &VelocityGradient,
    solver: &FokkerPlanck,
    a: f64,
) -> Result<LedgerRecord> {
    let grid = solver.grid();
    let eq = solver.equilibrium();
    let rel_entropy = relative_entropy(psi.values(), 1.0, grid, eq);
    let free = relative_entropy(psi.values(), psi.mass(), grid, eq);
    Ok(LedgerRecord {
        t,
        free_energy: free,
        kinetic: 0.0,
        rel_entropy,
        diss_u: 0.0,
        diss_psi: fisher_information(psi.values(), grid, eq).0,
        n1: n1_norm(psi, a, grid, eq)?,
        n2: n2_norm(psi, a, grid, eq)?,
        residual: 0.0,
        work: drift_work(psi, kappa, solver),
        log2_diss: log_weighted_dissipation(psi, a, grid, eq)?,
        grad_u_sq: kappa.norm2(),
    })
}

/// One instant of the `log^2` bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Log2Sample {
    pub t: f64,
    /// `N2` (homogeneous) or `int_Omega N2 dx` (coupled).
    pub n2: f64,
    /// The log-weighted dissipation term at this instant.
    pub log_dissipation: f64,
    /// `|grad u|^2` (homogeneous) or `int_Omega |grad u|^2 dx` (coupled).
    pub grad_u_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Log2Report {
    pub t: Vec<f64>,
    pub n2: Vec<f64>,
    /// Running time integral of the log-weighted dissipation.
    pub dissipation_integral: Vec<f64>,
    /// Running time integral of `|grad u|^2`.
    pub forcing_integral: Vec<f64>,
    /// Largest single-step increase of `N2`.
    pub max_n2_increase: f64,
    /// `sup_t (N2(t) + int J - N2(0)) / int |grad u|^2`, `None` without forcing.
    pub fitted_constant: Option<f64>,
    /// Whether `N2(t) + int J <= N2(0) + C int |grad u|^2` holds at every sample
    /// (with `C = 0` when unforced, up to `1e-10` relative).
    pub bounded: bool,
}

/// Builds the `log^2` ledger from a trajectory of samples (trapezoidal time integrals).
pub fn log2_ledger_check(samples: &[Log2Sample]) -> Log2Report {
    let n = samples.len();
    let mut diss = vec![0.0; n];
    let mut forcing = vec![0.0; n];
    for i in 1..n {
        let dt = samples[i].t - samples[i - 1].t;
        diss[i] = diss[i - 1] + 0.5 * dt * (samples[i].log_dissipation + samples[i - 1].log_dissipation);
        forcing[i] = forcing[i - 1] + 0.5 * dt * (samples[i].grad_u_sq + samples[i - 1].grad_u_sq);
    }
    let n2: Vec<f64> = samples.iter().map(|s| s.n2).collect();
    let max_n2_increase = n2.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let n20 = n2.first().copied().unwrap_or(0.0);
    let excess: Vec<f64> = (0..n).map(|i| n2[i] + diss[i] - n20).collect();
    let forced = forcing.last().is_some_and(|&f| f > 0.0);
    let fitted_constant = forced.then(|| {
        (1..n).filter(|&i| forcing[i] > 0.0).map(|i| excess[i] / forcing[i]).fold(0.0, f64::max)
    });
    let c = fitted_constant.unwrap_or(0.0);
    let bounded = (0..n).all(|i| excess[i] <= c * forcing[i] + 1e-10 * (1.0 + n20.abs()));
    Log2Report {
        t: samples.iter().map(|s| s.t).collect(),
        n2,
        dissipation_integral: diss,
        forcing_integral: forcing,
        max_n2_increase,
        fitted_constant,
        bounded,
    }
}
