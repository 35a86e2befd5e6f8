//! Finite-volume solver for the configuration-space Fokker–Planck equation at a
//! single spatial point,
//!
//! ```text
//! d/dt psi = div_R [ -kappa R psi + psi_inf grad_R (psi / psi_inf) ].
//! ```
//!
//! Each step is an IMEX split: an explicit upwind drift update followed by an
//! implicit solve of the weighted diffusion written for `g = psi / psi_inf`.
//! The diffusion flux across a face is `psi_inf_f (g_b - g_a) / spacing`, with
//! `psi_inf_f` the geometric mean of the adjacent cells, so the grid's discrete
//! Maxwellian is an exact steady state and the boundary circle (where the face
//! weight vanishes) carries no flux. Both sub-steps are written as telescoping
//! face fluxes and therefore conserve mass to round-off.

use crate::density::{DiscreteEquilibrium, PhaseDensity};
use crate::error::{Error, Result};
use crate::grid::ConfigGrid;
use crate::linalg::BandedCholesky;
use crate::model::PotentialParams;

/// Values this far below zero are reported as a scheme violation.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-13;

/// Relative residual targeted by the implicit solve.
pub const SOLVER_TOLERANCE: f64 = 1e-12;

const MAX_REFINEMENTS: usize = 8;

/// Velocity gradient `kappa_ij = d u_i / d x_j` as seen by the micro equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGradient {
    kappa: [[f64; 2]; 2],
}

impl VelocityGradient {
    pub const ZERO: Self = Self { kappa: [[0.0; 2]; 2] };

    /// Fails unless the trace vanishes to within `1e-14` (scaled by the entry size).
    pub fn new(kappa: [[f64; 2]; 2]) -> Result<Self> {
        let trace = kappa[0][0] + kappa[1][1];
        let scale = kappa.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        if !kappa.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::Config("velocity gradient has non-finite entries".into()));
        }
        if trace.abs() > 1e-14 * scale {
            return Err(Error::Config(format!("velocity gradient must be trace-free, trace = {trace:e}")));
        }
        Ok(Self { kappa })
    }

    /// Removes the trace of a numerically computed gradient.
    pub fn trace_free_part(kappa: [[f64; 2]; 2]) -> Self {
        let half = 0.5 * (kappa[0][0] + kappa[1][1]);
        Self { kappa: [[kappa[0][0] - half, kappa[0][1]], [kappa[1][0], kappa[1][1] - half]] }
    }

    pub fn shear(rate: f64) -> Self {
        Self { kappa: [[0.0, rate], [0.0, 0.0]] }
    }

    pub fn extension(rate: f64) -> Self {
        Self { kappa: [[rate, 0.0], [0.0, -rate]] }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.kappa
    }

    pub fn apply(&self, r: [f64; 2]) -> [f64; 2] {
        let k = &self.kappa;
        [k[0][0] * r[0] + k[0][1] * r[1], k[1][0] * r[0] + k[1][1] * r[1]]
    }

    /// Frobenius norm squared, `|kappa|^2`.
    pub fn norm2(&self) -> f64 {
        self.kappa.iter().flatten().map(|v| v * v).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.kappa.iter().flatten().all(|&v| v == 0.0)
    }

    /// `kappa : tau`.
    pub fn contract(&self, tau: &[[f64; 2]; 2]) -> f64 {
        (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| self.kappa[i][j] * tau[i][j]).sum()
    }
}

/// Normal flux `J . n` on every face of the grid, in the grid's face order.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField {
    pub fluxes: Vec<f64>,
}

/// Implicit diffusion part of the step for a fixed grid, potential and `dt`.
///
/// The factorization does not depend on the flow, so one instance can be
/// shared read-only by every spatial point of a coupled run.
#[derive(Debug, Clone)]
pub struct FokkerPlanck {
    grid: ConfigGrid,
    params: PotentialParams,
    equilibrium: DiscreteEquilibrium,
    dt: f64,
    /// `psi_inf_f * length / spacing` per face (zero on the boundary circle).
    weights: Vec<f64>,
    /// `area * psi_inf` per cell, the mass matrix in the `g` variable.
    mass_diag: Vec<f64>,
    factor: BandedCholesky,
}

impl FokkerPlanck {
    pub fn new(grid: ConfigGrid, params: PotentialParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let equilibrium = DiscreteEquilibrium::new(&grid, &params);
        let weights = equilibrium.face_weights.clone();
        let mass_diag: Vec<f64> =
            grid.cell_areas.iter().zip(&equilibrium.values).map(|(a, p)| a * p).collect();

        let n = grid.len();
        let bw = grid.ntheta;
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for (c, m) in mass_diag.iter().enumerate() {
            band[c * w] = *m;
        }
        for (f, &wf) in grid.faces.iter().zip(&weights) {
            if let Some(b) = f.outer {
                let a = f.inner;
                let (hi, lo) = if a > b { (a, b) } else { (b, a) };
                band[a * w] += dt * wf;
                band[b * w] += dt * wf;
                band[hi * w + (hi - lo)] -= dt * wf;
            }
        }
        let factor = BandedCholesky::factor(n, bw, |i, j| band[i * w + (i - j)])?;
        Ok(Self { grid, params, equilibrium, dt, weights, mass_diag, factor })
    }

    pub fn grid(&self) -> &ConfigGrid {
        &self.grid
    }

    pub fn params(&self) -> &PotentialParams {
        &self.params
    }

    pub fn equilibrium(&self) -> &DiscreteEquilibrium {
        &self.equilibrium
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Diffusion face weights `psi_inf_f * length / spacing`.
    pub fn face_weights(&self) -> &[f64] {
        &self.weights
    }

    /// `dt * max_c (sum of outgoing drift speed * face length) / area_c`.
    ///
    /// The explicit upwind update is a convex combination exactly when this
    /// number does not exceed one.
    pub fn courant_number(&self, kappa: &VelocityGradient) -> f64 {
        if kappa.is_zero() {
            return 0.0;
        }
        let mut outflow = vec![0.0; self.grid.len()];
        for f in &self.grid.faces {
            let Some(b) = f.outer else { continue };
            let v = kappa.apply(f.midpoint);
            let vn = (v[0] * f.normal[0] + v[1] * f.normal[1]) * f.length;
            if vn > 0.0 {
                outflow[f.inner] += vn;
            } else {
                outflow[b] -= vn;
            }
        }
        let worst = outflow.iter().zip(&self.grid.cell_areas).map(|(o, a)| o / a).fold(0.0, f64::max);
        self.dt * worst
    }

    fn check_cfl(&self, kappa: &VelocityGradient) -> Result<()> {
        let courant = self.courant_number(kappa);
        if courant > 1.0 {
            Err(Error::StepSize { dt: self.dt, courant })
        } else {
            Ok(())
        }
    }

    /// Upwind drift fluxes `(kappa R psi) . n * length` per face.
    pub fn drift_fluxes(&self, psi: &[f64], kappa: &VelocityGradient) -> FluxField {
        let fluxes = self
            .grid
            .faces
            .iter()
            .map(|f| match f.outer {
                None => 0.0,
                Some(b) => {
                    let v = kappa.apply(f.midpoint);
                    let vn = (v[0] * f.normal[0] + v[1] * f.normal[1]) * f.length;
                    if vn > 0.0 {
                        vn * psi[f.inner]
                    } else {
                        vn * psi[b]
                    }
                }
            })
            .collect();
        FluxField { fluxes }
    }

    /// Diffusive fluxes `-psi_inf_f (g_b - g_a) / spacing * length` per face,
    /// oriented from inner to outer cell.
    pub fn diffusion_fluxes(&self, psi: &[f64]) -> FluxField {
        let g: Vec<f64> = psi.iter().zip(&self.equilibrium.values).map(|(p, e)| p / e).collect();
        let fluxes = self
            .grid
            .faces
            .iter()
            .zip(&self.weights)
            .map(|(f, &w)| match f.outer {
                None => 0.0,
                Some(b) => -w * (g[b] - g[f.inner]),
            })
            .collect();
        FluxField { fluxes }
    }

    /// Total flux `J . n` with `J = kappa R psi - psi_inf grad(psi / psi_inf)`,
    /// integrated over each face.
    pub fn total_fluxes(&self, psi: &PhaseDensity, kappa: &VelocityGradient) -> FluxField {
        let d = self.drift_fluxes(psi.values(), kappa);
        let e = self.diffusion_fluxes(psi.values());
        FluxField { fluxes: d.fluxes.iter().zip(&e.fluxes).map(|(a, b)| a + b).collect() }
    }

    /// Adds `scale * (-div F)` per unit area to `out`.
    fn accumulate_divergence(&self, flux: &[f64], scale: f64, out: &mut [f64]) {
        for (f, &q) in self.grid.faces.iter().zip(flux) {
            if let Some(b) = f.outer {
                out[f.inner] -= scale * q / self.grid.cell_areas[f.inner];
                out[b] += scale * q / self.grid.cell_areas[b];
            }
        }
    }

    /// `(L g)_c = sum_f w_f (g_c - g_nbr)`, the weighted graph Laplacian.
    fn laplacian(&self, g: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (f, &w) in self.grid.faces.iter().zip(&self.weights) {
            if let Some(b) = f.outer {
                let q = w * (g[f.inner] - g[b]);
                out[f.inner] += q;
                out[b] -= q;
            }
        }
    }

    /// Solves `(diag(area psi_inf) + dt L) g = area * psi_star` and returns
    /// `psi_star - dt L g / area`.
    fn implicit_diffusion(&self, psi_star: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let rhs: Vec<f64> = psi_star.iter().zip(&self.grid.cell_areas).map(|(p, a)| p * a).collect();
        let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rhs_norm == 0.0 {
            return vec![0.0; n];
        }
        let mut g = rhs.clone();
        self.factor.solve_in_place(&mut g);
        let mut lg = vec![0.0; n];
        let mut residual = vec![0.0; n];
        for _ in 0..MAX_REFINEMENTS {
            self.laplacian(&g, &mut lg);
            for c in 0..n {
                residual[c] = rhs[c] - (self.mass_diag[c] * g[c] + self.dt * lg[c]);
            }
            let rnorm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rnorm <= SOLVER_TOLERANCE * rhs_norm {
                break;
            }
            self.factor.solve_in_place(&mut residual);
            g.iter_mut().zip(&residual).for_each(|(x, d)| *x += d);
        }
        self.laplacian(&g, &mut lg);
        psi_star
            .iter()
            .zip(&lg)
            .zip(&self.grid.cell_areas)
            .map(|((p, l), a)| p - self.dt * l / a)
            .collect()
    }

    /// Advances `psi` by one step of length `dt` under the velocity gradient `kappa`.
    pub fn step(&self, psi: &PhaseDensity, kappa: &VelocityGradient) -> Result<PhaseDensity> {
        self.grid.check_len(psi.len())?;
        self.check_cfl(kappa)?;
        let mut star = psi.values().to_vec();
        if !kappa.is_zero() {
            let drift = self.drift_fluxes(psi.values(), kappa);
            self.accumulate_divergence(&drift.fluxes, self.dt, &mut star);
        }
        let next = self.implicit_diffusion(&star);
        if let Some((cell, &value)) =
            next.iter().enumerate().find(|(_, &v)| v < -NEGATIVITY_TOLERANCE || !v.is_finite())
        {
            return Err(Error::SchemeViolation { cell, value });
        }
        Ok(PhaseDensity::from_trusted(next, &self.grid))
    }

    /// Runs `steps` steps at constant `kappa`.
    pub fn run(&self, psi: &PhaseDensity, kappa: &VelocityGradient, steps: usize) -> Result<PhaseDensity> {
        let mut cur = psi.clone();
        for _ in 0..steps {
            cur = self.step(&cur, kappa)?;
        }
        Ok(cur)
    }

    /// Iterates [`step`](Self::step) from `initial` (or the Maxwellian) until
    /// `||psi_{n+1} - psi_n||_1 / dt < tol`; the result has unit mass.
    pub fn steady_state(
        &self,
        kappa: &VelocityGradient,
        tol: f64,
        initial: Option<&PhaseDensity>,
        max_iterations: usize,
    ) -> Result<PhaseDensity> {
        if !(tol > 0.0) {
            return Err(Error::Config(format!("steady-state tolerance must be positive, got {tol}")));
        }
        let mut cur = match initial {
            Some(p) => p.normalized_to(1.0, &self.grid),
            None => self.equilibrium.density(1.0, &self.grid),
        };
        let mut change = f64::INFINITY;
        for _ in 0..max_iterations {
            let next = self.step(&cur, kappa)?;
            change = next.l1_distance(&cur, &self.grid) / self.dt;
            cur = next;
            if change < tol {
                return Ok(cur.normalized_to(1.0, &self.grid));
            }
        }
        Err(Error::Convergence { iterations: max_iterations, last_change: change })
    }
}

/// A [`FokkerPlanck`] solver bound to one constant velocity gradient.
#[derive(Debug, Clone)]
pub struct StepOperator {
    pub solver: FokkerPlanck,
    pub kappa: VelocityGradient,
}

impl StepOperator {
    pub fn apply(&self, psi: &PhaseDensity) -> Result<PhaseDensity> {
        self.solver.step(psi, &self.kappa)
    }
}

/// Builds the step operator for `kappa` and `dt`, rejecting CFL violations up front.
pub fn assemble_step_operator(
    kappa: VelocityGradient,
    dt: f64,
    grid: &ConfigGrid,
    params: &PotentialParams,
) -> Result<StepOperator> {
    let solver = FokkerPlanck::new(grid.clone(), *params, dt)?;
    solver.check_cfl(&kappa)?;
    Ok(StepOperator { solver, kappa })
}
