//! Pseudo-spectral incompressible Navier–Stokes on the periodic box `[0, 2pi)^2`.
//!
//! Velocity coefficients are normalized so that `u(x) = sum_k u_k exp(i k.x)`.
//! Nonlinear products are dealiased with the 2/3 rule and the velocity itself
//! is kept inside the retained band, so the advective term conserves energy to
//! round-off. Viscous and hyperviscous terms are integrated exactly with an
//! integrating factor around a two-stage Heun step.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::stress::StressTensor;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `(1/n) (-Delta)^(2 k_h)` added to the momentum equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperviscosity {
    /// Strength `1/n`.
    pub strength: f64,
    /// Exponent `k_h`; the operator is `Delta^(2 k_h)`.
    pub exponent: u32,
}

impl Hyperviscosity {
    pub fn new(strength: f64, exponent: u32) -> Result<Self> {
        if !(strength >= 0.0 && strength.is_finite()) || exponent == 0 {
            return Err(Error::Config(format!(
                "hyperviscosity needs strength >= 0 and exponent >= 1, got ({strength}, {exponent})"
            )));
        }
        Ok(Self { strength, exponent })
    }

    /// Symbol `(1/n) |k|^(4 k_h)` at `|k|^2 = k2`.
    pub fn symbol(&self, k2: f64) -> f64 {
        self.strength * k2.powi(2 * self.exponent as i32)
    }
}

/// FFT plans and wavenumbers for an `nx x ny` periodic grid (x index fastest).
#[derive(Clone)]
pub struct SpectralGrid {
    pub nx: usize,
    pub ny: usize,
    /// Integer wavenumbers in FFT order.
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    /// Modes kept by the 2/3 rule, flattened `iy * nx + ix`.
    pub dealias: Vec<bool>,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

fn wavenumbers(n: usize) -> Vec<f64> {
    (0..n).map(|i| if i <= n / 2 { i as f64 } else { i as f64 - n as f64 }).collect()
}

impl SpectralGrid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 4 || ny < 4 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::Config(format!("spatial grid must be even and at least 4 x 4, got {nx} x {ny}")));
        }
        let kx = wavenumbers(nx);
        let ky = wavenumbers(ny);
        let keep_x = ((nx - 1) / 3) as f64;
        let keep_y = ((ny - 1) / 3) as f64;
        let mut dealias = Vec::with_capacity(nx * ny);
        for &b in &ky {
            for &a in &kx {
                dealias.push(a.abs() <= keep_x && b.abs() <= keep_y);
            }
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            nx,
            ny,
            kx,
            ky,
            dealias,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * PI / self.ny as f64
    }

    /// Grid point coordinates `(ix dx, iy dy)` of flattened index `p`.
    pub fn point(&self, p: usize) -> [f64; 2] {
        [(p % self.nx) as f64 * self.dx(), (p / self.nx) as f64 * self.dy()]
    }

    #[inline]
    pub fn k2(&self, m: usize) -> f64 {
        let (a, b) = (self.kx[m % self.nx], self.ky[m / self.nx]);
        a * a + b * b
    }

    /// Largest `|k|^2` among retained modes.
    pub fn max_retained_k2(&self) -> f64 {
        (0..self.len()).filter(|&m| self.dealias[m]).map(|m| self.k2(m)).fold(0.0, f64::max)
    }

    fn transform(&self, data: &mut [Complex64], fx: &Arc<dyn Fft<f64>>, fy: &Arc<dyn Fft<f64>>) {
        for row in data.chunks_exact_mut(self.nx) {
            fx.process(row);
        }
        let mut col = vec![Complex64::default(); self.ny];
        for ix in 0..self.nx {
            for (iy, c) in col.iter_mut().enumerate() {
                *c = data[iy * self.nx + ix];
            }
            fy.process(&mut col);
            for (iy, c) in col.iter().enumerate() {
                data[iy * self.nx + ix] = *c;
            }
        }
    }

    /// Normalized forward transform of a real field.
    pub fn forward(&self, field: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.fwd_x, &self.fwd_y);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= s);
        data
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.transform(&mut data, &self.inv_x, &self.inv_y);
        data.iter().map(|c| c.re).collect()
    }

    /// Leray projection of a spectral vector field in place.
    pub fn project(&self, f: &mut [Vec<Complex64>; 2]) {
        for m in 0..self.len() {
            let k2 = self.k2(m);
            if k2 == 0.0 {
                continue;
            }
            let (a, b) = (self.kx[m % self.nx], self.ky[m / self.nx]);
            let dot = f[0][m] * a + f[1][m] * b;
            f[0][m] -= dot * (a / k2);
            f[1][m] -= dot * (b / k2);
        }
    }

    fn truncate(&self, f: &mut [Vec<Complex64>; 2]) {
        for (m, keep) in self.dealias.iter().enumerate() {
            if !keep {
                f[0][m] = Complex64::default();
                f[1][m] = Complex64::default();
            }
        }
    }
}

/// Spectral velocity state.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroState {
    pub nx: usize,
    pub ny: usize,
    /// Coefficients of `u_x` and `u_y`, flattened `iy * nx + ix`.
    pub uhat: [Vec<Complex64>; 2],
    pub time: f64,
}

impl MacroState {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        let z = vec![Complex64::default(); grid.len()];
        Self { nx: grid.nx, ny: grid.ny, uhat: [z.clone(), z], time: 0.0 }
    }

    /// Zero velocity on an `nx x ny` layout without building FFT plans. Used for
    /// homogeneous runs, which are stored as a `1 x 1` field.
    pub fn at_rest(nx: usize, ny: usize) -> Self {
        let z = vec![Complex64::default(); nx * ny];
        Self { nx, ny, uhat: [z.clone(), z], time: 0.0 }
    }

    /// Builds a state from point values, projecting onto divergence-free
    /// fields inside the retained band.
    pub fn from_velocity(grid: &SpectralGrid, ux: &[f64], uy: &[f64]) -> Result<Self> {
        for v in [ux, uy] {
            if v.len() != grid.len() {
                return Err(Error::Shape { expected: grid.len(), got: v.len() });
            }
        }
        let mut uhat = [grid.forward(ux), grid.forward(uy)];
        grid.truncate(&mut uhat);
        grid.project(&mut uhat);
        Ok(Self { nx: grid.nx, ny: grid.ny, uhat, time: 0.0 })
    }

    /// `u = (sin x cos y, -cos x sin y)` scaled by `amplitude`.
    pub fn taylor_green(grid: &SpectralGrid, amplitude: f64) -> Self {
        let (ux, uy): (Vec<f64>, Vec<f64>) = (0..grid.len())
            .map(|p| {
                let [x, y] = grid.point(p);
                (amplitude * x.sin() * y.cos(), -amplitude * x.cos() * y.sin())
            })
            .unzip();
        Self::from_velocity(grid, &ux, &uy).expect("grid-sized fields")
    }

    pub fn points(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_volume(&self) -> f64 {
        4.0 * PI * PI / self.points() as f64
    }

    /// `int |u|^2 / 2 dx` by Parseval.
    pub fn kinetic_energy(&self) -> f64 {
        let s: f64 = self.uhat.iter().flatten().map(|c| c.norm_sqr()).sum();
        2.0 * PI * PI * s
    }

    fn weighted_sum(&self, grid: &SpectralGrid, weight: impl Fn(f64) -> f64) -> f64 {
        let s: f64 = (0..self.points())
            .map(|m| weight(grid.k2(m)) * (self.uhat[0][m].norm_sqr() + self.uhat[1][m].norm_sqr()))
            .sum();
        4.0 * PI * PI * s
    }

    /// `int |grad u|^2 dx`.
    pub fn gradient_norm2(&self, grid: &SpectralGrid) -> f64 {
        self.weighted_sum(grid, |k2| k2)
    }

    /// Energy dissipation `nu int |grad u|^2 + (1/n) int |Delta^(k_h) u|^2`.
    pub fn viscous_dissipation(&self, grid: &SpectralGrid, nu: f64, hyper: Option<&Hyperviscosity>) -> f64 {
        self.weighted_sum(grid, |k2| nu * k2 + hyper.map_or(0.0, |h| h.symbol(k2)))
    }

    /// Largest `|k . u_k|` over all modes.
    pub fn max_divergence(&self, grid: &SpectralGrid) -> f64 {
        (0..self.points())
            .map(|m| (self.uhat[0][m] * grid.kx[m % self.nx] + self.uhat[1][m] * grid.ky[m / self.nx]).norm())
            .fold(0.0, f64::max)
    }

    /// Velocity components at grid points.
    pub fn velocity(&self, grid: &SpectralGrid) -> [Vec<f64>; 2] {
        [grid.inverse(&self.uhat[0]), grid.inverse(&self.uhat[1])]
    }

    /// `d u_i / d x_j` at grid points, as `[[dux/dx, dux/dy], [duy/dx, duy/dy]]` fields.
    pub fn velocity_gradient(&self, grid: &SpectralGrid) -> [[Vec<f64>; 2]; 2] {
        let deriv = |c: &[Complex64], k: &dyn Fn(usize) -> f64| -> Vec<f64> {
            let d: Vec<Complex64> = c.iter().enumerate().map(|(m, v)| I * k(m) * v).collect();
            grid.inverse(&d)
        };
        let kx = |m: usize| grid.kx[m % grid.nx];
        let ky = |m: usize| grid.ky[m / grid.nx];
        [
            [deriv(&self.uhat[0], &kx), deriv(&self.uhat[0], &ky)],
            [deriv(&self.uhat[1], &kx), deriv(&self.uhat[1], &ky)],
        ]
    }

    /// `int grad u : tau dx` for a stress field given at grid points.
    pub fn stress_power(&self, grid: &SpectralGrid, tau: &[StressTensor]) -> f64 {
        let g = self.velocity_gradient(grid);
        let s: f64 = tau
            .iter()
            .enumerate()
            .map(|(p, t)| (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| g[i][j][p] * t.tau[i][j]).sum::<f64>())
            .sum();
        s * self.cell_volume()
    }

    /// Largest `|u_x| / dx + |u_y| / dy` over grid points.
    pub fn advective_rate(&self, grid: &SpectralGrid) -> f64 {
        let [ux, uy] = self.velocity(grid);
        ux.iter().zip(&uy).map(|(a, b)| a.abs() / grid.dx() + b.abs() / grid.dy()).fold(0.0, f64::max)
    }
}

/// Navier–Stokes integrator for a fixed grid, viscosity and optional hyperviscosity.
#[derive(Debug, Clone)]
pub struct NavierStokes {
    pub grid: SpectralGrid,
    pub nu: f64,
    pub hyper: Option<Hyperviscosity>,
}

impl NavierStokes {
    pub fn new(grid: SpectralGrid, nu: f64, hyper: Option<Hyperviscosity>) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::Config(format!("viscosity must satisfy nu > 0, got {nu}")));
        }
        Ok(Self { grid, nu, hyper })
    }

    fn linear_symbol(&self, m: usize) -> f64 {
        let k2 = self.grid.k2(m);
        self.nu * k2 + self.hyper.map_or(0.0, |h| h.symbol(k2))
    }

    /// Projected spectral divergence of a stress field, `P (div tau)`.
    pub fn stress_forcing(&self, tau: &[StressTensor]) -> Result<[Vec<Complex64>; 2]> {
        let g = &self.grid;
        if tau.len() != g.len() {
            return Err(Error::Shape { expected: g.len(), got: tau.len() });
        }
        if tau.iter().any(|t| !t.is_finite()) {
            return Err(Error::NumericalDomain("stress forcing"));
        }
        let comp = |i: usize, j: usize| g.forward(&tau.iter().map(|t| t.tau[i][j]).collect::<Vec<_>>());
        let (txx, txy, tyy) = (comp(0, 0), comp(0, 1), comp(1, 1));
        let mut f = [vec![Complex64::default(); g.len()], vec![Complex64::default(); g.len()]];
        for m in 0..g.len() {
            let (a, b) = (g.kx[m % g.nx], g.ky[m / g.nx]);
            f[0][m] = I * (txx[m] * a + txy[m] * b);
            f[1][m] = I * (txy[m] * a + tyy[m] * b);
        }
        g.truncate(&mut f);
        g.project(&mut f);
        Ok(f)
    }

    /// `-P[(u . grad) u]`, dealiased.
    fn advection(&self, uhat: &[Vec<Complex64>; 2]) -> [Vec<Complex64>; 2] {
        let g = &self.grid;
        let u = [g.inverse(&uhat[0]), g.inverse(&uhat[1])];
        let mut out = [vec![Complex64::default(); g.len()], vec![Complex64::default(); g.len()]];
        for i in 0..2 {
            let dx: Vec<Complex64> = uhat[i].iter().enumerate().map(|(m, v)| I * g.kx[m % g.nx] * v).collect();
            let dy: Vec<Complex64> = uhat[i].iter().enumerate().map(|(m, v)| I * g.ky[m / g.nx] * v).collect();
            let (dx, dy) = (g.inverse(&dx), g.inverse(&dy));
            let prod: Vec<f64> = (0..g.len()).map(|p| -(u[0][p] * dx[p] + u[1][p] * dy[p])).collect();
            out[i] = g.forward(&prod);
        }
        g.truncate(&mut out);
        g.project(&mut out);
        out
    }

    /// One integrating-factor Heun step with the stress forcing frozen over the step.
    pub fn step(&self, state: &MacroState, tau: &[StressTensor], dt: f64) -> Result<MacroState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let g = &self.grid;
        if state.nx != g.nx || state.ny != g.ny {
            return Err(Error::Shape { expected: g.len(), got: state.points() });
        }
        let courant = dt * state.advective_rate(g);
        if courant > 1.0 {
            return Err(Error::StepSize { dt, courant });
        }
        let forcing = self.stress_forcing(tau)?;
        let decay: Vec<f64> = (0..g.len()).map(|m| (-self.linear_symbol(m) * dt).exp()).collect();
        let rhs = |u: &[Vec<Complex64>; 2]| {
            let mut n = self.advection(u);
            for i in 0..2 {
                n[i].iter_mut().zip(&forcing[i]).for_each(|(a, b)| *a += b);
            }
            n
        };
        let n0 = rhs(&state.uhat);
        let mut pred = state.uhat.clone();
        for i in 0..2 {
            for m in 0..g.len() {
                pred[i][m] = decay[m] * (state.uhat[i][m] + dt * n0[i][m]);
            }
        }
        let n1 = rhs(&pred);
        let mut next = state.uhat.clone();
        for i in 0..2 {
            for m in 0..g.len() {
                next[i][m] = decay[m] * (state.uhat[i][m] + 0.5 * dt * n0[i][m]) + 0.5 * dt * n1[i][m];
            }
        }
        g.truncate(&mut next);
        g.project(&mut next);
        Ok(MacroState { nx: g.nx, ny: g.ny, uhat: next, time: state.time + dt })
    }
}
