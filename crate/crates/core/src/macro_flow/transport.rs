//! Conservative upwind transport of the micro field along the macroscopic flow.
//!
//! Face velocities are differences of the streamfunction sampled at cell
//! corners, so the discrete divergence of every cell vanishes identically and
//! transport preserves both total mass and uniform fields.

use num_complex::Complex64;
use rayon::prelude::*;

use super::spectral::{MacroState, SpectralGrid};
use crate::density::PhaseDensity;
use crate::error::{Error, Result};
use crate::grid::ConfigGrid;

/// Normal velocities on the faces of the spatial grid.
///
/// `ux[p]` sits on the face between point `p` and its `+x` neighbour,
/// `uy[p]` on the face between `p` and its `+y` neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceVelocities {
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
}

impl FaceVelocities {
    pub fn new(state: &MacroState, grid: &SpectralGrid) -> Self {
        let (nx, ny, n) = (grid.nx, grid.ny, grid.len());
        let (hx, hy) = (0.5 * grid.dx(), 0.5 * grid.dy());
        // Streamfunction with -Delta s = curl u, sampled half a cell up and right.
        let mut shat = vec![Complex64::default(); n];
        for (m, s) in shat.iter_mut().enumerate() {
            let k2 = grid.k2(m);
            if k2 == 0.0 {
                continue;
            }
            let (a, b) = (grid.kx[m % nx], grid.ky[m / nx]);
            let curl = Complex64::new(0.0, a) * state.uhat[1][m] - Complex64::new(0.0, b) * state.uhat[0][m];
            *s = curl / k2 * Complex64::from_polar(1.0, a * hx + b * hy);
        }
        let corner = grid.inverse(&shat);
        let mean = [state.uhat[0][0].re, state.uhat[1][0].re];
        let at = |ix: usize, iy: usize| corner[(iy % ny) * nx + ix % nx];
        let mut ux = vec![0.0; n];
        let mut uy = vec![0.0; n];
        for iy in 0..ny {
            for ix in 0..nx {
                let p = iy * nx + ix;
                ux[p] = mean[0] + (at(ix, iy) - at(ix, iy + ny - 1)) / grid.dy();
                uy[p] = mean[1] - (at(ix, iy) - at(ix + nx - 1, iy)) / grid.dx();
            }
        }
        Self { ux, uy }
    }

    /// Largest discrete divergence over spatial cells.
    pub fn max_divergence(&self, grid: &SpectralGrid) -> f64 {
        let (nx, ny) = (grid.nx, grid.ny);
        (0..grid.len())
            .map(|p| {
                let (ix, iy) = (p % nx, p / nx);
                let west = iy * nx + (ix + nx - 1) % nx;
                let south = ((iy + ny - 1) % ny) * nx + ix;
                ((self.ux[p] - self.ux[west]) / grid.dx() + (self.uy[p] - self.uy[south]) / grid.dy()).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest outflow rate `sum_out |u_n| / h` over spatial cells.
    pub fn courant_rate(&self, grid: &SpectralGrid) -> f64 {
        (0..grid.len())
            .map(|p| self.inflows(p, grid, 1.0).0)
            .fold(0.0, f64::max)
    }

    /// Outflow rate of `p` and its inflow neighbours with rates, each scaled by `dt`.
    fn inflows(&self, p: usize, grid: &SpectralGrid, dt: f64) -> (f64, [(usize, f64); 4]) {
        let (nx, ny) = (grid.nx, grid.ny);
        let (ix, iy) = (p % nx, p / nx);
        let east = iy * nx + (ix + 1) % nx;
        let west = iy * nx + (ix + nx - 1) % nx;
        let north = ((iy + 1) % ny) * nx + ix;
        let south = ((iy + ny - 1) % ny) * nx + ix;
        let (cx, cy) = (dt / grid.dx(), dt / grid.dy());
        // Signed velocity leaving p through each face, with the neighbour across it.
        let faces = [
            (self.ux[p] * cx, east),
            (-self.ux[west] * cx, west),
            (self.uy[p] * cy, north),
            (-self.uy[south] * cy, south),
        ];
        let mut out = 0.0;
        let mut inn = [(p, 0.0); 4];
        for (slot, &(v, q)) in inn.iter_mut().zip(&faces) {
            if v > 0.0 {
                out += v;
            } else {
                *slot = (q, -v);
            }
        }
        (out, inn)
    }
}

/// One explicit upwind step of `d_t psi + u . grad_x psi = 0` for every
/// configuration cell.
pub fn advect_field(
    field: &[PhaseDensity],
    faces: &FaceVelocities,
    grid: &SpectralGrid,
    config: &ConfigGrid,
    dt: f64,
) -> Result<Vec<PhaseDensity>> {
    if field.len() != grid.len() {
        return Err(Error::Shape { expected: grid.len(), got: field.len() });
    }
    let courant = dt * faces.courant_rate(grid);
    if courant > 1.0 {
        return Err(Error::StepSize { dt, courant });
    }
    if faces.ux.iter().chain(&faces.uy).all(|v| *v == 0.0) {
        return Ok(field.to_vec());
    }
    Ok((0..grid.len())
        .into_par_iter()
        .map(|p| {
            let (out, inn) = faces.inflows(p, grid, dt);
            let keep = 1.0 - out;
            let mut values: Vec<f64> = field[p].values().iter().map(|v| keep * v).collect();
            for &(q, w) in inn.iter().filter(|(_, w)| *w > 0.0) {
                values.iter_mut().zip(field[q].values()).for_each(|(a, b)| *a += w * b);
            }
            PhaseDensity::from_trusted(values, config)
        })
        .collect())
}
