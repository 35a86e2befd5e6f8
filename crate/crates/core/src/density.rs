//! Configuration densities on a [`ConfigGrid`] and the grid's discrete Maxwellian.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::ConfigGrid;
use crate::model::PotentialParams;

/// Nonnegative density per unit configuration area, one value per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDensity {
    values: Vec<f64>,
    mass: f64,
}

impl PhaseDensity {
    pub fn new(values: Vec<f64>, grid: &ConfigGrid) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(c) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("density value in cell {c} is not finite")));
        }
        if let Some(c) = values.iter().position(|&v| v < 0.0) {
            return Err(Error::Config(format!("density value {} in cell {c} is negative", values[c])));
        }
        let mass = grid.quadrature_unchecked(&values);
        Ok(Self { values, mass })
    }

    /// Skips validation; the caller guarantees length, finiteness and sign.
    pub(crate) fn from_trusted(values: Vec<f64>, grid: &ConfigGrid) -> Self {
        let mass = grid.quadrature_unchecked(&values);
        Self { values, mass }
    }

    pub fn zeros(grid: &ConfigGrid) -> Self {
        Self { values: vec![0.0; grid.len()], mass: 0.0 }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Cached `rho = int psi dR`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Rescales to the requested mass. Zero-mass densities are returned unchanged.
    pub fn normalized_to(&self, mass: f64, grid: &ConfigGrid) -> Self {
        if self.mass == 0.0 {
            return self.clone();
        }
        let s = mass / self.mass;
        Self::from_trusted(self.values.iter().map(|v| v * s).collect(), grid)
    }

    /// `sum_c |a_c - b_c| area_c`.
    pub fn l1_distance(&self, other: &PhaseDensity, grid: &ConfigGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(&grid.cell_areas)
            .map(|((a, b), w)| (a - b).abs() * w)
            .sum()
    }
}

/// The Maxwellian sampled at cell centers and renormalized so that its
/// discrete mass is exactly one on this grid.
#[derive(Debug, Clone)]
pub struct DiscreteEquilibrium {
    /// `psi_inf` per cell.
    pub values: Vec<f64>,
    /// `psi_inf / (1 - |R|^2)` per cell, from the closed form `(1 - r^2)^(k-1)`.
    pub over_gap: Vec<f64>,
    /// `psi_inf` on every face of the grid (geometric mean of the two cells,
    /// zero on the boundary circle).
    pub face_values: Vec<f64>,
    /// Diffusion weights `psi_inf_f * length / spacing` per face.
    pub face_weights: Vec<f64>,
}

impl DiscreteEquilibrium {
    pub fn new(grid: &ConfigGrid, params: &PotentialParams) -> Self {
        let raw: Vec<f64> = (0..grid.len())
            .map(|c| {
                let r = grid.radius(c);
                params.equilibrium_at(r * r)
            })
            .collect();
        let norm = grid.quadrature_unchecked(&raw);
        let values: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let over_gap = (0..grid.len())
            .map(|c| {
                let r = grid.radius(c);
                params.equilibrium_over_gap(r * r) / norm
            })
            .collect();
        let face_values = grid
            .faces
            .iter()
            .map(|f| match f.outer {
                Some(b) => (values[f.inner] * values[b]).sqrt(),
                None => 0.0,
            })
            .collect::<Vec<f64>>();
        let face_weights = grid
            .faces
            .iter()
            .zip(&face_values)
            .map(|(f, &pf)| if f.outer.is_some() { pf * f.length / f.spacing } else { 0.0 })
            .collect();
        Self { values, over_gap, face_values, face_weights }
    }

    pub fn density(&self, mass: f64, grid: &ConfigGrid) -> PhaseDensity {
        PhaseDensity::from_trusted(self.values.iter().map(|v| v * mass).collect(), grid)
    }

    /// `psi_inf * (1 - amplitude + 2 amplitude U_c)` with independent uniform
    /// `U_c`, rescaled to unit mass. `amplitude` is clamped to `[0, 1)` so the
    /// result stays strictly positive.
    pub fn perturbed(&self, amplitude: f64, seed: u64, grid: &ConfigGrid) -> PhaseDensity {
        let a = amplitude.clamp(0.0, 1.0 - 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = self.values.iter().map(|v| v * (1.0 - a + 2.0 * a * rng.random::<f64>())).collect();
        PhaseDensity::from_trusted(values, grid).normalized_to(1.0, grid)
    }
}
