//! FENE spring potential and its Maxwellian equilibrium on the unit disk.
//!
//! With the temperature factor and maximal extension both scaled to one, the
//! spring potential is `U(R) = -k log(1 - |R|^2)` and the equilibrium
//! configuration density is `psi_inf(R) = (1 - |R|^2)^k / Z` with
//! `Z = pi / (k + 1)` in two dimensions.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Point in configuration space.
pub type Vec2 = [f64; 2];

/// FENE spring and solvent parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    /// Spring strength, `k > 0`.
    pub k: f64,
    /// Temperature factor, always 1.
    pub beta: f64,
    /// Maximal extension, always 1.
    pub r0: f64,
    /// Solvent viscosity, `nu > 0`.
    pub nu: f64,
}

impl PotentialParams {
    pub fn new(k: f64, nu: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Config(format!("spring strength must satisfy k > 0, got {k}")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Config(format!("viscosity must satisfy nu > 0, got {nu}")));
        }
        Ok(Self { k, beta: 1.0, r0: 1.0, nu })
    }

    /// Normalization `Z = int_B (1 - |R|^2)^k dR = pi / (k + 1)`.
    pub fn partition_function(&self) -> f64 {
        PI / (self.k + 1.0)
    }

    /// `psi_inf` as a function of `|R|^2`; zero on and outside the unit circle.
    pub fn equilibrium_at(&self, r2: f64) -> f64 {
        let gap = 1.0 - r2;
        if gap <= 0.0 {
            return 0.0;
        }
        gap.powf(self.k) / self.partition_function()
    }

    /// `psi_inf / (1 - |R|^2)` evaluated as `(1 - |R|^2)^(k-1) / Z`, which stays
    /// finite at the boundary whenever `k >= 1`.
    pub fn equilibrium_over_gap(&self, r2: f64) -> f64 {
        let gap = 1.0 - r2;
        if gap <= 0.0 {
            return if self.k > 1.0 { 0.0 } else { f64::INFINITY };
        }
        gap.powf(self.k - 1.0) / self.partition_function()
    }
}

fn norm2(r: Vec2) -> f64 {
    r[0] * r[0] + r[1] * r[1]
}

fn check_interior(r: Vec2) -> Result<f64> {
    let r2 = norm2(r);
    if r2 < 1.0 {
        Ok(r2)
    } else {
        Err(Error::Domain { point: r, norm2: r2 })
    }
}

/// `U(R) = -k log(1 - |R|^2)`.
pub fn potential_value(r: Vec2, params: &PotentialParams) -> Result<f64> {
    let r2 = check_interior(r)?;
    Ok(-params.k * (-r2).ln_1p())
}

/// `grad U(R) = 2k R / (1 - |R|^2)`.
pub fn potential_gradient(r: Vec2, params: &PotentialParams) -> Result<Vec2> {
    let r2 = check_interior(r)?;
    let s = 2.0 * params.k / (1.0 - r2);
    Ok([s * r[0], s * r[1]])
}

/// Normalized Maxwellian `psi_inf(R)`, defined on the closed disk.
pub fn equilibrium_density(r: Vec2, params: &PotentialParams) -> f64 {
    params.equilibrium_at(norm2(r))
}
