//! Kramers stress `tau_ij = 2k int psi R_i R_j / (1 - |R|^2) dR` and the
//! dissipation-based bound `|tau|^2 <= C (int psi) int psi_inf |grad sqrt(psi/psi_inf)|^2`.

use crate::density::{DiscreteEquilibrium, PhaseDensity};
use crate::error::{Error, Result};
use crate::grid::ConfigGrid;
use crate::model::PotentialParams;

/// Absolute tolerance for symmetry and positive-semidefiniteness checks.
pub const PSD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressTensor {
    pub tau: [[f64; 2]; 2],
}

impl StressTensor {
    pub const ZERO: Self = Self { tau: [[0.0; 2]; 2] };
    pub const IDENTITY: Self = Self { tau: [[1.0, 0.0], [0.0, 1.0]] };

    /// Builds a tensor from the three independent components `(xx, xy, yy)`.
    pub fn from_components(xx: f64, xy: f64, yy: f64) -> Self {
        Self { tau: [[xx, xy], [xy, yy]] }
    }

    /// Frobenius norm squared.
    pub fn norm2(&self) -> f64 {
        self.tau.iter().flatten().map(|v| v * v).sum()
    }

    /// Largest componentwise deviation from `other`.
    pub fn max_abs_diff(&self, other: &StressTensor) -> f64 {
        self.tau
            .iter()
            .flatten()
            .zip(other.tau.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let [[a, b], [_, d]] = self.tau;
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - rad, mean + rad]
    }

    pub fn is_finite(&self) -> bool {
        self.tau.iter().flatten().all(|v| v.is_finite())
    }
}

/// Kramers stress of `psi` on `grid`.
///
/// For densities that are not multiples of the Maxwellian the singular factor
/// is evaluated at cell centers, which never touch `r = 1`.
pub fn kramers_stress(psi: &PhaseDensity, grid: &ConfigGrid, params: &PotentialParams) -> Result<StressTensor> {
    grid.check_len(psi.len())?;
    let mut acc = [0.0; 3];
    for (c, (&p, &a)) in psi.values().iter().zip(&grid.cell_areas).enumerate() {
        if p == 0.0 {
            continue;
        }
        let [x, y] = grid.centers[c];
        let w = 2.0 * params.k * p * a / (1.0 - (x * x + y * y));
        acc[0] += w * x * x;
        acc[1] += w * x * y;
        acc[2] += w * y * y;
    }
    let tau = StressTensor::from_components(acc[0], acc[1], acc[2]);
    if !tau.is_finite() {
        return Err(Error::NumericalDomain("Kramers stress integrand"));
    }
    Ok(tau)
}

/// Stress of `mass * psi_inf`, using the closed form `psi_inf / (1 - r^2)`
/// per cell instead of dividing by the vanishing gap.
pub fn equilibrium_stress(eq: &DiscreteEquilibrium, mass: f64, grid: &ConfigGrid, params: &PotentialParams) -> StressTensor {
    let mut acc = [0.0; 3];
    for (c, (&q, &a)) in eq.over_gap.iter().zip(&grid.cell_areas).enumerate() {
        let [x, y] = grid.centers[c];
        let w = 2.0 * params.k * mass * q * a;
        acc[0] += w * x * x;
        acc[1] += w * x * y;
        acc[2] += w * y * y;
    }
    StressTensor::from_components(acc[0], acc[1], acc[2])
}

/// Both sides of the dissipation bound on the stress.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressBound {
    /// `|tau(psi)|^2`.
    pub lhs: f64,
    /// `int psi dR`.
    pub mass: f64,
    /// `int psi_inf |grad sqrt(psi / psi_inf)|^2 dR`.
    pub dissipation: f64,
    /// `mass * dissipation`.
    pub rhs: f64,
    /// `lhs / (mass * (dissipation + mass))`, the ratio against the full
    /// right-hand side including the zeroth-order term.
    pub ratio: f64,
    /// Whether some cells were zero so the gradient skipped them.
    pub reduced_accuracy: bool,
}

/// Evaluates `|tau|^2` against `(int psi) * int psi_inf |grad sqrt(psi/psi_inf)|^2`.
///
/// The ratio is taken against `mass * (dissipation + mass)`, so it stays
/// finite at equilibrium where the dissipation vanishes.
pub fn stress_bound_check(psi: &PhaseDensity, grid: &ConfigGrid, params: &PotentialParams) -> Result<StressBound> {
    let eq = DiscreteEquilibrium::new(grid, params);
    let tau = kramers_stress(psi, grid, params)?;
    let (fisher, reduced_accuracy) = crate::diagnostics::fisher_information(psi.values(), grid, &eq);
    let dissipation = fisher / 4.0;
    let mass = psi.mass();
    let lhs = tau.norm2();
    let denom = mass * (dissipation + mass);
    let ratio = if denom > 0.0 { lhs / denom } else { 0.0 };
    Ok(StressBound { lhs, mass, dissipation, rhs: mass * dissipation, ratio, reduced_accuracy })
}
