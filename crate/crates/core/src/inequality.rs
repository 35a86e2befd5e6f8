//! Numerical laboratory for the Hardy-type inequalities that bound the stress,
//! and for the weighted Sobolev inequality on the disk.
//!
//! One-dimensional profiles live on `(0, 1)` where `x` is the distance
//! `1 - |R|` to the boundary circle. Grids are geometric toward `x = 0`. Integrals use the
//! trapezoidal rule in `log x`, and the gradient term
//! `int w |(sqrt(psi / x^k))'|^2` is summed interval by interval as
//! `(h_{i+1} - h_i)^2 / int_{x_i}^{x_{i+1}} dx / w`. For `w = x^k` the
//! denominator is the increment of `y = x^(1-k) / (1-k)` (or `y = -log x` when
//! `k = 1`), so the differences are taken in exactly those coordinates.

use std::f64::consts::{E, PI};

use rayon::prelude::*;

use crate::density::{DiscreteEquilibrium, PhaseDensity};
use crate::error::{Error, Result};
use crate::grid::ConfigGrid;

/// Offset inside the logarithm of the log-weighted inequality, so the log is at least one.
pub const LOG_OFFSET: f64 = E;

/// Which inequality to evaluate, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InequalityKind {
    /// `int psi / x^2 <= C D`, valid for `k > 1`.
    Hardy1 { k: f64 },
    /// `(int psi / x)^2 <= C (int psi) D`, valid for `k > 0`.
    HardyInter { k: f64 },
    /// `int psi / x^(1+beta) <= C (int psi)^((1-beta)/2) D^((1+beta)/2)`,
    /// valid for `-1 <= beta < k <= 1`.
    HardyInter2 { k: f64, beta: f64 },
    /// Log-weighted form of [`HardyInter2`](Self::HardyInter2), additionally `gamma >= 0`.
    HardyInterLog { k: f64, beta: f64, gamma: f64 },
    /// `|tau(psi)|^2 <= C (int psi) int psi_inf |grad sqrt(psi/psi_inf)|^2` for
    /// radial densities, with `psi_inf ~ (1 - |R|^2)^k`.
    StressCorollary { k: f64 },
    /// `(int g^(p/2) psi_inf)^(1/p) <= C (int |grad sqrt g|^2 psi_inf + psi)^(1/2)`,
    /// `g = psi / psi_inf`, for radial densities; valid for `p > 2`.
    Wsi { k: f64, p: f64 },
}

impl InequalityKind {
    pub fn k(&self) -> f64 {
        match *self {
            Self::Hardy1 { k }
            | Self::HardyInter { k }
            | Self::HardyInter2 { k, .. }
            | Self::HardyInterLog { k, .. }
            | Self::StressCorollary { k }
            | Self::Wsi { k, .. } => k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Hardy1 { .. } => "hardy1",
            Self::HardyInter { .. } => "hardy_inter",
            Self::HardyInter2 { .. } => "hardy_inter2",
            Self::HardyInterLog { .. } => "hardy_inter_log",
            Self::StressCorollary { .. } => "stress_corollary",
            Self::Wsi { .. } => "wsi",
        }
    }

    /// Whether the parameters lie inside the range where the inequality is claimed.
    pub fn in_window(&self) -> bool {
        match *self {
            Self::Hardy1 { k } => k > 1.0,
            Self::HardyInter { k } | Self::StressCorollary { k } => k > 0.0,
            Self::HardyInter2 { k, beta } => -1.0 <= beta && beta < k && k <= 1.0,
            Self::HardyInterLog { k, beta, gamma } => -1.0 <= beta && beta < k && k <= 1.0 && gamma >= 0.0,
            Self::Wsi { k, p } => k > 0.0 && p > 2.0,
        }
    }

    /// Checks the window. Outside it, `allow_outside` turns the error into a
    /// diagnostic-only evaluation and the returned flag is `true`.
    pub fn validate(&self, allow_outside: bool) -> Result<bool> {
        if !self.params_finite() {
            return Err(Error::Config(format!("{} parameters must be finite", self.name())));
        }
        match (self.in_window(), allow_outside) {
            (true, _) => Ok(false),
            (false, true) => Ok(true),
            (false, false) => Err(Error::Config(format!("{self:?} is outside the validity window"))),
        }
    }

    fn params_finite(&self) -> bool {
        match *self {
            Self::Hardy1 { k } | Self::HardyInter { k } | Self::StressCorollary { k } => k.is_finite(),
            Self::HardyInter2 { k, beta } => k.is_finite() && beta.is_finite(),
            Self::HardyInterLog { k, beta, gamma } => k.is_finite() && beta.is_finite() && gamma.is_finite(),
            Self::Wsi { k, p } => k.is_finite() && p.is_finite(),
        }
    }
}

/// Strictly increasing nodes in `(0, 1]`, geometric toward zero and ending at one.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedGrid {
    pub x: Vec<f64>,
}

impl GradedGrid {
    /// `per_decade` nodes per factor of ten from `x_min` up to `1`.
    pub fn new(x_min: f64, per_decade: usize) -> Result<Self> {
        if !(x_min > 0.0 && x_min < 1.0) || per_decade == 0 {
            return Err(Error::Config(format!("graded grid needs 0 < x_min < 1 and nodes, got {x_min}, {per_decade}")));
        }
        let decades = -x_min.log10();
        let n = (decades * per_decade as f64).ceil() as usize;
        let x = (0..=n).map(|i| x_min.powf(1.0 - i as f64 / n as f64)).collect();
        Ok(Self { x })
    }

    /// Refinement level `l`: innermost node `10^(-4(l+1))` and `8 * 2^l` nodes per decade.
    /// Level 1 is the default grid with innermost node `1e-8`.
    pub fn level(l: u32) -> Self {
        Self::new(10f64.powi(-4 * (l as i32 + 1)), 8 << l).expect("valid level")
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Trapezoidal rule in `log x` for samples `f` at the nodes.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.x
            .windows(2)
            .zip(f.windows(2))
            .map(|(x, f)| 0.5 * (f[0] * x[0] + f[1] * x[1]) * (x[1] / x[0]).ln())
            .sum()
    }

    /// `sum (h_{i+1} - h_i)^2 / resistance_i`, skipping intervals with infinite resistance.
    fn gradient_energy(&self, h: &[f64], resistance: impl Fn(f64, f64) -> f64) -> f64 {
        self.x
            .windows(2)
            .zip(h.windows(2))
            .map(|(x, h)| {
                let r = resistance(x[0], x[1]);
                if r.is_finite() && r > 0.0 {
                    (h[1] - h[0]).powi(2) / r
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// `int_a^b x^(-k) dx`.
fn power_resistance(a: f64, b: f64, k: f64) -> f64 {
    if (k - 1.0).abs() < 1e-12 {
        (b / a).ln()
    } else {
        (b.powf(1.0 - k) - a.powf(1.0 - k)) / (1.0 - k)
    }
}

/// A sampled nonnegative profile on a graded grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub grid: GradedGrid,
    pub psi: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: GradedGrid, psi: Vec<f64>) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(Error::Shape { expected: grid.len(), got: psi.len() });
        }
        if let Some(i) = psi.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!("profile value {} at node {i} is not a finite nonnegative number", psi[i])));
        }
        Ok(Self { grid, psi })
    }

    pub fn sample(grid: &GradedGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.clone(), grid.x.iter().map(|&x| f(x)).collect())
    }
}

/// Both sides of an inequality, without the constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, or zero when both vanish.
    pub ratio: f64,
    /// Set for parameters outside the validity window (override in effect).
    pub diagnostic_only: bool,
}

impl Sides {
    fn new(lhs: f64, rhs: f64, diagnostic_only: bool) -> Self {
        let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
        Self { lhs, rhs, ratio, diagnostic_only }
    }
}

/// `D = int x^k |(sqrt(psi / x^k))'|^2 + psi`.
fn hardy_energy(p: &RadialProfile, k: f64) -> f64 {
    let g = &p.grid;
    let h: Vec<f64> = g.x.iter().zip(&p.psi).map(|(x, v)| (v / x.powf(k)).sqrt()).collect();
    g.gradient_energy(&h, |a, b| power_resistance(a, b, k)) + g.integrate(&p.psi)
}

fn weighted(p: &RadialProfile, f: impl Fn(f64, f64) -> f64) -> f64 {
    let v: Vec<f64> = p.grid.x.iter().zip(&p.psi).map(|(&x, &s)| f(x, s)).collect();
    p.grid.integrate(&v)
}

/// Radial densities on the disk written in `x = 1 - |R|`: unnormalized
/// Maxwellian `(x (2 - x))^k` and the measure `2 pi (1 - x) dx`.
struct Disk {
    k: f64,
    z: f64,
}

impl Disk {
    fn new(k: f64) -> Self {
        Self { k, z: PI / (k + 1.0) }
    }

    fn equilibrium(&self, x: f64) -> f64 {
        (x * (2.0 - x)).powf(self.k) / self.z
    }

    /// Weight of the gradient term, `2 pi r psi_inf`.
    fn weight(&self, x: f64) -> f64 {
        2.0 * PI * (1.0 - x) * self.equilibrium(x)
    }

    /// `int_a^b dx / weight` by 8-point Gauss–Legendre in `log x`.
    fn resistance(&self, a: f64, b: f64) -> f64 {
        if b >= 1.0 {
            return f64::INFINITY;
        }
        const NODES: [f64; 4] = [0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363];
        const WEIGHTS: [f64; 4] = [0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763];
        let (la, lb) = (a.ln(), b.ln());
        let (mid, half) = (0.5 * (la + lb), 0.5 * (lb - la));
        let mut s = 0.0;
        for (n, w) in NODES.iter().zip(&WEIGHTS) {
            for t in [mid - half * n, mid + half * n] {
                let x = t.exp();
                s += w * x / self.weight(x);
            }
        }
        s * half
    }

    /// `(int psi dR, int psi_inf |grad sqrt(psi/psi_inf)|^2 dR, h)` with `h = sqrt(psi/psi_inf)`.
    fn energies(&self, p: &RadialProfile) -> (f64, f64, Vec<f64>) {
        let mass = weighted(p, |x, s| 2.0 * PI * (1.0 - x) * s);
        let h: Vec<f64> = p.grid.x.iter().zip(&p.psi).map(|(&x, &s)| (s / self.equilibrium(x)).sqrt()).collect();
        let grad = p.grid.gradient_energy(&h, |a, b| self.resistance(a, b));
        (mass, grad, h)
    }
}

/// Evaluates both sides of `kind` on `profile`.
///
/// Outside the validity window this is a config error unless `allow_outside`
/// is set, in which case the result is flagged diagnostic-only.
pub fn evaluate_sides(kind: &InequalityKind, profile: &RadialProfile, allow_outside: bool) -> Result<Sides> {
    let diag = kind.validate(allow_outside)?;
    let p = profile;
    let sides = match *kind {
        InequalityKind::Hardy1 { k } => Sides::new(weighted(p, |x, s| s / (x * x)), hardy_energy(p, k), diag),
        InequalityKind::HardyInter { k } => {
            let lhs = weighted(p, |x, s| s / x).powi(2);
            Sides::new(lhs, p.grid.integrate(&p.psi) * hardy_energy(p, k), diag)
        }
        InequalityKind::HardyInter2 { k, beta } => {
            let lhs = weighted(p, |x, s| s / x.powf(1.0 + beta));
            let mass = p.grid.integrate(&p.psi);
            Sides::new(lhs, mass.powf(0.5 * (1.0 - beta)) * hardy_energy(p, k).powf(0.5 * (1.0 + beta)), diag)
        }
        InequalityKind::HardyInterLog { k, beta, gamma } => {
            let log = |x: f64, s: f64| (LOG_OFFSET + s / x.powf(k)).ln();
            let lhs = weighted(p, |x, s| s * log(x, s).powf(gamma) / x.powf(1.0 + beta));
            let q = 2.0 * gamma / (1.0 - beta);
            let mass = weighted(p, |x, s| s * log(x, s).powf(q));
            Sides::new(lhs, mass.powf(0.5 * (1.0 - beta)) * hardy_energy(p, k).powf(0.5 * (1.0 + beta)), diag)
        }
        InequalityKind::StressCorollary { k } => {
            let disk = Disk::new(k);
            // Radial density: tau = tau_11 I with tau_11 = 2 pi k int psi r^3 / (1 - r^2) dr.
            let t11 = weighted(p, |x, s| {
                let r = 1.0 - x;
                2.0 * PI * k * s * r * r * r / (x * (2.0 - x))
            });
            let (mass, grad, _) = disk.energies(p);
            Sides::new(2.0 * t11 * t11, mass * grad, diag)
        }
        InequalityKind::Wsi { k, p: exponent } => {
            let disk = Disk::new(k);
            let (mass, grad, h) = disk.energies(p);
            let lp: Vec<f64> = p
                .grid
                .x
                .iter()
                .zip(&h)
                .map(|(&x, &hv)| 2.0 * PI * (1.0 - x) * disk.equilibrium(x) * hv.powf(exponent))
                .collect();
            Sides::new(p.grid.integrate(&lp).powf(1.0 / exponent), (grad + mass).sqrt(), diag)
        }
    };
    Ok(sides)
}

/// Test profile shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileShape {
    /// `x^alpha`.
    Monomial { alpha: f64 },
    /// `(x / eps)^m exp(-x / eps)`, concentrating at the boundary as `eps -> 0`.
    Bump { m: f64, eps: f64 },
    /// `x^alpha (1 + sin(omega log x) / 2)`.
    LogOscillation { alpha: f64, omega: f64 },
    /// `x^alpha (1 + sin(omega x) / 2)`.
    Oscillation { alpha: f64, omega: f64 },
}

impl ProfileShape {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Monomial { alpha } => x.powf(alpha),
            Self::Bump { m, eps } => (x / eps).powf(m) * (-x / eps).exp(),
            Self::LogOscillation { alpha, omega } => x.powf(alpha) * (1.0 + 0.5 * (omega * x.ln()).sin()),
            Self::Oscillation { alpha, omega } => x.powf(alpha) * (1.0 + 0.5 * (omega * x).sin()),
        }
    }
}

/// How many profiles of each shape to include in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilySpec {
    pub monomials: usize,
    pub bumps: usize,
    pub oscillations: usize,
}

impl Default for FamilySpec {
    /// 13 monomials, 8 bumps and 8 oscillatory profiles.
    fn default() -> Self {
        Self { monomials: 12, bumps: 8, oscillations: 4 }
    }
}

impl FamilySpec {
    /// Profiles adapted to the weight exponent `k`: monomials with exponents
    /// spread over `[k/2, 4k]` plus `x^k` itself, bumps `(x/eps)^(k+1) e^(-x/eps)`
    /// with `eps = 2^-1 ... 2^-bumps`, and oscillatory modulations of `x^k`.
    pub fn profiles(&self, k: f64) -> Vec<ProfileShape> {
        let mut out = vec![ProfileShape::Monomial { alpha: k }];
        let n = self.monomials.max(2);
        for i in 0..n {
            let alpha = 0.5 * k + 3.5 * k * i as f64 / (n - 1) as f64;
            out.push(ProfileShape::Monomial { alpha });
        }
        for i in 1..=self.bumps {
            out.push(ProfileShape::Bump { m: k + 1.0, eps: 0.5f64.powi(i as i32) });
        }
        for i in 0..self.oscillations {
            let omega = 2f64.powi(i as i32);
            out.push(ProfileShape::LogOscillation { alpha: k, omega });
            out.push(ProfileShape::Oscillation { alpha: k, omega: 4.0 * omega });
        }
        out
    }
}

/// Per-level supremum of `lhs / rhs` over a family.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantReport {
    pub kind: InequalityKind,
    /// Innermost node of each refinement level.
    pub x_min: Vec<f64>,
    pub sup_ratio: Vec<f64>,
    /// Index into the family of the maximizing profile at each level.
    pub argmax: Vec<usize>,
    /// `|s_last - s_prev| / s_last` between the two finest levels.
    pub relative_change: f64,
    /// `s_{l+1} / s_l` for consecutive levels.
    pub growth: Vec<f64>,
    pub diagnostic_only: bool,
}

impl ConstantReport {
    /// Finite and within `tol` relative change between the two finest levels.
    pub fn is_stable(&self, tol: f64) -> bool {
        self.sup_ratio.iter().all(|s| s.is_finite()) && self.relative_change <= tol
    }

    /// Every consecutive level grows by more than `factor`.
    pub fn diverges(&self, factor: f64) -> bool {
        !self.growth.is_empty() && self.growth.iter().all(|&g| g > factor)
    }
}

/// Sweeps the family over refinement levels `0..levels` of [`GradedGrid::level`].
pub fn empirical_constant(
    kind: &InequalityKind,
    family: &FamilySpec,
    levels: u32,
    allow_outside: bool,
) -> Result<ConstantReport> {
    let diagnostic_only = kind.validate(allow_outside)?;
    if levels == 0 {
        return Err(Error::Config("empirical constant needs at least one level".into()));
    }
    let shapes = family.profiles(kind.k());
    let mut x_min = Vec::new();
    let mut sup_ratio = Vec::new();
    let mut argmax = Vec::new();
    for l in 0..levels {
        let grid = GradedGrid::level(l);
        x_min.push(grid.x[0]);
        let ratios = shapes
            .par_iter()
            .map(|s| {
                let p = RadialProfile::sample(&grid, |x| s.eval(x))?;
                Ok(evaluate_sides(kind, &p, true)?.ratio)
            })
            .collect::<Result<Vec<f64>>>()?;
        let (i, s) = ratios
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bs), (i, &s)| if s > bs { (i, s) } else { (bi, bs) });
        sup_ratio.push(s);
        argmax.push(i);
    }
    let growth: Vec<f64> = sup_ratio.windows(2).map(|w| w[1] / w[0]).collect();
    let relative_change = match sup_ratio.as_slice() {
        [.., a, b] => (b - a).abs() / b.abs(),
        _ => 0.0,
    };
    Ok(ConstantReport { kind: *kind, x_min, sup_ratio, argmax, relative_change, growth, diagnostic_only })
}

/// Both sides of the weighted Sobolev inequality for a density on the disk grid,
/// `(int g^(p/2) psi_inf)^(1/p)` and `(int |grad sqrt g|^2 psi_inf + psi)^(1/2)`.
pub fn wsi_sides(psi: &PhaseDensity, p: f64, grid: &ConfigGrid, eq: &DiscreteEquilibrium) -> Result<(f64, f64)> {
    if !(p > 2.0) {
        return Err(Error::Config(format!("weighted Sobolev exponent must exceed 2, got {p}")));
    }
    grid.check_len(psi.len())?;
    let lhs: f64 = psi
        .values()
        .iter()
        .zip(&eq.values)
        .zip(&grid.cell_areas)
        .map(|((&v, &e), &a)| a * e * (v / e).powf(0.5 * p))
        .sum();
    let (fisher, _) = crate::diagnostics::fisher_information(psi.values(), grid, eq);
    Ok((lhs.powf(1.0 / p), (0.25 * fisher + psi.mass()).sqrt()))
}

/// Sup of the weighted Sobolev ratio per exponent over a perturbation family on
/// two configuration grids.
#[derive(Debug, Clone, PartialEq)]
pub struct WsiSweep {
    pub p: Vec<f64>,
    /// `sup_ratio[i][level]` for exponent `p[i]`.
    pub sup_ratio: Vec<Vec<f64>>,
    /// Largest exponent whose sup changes by at most `tol` between the grids.
    pub largest_stable_p: Option<f64>,
}

/// Perturbations `psi_inf (1 + a cos(m theta) r^m + b r^2)` and boundary-concentrated
/// `psi_inf (1 + c (1 - |R|)^-s)`-type profiles, evaluated on `n x n` and `2n x 2n` grids.
pub fn wsi_exponent_sweep(ps: &[f64], k: f64, n: usize, tol: f64) -> Result<WsiSweep> {
    let params = crate::model::PotentialParams::new(k, 1.0)?;
    let family: Vec<Box<dyn Fn(f64, f64) -> f64 + Sync>> = {
        let mut f: Vec<Box<dyn Fn(f64, f64) -> f64 + Sync>> = Vec::new();
        for m in 1..=4 {
            f.push(Box::new(move |r: f64, t: f64| 1.0 + 0.9 * r.powi(m) * (m as f64 * t).cos()));
        }
        for s in [0.25, 0.5, 1.0, 2.0] {
            f.push(Box::new(move |r: f64, _| 1.0 + s * 10.0 * r * r));
        }
        for s in [0.1, 0.2, 0.3, 0.4] {
            f.push(Box::new(move |r: f64, _| (1.0 - r + 1e-3).powf(-s)));
        }
        f
    };
    let mut sup_ratio = Vec::new();
    for &p in ps {
        let mut per_level = Vec::new();
        for nn in [n, 2 * n] {
            let grid = ConfigGrid::new(nn, nn)?;
            let eq = DiscreteEquilibrium::new(&grid, &params);
            let mut best: f64 = 0.0;
            for g in &family {
                let values: Vec<f64> = (0..grid.len())
                    .map(|c| {
                        let [x, y] = grid.centers[c];
                        eq.values[c] * g(x.hypot(y), y.atan2(x))
                    })
                    .collect();
                let psi = PhaseDensity::new(values, &grid)?;
                let (l, r) = wsi_sides(&psi, p, &grid, &eq)?;
                best = best.max(l / r);
            }
            per_level.push(best);
        }
        sup_ratio.push(per_level);
    }
    let largest_stable_p = ps
        .iter()
        .zip(&sup_ratio)
        .filter(|(_, s)| (s[1] - s[0]).abs() <= tol * s[1])
        .map(|(&p, _)| p)
        .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))));
    Ok(WsiSweep { p: ps.to_vec(), sup_ratio, largest_stable_p })
}
