//! Brownian dynamics of single dumbbells in a homogeneous flow,
//! `dR = (kappa R - grad U(R)) dt + sqrt(2) dW`, used as an independent check
//! on the Fokker–Planck solver.
//!
//! Every path owns a ChaCha8 stream selected by its index, so results do not
//! depend on how paths are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fokker_planck::VelocityGradient;
use crate::macro_flow::{protocol_kappa, FlowProtocol};
use crate::model::{PotentialParams, Vec2};
use crate::stress::StressTensor;

/// Maximum recursion depth of step halving after a rejected proposal.
pub const MAX_HALVINGS: u32 = 30;

/// Fresh noise draws allowed at the deepest level before giving up on a path.
pub const MAX_RESAMPLES: u32 = 1000;

#[derive(Debug, Clone)]
pub struct BdEnsemble {
    pub paths: Vec<Vec2>,
    rngs: Vec<ChaCha8Rng>,
    pub time: f64,
}

fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn gaussian2(rng: &mut ChaCha8Rng) -> Vec2 {
    [rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

impl BdEnsemble {
    /// `m` paths at the given positions with per-path streams derived from `seed`.
    pub fn from_positions(paths: Vec<Vec2>, seed: u64) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::Config("an ensemble needs at least one path".into()));
        }
        if let Some(m) = paths.iter().position(|r| r[0] * r[0] + r[1] * r[1] >= 1.0) {
            let r = paths[m];
            return Err(Error::Domain { point: r, norm2: r[0] * r[0] + r[1] * r[1] });
        }
        let rngs = (0..paths.len()).map(|m| path_rng(seed, m)).collect();
        Ok(Self { paths, rngs, time: 0.0 })
    }

    /// `m` independent draws from the Maxwellian by rejection from the uniform disk.
    pub fn equilibrium(m: usize, params: &PotentialParams, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("an ensemble needs at least one path".into()));
        }
        let k = params.k;
        let (paths, rngs): (Vec<Vec2>, Vec<ChaCha8Rng>) = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut rng = path_rng(seed, i);
                loop {
                    let x: f64 = rng.random_range(-1.0..1.0);
                    let y: f64 = rng.random_range(-1.0..1.0);
                    let r2 = x * x + y * y;
                    if r2 >= 1.0 {
                        continue;
                    }
                    let u: f64 = rng.random();
                    if u < (1.0 - r2).powf(k) {
                        return ([x, y], rng);
                    }
                }
            })
            .unzip();
        Ok(Self { paths, rngs, time: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Largest `|R_m|^2` in the ensemble.
    pub fn max_norm2(&self) -> f64 {
        self.paths.iter().map(|r| r[0] * r[0] + r[1] * r[1]).fold(0.0, f64::max)
    }
}

/// Advances one path over `h` with the Wiener increment `dw` (variance `2h` per component).
fn advance(
    r: Vec2,
    h: f64,
    dw: Vec2,
    depth: u32,
    kappa: &VelocityGradient,
    k: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Vec2> {
    let r2 = r[0] * r[0] + r[1] * r[1];
    let v = kappa.apply(r);
    let pull = 2.0 * k / (1.0 - r2);
    let next = [r[0] + (v[0] - pull * r[0]) * h + dw[0], r[1] + (v[1] - pull * r[1]) * h + dw[1]];
    if next[0] * next[0] + next[1] * next[1] < 1.0 {
        return Some(next);
    }
    if depth >= MAX_HALVINGS {
        return None;
    }
    // Brownian bridge: split the increment consistently into two halves.
    let s = (0.5 * h).sqrt();
    let z = gaussian2(rng);
    let first = [0.5 * dw[0] + s * z[0], 0.5 * dw[1] + s * z[1]];
    let second = [dw[0] - first[0], dw[1] - first[1]];
    let mid = advance_resampling(r, 0.5 * h, first, depth + 1, kappa, k, rng)?;
    advance_resampling(mid, 0.5 * h, second, depth + 1, kappa, k, rng)
}

fn advance_resampling(
    r: Vec2,
    h: f64,
    dw: Vec2,
    depth: u32,
    kappa: &VelocityGradient,
    k: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Vec2> {
    if let Some(next) = advance(r, h, dw, depth, kappa, k, rng) {
        return Some(next);
    }
    if depth < MAX_HALVINGS {
        return None;
    }
    let s = (2.0 * h).sqrt();
    for _ in 0..MAX_RESAMPLES {
        let z = gaussian2(rng);
        if let Some(next) = advance(r, h, [s * z[0], s * z[1]], MAX_HALVINGS, kappa, k, rng) {
            return Some(next);
        }
    }
    None
}

/// Time discretization of the spring force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BdScheme {
    /// Explicit Euler–Maruyama with rejection and step halving at the wall.
    #[default]
    EulerMaruyama,
    /// Flow and noise explicit, spring force implicit. The implicit spring
    /// step is a radial cubic with a unique root in `[0, 1)`, so paths never
    /// reach the wall and no proposal is rejected.
    SemiImplicit,
}

impl BdScheme {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "euler" => Ok(Self::EulerMaruyama),
            "semi-implicit" => Ok(Self::SemiImplicit),
            other => Err(Error::Config(format!("unknown Brownian dynamics scheme `{other}`"))),
        }
    }
}

/// Root in `[0, 1)` of `rho (1 + c / (1 - rho^2)) = b`.
fn implicit_spring_radius(b: f64, c: f64) -> f64 {
    let f = |x: f64| ((x - b) * x - (1.0 + c)) * x + b;
    let (mut lo, mut hi) = (0.0, b.min(1.0));
    // One fixed-point sweep inside the disk, the large-gap asymptote outside.
    let mut x = if b < 1.0 {
        let g = 1.0 - b * b;
        b * g / (g + c)
    } else {
        (1.0 - 0.5 * c / (b - 1.0 + 0.5 * c)).max(0.0)
    };
    for _ in 0..100 {
        let fx = f(x);
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = (3.0 * x - 2.0 * b) * x - (1.0 + c);
        let newton = x - fx / d;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * x {
            return next;
        }
        x = next;
    }
    x
}

fn semi_implicit(r: Vec2, h: f64, dw: Vec2, kappa: &VelocityGradient, k: f64) -> Option<Vec2> {
    let v = kappa.apply(r);
    let b = [r[0] + v[0] * h + dw[0], r[1] + v[1] * h + dw[1]];
    let nb = b[0].hypot(b[1]);
    if nb == 0.0 {
        return Some(b);
    }
    let rho = implicit_spring_radius(nb, 2.0 * k * h);
    (rho < 1.0).then(|| [b[0] * rho / nb, b[1] * rho / nb])
}

/// One Euler–Maruyama step of every path. Proposals leaving the disk are
/// retried on halved substeps with a Brownian-bridge split of the increment.
pub fn bd_step(ensemble: &BdEnsemble, kappa: &VelocityGradient, dt: f64, params: &PotentialParams) -> Result<BdEnsemble> {
    bd_step_with(ensemble, kappa, dt, params, BdScheme::EulerMaruyama)
}

/// One step of every path with the chosen scheme.
pub fn bd_step_with(
    ensemble: &BdEnsemble,
    kappa: &VelocityGradient,
    dt: f64,
    params: &PotentialParams,
    scheme: BdScheme,
) -> Result<BdEnsemble> {
    let mut next = ensemble.clone();
    bd_step_in_place(&mut next, kappa, dt, params, scheme)?;
    Ok(next)
}

/// In-place variant of [`bd_step_with`]. On error the ensemble is left
/// partially advanced.
pub fn bd_step_in_place(
    ensemble: &mut BdEnsemble,
    kappa: &VelocityGradient,
    dt: f64,
    params: &PotentialParams,
    scheme: BdScheme,
) -> Result<()> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be nonnegative, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(());
    }
    let k = params.k;
    let s = (2.0 * dt).sqrt();
    let failed = ensemble
        .paths
        .par_iter_mut()
        .zip(ensemble.rngs.par_iter_mut())
        .enumerate()
        .filter_map(|(m, (r, rng))| {
            let z = gaussian2(rng);
            let dw = [s * z[0], s * z[1]];
            let next = match scheme {
                BdScheme::EulerMaruyama => advance_resampling(*r, dt, dw, 0, kappa, k, rng),
                BdScheme::SemiImplicit => semi_implicit(*r, dt, dw, kappa, k),
            };
            match next {
                Some(v) => {
                    *r = v;
                    None
                }
                None => Some(m),
            }
        })
        .min();
    if let Some(path) = failed {
        return Err(Error::BdStep { path });
    }
    ensemble.time += dt;
    Ok(())
}

/// Sample mean of `2k R_i R_j / (1 - |R|^2)` and its standard error per component.
pub fn estimate_stress(ensemble: &BdEnsemble, params: &PotentialParams) -> Result<(StressTensor, StressTensor)> {
    let m = ensemble.len();
    if m < 2 {
        return Err(Error::Config(format!("stress estimate needs at least two paths, got {m}")));
    }
    let samples = ensemble.paths.iter().map(|r| {
        let w = 2.0 * params.k / (1.0 - (r[0] * r[0] + r[1] * r[1]));
        [w * r[0] * r[0], w * r[0] * r[1], w * r[1] * r[1]]
    });
    let mut sum = [0.0; 3];
    for s in samples.clone() {
        (0..3).for_each(|i| sum[i] += s[i]);
    }
    let mean = sum.map(|v| v / m as f64);
    let mut var = [0.0; 3];
    for s in samples {
        (0..3).for_each(|i| var[i] += (s[i] - mean[i]).powi(2));
    }
    let err = var.map(|v| (v / (m - 1) as f64 / m as f64).sqrt());
    Ok((
        StressTensor::from_components(mean[0], mean[1], mean[2]),
        StressTensor::from_components(err[0], err[1], err[2]),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdRecord {
    pub t: f64,
    pub tau: StressTensor,
    pub stderr: StressTensor,
}

/// Equilibrium-initialized ensemble advanced under `protocol` up to `t_end`,
/// recording every `every` steps (and at both ends).
pub fn bd_run(
    protocol: &FlowProtocol,
    params: &PotentialParams,
    m: usize,
    t_end: f64,
    dt: f64,
    every: usize,
    seed: u64,
    scheme: BdScheme,
) -> Result<(BdEnsemble, Vec<BdRecord>)> {
    if !(t_end >= 0.0 && dt > 0.0) {
        return Err(Error::Config(format!("need T >= 0 and dt > 0, got T = {t_end}, dt = {dt}")));
    }
    let every = every.max(1);
    let steps = (t_end / dt).round() as usize;
    let mut ens = BdEnsemble::equilibrium(m, params, seed)?;
    let record = |e: &BdEnsemble| -> Result<BdRecord> {
        let (tau, stderr) = estimate_stress(e, params)?;
        Ok(BdRecord { t: e.time, tau, stderr })
    };
    let mut out = vec![record(&ens)?];
    for s in 1..=steps {
        let kappa = protocol_kappa(protocol, ens.time)?;
        bd_step_in_place(&mut ens, &kappa, dt, params, scheme)?;
        ens.time = s as f64 * dt;
        if s % every == 0 || s == steps {
            out.push(record(&ens)?);
        }
    }
    Ok((ens, out))
}
