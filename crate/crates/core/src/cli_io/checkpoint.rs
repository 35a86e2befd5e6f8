//! Binary checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! b"FENE1"
//! u32 nr, u32 ntheta, u32 nx, u32 ny
//! f64 time
//! f64 psi[nx * ny][nr * ntheta]      spatial index iy * nx + ix, then cell i * ntheta + j
//! f64 uhat_x[nx * ny][2]             (re, im) of the x-velocity coefficients
//! f64 uhat_y[nx * ny][2]
//! ```
//!
//! A homogeneous run is stored with `nx = ny = 1` and a zero velocity.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::density::PhaseDensity;
use crate::error::{Error, Result};
use crate::grid::ConfigGrid;
use crate::macro_flow::MacroState;

pub const MAGIC: &[u8; 5] = b"FENE1";

/// Grid dimensions `[nr, ntheta, nx, ny]` recorded in a checkpoint.
pub type Dims = [u32; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub dims: Dims,
    /// Densities, one per spatial point.
    pub psi: Vec<Vec<f64>>,
    pub flow: MacroState,
}

impl Checkpoint {
    pub fn new(field: &[PhaseDensity], flow: &MacroState, grid: &ConfigGrid) -> Result<Self> {
        if field.len() != flow.points() {
            return Err(Error::Shape { expected: flow.points(), got: field.len() });
        }
        for p in field {
            grid.check_len(p.len())?;
        }
        let dims = [grid.nr, grid.ntheta, flow.nx, flow.ny].map(|d| d as u32);
        Ok(Self { dims, psi: field.iter().map(|p| p.values().to_vec()).collect(), flow: flow.clone() })
    }

    /// Rebuilds validated densities on `grid`.
    pub fn field(&self, grid: &ConfigGrid) -> Result<Vec<PhaseDensity>> {
        if [grid.nr as u32, grid.ntheta as u32] != [self.dims[0], self.dims[1]] {
            return Err(Error::Format(format!(
                "checkpoint configuration grid {}x{} does not match requested {}x{}",
                self.dims[0], self.dims[1], grid.nr, grid.ntheta
            )));
        }
        self.psi.iter().map(|v| PhaseDensity::new(v.clone(), grid)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let cells = (self.dims[0] * self.dims[1]) as usize;
        let points = self.flow.points();
        let mut out = Vec::with_capacity(5 + 16 + 8 * (1 + points * (cells + 4)));
        out.extend_from_slice(MAGIC);
        for d in self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out.extend_from_slice(&self.flow.time.to_le_bytes());
        for v in self.psi.iter().flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for c in self.flow.uhat.iter().flatten() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(5)? != MAGIC {
            return Err(Error::Format("bad magic bytes, expected FENE1".into()));
        }
        let mut dims = [0u32; 4];
        for d in &mut dims {
            *d = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Format(format!("zero dimension in {dims:?}")));
        }
        let cells = dims[0] as usize * dims[1] as usize;
        let (nx, ny) = (dims[2] as usize, dims[3] as usize);
        let points = nx * ny;
        let expected = 5 + 16 + 8 * (1 + points * cells + 4 * points);
        if bytes.len() != expected {
            return Err(Error::Format(format!("checkpoint has {} bytes, dimensions {dims:?} need {expected}", bytes.len())));
        }
        let time = r.f64()?;
        let psi = (0..points).map(|_| (0..cells).map(|_| r.f64()).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
        let mut uhat = [Vec::with_capacity(points), Vec::with_capacity(points)];
        for comp in &mut uhat {
            for _ in 0..points {
                let re = r.f64()?;
                let im = r.f64()?;
                comp.push(Complex64::new(re, im));
            }
        }
        Ok(Self { dims, psi, flow: MacroState { nx, ny, uhat, time } })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let s = self.bytes.get(self.pos..end).ok_or_else(|| Error::Format("checkpoint is truncated".into()))?;
        self.pos = end;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn checkpoint_write(field: &[PhaseDensity], flow: &MacroState, grid: &ConfigGrid, path: &Path) -> Result<()> {
    let ck = Checkpoint::new(field, flow, grid)?;
    fs::write(path, ck.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn checkpoint_read(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

/// Reads a checkpoint and rejects it unless its dimensions equal `expected`.
pub fn checkpoint_read_expecting(path: &Path, expected: Dims) -> Result<Checkpoint> {
    let ck = checkpoint_read(path)?;
    if ck.dims != expected {
        return Err(Error::Format(format!(
            "checkpoint dimensions (nr, ntheta, nx, ny) = {:?} do not match the run's {:?}",
            ck.dims, expected
        )));
    }
    Ok(ck)
}
