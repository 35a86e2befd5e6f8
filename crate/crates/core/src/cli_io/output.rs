//! CSV output. Every float is written with 17 significant digits so the files
//! round-trip `f64` exactly, and lines end in `\n` on every platform.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::DiagnosticsLedger;
use crate::error::{Error, Result};
use crate::inequality::ConstantReport;
use crate::stochastic::BdRecord;

pub const TIMESERIES_HEADER: &str = "t,free_energy,kinetic,rel_entropy,diss_u,diss_psi,n1,n2,residual";
pub const BD_HEADER: &str = "t,tau_xx,tau_xy,tau_yy,stderr_xx,stderr_xy,stderr_yy";
pub const INEQUALITY_HEADER: &str = "kind,k,beta,gamma,p,level,x_min,sup_ratio,relative_change,diagnostic_only";

fn row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v:.16e}").expect("writing to a String");
    }
    out.push('\n');
}

pub fn timeseries_csv(ledger: &DiagnosticsLedger) -> String {
    let mut out = format!("{TIMESERIES_HEADER}\n");
    for r in ledger.records() {
        row(&mut out, &[r.t, r.free_energy, r.kinetic, r.rel_entropy, r.diss_u, r.diss_psi, r.n1, r.n2, r.residual]);
    }
    out
}

/// Writes the ledger as CSV with the fixed header.
pub fn write_timeseries(ledger: &DiagnosticsLedger, path: &Path) -> Result<()> {
    if ledger.is_empty() {
        return Err(Error::Config("refusing to write an empty time series".into()));
    }
    fs::write(path, timeseries_csv(ledger)).map_err(|e| Error::io(path, e))
}

pub fn bd_csv(records: &[BdRecord]) -> String {
    let mut out = format!("{BD_HEADER}\n");
    for r in records {
        let [[xx, xy], [_, yy]] = r.tau.tau;
        let [[sxx, sxy], [_, syy]] = r.stderr.tau;
        row(&mut out, &[r.t, xx, xy, yy, sxx, sxy, syy]);
    }
    out
}

pub fn inequality_csv(reports: &[ConstantReport]) -> String {
    use crate::inequality::InequalityKind as K;
    let mut out = format!("{INEQUALITY_HEADER}\n");
    for rep in reports {
        let (beta, gamma, p) = match rep.kind {
            K::HardyInter2 { beta, .. } => (beta, 0.0, 0.0),
            K::HardyInterLog { beta, gamma, .. } => (beta, gamma, 0.0),
            K::Wsi { p, .. } => (0.0, 0.0, p),
            _ => (0.0, 0.0, 0.0),
        };
        for (level, (x_min, sup)) in rep.x_min.iter().zip(&rep.sup_ratio).enumerate() {
            write!(out, "{},", rep.kind.name()).expect("writing to a String");
            for v in [rep.kind.k(), beta, gamma, p] {
                write!(out, "{v:.16e},").expect("writing to a String");
            }
            writeln!(out, "{level},{x_min:.16e},{sup:.16e},{:.16e},{}", rep.relative_change, rep.diagnostic_only)
                .expect("writing to a String");
        }
    }
    out
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
