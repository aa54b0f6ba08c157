//! CSV emission.
//!
//! One header row, LF line endings, every float as `{:.16e}` (17
//! significant digits, round-trips exactly). Failed points keep their row
//! with `NaN` observables.

use std::io::{self, Write};

use xychain_core::sweep::{PointRecord, SweepResult};

use crate::engine::RefinedSweep;

pub const HEADER: &str = "lambda,curve_param,concurrence,mz_l,mz_m,xx,yy,zz";

fn write_row<W: Write>(out: &mut W, param: f64, p: &PointRecord) -> io::Result<()> {
    let values = match p.observables {
        Some(o) => [o.concurrence, o.mz_l, o.mz_m, o.xx, o.yy, o.zz],
        None => [f64::NAN; 6],
    };
    write!(out, "{:.16e},{:.16e}", p.lambda, param)?;
    for v in values {
        write!(out, ",{v:.16e}")?;
    }
    out.write_all(b"\n")
}

pub fn write_sweep<W: Write>(out: &mut W, result: &SweepResult) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for curve in &result.curves {
        for p in &curve.points {
            write_row(out, curve.param_value, p)?;
        }
    }
    Ok(())
}

/// Coarse and refined points of every curve, merged in ascending `lambda`.
pub fn write_refined<W: Write>(out: &mut W, result: &RefinedSweep) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for (k, curve) in result.coarse.curves.iter().enumerate() {
        for p in result.merged_points(k) {
            write_row(out, curve.param_value, &p)?;
        }
    }
    Ok(())
}

pub fn sweep_to_string(result: &SweepResult) -> String {
    let mut buf = Vec::new();
    write_sweep(&mut buf, result).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}
