//! Finite-size scaling of the steepest concurrence descent.
//!
//! For each chain length: coarse sweep, most negative dC/dlambda, then a
//! fine window around it. The peak magnitudes are fitted against ln N.

use std::io::{self, Write};

use anyhow::{bail, Result};
use serde::Serialize;

use xychain_core::sweep::{
    predicted_critical_window, scaling_fit, uniform_grid, ScalingFit, SweepParam, SweepSpec, Vary,
};
use xychain_core::ChainConfig;

use crate::engine::{run_sweep, steepest_descent, Refinement};

#[derive(Debug, Clone, Serialize)]
pub struct ScalingOptions {
    pub base: ChainConfig,
    pub sizes: Vec<usize>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub step: f64,
    pub refinement: Refinement,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            base: ChainConfig::default(),
            sizes: vec![41, 81, 161, 321],
            lambda_min: 0.0,
            lambda_max: 2.0,
            step: 0.005,
            refinement: Refinement::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeEntry {
    pub n_sites: usize,
    pub pair: (usize, usize),
    pub coarse_lambda_min: f64,
    pub lambda_min: f64,
    /// dC/dlambda at `lambda_min` (negative)
    pub derivative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub options: ScalingOptions,
    pub entries: Vec<SizeEntry>,
    pub fit: ScalingFit,
    /// lower end of the predicted window at the chain centre
    pub critical_point: f64,
    /// `|lambda_min - critical_point|` strictly decreases with N
    pub monotone_approach: bool,
}

fn sweep_one(base: &ChainConfig, n: usize, grid: Vec<f64>, threads: Option<usize>) -> Result<Vec<f64>> {
    let spec = SweepSpec {
        base: base.clone(),
        lambda_grid: grid,
        vary: Vary { param: SweepParam::N, values: vec![n as f64] },
        pair: None,
    };
    let res = run_sweep(&spec, threads)?;
    if res.any_flagged() {
        let err = res.curves[0].points.iter().find_map(|p| p.error.clone()).unwrap_or_default();
        bail!("N = {n}: grid point failed: {err}");
    }
    Ok(res.curves[0].concurrence())
}

pub fn run_scaling(options: &ScalingOptions, threads: Option<usize>) -> Result<ScalingReport> {
    let mut sizes = options.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() != options.sizes.len() {
        bail!("sizes must be distinct");
    }
    let coarse = uniform_grid(options.lambda_min, options.lambda_max, options.step);
    let mut entries = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        let c = sweep_one(&options.base, n, coarse.clone(), threads)?;
        let rough = steepest_descent(&c, &coarse)?;
        let r = options.refinement;
        let snap = |x: f64| (x / r.step).round() * r.step;
        let lo = snap((rough.lambda - r.width / 2.0).max(options.lambda_min));
        let hi = snap((rough.lambda + r.width / 2.0).min(options.lambda_max));
        let fine_grid = uniform_grid(lo, hi, r.step);
        let fine = sweep_one(&options.base, n, fine_grid.clone(), threads)?;
        let best = steepest_descent(&fine, &fine_grid)?;
        let cfg = ChainConfig { n_sites: n, ..options.base.clone() };
        entries.push(SizeEntry {
            n_sites: n,
            pair: cfg.default_pair(),
            coarse_lambda_min: rough.lambda,
            lambda_min: best.lambda,
            derivative: best.value,
        });
    }
    let peaks: Vec<f64> = entries.iter().map(|e| e.derivative.abs()).collect();
    let fit = scaling_fit(&sizes, &peaks)?;
    let centre = ChainConfig { n_sites: sizes[sizes.len() - 1], ..options.base.clone() };
    let critical_point = predicted_critical_window(&centre, centre.default_pair().0)?.low;
    let distance: Vec<f64> = entries.iter().map(|e| (e.lambda_min - critical_point).abs()).collect();
    let monotone_approach = distance.windows(2).all(|w| w[1] < w[0]);
    Ok(ScalingReport { options: options.clone(), entries, fit, critical_point, monotone_approach })
}

pub fn write_csv<W: Write>(out: &mut W, report: &ScalingReport) -> io::Result<()> {
    writeln!(out, "n_sites,lambda_min,derivative,peak")?;
    for e in &report.entries {
        writeln!(out, "{},{:.16e},{:.16e},{:.16e}", e.n_sites, e.lambda_min, e.derivative, e.derivative.abs())?;
    }
    Ok(())
}
