//! Figure presets: 99-site open chain, gamma = 1, epsilon = 0.1, pair
//! (49, 50), lambda in [-2, 2] at step 0.005 with 0.001 refinement.

use anyhow::Result;
use serde::Serialize;

use xychain_core::sweep::{
    predicted_critical_window, uniform_grid, CriticalWindow, Extremum, SweepParam, SweepSpec, Vary,
};
use xychain_core::ChainConfig;

use crate::engine::{run_sweep, steepest_descent, RefinedSweep};

pub const FIG_SITES: usize = 99;
pub const FIG_STEP: f64 = 0.005;

pub fn base_config() -> ChainConfig {
    ChainConfig { n_sites: FIG_SITES, gamma: 1.0, h_base: 1.0, epsilon: 0.1, ..Default::default() }
}

pub fn fig_grid() -> Vec<f64> {
    uniform_grid(-2.0, 2.0, FIG_STEP)
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub name: String,
    pub spec: SweepSpec,
}

fn panel(name: String, base: ChainConfig, param: SweepParam, values: &[f64]) -> Panel {
    let pair = Some(base.default_pair());
    Panel {
        name,
        spec: SweepSpec { base, lambda_grid: fig_grid(), vary: Vary { param, values: values.to_vec() }, pair },
    }
}

/// (a) zeta at D = 0, (b) xi at D = 0, (c) zeta and (d) xi at D = 0.5|J|;
/// kappa = 0 throughout.
pub fn fig1(values: &[f64]) -> Vec<Panel> {
    [("a", SweepParam::Zeta, 0.0), ("b", SweepParam::Xi, 0.0), ("c", SweepParam::Zeta, 0.5), ("d", SweepParam::Xi, 0.5)]
        .into_iter()
        .map(|(tag, param, d)| panel(format!("fig1_{tag}"), ChainConfig { d_rel: d, ..base_config() }, param, values))
        .collect()
}

/// One panel per DM strength, curves over kappa, zeta = xi = 0.
pub fn fig2(d_values: &[f64], kappas: &[f64]) -> Vec<Panel> {
    d_values
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            panel(format!("fig2_{}", letter(i)), ChainConfig { d_rel: d, ..base_config() }, SweepParam::Kappa, kappas)
        })
        .collect()
}

/// One panel per kappa, curves over the DM strength, zeta = xi = 0.
pub fn fig3(d_values: &[f64], kappas: &[f64]) -> Vec<Panel> {
    kappas
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            panel(format!("fig3_{}", letter(i)), ChainConfig { kappa: k, ..base_config() }, SweepParam::D, d_values)
        })
        .collect()
}

fn letter(i: usize) -> char {
    (b'a' + (i % 26) as u8) as char
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveSummary {
    pub param_value: f64,
    pub flagged: bool,
    pub failed_points: usize,
    /// turning points of C, located on the refined windows
    pub extrema: Vec<Extremum>,
    /// most negative dC/dlambda on the coarse grid
    pub steepest_descent: Option<Extremum>,
    /// `|lambda|` window predicted at the bond of the concurrence pair
    pub critical_window: Option<CriticalWindow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PanelSummary {
    pub name: String,
    pub spec: SweepSpec,
    pub curves: Vec<CurveSummary>,
}

pub fn summarize(name: &str, result: &RefinedSweep) -> Result<PanelSummary> {
    let spec = &result.coarse.spec;
    let mut curves = Vec::new();
    for (k, curve) in result.coarse.curves.iter().enumerate() {
        let cfg = spec.curve_config(k)?;
        let bond = spec.pair_for(&cfg).0;
        let failed = result.merged_points(k).iter().filter(|p| p.observables.is_none()).count();
        curves.push(CurveSummary {
            param_value: curve.param_value,
            flagged: failed > 0,
            failed_points: failed,
            extrema: result.extrema(k)?,
            steepest_descent: steepest_descent(&curve.concurrence(), &spec.lambda_grid).ok(),
            critical_window: predicted_critical_window(&cfg, bond).ok(),
        });
    }
    Ok(PanelSummary { name: name.to_string(), spec: spec.clone(), curves })
}

/// Effect of the DM impurity versus DM strength: for each `D`,
/// `C(kappa) - C(0)` over a ferromagnetic lambda grid.
#[derive(Debug, Clone, Serialize)]
pub struct DcScan {
    pub kappa: f64,
    pub lambda_grid: Vec<f64>,
    pub entries: Vec<DcEntry>,
    /// midpoints between consecutive D values where the mean effect changes sign
    pub reversals: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DcEntry {
    pub d_rel: f64,
    pub mean_delta: f64,
    pub min_delta: f64,
    pub max_delta: f64,
}

pub fn dc_scan(d_values: &[f64], kappa: f64, lambda_grid: Vec<f64>, threads: Option<usize>) -> Result<DcScan> {
    let mut entries = Vec::with_capacity(d_values.len());
    for &d in d_values {
        let spec = SweepSpec {
            base: ChainConfig { d_rel: d, ..base_config() },
            lambda_grid: lambda_grid.clone(),
            vary: Vary { param: SweepParam::Kappa, values: vec![0.0, kappa] },
            pair: None,
        };
        let res = run_sweep(&spec, threads)?;
        let (c0, c1) = (res.curves[0].concurrence(), res.curves[1].concurrence());
        let delta: Vec<f64> = c1.iter().zip(&c0).map(|(a, b)| a - b).filter(|v| v.is_finite()).collect();
        let mean = delta.iter().sum::<f64>() / delta.len().max(1) as f64;
        entries.push(DcEntry {
            d_rel: d,
            mean_delta: mean,
            min_delta: delta.iter().copied().fold(f64::INFINITY, f64::min),
            max_delta: delta.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    let reversals = entries
        .windows(2)
        .filter(|w| w[0].mean_delta.signum() != w[1].mean_delta.signum())
        .map(|w| 0.5 * (w[0].d_rel + w[1].d_rel))
        .collect();
    Ok(DcScan { kappa, lambda_grid, entries, reversals })
}
