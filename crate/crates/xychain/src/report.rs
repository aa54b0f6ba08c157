//! Single-configuration report for the `run` subcommand.

use anyhow::Result;
use serde::Serialize;

use xychain_core::sweep::{predicted_critical_window, solve_chain, CriticalWindow, PairObservables};
use xychain_core::ChainConfig;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ChainConfig,
    pub lambda: f64,
    pub pair: (usize, usize),
    pub ground_energy: f64,
    /// smallest Bogoliubov energy
    pub gap: f64,
    pub spectrum: Vec<f64>,
    pub average_magnetization: f64,
    pub magnetization: Vec<f64>,
    pub observables: PairObservables,
    pub critical_window: Option<CriticalWindow>,
}

pub fn run_report(config: &ChainConfig, pair: Option<(usize, usize)>) -> Result<RunReport> {
    let pair = pair.unwrap_or_else(|| config.default_pair());
    let sol = solve_chain(config)?;
    let observables = sol.g.pair_observables(pair.0, pair.1)?;
    let magnetization = (1..=config.n_sites).map(|i| sol.g.magnetization(i)).collect::<Result<_, _>>()?;
    Ok(RunReport {
        config: config.clone(),
        lambda: config.lambda(),
        pair,
        ground_energy: sol.energy,
        gap: sol.modes.spectrum.first().copied().unwrap_or(f64::NAN),
        spectrum: sol.modes.spectrum.clone(),
        average_magnetization: sol.g.average_magnetization(),
        magnetization,
        observables,
        critical_window: predicted_critical_window(config, pair.0).ok(),
    })
}
