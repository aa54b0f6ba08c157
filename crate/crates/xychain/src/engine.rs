//! Parallel sweep driver and extremum refinement.
//!
//! Work items are the flat `(curve, grid point)` indices of a [`SweepSpec`];
//! rayon's indexed `collect` puts the records back into grid order, so the
//! output does not depend on the thread count or on scheduling.

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use xychain_core::sweep::{
    derivative_extremum, finite_difference, locate_extrema, uniform_grid, Extremum, PointRecord, SweepResult, SweepSpec,
};

/// Runs `spec` on a pool of `threads` workers (all cores when `None`).
pub fn run_sweep(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build().context("building worker pool")?;
    let records: Vec<PointRecord> =
        pool.install(|| (0..spec.point_count()).into_par_iter().map(|i| spec.evaluate(i)).collect());
    Ok(spec.assemble(records))
}

/// Width and step of the fine windows laid around coarse extrema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Refinement {
    pub width: f64,
    pub step: f64,
}

impl Default for Refinement {
    fn default() -> Self {
        Self { width: 0.2, step: 0.001 }
    }
}

/// One fine window of one curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Window {
    pub lambda_grid: Vec<f64>,
    pub points: Vec<PointRecord>,
}

impl Window {
    pub fn concurrence(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.observables.map_or(f64::NAN, |o| o.concurrence)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedSweep {
    pub coarse: SweepResult,
    /// fine windows per curve, in ascending order and non-overlapping
    pub windows: Vec<Vec<Window>>,
}

/// Coarse sweep followed by fine windows centred on every interior
/// extremum of each coarse curve (overlapping windows are merged).
pub fn run_refined(spec: &SweepSpec, refinement: Refinement, threads: Option<usize>) -> Result<RefinedSweep> {
    let coarse = run_sweep(spec, threads)?;
    let mut windows = Vec::with_capacity(coarse.curves.len());
    for (k, curve) in coarse.curves.iter().enumerate() {
        let mut fine = Vec::new();
        if spec.lambda_grid.len() >= 3 {
            let extrema = locate_extrema(&curve.concurrence(), &spec.lambda_grid)?;
            let (lo, hi) = (spec.lambda_grid[0], spec.lambda_grid[spec.lambda_grid.len() - 1]);
            for (a, b) in merge_windows(&extrema, refinement, lo, hi) {
                let sub = SweepSpec {
                    base: spec.base.clone(),
                    lambda_grid: uniform_grid(a, b, refinement.step),
                    vary: xychain_core::sweep::Vary { param: spec.vary.param, values: vec![curve.param_value] },
                    pair: spec.pair,
                };
                let res = run_sweep(&sub, threads).with_context(|| format!("refining curve {k} on [{a}, {b}]"))?;
                let points = res.curves.into_iter().next().map(|c| c.points).unwrap_or_default();
                fine.push(Window { lambda_grid: sub.lambda_grid, points });
            }
        }
        windows.push(fine);
    }
    Ok(RefinedSweep { coarse, windows })
}

/// Windows snapped to multiples of the fine step and clipped to `[lo, hi]`.
fn merge_windows(extrema: &[Extremum], r: Refinement, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let snap = |x: f64| (x / r.step).round() * r.step;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for e in extrema {
        let a = snap((e.lambda - r.width / 2.0).max(lo));
        let b = snap((e.lambda + r.width / 2.0).min(hi));
        if b - a < 2.0 * r.step {
            continue;
        }
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

impl RefinedSweep {
    pub fn any_flagged(&self) -> bool {
        self.coarse.any_flagged()
            || self.windows.iter().flatten().any(|w| w.points.iter().any(|p| p.observables.is_none()))
    }

    /// Coarse and fine points of curve `k` merged in ascending `lambda`; a
    /// fine point replaces a coarse one at the same `lambda`.
    pub fn merged_points(&self, k: usize) -> Vec<PointRecord> {
        let mut all: Vec<PointRecord> = self.windows[k].iter().flat_map(|w| w.points.iter().cloned()).collect();
        let step = self.coarse.spec.lambda_grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let tol = 1e-9 * step.min(1.0);
        for p in &self.coarse.curves[k].points {
            if !all.iter().any(|q| (q.lambda - p.lambda).abs() <= tol) {
                all.push(p.clone());
            }
        }
        all.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        all
    }

    /// Extrema located on the fine windows (window edges excluded), falling
    /// back to the coarse curve when a curve has no windows.
    pub fn extrema(&self, k: usize) -> Result<Vec<Extremum>> {
        if self.windows[k].is_empty() {
            return Ok(locate_extrema(&self.coarse.curves[k].concurrence(), &self.coarse.spec.lambda_grid)?);
        }
        let mut out = Vec::new();
        for w in &self.windows[k] {
            if w.lambda_grid.len() >= 3 {
                out.extend(locate_extrema(&w.concurrence(), &w.lambda_grid)?);
            }
        }
        Ok(out)
    }
}

/// Most negative `dC/dlambda` of one curve sampled on a uniform grid.
pub fn steepest_descent(concurrence: &[f64], grid: &[f64]) -> Result<Extremum> {
    let d = finite_difference(concurrence, grid)?;
    Ok(derivative_extremum(&d, grid)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use xychain_core::sweep::{ExtremumKind, SweepParam, Vary};
    use xychain_core::ChainConfig;

    fn spec(n: usize, grid: Vec<f64>) -> SweepSpec {
        SweepSpec {
            base: ChainConfig { n_sites: n, ..Default::default() },
            lambda_grid: grid,
            vary: Vary { param: SweepParam::Zeta, values: vec![0.0, 0.5] },
            pair: None,
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let s = spec(20, uniform_grid(-1.5, 1.5, 0.1));
        let serial = s.run_serial().unwrap();
        for threads in [1, 3] {
            assert_eq!(run_sweep(&s, Some(threads)).unwrap(), serial);
        }
    }

    #[test]
    fn windows_merge_and_clip() {
        let r = Refinement { width: 0.2, step: 0.001 };
        let e = |lambda| Extremum { lambda, value: 0.0, kind: ExtremumKind::Max };
        let w = merge_windows(&[e(-1.95), e(0.5), e(0.55), e(1.5)], r, -2.0, 2.0);
        assert_eq!(w.len(), 3);
        assert!((w[0].0 + 2.0).abs() < 1e-12 && (w[0].1 + 1.85).abs() < 1e-12);
        assert!((w[1].0 - 0.4).abs() < 1e-12 && (w[1].1 - 0.65).abs() < 1e-12);
    }

    #[test]
    fn refinement_brackets_the_peak() {
        let s = SweepSpec {
            vary: Vary { param: SweepParam::Zeta, values: vec![0.0] },
            ..spec(30, uniform_grid(0.0, 2.0, 0.05))
        };
        let r = run_refined(&s, Refinement { width: 0.2, step: 0.005 }, Some(2)).unwrap();
        assert_eq!(r.windows[0].len(), 1);
        let coarse = locate_extrema(&r.coarse.curves[0].concurrence(), &s.lambda_grid).unwrap();
        let fine = r.extrema(0).unwrap();
        assert_eq!(fine.len(), 1);
        assert!((fine[0].lambda - coarse[0].lambda).abs() < 0.05);
        let merged = r.merged_points(0);
        assert!(merged.windows(2).all(|w| w[0].lambda < w[1].lambda));
        let w = &r.windows[0][0].lambda_grid;
        let shared = s.lambda_grid.iter().filter(|&&x| x >= w[0] - 1e-12 && x <= w[w.len() - 1] + 1e-12).count();
        assert_eq!(merged.len(), s.lambda_grid.len() + w.len() - shared);
    }
}
