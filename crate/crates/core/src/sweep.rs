//! Point evaluation and curve analysis for reduced-coupling sweeps.
//!
//! `lambda = J / h` is swept by moving `J` with `h` fixed. Everything here
//! is sequential and allocation-light; the parallel driver lives in the
//! std crate and only has to call [`evaluate_point`] per grid point and
//! gather the results in grid order.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::correlations::{g_matrix, GMatrix};
use crate::entanglement::{concurrence, two_site_rdm};
use crate::model::{build_couplings, gaussian_profile, ChainConfig, SiteCouplings};
use crate::quadratic::{assemble_quadratic, diagonalize, ground_energy, BogoliubovModes, QuadraticForm};
use crate::{Error, Result};

/// Relative tolerance for "uniform" grids.
const GRID_TOL: f64 = 1e-9;
/// Steps smaller than this count as flat when looking for turning points.
const FLAT_TOL: f64 = 1e-13;

/// Every intermediate of the free-fermion solution of one chain.
#[derive(Debug, Clone)]
pub struct ChainSolution {
    pub couplings: SiteCouplings,
    pub form: QuadraticForm,
    pub modes: BogoliubovModes,
    pub g: GMatrix,
    pub energy: f64,
}

pub fn solve_chain(config: &ChainConfig) -> Result<ChainSolution> {
    let couplings = build_couplings(config)?;
    let form = assemble_quadratic(&couplings, config.gamma, config.boundary)?;
    let modes = diagonalize(&form)?;
    let g = g_matrix(&modes);
    let energy = ground_energy(&modes, &form);
    Ok(ChainSolution { couplings, form, modes, g, energy })
}

/// Observables of one site pair `(l, m)` in the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairObservables {
    pub concurrence: f64,
    pub mz_l: f64,
    pub mz_m: f64,
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
}

impl GMatrix {
    pub fn pair_observables(&self, l: usize, m: usize) -> Result<PairObservables> {
        let (mz_l, mz_m) = (self.magnetization(l)?, self.magnetization(m)?);
        let (xx, yy, zz) = (self.correlator_xx(l, m)?, self.correlator_yy(l, m)?, self.correlator_zz(l, m)?);
        let rdm = two_site_rdm(mz_l, mz_m, xx, yy, zz)?;
        Ok(PairObservables { concurrence: concurrence(&rdm)?, mz_l, mz_m, xx, yy, zz })
    }
}

pub fn evaluate_point(config: &ChainConfig, pair: (usize, usize)) -> Result<PairObservables> {
    solve_chain(config)?.g.pair_observables(pair.0, pair.1)
}

/// Parameter that changes from one curve to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Zeta,
    Xi,
    Kappa,
    /// DM strength in units of `|J|`
    D,
    /// chain length
    N,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vary {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ChainConfig,
    pub lambda_grid: Vec<f64>,
    pub vary: Vary,
    /// Defaults to [`ChainConfig::default_pair`] of each curve's chain.
    #[serde(default)]
    pub pair: Option<(usize, usize)>,
}

/// Uniform grid from `start` to `stop` inclusive.
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = libm::round((stop - start) / step) as usize;
    (0..=count).map(|k| start + k as f64 * step).collect()
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        check_increasing("lambda_grid", &self.lambda_grid)?;
        check_increasing("vary.values", &self.vary.values)?;
        for k in 0..self.vary.values.len() {
            let cfg = self.curve_config(k)?;
            let (l, m) = self.pair_for(&cfg);
            if l < 1 || m > cfg.n_sites || l >= m {
                return Err(Error::InvalidConfig(format!("pair ({l}, {m}) outside chain of {} sites", cfg.n_sites)));
            }
        }
        Ok(())
    }

    /// Template config of curve `k` (with the base `j_base`).
    pub fn curve_config(&self, k: usize) -> Result<ChainConfig> {
        let value = *self.vary.values.get(k).ok_or_else(|| Error::Domain(format!("curve {k} out of range")))?;
        let mut cfg = self.base.clone();
        match self.vary.param {
            SweepParam::Zeta => cfg.zeta = value,
            SweepParam::Xi => cfg.xi = value,
            SweepParam::Kappa => cfg.kappa = value,
            SweepParam::D => cfg.d_rel = value,
            SweepParam::N => {
                if value < 2.0 || libm::trunc(value) != value {
                    return Err(Error::InvalidConfig(format!("chain length {value} is not an integer >= 2")));
                }
                cfg.n_sites = value as usize;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn pair_for(&self, cfg: &ChainConfig) -> (usize, usize) {
        self.pair.unwrap_or_else(|| cfg.default_pair())
    }

    pub fn point_count(&self) -> usize {
        self.lambda_grid.len() * self.vary.values.len()
    }

    /// Evaluates flat work item `index` (curve-major order).
    pub fn evaluate(&self, index: usize) -> PointRecord {
        let n = self.lambda_grid.len();
        let (curve, point) = (index / n, index % n);
        let lambda = self.lambda_grid[point];
        let result = self.curve_config(curve).and_then(|cfg| {
            let pair = self.pair_for(&cfg);
            evaluate_point(&cfg.with_lambda(lambda), pair)
        });
        match result {
            Ok(obs) => PointRecord { lambda, observables: Some(obs), error: None },
            Err(e) => PointRecord { lambda, observables: None, error: Some(e.to_string()) },
        }
    }

    /// Gathers per-point records (in flat curve-major order) into a result.
    pub fn assemble(&self, records: Vec<PointRecord>) -> SweepResult {
        let n = self.lambda_grid.len();
        let mut curves = Vec::with_capacity(self.vary.values.len());
        let mut iter = records.into_iter();
        for &value in &self.vary.values {
            let points: Vec<PointRecord> = iter.by_ref().take(n).collect();
            let flagged = points.iter().any(|p| p.observables.is_none());
            curves.push(Curve { param_value: value, points, flagged });
        }
        SweepResult { spec: self.clone(), curves }
    }

    /// Sequential sweep.
    pub fn run_serial(&self) -> Result<SweepResult> {
        self.validate()?;
        Ok(self.assemble((0..self.point_count()).map(|i| self.evaluate(i)).collect()))
    }
}

fn check_increasing(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(format!("{name} must be finite and strictly increasing")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub lambda: f64,
    pub observables: Option<PairObservables>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub param_value: f64,
    pub points: Vec<PointRecord>,
    /// set when any grid point failed
    pub flagged: bool,
}

impl Curve {
    /// Concurrence per grid point (`NaN` where the point failed).
    pub fn concurrence(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.observables.map_or(f64::NAN, |o| o.concurrence)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub curves: Vec<Curve>,
}

impl SweepResult {
    pub fn any_flagged(&self) -> bool {
        self.curves.iter().any(|c| c.flagged)
    }

    pub fn concurrence_derivative(&self, curve: usize) -> Result<Vec<f64>> {
        let c = self.curves.get(curve).ok_or_else(|| Error::Domain(format!("curve {curve} out of range")))?;
        finite_difference(&c.concurrence(), &self.spec.lambda_grid)
    }

    pub fn extrema(&self, curve: usize) -> Result<Vec<Extremum>> {
        let c = self.curves.get(curve).ok_or_else(|| Error::Domain(format!("curve {curve} out of range")))?;
        locate_extrema(&c.concurrence(), &self.spec.lambda_grid)
    }
}

fn grid_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 3 {
        return Err(Error::Domain(format!("grid has {} points, need at least 3", grid.len())));
    }
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if !(step > 0.0) || grid.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > GRID_TOL * step.max(1.0)) {
        return Err(Error::Domain("grid is not uniform and increasing".into()));
    }
    Ok(step)
}

/// Central differences in the interior, one-sided differences at the ends.
pub fn finite_difference(values: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let step = grid_step(grid)?;
    if values.len() != grid.len() {
        return Err(Error::Domain(format!("{} values on a grid of {}", values.len(), grid.len())));
    }
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    out.push((values[1] - values[0]) / step);
    for i in 1..n - 1 {
        out.push((values[i + 1] - values[i - 1]) / (2.0 * step));
    }
    out.push((values[n - 1] - values[n - 2]) / step);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub lambda: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

/// Interior sign changes of the forward differences, refined by the
/// parabola through the three points around each turning point. Steps below
/// `1e-13` are treated as flat so roundoff on a vanishing curve does not
/// register.
pub fn locate_extrema(curve: &[f64], grid: &[f64]) -> Result<Vec<Extremum>> {
    let step = grid_step(grid)?;
    if curve.len() != grid.len() {
        return Err(Error::Domain(format!("{} values on a grid of {}", curve.len(), grid.len())));
    }
    let mut out = Vec::new();
    for i in 1..curve.len() - 1 {
        let (left, mid, right) = (curve[i - 1], curve[i], curve[i + 1]);
        if !(left.is_finite() && mid.is_finite() && right.is_finite()) {
            continue;
        }
        let (d0, d1) = (flat(mid - left), flat(right - mid));
        // a flat step is attributed to the point where the slope resumes
        let kind = if d0 > 0.0 && d1 <= 0.0 && !(d1 == 0.0 && next_slope(curve, i) >= 0.0) {
            ExtremumKind::Max
        } else if d0 < 0.0 && d1 >= 0.0 && !(d1 == 0.0 && next_slope(curve, i) <= 0.0) {
            ExtremumKind::Min
        } else {
            continue;
        };
        let curvature = left - 2.0 * mid + right;
        let (lambda, value) = if curvature != 0.0 {
            let offset = 0.5 * (left - right) / curvature;
            let offset = offset.clamp(-0.5, 0.5);
            (grid[i] + offset * step, mid - 0.25 * (left - right) * offset)
        } else {
            (grid[i], mid)
        };
        out.push(Extremum { lambda, value, kind });
    }
    Ok(out)
}

fn flat(d: f64) -> f64 {
    if d.abs() < FLAT_TOL {
        0.0
    } else {
        d
    }
}

/// Sign of the first non-zero forward difference after `i`.
fn next_slope(curve: &[f64], i: usize) -> f64 {
    curve[i + 1..].windows(2).map(|w| flat(w[1] - w[0])).find(|d| *d != 0.0).unwrap_or(0.0)
}

/// Deepest interior minimum of `curve`, e.g. the point `lambda_0` where the
/// concurrence touches zero. Grid ends never qualify.
pub fn deepest_minimum(curve: &[f64], grid: &[f64]) -> Result<Option<Extremum>> {
    Ok(locate_extrema(curve, grid)?
        .into_iter()
        .filter(|e| e.kind == ExtremumKind::Min)
        .min_by(|a, b| a.value.total_cmp(&b.value)))
}

/// Grid point of the most negative value of `derivative` (the steepest
/// descent of the concurrence), with parabolic refinement.
pub fn derivative_extremum(derivative: &[f64], grid: &[f64]) -> Result<Extremum> {
    let step = grid_step(grid)?;
    let (i, &v) = derivative
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Domain("no finite derivative values".into()))?;
    if i == 0 || i + 1 == derivative.len() {
        return Ok(Extremum { lambda: grid[i], value: v, kind: ExtremumKind::Min });
    }
    let (l, r) = (derivative[i - 1], derivative[i + 1]);
    let curvature = l - 2.0 * v + r;
    let offset = if curvature > 0.0 { (0.5 * (l - r) / curvature).clamp(-0.5, 0.5) } else { 0.0 };
    Ok(Extremum { lambda: grid[i] + offset * step, value: v - 0.25 * (l - r) * offset, kind: ExtremumKind::Min })
}

/// Bounds between which the critical `|lambda|` of the DM chain lies,
/// evaluated with the impurity amplitudes at one bond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalWindow {
    pub low: f64,
    /// `f64::INFINITY` when a bound's denominator vanishes
    pub high: f64,
}

impl CriticalWindow {
    pub fn is_open_ended(&self) -> bool {
        self.high.is_infinite()
    }

    pub fn contains(&self, lambda: f64, slack: f64) -> bool {
        lambda >= self.low - slack && lambda <= self.high + slack
    }
}

/// `(1+beta)/(1+alpha)` and `(1+beta)/|1+alpha-(D/J)(1+eta)|` at `bond`,
/// in ascending order. `D/J` carries the sign of `J`.
pub fn predicted_critical_window(config: &ChainConfig, bond: usize) -> Result<CriticalWindow> {
    config.validate()?;
    let n = config.n_sites;
    let amp = |h: f64| gaussian_profile(h, config.epsilon, n, bond, config.profile_shape);
    let (alpha, beta, eta) = (amp(config.zeta)?, amp(config.xi)?, amp(config.kappa)?);
    let d_over_j = config.d_rel * config.j_base.signum();
    let bound = |den: f64| {
        if den.abs() < 1e-12 {
            f64::INFINITY
        } else {
            (1.0 + beta) / den.abs()
        }
    };
    let first = bound(1.0 + alpha);
    let second = bound(1.0 + alpha - d_over_j * (1.0 + eta));
    Ok(CriticalWindow { low: first.min(second), high: first.max(second) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares fit `peak = slope * ln N + intercept`.
pub fn scaling_fit(sizes: &[usize], peaks: &[f64]) -> Result<ScalingFit> {
    if sizes.len() < 4 || sizes.len() != peaks.len() {
        return Err(Error::Domain(format!(
            "scaling fit needs >= 4 (size, peak) pairs, got {} sizes and {} peaks",
            sizes.len(),
            peaks.len()
        )));
    }
    if peaks.iter().any(|p| !p.is_finite()) || sizes.contains(&0) {
        return Err(Error::Domain("peaks must be finite and sizes positive".into()));
    }
    let x: Vec<f64> = sizes.iter().map(|&s| libm::log(s as f64)).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = peaks.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain("degenerate fit: all sizes equal".into()));
    }
    let sxy: f64 = x.iter().zip(peaks).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(peaks)
        .map(|(a, b)| {
            let r = b - slope * a - intercept;
            r * r
        })
        .sum();
    let ss_tot: f64 = peaks.iter().map(|b| (b - my) * (b - my)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ScalingFit { slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn derivative_of_constant_and_linear() {
        let grid = uniform_grid(0.0, 1.0, 0.1);
        let flat = vec![0.3; grid.len()];
        assert!(finite_difference(&flat, &grid).unwrap().iter().all(|&d| d == 0.0));
        let line: Vec<f64> = grid.iter().map(|x| 2.5 * x - 1.0).collect();
        let d = finite_difference(&line, &grid).unwrap();
        assert!(d.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn derivative_guards() {
        assert!(finite_difference(&[1.0, 2.0], &[0.0, 1.0]).is_err());
        assert!(finite_difference(&[1.0, 2.0, 3.0], &[0.0, 1.0, 3.0]).is_err());
        assert!(finite_difference(&[1.0, 2.0], &[0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn single_gaussian_peak() {
        let grid = uniform_grid(-2.0, 2.0, 0.01);
        let centre = 0.4137;
        let curve: Vec<f64> = grid.iter().map(|x| libm::exp(-(x - centre) * (x - centre) / 0.1)).collect();
        let ext = locate_extrema(&curve, &grid).unwrap();
        assert_eq!(ext.len(), 1);
        assert_eq!(ext[0].kind, ExtremumKind::Max);
        assert!((ext[0].lambda - centre).abs() < 0.005);
    }

    #[test]
    fn minimum_and_plateau() {
        let grid = uniform_grid(0.0, 2.0, 0.1);
        let v: Vec<f64> = grid.iter().map(|x| (x - 1.23) * (x - 1.23)).collect();
        let ext = locate_extrema(&v, &grid).unwrap();
        assert_eq!(ext.len(), 1);
        assert_eq!(ext[0].kind, ExtremumKind::Min);
        assert!((ext[0].lambda - 1.23).abs() < 1e-9);

        // a flat-topped bump is reported once
        let bump = [0.0, 1.0, 2.0, 2.0, 2.0, 1.0, 0.0];
        let g = uniform_grid(0.0, 6.0, 1.0);
        let ext = locate_extrema(&bump, &g).unwrap();
        assert_eq!(ext.len(), 1);
        assert_eq!(ext[0].kind, ExtremumKind::Max);
    }

    #[test]
    fn deepest_minimum_skips_grid_ends() {
        let grid = uniform_grid(0.0, 3.0, 0.01);
        let curve: Vec<f64> = grid.iter().map(|x| (x - 1.5).abs().min(0.4) + 0.1 * libm::cos(6.0 * x)).collect();
        let e = deepest_minimum(&curve, &grid).unwrap().unwrap();
        assert!((e.lambda - 1.5).abs() < 0.02);
        assert!(deepest_minimum(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]).unwrap().is_none());
    }

    #[test]
    fn scaling_fit_recovers_synthetic_line() {
        let sizes = [41, 81, 161, 321];
        let peaks: Vec<f64> = sizes.iter().map(|&n| 0.27 * libm::log(n as f64) - 0.2).collect();
        let fit = scaling_fit(&sizes, &peaks).unwrap();
        assert!((fit.slope - 0.27).abs() < 1e-12);
        assert!((fit.intercept + 0.2).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_fit_guards() {
        assert!(scaling_fit(&[41, 81], &[1.0, 2.0]).is_err());
        assert!(scaling_fit(&[50, 50, 50, 50], &[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn critical_windows() {
        let pure = ChainConfig::default();
        let w = predicted_critical_window(&pure, 49).unwrap();
        assert_eq!((w.low, w.high), (1.0, 1.0));

        let zeta = ChainConfig { zeta: 0.5, ..pure.clone() };
        let w = predicted_critical_window(&zeta, 50).unwrap();
        assert!((w.low - 2.0 / 3.0).abs() < 1e-15 && (w.high - 2.0 / 3.0).abs() < 1e-15);

        let dm = ChainConfig { d_rel: 0.5, ..pure.clone() };
        let w = predicted_critical_window(&dm, 49).unwrap();
        assert_eq!((w.low, w.high), (1.0, 2.0));

        let afm = ChainConfig { j_base: -1.0, ..dm.clone() };
        let w = predicted_critical_window(&afm, 49).unwrap();
        assert!((w.low - 2.0 / 3.0).abs() < 1e-15 && w.high == 1.0);

        let open = ChainConfig { d_rel: 1.0, ..pure };
        assert!(predicted_critical_window(&open, 49).unwrap().is_open_ended());
    }

    #[test]
    fn sweep_spec_validation() {
        let spec = SweepSpec {
            base: ChainConfig { n_sites: 10, ..Default::default() },
            lambda_grid: vec![0.1, 0.2, 0.3],
            vary: Vary { param: SweepParam::Zeta, values: vec![0.0, 0.5] },
            pair: None,
        };
        assert!(spec.validate().is_ok());
        let mut bad = spec.clone();
        bad.lambda_grid = vec![0.2, 0.1];
        assert!(bad.validate().is_err());
        let mut bad = spec.clone();
        bad.vary.values.clear();
        assert!(bad.validate().is_err());
        let mut bad = spec.clone();
        bad.pair = Some((9, 11));
        assert!(bad.validate().is_err());
        let mut bad = spec;
        bad.vary = Vary { param: SweepParam::N, values: vec![10.5] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn serial_sweep_layout() {
        let spec = SweepSpec {
            base: ChainConfig { n_sites: 12, ..Default::default() },
            lambda_grid: uniform_grid(0.0, 1.0, 0.25),
            vary: Vary { param: SweepParam::N, values: vec![8.0, 12.0] },
            pair: None,
        };
        let res = spec.run_serial().unwrap();
        assert_eq!(res.curves.len(), 2);
        assert!(res.curves.iter().all(|c| c.points.len() == 5 && !c.flagged));
        let c0 = res.curves[0].concurrence();
        assert_eq!(c0[0], 0.0);
        let direct = evaluate_point(&ChainConfig { n_sites: 8, j_base: 0.75, ..Default::default() }, (4, 5)).unwrap();
        assert_eq!(res.curves[0].points[3].observables.unwrap(), direct);
    }
}
