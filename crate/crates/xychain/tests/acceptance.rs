//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Tolerances and budgets are fixed here, not tuned to the results.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::Result;

use xychain::engine::{run_refined, run_sweep, Refinement};
use xychain::presets::{base_config, fig_grid};
use xychain::scaling::{run_scaling, ScalingOptions};
use xychain::table::sweep_to_string;
use xychain_core::oracle::cross_validate;
use xychain_core::sweep::{
    evaluate_point, predicted_critical_window, solve_chain, uniform_grid, Extremum, ExtremumKind, SweepParam,
    SweepSpec, Vary,
};
use xychain_core::ChainConfig;

const ORACLE_TOL: f64 = 1e-8;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const TRIVIAL_TOL: f64 = 1e-12;
const PEAK_WINDOW: (f64, f64) = (0.95, 1.15);
const TAIL_LAMBDA: f64 = 3.0;
const TAIL_MAX: f64 = 1e-3;
const MIRROR_TOL: f64 = 1e-10;
const GRID_STEP: f64 = 0.005;
const FSS_R2: f64 = 0.95;
const FSS_BUDGET: Duration = Duration::from_secs(600);
const SWEEP_BUDGET: Duration = Duration::from_secs(60);

type Check = fn() -> Result<Verdict>;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { passed, detail })
}

fn refined(
    base: ChainConfig,
    grid: Vec<f64>,
    param: SweepParam,
    values: Vec<f64>,
) -> Result<(SweepSpec, xychain::engine::RefinedSweep)> {
    let spec = SweepSpec { base, lambda_grid: grid, vary: Vary { param, values }, pair: None };
    let res = run_refined(&spec, Refinement::default(), None)?;
    Ok((spec, res))
}

fn maxima(e: &[Extremum]) -> Vec<Extremum> {
    e.iter().copied().filter(|e| e.kind == ExtremumKind::Max).collect()
}

fn oracle_equivalence() -> Result<Verdict> {
    let start = Instant::now();
    let (mut worst, mut runs, mut failures, mut degenerate) = (0.0f64, 0, Vec::new(), 0);
    for n in [6usize, 8, 10] {
        for j in [1.0, -1.0] {
            for d in [0.0, 0.5] {
                for combined in [false, true] {
                    for lambda in [0.5, 1.0, 1.5] {
                        let (zeta, xi, kappa) = if combined { (0.5, 0.3, 0.2) } else { (0.0, 0.0, 0.0) };
                        // J = ±1 and |lambda| = |J| / h
                        let cfg = ChainConfig {
                            n_sites: n,
                            j_base: j,
                            h_base: 1.0 / lambda,
                            d_rel: d,
                            zeta,
                            xi,
                            kappa,
                            ..Default::default()
                        };
                        let pairs: Vec<(usize, usize)> =
                            (1..n).flat_map(|l| (l + 1..=(l + 3).min(n)).map(move |m| (l, m))).collect();
                        let report = cross_validate(&cfg, &pairs)?;
                        runs += 1;
                        degenerate += report.degenerate as usize;
                        worst = worst.max(report.worst());
                        if !report.passed || report.degenerate {
                            failures.push(format!("N={n} J={j} D={d} combined={combined} lambda={lambda}"));
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        failures.is_empty() && worst < ORACLE_TOL && elapsed < ORACLE_BUDGET,
        format!(
            "{runs} runs, worst deviation {worst:.2e} (tol {ORACLE_TOL:e}), {degenerate} degenerate, {:.1} s (budget {} s){}",
            elapsed.as_secs_f64(),
            ORACLE_BUDGET.as_secs(),
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
        ),
    )
}

fn trivial_limit() -> Result<Verdict> {
    let (mut worst_mz, mut worst_c) = (0.0f64, 0.0f64);
    let sizes = [2usize, 3, 10, 99, 200, 401];
    for n in sizes {
        let cfg = ChainConfig { n_sites: n, j_base: 0.0, ..Default::default() };
        let sol = solve_chain(&cfg)?;
        for i in 1..=n {
            worst_mz = worst_mz.max((sol.g.magnetization(i)? - 1.0).abs());
        }
        let (l, m) = cfg.default_pair();
        worst_c = worst_c.max(sol.g.pair_observables(l, m)?.concurrence.abs());
    }
    verdict(
        worst_mz <= TRIVIAL_TOL && worst_c <= TRIVIAL_TOL,
        format!("N in {sizes:?}: max |<sz>-1| = {worst_mz:.1e}, max C = {worst_c:.1e} (tol {TRIVIAL_TOL:e})"),
    )
}

fn pure_peak() -> Result<Verdict> {
    let base = base_config();
    let (_, res) = refined(base.clone(), uniform_grid(0.0, TAIL_LAMBDA, GRID_STEP), SweepParam::Zeta, vec![0.0])?;
    let peaks = maxima(&res.extrema(0)?);
    let tail = evaluate_point(&base.with_lambda(TAIL_LAMBDA), base.default_pair())?.concurrence;
    let mut mirror = 0.0f64;
    for lambda in uniform_grid(0.0, 2.0, GRID_STEP) {
        let pair = base.default_pair();
        let (a, b) =
            (evaluate_point(&base.with_lambda(lambda), pair)?, evaluate_point(&base.with_lambda(-lambda), pair)?);
        mirror = mirror.max((a.concurrence - b.concurrence).abs());
    }
    let single = peaks.len() == 1;
    let located = single && peaks[0].lambda >= PEAK_WINDOW.0 && peaks[0].lambda <= PEAK_WINDOW.1;
    let list: Vec<String> = peaks.iter().map(|p| format!("{:.4} (C={:.4})", p.lambda, p.value)).collect();
    verdict(
        located && tail < TAIL_MAX && mirror <= MIRROR_TOL,
        format!(
            "maxima at [{}] (need one in [{}, {}]): {}; C({TAIL_LAMBDA}) = {tail:.3e} (need < {TAIL_MAX:e}): {}; mirror max |C(l)-C(-l)| = {mirror:.1e} (tol {MIRROR_TOL:e}): {}",
            list.join(", "),
            PEAK_WINDOW.0,
            PEAK_WINDOW.1,
            if located { "ok" } else { "FAIL" },
            if tail < TAIL_MAX { "ok" } else { "FAIL" },
            if mirror <= MIRROR_TOL { "ok" } else { "FAIL" },
        ),
    )
}

fn impurity_shift() -> Result<Verdict> {
    let zetas = vec![0.0, 0.5, 1.0];
    let (_, res) = refined(base_config(), uniform_grid(0.0, 2.0, GRID_STEP), SweepParam::Zeta, zetas.clone())?;
    let mut lambda_m = Vec::new();
    for k in 0..zetas.len() {
        let top = maxima(&res.extrema(k)?).into_iter().max_by(|a, b| a.value.total_cmp(&b.value));
        lambda_m.push(top.map_or(f64::NAN, |e| e.lambda));
    }
    let decreasing = lambda_m.windows(2).all(|w| w[1] < w[0]);
    verdict(
        decreasing,
        format!("zeta {zetas:?} -> lambda_m {:?}", lambda_m.iter().map(|l| format!("{l:.4}")).collect::<Vec<_>>()),
    )
}

fn critical_window() -> Result<Verdict> {
    let dm = ChainConfig { d_rel: 0.5, ..base_config() };
    let bond = dm.default_pair().0;
    let w = predicted_critical_window(&ChainConfig { j_base: 1.0, ..dm.clone() }, bond)?;
    let exact = w.low == 1.0 && w.high == 2.0;

    let afm = ChainConfig { j_base: -1.0, ..dm };
    let window = predicted_critical_window(&afm, bond)?;
    let (_, res) = refined(afm, uniform_grid(-2.0, 0.0, GRID_STEP), SweepParam::D, vec![0.5])?;
    let zero =
        res.extrema(0)?.into_iter().filter(|e| e.kind == ExtremumKind::Min).min_by(|a, b| a.value.total_cmp(&b.value));
    let inside = zero.is_some_and(|z| window.contains(z.lambda.abs(), GRID_STEP));
    verdict(
        exact && inside,
        format!(
            "J=1, D=0.5: window ({}, {}) {}; J=-1, D=0.5|J|: lambda_0 = {} vs window ({:.4}, {:.4}) ± {GRID_STEP}: {}",
            w.low,
            w.high,
            if exact { "ok" } else { "FAIL" },
            zero.map_or("none".into(), |z| format!("{:.4} (C={:.1e})", z.lambda, z.value)),
            window.low,
            window.high,
            if inside { "ok" } else { "FAIL" },
        ),
    )
}

fn finite_size_scaling() -> Result<Verdict> {
    let start = Instant::now();
    let report = run_scaling(&ScalingOptions::default(), None)?;
    let elapsed = start.elapsed();
    let detail: Vec<String> = report
        .entries
        .iter()
        .map(|e| format!("N={} lambda_min={:.4} dC/dl={:.4}", e.n_sites, e.lambda_min, e.derivative))
        .collect();
    verdict(
        report.fit.r_squared > FSS_R2 && report.monotone_approach && elapsed < FSS_BUDGET,
        format!(
            "{}; slope {:.4}, r^2 {:.6} (need > {FSS_R2}); monotone approach to {}: {}; {:.0} s (budget {} s)",
            detail.join(", "),
            report.fit.slope,
            report.fit.r_squared,
            report.critical_point,
            report.monotone_approach,
            elapsed.as_secs_f64(),
            FSS_BUDGET.as_secs()
        ),
    )
}

fn performance() -> Result<Verdict> {
    let spec = SweepSpec {
        base: base_config(),
        lambda_grid: fig_grid(),
        vary: Vary { param: SweepParam::Zeta, values: vec![0.0] },
        pair: None,
    };
    let start = Instant::now();
    let first = run_sweep(&spec, None)?;
    let elapsed = start.elapsed();
    let reference = sweep_to_string(&first);
    let mut identical = !first.any_flagged();
    for threads in [None, Some(1), Some(2), Some(4)] {
        identical &= sweep_to_string(&run_sweep(&spec, threads)?) == reference;
    }
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    verdict(
        elapsed < SWEEP_BUDGET && identical,
        format!(
            "{} points on {cores} core(s) in {:.1} s (budget {} s); CSV bit-identical across reruns and 1/2/4 threads: {identical}",
            spec.lambda_grid.len(),
            elapsed.as_secs_f64(),
            SWEEP_BUDGET.as_secs()
        ),
    )
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 7] = [
        ("oracle equivalence", oracle_equivalence),
        ("trivial limit", trivial_limit),
        ("pure-case peak", pure_peak),
        ("impurity shift", impurity_shift),
        ("critical window", critical_window),
        ("finite-size scaling", finite_size_scaling),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let (passed, detail) = match check() {
            Ok(v) => (v.passed, v.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        failed += !passed as usize;
        println!("{} {name}: {detail} [{:.1} s]", if passed { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {}/{} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
