use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use xychain::engine::{run_refined, run_sweep, Refinement};
use xychain::presets::{self, Panel};
use xychain::scaling::{self, ScalingOptions};
use xychain::{load_json, report, table};
use xychain_core::oracle::cross_validate;
use xychain_core::sweep::{uniform_grid, SweepSpec};
use xychain_core::ChainConfig;

/// Ground-state concurrence of XY chains with DM interaction and Gaussian
/// impurities.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct Refine {
    /// skip the fine windows around extrema
    #[arg(long)]
    no_refine: bool,
    /// width of each fine window
    #[arg(long, default_value_t = 0.2)]
    refine_width: f64,
    /// grid step inside fine windows
    #[arg(long, default_value_t = 0.001)]
    refine_step: f64,
}

impl Refine {
    fn get(&self) -> Option<Refinement> {
        (!self.no_refine).then_some(Refinement { width: self.refine_width, step: self.refine_step })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// all observables of one chain as JSON on stdout
    Run {
        /// ChainConfig JSON
        #[arg(long)]
        config: PathBuf,
        /// override lambda = J/h (moves J, keeps h)
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// site pair l,m (1-based)
        #[arg(long, value_parser = parse_pair)]
        pair: Option<(usize, usize)>,
    },
    /// SweepSpec JSON -> CSV
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// add fine windows around extrema and write a summary
        #[arg(long)]
        refine: bool,
        #[command(flatten)]
        output: Output,
    },
    /// compare the free-fermion pipeline with exact diagonalization
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// pairs to compare (repeatable; default: all pairs up to distance 3)
        #[arg(long, value_parser = parse_pair)]
        pair: Vec<(usize, usize)>,
    },
    /// finite-size scaling of the steepest descent of C
    Scaling {
        /// base ChainConfig JSON (default: pure chain)
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![41usize, 81, 161, 321])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lambda_min: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        lambda_max: f64,
        #[arg(long, default_value_t = 0.005)]
        step: f64,
        #[arg(long, default_value_t = 0.2)]
        refine_width: f64,
        #[arg(long, default_value_t = 0.001)]
        refine_step: f64,
        #[command(flatten)]
        output: Output,
    },
    /// C(49,50) against lambda for exchange (zeta) and field (xi) impurities
    Fig1 {
        /// impurity heights, one curve each
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.5, 1.0])]
        values: Vec<f64>,
        #[command(flatten)]
        refine: Refine,
        #[command(flatten)]
        output: Output,
    },
    /// C(49,50) against lambda for DM impurities (kappa), one panel per D
    Fig2 {
        /// DM strengths in units of |J|, one panel each
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.5])]
        d: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.5, 1.0])]
        kappa: Vec<f64>,
        /// also scan D for a reversal of the kappa effect
        #[arg(long)]
        dc_scan: bool,
        /// D values of the scan
        #[arg(long, value_delimiter = ',')]
        dc_values: Option<Vec<f64>>,
        #[command(flatten)]
        refine: Refine,
        #[command(flatten)]
        output: Output,
    },
    /// C(49,50) against lambda for the DM strength, one panel per kappa
    Fig3 {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.1, 0.5])]
        d: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0])]
        kappa: Vec<f64>,
        #[command(flatten)]
        refine: Refine,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (l, m) = s.split_once(',').ok_or_else(|| format!("expected l,m, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(l)?, parse(m)?))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    eprintln!("writing {}", path.display());
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut f = create(dir, name)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, value)?;
    lock.write_all(b"\n")?;
    Ok(())
}

/// Returns whether any point was flagged.
fn run_panels(panels: &[Panel], refine: Option<Refinement>, output: &Output) -> Result<bool> {
    let mut flagged = false;
    for p in panels {
        flagged |= sweep_to_files(&p.spec, &p.name, refine, output)?;
    }
    Ok(flagged)
}

fn sweep_to_files(spec: &SweepSpec, name: &str, refine: Option<Refinement>, output: &Output) -> Result<bool> {
    match refine {
        Some(r) => {
            let res = run_refined(spec, r, output.threads)?;
            let mut f = create(&output.out, &format!("{name}.csv"))?;
            table::write_refined(&mut f, &res)?;
            f.flush()?;
            write_json(&output.out, &format!("{name}.json"), &presets::summarize(name, &res)?)?;
            Ok(res.any_flagged())
        }
        None => {
            let res = run_sweep(spec, output.threads)?;
            let mut f = create(&output.out, &format!("{name}.csv"))?;
            table::write_sweep(&mut f, &res)?;
            f.flush()?;
            Ok(res.any_flagged())
        }
    }
}

fn with_lambda(mut config: ChainConfig, lambda: Option<f64>) -> ChainConfig {
    if let Some(l) = lambda {
        config = config.with_lambda(l);
    }
    config
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, lambda, pair } => {
            let cfg = with_lambda(load_json(&config)?, lambda);
            print_json(&report::run_report(&cfg, pair)?)?;
            Ok(false)
        }
        Command::Sweep { spec, refine, output } => {
            let spec: SweepSpec = load_json(&spec)?;
            sweep_to_files(&spec, "sweep", refine.then(Refinement::default), &output)
        }
        Command::Oracle { config, lambda, pair } => {
            let cfg = with_lambda(load_json(&config)?, lambda);
            let pairs = if pair.is_empty() {
                (1..cfg.n_sites).flat_map(|l| (l + 1..=(l + 3).min(cfg.n_sites)).map(move |m| (l, m))).collect()
            } else {
                pair
            };
            let report = cross_validate(&cfg, &pairs)?;
            print_json(&report)?;
            Ok(!report.passed)
        }
        Command::Scaling { config, sizes, lambda_min, lambda_max, step, refine_width, refine_step, output } => {
            let base = match config {
                Some(p) => load_json(&p)?,
                None => ChainConfig::default(),
            };
            let options = ScalingOptions {
                base,
                sizes,
                lambda_min,
                lambda_max,
                step,
                refinement: Refinement { width: refine_width, step: refine_step },
            };
            let report = scaling::run_scaling(&options, output.threads)?;
            write_json(&output.out, "scaling.json", &report)?;
            let mut f = create(&output.out, "scaling.csv")?;
            scaling::write_csv(&mut f, &report)?;
            f.flush()?;
            Ok(false)
        }
        Command::Fig1 { values, refine, output } => run_panels(&presets::fig1(&values), refine.get(), &output),
        Command::Fig2 { d, kappa, dc_scan, dc_values, refine, output } => {
            let flagged = run_panels(&presets::fig2(&d, &kappa), refine.get(), &output)?;
            if dc_scan {
                let values = dc_values.unwrap_or_else(|| uniform_grid(0.1, 2.0, 0.1));
                let top = kappa.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let scan = presets::dc_scan(&values, top, uniform_grid(0.0, 2.0, 0.01), output.threads)?;
                write_json(&output.out, "fig2_dc_scan.json", &scan)?;
            }
            Ok(flagged)
        }
        Command::Fig3 { d, kappa, refine, output } => run_panels(&presets::fig3(&d, &kappa), refine.get(), &output),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("some grid points failed or the cross validation did not pass");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
