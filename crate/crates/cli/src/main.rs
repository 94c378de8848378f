// SPDX-License-Identifier: Apache-2.0

//! `ptwave`: periodic traveling wave profiles from a TOML config or a preset.
//!
//! Exit codes: 0 success, 2 configuration error, 3 iteration did not converge.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use ptwave_core::config::PRESETS;
use ptwave_core::postproc::fmt_f64;
use ptwave_core::runner::{
    list_constants, output_dir, solve_config, verify_profile, write_outputs, CONFIG_FILE,
    PROFILE_FILE,
};
use ptwave_core::{Error, RunConfig, RunReport};

const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const WORKERS_ENV: &str = "PTWAVE_WORKERS";

#[derive(Parser)]
#[command(name = "ptwave", version, about = "Periodic traveling wave generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the constant solutions of the profile equation.
    Constants(Source),
    /// Compute a profile and write CSVs plus a manifest.
    Solve(SolveArgs),
    /// Recompute the integration constants of a stored profile.
    Verify(VerifyArgs),
    /// Solve every *.toml config in a directory.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Source {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled configuration.
    #[arg(long, value_parser = PRESETS)]
    preset: Option<String>,
    /// Constant branch index (sorted by magnitude).
    #[arg(long)]
    branch: Option<usize>,
    /// Minimal polynomial extrapolation.
    #[arg(long)]
    mpe: Option<Toggle>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    /// Profile CSV, or a run directory holding profile.csv and config.toml.
    profile: Option<PathBuf>,
    /// Run directory to check when no profile is given.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Directory of TOML configs.
    dir: PathBuf,
    /// Root for the per-config output directories.
    #[arg(long, default_value = "out/sweep")]
    out: PathBuf,
    #[arg(long)]
    mpe: Option<Toggle>,
}

enum Failure {
    Config(String),
    NotConverged,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn apply_overrides(cfg: &mut RunConfig, branch: Option<usize>, mpe: Option<Toggle>) {
    if let Some(b) = branch {
        cfg.wave.branch = b;
    }
    if let Some(t) = mpe {
        cfg.mpe.enabled = matches!(t, Toggle::On);
    }
}

impl Source {
    fn load(&self, fallback: Option<&Path>) -> CliResult<RunConfig> {
        let mut cfg = match (&self.config, &self.preset, fallback) {
            (Some(path), _, _) => RunConfig::from_path(path)?,
            (None, Some(name), _) => RunConfig::preset(name)?,
            (None, None, Some(path)) => RunConfig::from_path(path)?,
            (None, None, None) => {
                return Err(Failure::Config(
                    "either --config or --preset is required".into(),
                ))
            }
        };
        apply_overrides(&mut cfg, self.branch, self.mpe);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(report: &RunReport, dir: &Path) {
    println!("outcome      {}", report.outcome.as_str());
    println!("iterations   {}", report.iterations);
    println!("final RES    {}", fmt_f64(report.final_res));
    println!("final SFE    {}", fmt_f64(report.final_sfe));
    let constant: Vec<String> = report.constant.iter().map(|c| fmt_f64(*c)).collect();
    println!(
        "branch       {} (constant {})",
        report.branch,
        constant.join(", ")
    );
    for r in &report.reconstructed {
        println!(
            "{:<12} {} (std {:.3e}, target {})",
            r.name,
            fmt_f64(r.mean),
            r.std,
            r.target
        );
    }
    for w in &report.warnings {
        println!("warning      {w}");
    }
    println!("wall time    {:.3} s", report.wall_time_s);
    println!("written to   {}", dir.display());
}

fn constants(src: &Source) -> CliResult<()> {
    let cfg = src.load(None)?;
    let listing = list_constants(&cfg)?;
    println!("model {} speed {}", listing.model, fmt_f64(listing.speed));
    if listing.constants.is_empty() {
        println!("no real constant solutions");
    }
    for (i, (c, r)) in listing.constants.iter().zip(&listing.residuals).enumerate() {
        let c: Vec<String> = c.iter().map(|v| fmt_f64(*v)).collect();
        let r: Vec<String> = r.iter().map(|v| format!("{v:.2e}")).collect();
        println!("branch {i}: {}  residual {}", c.join(", "), r.join(", "));
    }
    for w in &listing.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn solve_one(cfg: &RunConfig, dir: &Path) -> CliResult<RunReport> {
    let out = solve_config(cfg)?;
    Ok(write_outputs(&out, dir)?)
}

fn solve(args: &SolveArgs) -> CliResult<()> {
    let cfg = args.source.load(None)?;
    let dir = output_dir(&cfg, args.out.as_deref());
    let report = solve_one(&cfg, &dir)?;
    print_report(&report, &dir);
    if report.converged() {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

fn verify(args: &VerifyArgs) -> CliResult<()> {
    let target = args
        .profile
        .clone()
        .or_else(|| args.out.clone())
        .ok_or_else(|| Failure::Config("give a profile CSV or --out DIR".into()))?;
    let (csv, run_dir) = if target.is_dir() {
        (target.join(PROFILE_FILE), Some(target.clone()))
    } else {
        (target.clone(), target.parent().map(Path::to_path_buf))
    };
    let stored = run_dir.map(|d| d.join(CONFIG_FILE)).filter(|p| p.is_file());
    let cfg = args.source.load(stored.as_deref())?;
    let report = verify_profile(&cfg, &csv)?;
    for r in &report.reconstructed {
        println!(
            "{:<4} mean {} std {:.3e} target {} error {:.3e}",
            r.name,
            fmt_f64(r.mean),
            r.std,
            r.target,
            r.error()
        );
    }
    println!(
        "tolerance {:e}: {}",
        report.tolerance,
        if report.passed { "pass" } else { "FAIL" }
    );
    if report.passed {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

fn workers() -> CliResult<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Config(format!("{WORKERS_ENV} must be a positive integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn sweep(args: &SweepArgs) -> CliResult<()> {
    let mut configs: Vec<PathBuf> = std::fs::read_dir(&args.dir)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", args.dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    configs.sort();
    if configs.is_empty() {
        return Err(Failure::Config(format!(
            "no *.toml configs in {}",
            args.dir.display()
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers()?)
        .build()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let results: Vec<(PathBuf, CliResult<RunReport>)> = pool.install(|| {
        configs
            .par_iter()
            .map(|path| {
                let run = || -> CliResult<RunReport> {
                    let mut cfg = RunConfig::from_path(path)?;
                    apply_overrides(&mut cfg, None, args.mpe);
                    let stem = path.file_stem().unwrap_or_default();
                    solve_one(&cfg, &args.out.join(stem))
                };
                (path.clone(), run())
            })
            .collect()
    });
    let (mut config_errors, mut not_converged) = (0, 0);
    for (path, res) in &results {
        match res {
            Ok(r) => {
                if !r.converged() {
                    not_converged += 1;
                }
                println!(
                    "{}: {} after {} iterations, RES {:.3e}",
                    path.display(),
                    r.outcome.as_str(),
                    r.iterations,
                    r.final_res
                );
            }
            Err(Failure::Config(msg)) => {
                config_errors += 1;
                println!("{}: error: {msg}", path.display());
            }
            Err(Failure::NotConverged) => not_converged += 1,
        }
    }
    println!(
        "{} runs, {config_errors} config errors, {not_converged} not converged",
        results.len()
    );
    if config_errors > 0 {
        Err(Failure::Config("sweep had configuration errors".into()))
    } else if not_converged > 0 {
        Err(Failure::NotConverged)
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Constants(src) => constants(src),
        Command::Solve(args) => solve(args),
        Command::Verify(args) => verify(args),
        Command::Sweep(args) => sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::NotConverged) => ExitCode::from(EXIT_NOT_CONVERGED),
    }
}
