// SPDX-License-Identifier: Apache-2.0

//! Config in, profiles and a manifest out.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::boussinesq::{
    boussinesq_seed, find_boussinesq_constants, solve_boussinesq, BoussinesqShifted,
};
use crate::config::{Problem, RunConfig};
use crate::error::{Error, Result};
use crate::petviashvili::{seed_field, solve_detailed, IterationTrace, Outcome};
use crate::postproc::{
    phase_portrait, profile_metrics, read_profile_csv, reconstruct_constant, reconstruct_pair,
    write_portrait_csv, write_profile_csv, write_trace_csv, ProfileMetrics,
};
use crate::shift::{build_shifted, find_constants};
use crate::spectral::SpectralField;

pub const PROFILE_FILE: &str = "profile.csv";
pub const PORTRAIT_FILE: &str = "portrait.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.toml";

/// Spectral tail above which a profile is flagged as under-resolved; grid-scale
/// spikes can satisfy the discrete equations without approximating a wave.
pub const RESOLUTION_WARNING: f64 = 1e-6;

/// Integration constant recovered from a profile.
#[derive(Debug, Clone, Serialize)]
pub struct Reconstructed {
    pub name: String,
    pub target: f64,
    pub mean: f64,
    pub std: f64,
}

impl Reconstructed {
    pub fn error(&self) -> f64 {
        (self.mean - self.target).abs()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldMetrics {
    pub field: String,
    #[serde(flatten)]
    pub metrics: ProfileMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub model: String,
    pub speed: f64,
    pub l: f64,
    pub n: usize,
    pub seed: String,
    pub mpe: bool,
    pub outcome: Outcome,
    pub iterations: usize,
    pub final_res: f64,
    pub final_sfe: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations_to_1e10: Option<usize>,
    pub branch: usize,
    /// Constant solution the wave is built on.
    pub constant: Vec<f64>,
    /// Every constant solution found, in branch order.
    pub available_constants: Vec<Vec<f64>>,
    pub reconstructed: Vec<Reconstructed>,
    pub metrics: Vec<FieldMetrics>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.outcome == Outcome::Converged
    }
}

/// A solved configuration, not yet written anywhere.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub report: RunReport,
    /// Full (unshifted) profiles with their column names.
    pub fields: Vec<(String, SpectralField)>,
    pub trace: IterationTrace,
}

impl RunOutput {
    pub fn field(&self, name: &str) -> Option<&SpectralField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

fn pick<T: Clone>(items: &[T], branch: usize, what: &str) -> Result<T> {
    items.get(branch).cloned().ok_or_else(|| {
        Error::Config(format!(
            "branch {branch} requested but only {} {what} found",
            items.len()
        ))
    })
}

fn seed_error(e: Error) -> Error {
    match e {
        Error::Argument(msg) => Error::Config(format!("cannot build the initial iterate: {msg}")),
        other => other,
    }
}

/// Solves `cfg` without touching the file system.
pub fn solve_config(cfg: &RunConfig) -> Result<RunOutput> {
    let start = Instant::now();
    cfg.validate()?;
    let grid = cfg.grid()?;
    let mpe = cfg.mpe.config();
    let branch = cfg.wave.branch;
    let mut warnings = Vec::new();

    let (model, speed, constant, available, fields, trace, reconstructed) = match cfg.problem()? {
        Problem::Scalar {
            model,
            speed,
            a,
            seed,
        } => {
            let branches = find_constants(&model, speed, a)?;
            let chosen = pick(&branches, branch, "constant solutions")?;
            let sp = build_shifted(&model, speed, a, &chosen)?;
            let u0 = seed_field(&sp, &grid, seed).map_err(seed_error)?;
            let res = solve_detailed(&sp, &grid, &u0, &cfg.iteration, mpe.as_ref())?;
            let phi = res
                .state
                .axpy(chosen.value, &SpectralField::constant(&grid, 1.0))?;
            let (mean, std) = reconstruct_constant(&model, speed, &phi)?;
            (
                format!("{:?}", cfg.model.kind).to_lowercase(),
                speed,
                vec![chosen.value],
                branches.iter().map(|b| vec![b.value]).collect::<Vec<_>>(),
                vec![("phi".to_string(), phi)],
                res.trace,
                vec![Reconstructed {
                    name: "a".into(),
                    target: a,
                    mean,
                    std,
                }],
            )
        }
        Problem::System {
            params,
            speed,
            a1,
            a2,
            seed,
        } => {
            warnings.extend(params.range_warning());
            let search = find_boussinesq_constants(&params, speed, a1, a2)?;
            warnings.extend(search.warnings.iter().cloned());
            let chosen = pick(&search.pairs, branch, "constant pairs")?;
            let sh = BoussinesqShifted::new(params, speed, a1, a2, chosen)?;
            let u0 = boussinesq_seed(&sh, &grid, seed).map_err(seed_error)?;
            let sol = solve_boussinesq(&sh, &grid, &u0, &cfg.iteration, mpe.as_ref())?;
            let [r1, r2] = reconstruct_pair(&params, speed, &sol.eta, &sol.w)?;
            (
                "boussinesq".to_string(),
                speed,
                vec![chosen.c1, chosen.c2],
                search.pairs.iter().map(|p| vec![p.c1, p.c2]).collect(),
                vec![("eta".to_string(), sol.eta), ("w".to_string(), sol.w)],
                sol.trace,
                vec![
                    Reconstructed {
                        name: "a1".into(),
                        target: a1,
                        mean: r1.0,
                        std: r1.1,
                    },
                    Reconstructed {
                        name: "a2".into(),
                        target: a2,
                        mean: r2.0,
                        std: r2.1,
                    },
                ],
            )
        }
    };

    let metrics = fields
        .iter()
        .map(|(name, f)| {
            Ok(FieldMetrics {
                field: name.clone(),
                metrics: profile_metrics(f)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for m in &metrics {
        if m.metrics.tail_ratio > RESOLUTION_WARNING {
            warnings.push(format!(
                "{} is not resolved: modes above N/4 reach {:.1e} of the largest coefficient",
                m.field, m.metrics.tail_ratio
            ));
        }
    }
    let last = trace.last();
    let report = RunReport {
        name: cfg.name.clone(),
        model,
        speed,
        l: cfg.grid.l,
        n: cfg.grid.n,
        seed: cfg.seed.profile.as_str().into(),
        mpe: mpe.is_some(),
        outcome: trace.outcome,
        iterations: trace.iterations(),
        final_res: last.map_or(f64::NAN, |r| r.res),
        final_sfe: last.map_or(f64::NAN, |r| r.sfe),
        iterations_to_1e10: trace.first_below(1e-10),
        branch,
        constant,
        available_constants: available,
        reconstructed,
        metrics,
        warnings,
        wall_time_s: start.elapsed().as_secs_f64(),
        files: Vec::new(),
    };
    Ok(RunOutput {
        config: cfg.clone(),
        report,
        fields,
        trace,
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    Ok(std::io::BufWriter::new(fs::File::create(path)?))
}

/// Writes profile, portrait, trace and config CSV/TOML files into `dir`, then
/// the manifest listing them. Returns the report with `files` filled in.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<RunReport> {
    fs::create_dir_all(dir)?;
    let names: Vec<&str> = out.fields.iter().map(|(n, _)| n.as_str()).collect();
    let fields: Vec<&SpectralField> = out.fields.iter().map(|(_, f)| f).collect();
    write_profile_csv(create(&dir.join(PROFILE_FILE))?, &names, &fields)?;
    write_portrait_csv(
        create(&dir.join(PORTRAIT_FILE))?,
        &phase_portrait(fields[0])?,
    )?;
    write_trace_csv(create(&dir.join(TRACE_FILE))?, &out.trace)?;
    write_atomic(&dir.join(CONFIG_FILE), out.config.to_toml()?.as_bytes())?;

    let mut report = out.report.clone();
    report.files = [
        PROFILE_FILE,
        PORTRAIT_FILE,
        TRACE_FILE,
        CONFIG_FILE,
        MANIFEST_FILE,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let text = toml::to_string(&report)
        .map_err(|e| Error::Consistency(format!("cannot serialize manifest: {e}")))?;
    write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(report)
}

/// Output directory: the override if given, else the configured one.
pub fn output_dir(cfg: &RunConfig, override_dir: Option<&Path>) -> PathBuf {
    override_dir.map_or_else(|| cfg.output.dir.clone(), Path::to_path_buf)
}

/// Result of checking a stored profile against its configuration.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub reconstructed: Vec<Reconstructed>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Default acceptance for `verify`: mean within and spread below
/// `VERIFY_TOL (1 + |A|)`.
pub const VERIFY_TOL: f64 = 1e-8;

/// Recomputes the integration constants of the profile stored in `csv`.
pub fn verify_profile(cfg: &RunConfig, csv: &Path) -> Result<VerifyReport> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let file = fs::File::open(csv)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", csv.display())))?;
    let problem = cfg.problem()?;
    let names: &[&str] = match problem {
        Problem::Scalar { .. } => &["phi"],
        Problem::System { .. } => &["eta", "w"],
    };
    let (xs, cols) = read_profile_csv(file, names)?;
    let nodes = grid.nodes();
    let tol_x = 1e-9 * (1.0 + grid.half_length());
    if xs.len() != nodes.len() || xs.iter().zip(nodes).any(|(a, b)| (a - b).abs() > tol_x) {
        return Err(Error::Config(format!(
            "profile nodes do not match the configured grid (l = {}, n = {})",
            cfg.grid.l, cfg.grid.n
        )));
    }
    let fields = cols
        .iter()
        .map(|c| SpectralField::from_values(&grid, c))
        .collect::<Result<Vec<_>>>()?;
    let reconstructed = match problem {
        Problem::Scalar {
            model, speed, a, ..
        } => {
            let (mean, std) = reconstruct_constant(&model, speed, &fields[0])?;
            vec![Reconstructed {
                name: "a".into(),
                target: a,
                mean,
                std,
            }]
        }
        Problem::System {
            params,
            speed,
            a1,
            a2,
            ..
        } => {
            let [r1, r2] = reconstruct_pair(&params, speed, &fields[0], &fields[1])?;
            vec![
                Reconstructed {
                    name: "a1".into(),
                    target: a1,
                    mean: r1.0,
                    std: r1.1,
                },
                Reconstructed {
                    name: "a2".into(),
                    target: a2,
                    mean: r2.0,
                    std: r2.1,
                },
            ]
        }
    };
    let passed = reconstructed.iter().all(|r| {
        let tol = VERIFY_TOL * (1.0 + r.target.abs());
        r.error() <= tol && r.std <= tol
    });
    Ok(VerifyReport {
        reconstructed,
        tolerance: VERIFY_TOL,
        passed,
    })
}

/// Constant solutions available to a configuration, in branch order.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub model: String,
    pub speed: f64,
    pub constants: Vec<Vec<f64>>,
    pub residuals: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

pub fn list_constants(cfg: &RunConfig) -> Result<ConstantsReport> {
    cfg.validate()?;
    match cfg.problem()? {
        Problem::Scalar {
            model, speed, a, ..
        } => {
            let branches = find_constants(&model, speed, a)?;
            Ok(ConstantsReport {
                model: format!("{:?}", cfg.model.kind).to_lowercase(),
                speed,
                constants: branches.iter().map(|b| vec![b.value]).collect(),
                residuals: branches.iter().map(|b| vec![b.residual]).collect(),
                warnings: Vec::new(),
            })
        }
        Problem::System {
            params,
            speed,
            a1,
            a2,
            ..
        } => {
            let search = find_boussinesq_constants(&params, speed, a1, a2)?;
            let mut warnings: Vec<String> = params.range_warning().into_iter().collect();
            warnings.extend(search.warnings);
            Ok(ConstantsReport {
                model: "boussinesq".into(),
                speed,
                constants: search.pairs.iter().map(|p| vec![p.c1, p.c2]).collect(),
                residuals: search.pairs.iter().map(|p| p.residuals.to_vec()).collect(),
                warnings,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{GridSection, ModelKind, ModelSection, Speed, WaveSection};

    fn kdv_config() -> RunConfig {
        RunConfig {
            name: "kdv".into(),
            model: ModelSection {
                kind: ModelKind::Fkdv,
                mu: Some(2.0),
                p: Some(3),
                r: None,
                h: None,
                s: None,
                flux: None,
                symbol: None,
            },
            wave: WaveSection {
                speed: Speed::Value(1.0),
                a: Some(0.0),
                a1: None,
                a2: None,
                branch: 0,
            },
            grid: GridSection { l: 30.0, n: 256 },
            iteration: Default::default(),
            mpe: Default::default(),
            seed: Default::default(),
            output: Default::default(),
        }
    }

    #[test]
    fn kdv_run_writes_consistent_files() {
        let dir = std::env::temp_dir().join(format!("ptwave-runner-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let out = solve_config(&kdv_config()).unwrap();
        assert!(out.report.converged(), "{:?}", out.report.outcome);
        assert_eq!(out.report.constant, vec![0.0]);
        let report = write_outputs(&out, &dir).unwrap();
        for f in &report.files {
            assert!(dir.join(f).is_file(), "{f} missing");
        }
        let manifest = fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap();
        assert!(manifest.contains("outcome = \"converged\""), "{manifest}");

        let cfg = RunConfig::from_path(&dir.join(CONFIG_FILE)).unwrap();
        let v = verify_profile(&cfg, &dir.join(PROFILE_FILE)).unwrap();
        assert!(v.passed, "{v:?}");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn verify_rejects_a_wrong_profile() {
        let dir = std::env::temp_dir().join(format!("ptwave-verify-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let cfg = kdv_config();
        let grid = cfg.grid().unwrap();
        let zero = SpectralField::zeros(&grid);
        let bump = SpectralField::from_fn(&grid, |x| (-x * x).exp());
        let path = dir.join("p.csv");
        write_profile_csv(create(&path).unwrap(), &["phi"], &[&zero]).unwrap();
        assert!(verify_profile(&cfg, &path).unwrap().passed);
        write_profile_csv(create(&path).unwrap(), &["phi"], &[&bump]).unwrap();
        assert!(!verify_profile(&cfg, &path).unwrap().passed);

        let mut coarse = cfg.clone();
        coarse.grid.n = 128;
        assert!(matches!(
            verify_profile(&coarse, &path),
            Err(Error::Config(_))
        ));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn missing_branch_is_a_config_error() {
        let mut cfg = kdv_config();
        cfg.wave.branch = 7;
        assert!(matches!(solve_config(&cfg), Err(Error::Config(_))));
        let listing = list_constants(&cfg).unwrap();
        assert_eq!(listing.constants.len(), 2);
    }
}
